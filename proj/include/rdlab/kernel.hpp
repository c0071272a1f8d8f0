// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rdlab/error.hpp"
#include "rdlab/quadrature.hpp"

namespace rdlab {

/// Smoothing kernel for local functionals: C^1, supported in [-1, 1],
/// unit mass. `phi_prime` is carried alongside so that the derivative
/// requirement can be checked, not assumed.
struct KernelSpec {
    std::string name;
    std::function<double(double)> phi;
    std::function<double(double)> phi_prime;

    double operator()(double u) const { return phi(u); }
};

/// (15/16)(1 - u^2)^2 on [-1, 1].
inline KernelSpec quartic_kernel() {
    return {"quartic",
            [](double u) {
                if (!(std::abs(u) < 1.0)) return 0.0;
                const double w = 1.0 - u * u;
                return 0.9375 * w * w;
            },
            [](double u) {
                if (!(std::abs(u) < 1.0)) return 0.0;
                return -3.75 * u * (1.0 - u * u);
            }};
}

/// (35/32)(1 - u^2)^3 on [-1, 1].
inline KernelSpec triweight_kernel() {
    return {"triweight",
            [](double u) {
                if (!(std::abs(u) < 1.0)) return 0.0;
                const double w = 1.0 - u * u;
                return 1.09375 * w * w * w;
            },
            [](double u) {
                if (!(std::abs(u) < 1.0)) return 0.0;
                const double w = 1.0 - u * u;
                return -6.5625 * u * w * w;
            }};
}

/// 1 - |u| on [-1, 1]. Unit mass but only Lipschitz, so it is rejected by
/// kernel_validate; kept as a negative reference.
inline KernelSpec triangular_kernel() {
    return {"triangular",
            [](double u) { return std::abs(u) < 1.0 ? 1.0 - std::abs(u) : 0.0; },
            [](double u) {
                if (!(std::abs(u) < 1.0)) return 0.0;
                return u > 0.0 ? -1.0 : (u < 0.0 ? 1.0 : 0.0);
            }};
}

inline KernelSpec scaled_kernel(KernelSpec k, double c) {
    auto phi = k.phi;
    auto dphi = k.phi_prime;
    return {k.name + "*" + std::to_string(c), [phi, c](double u) { return c * phi(u); },
            [dphi, c](double u) { return c * dphi(u); }};
}

/// Kernels selectable by name from a run configuration.
inline KernelSpec kernel_by_name(const std::string& name) {
    if (name == "quartic") return quartic_kernel();
    if (name == "triweight") return triweight_kernel();
    throw Error("unknown kernel '" + name + "' (expected quartic or triweight)");
}

struct KernelCheck {
    std::string name;
    bool passed = false;
    double residual = 0.0;
    /// Grid points where the check failed (only for pointwise checks).
    std::vector<double> failing_points;
};

struct KernelReport {
    std::string kernel;
    std::vector<KernelCheck> checks;

    bool ok() const {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
    }
    const KernelCheck& check(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return c;
        throw Error("no kernel check named " + name);
    }
};

/// Checks nonnegativity, support, unit mass, vanishing boundary derivative
/// and agreement of phi_prime with one-sided difference quotients of phi.
inline KernelReport kernel_validate(const KernelSpec& k) {
    constexpr int n_grid = 2001;
    constexpr double fd_step = 1e-6;
    constexpr double fd_tol = 1e-4;
    KernelReport rep{k.name, {}};

    KernelCheck nonneg{"nonnegative", true, 0.0, {}};
    KernelCheck derivative{"derivative_consistency", true, 0.0, {}};
    for (int i = 0; i < n_grid; ++i) {
        const double x = -1.0 + 2.0 * i / (n_grid - 1);
        const double v = k.phi(x);
        if (v < 0.0) {
            nonneg.passed = false;
            nonneg.residual = std::max(nonneg.residual, -v);
            nonneg.failing_points.push_back(x);
        }
        const double d = k.phi_prime(x);
        const double right = (k.phi(x + fd_step) - v) / fd_step;
        const double left = (v - k.phi(x - fd_step)) / fd_step;
        const double r = std::max(std::abs(right - d), std::abs(left - d));
        derivative.residual = std::max(derivative.residual, r);
        if (r > fd_tol) {
            derivative.passed = false;
            derivative.failing_points.push_back(x);
        }
    }

    KernelCheck support{"support", true, 0.0, {}};
    for (int i = 0; i <= 200; ++i) {
        for (double x : {1.0 + i * 0.01, -1.0 - i * 0.01}) {
            const double v = std::abs(k.phi(x));
            if (v != 0.0) {
                support.passed = false;
                support.residual = std::max(support.residual, v);
                support.failing_points.push_back(x);
            }
        }
    }

    const double mass = integrate(k.phi, -1.0, 1.0, {1e-13, 40, 16});
    KernelCheck unit{"unit_integral", std::abs(mass - 1.0) <= 1e-10, std::abs(mass - 1.0), {}};

    const double edge = std::max(std::abs(k.phi_prime(-1.0)), std::abs(k.phi_prime(1.0)));
    KernelCheck boundary{"boundary_derivative", edge <= 1e-12, edge, {}};

    rep.checks = {nonneg, support, unit, boundary, derivative};
    return rep;
}

}  // namespace rdlab
