// SPDX-License-Identifier: Apache-2.0
// Closed-form Brownian expectations used as test oracles.
#pragma once

#include <cmath>
#include <numbers>

#include "rdlab/quadrature.hpp"

namespace oracle {

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// E L_t^x for standard Brownian motion from 0, with L the occupation
/// density (Tanaka convention): E|B_t - x| - |x|.
inline double bm_local_time_mean(double t, double x) {
    const double st = std::sqrt(t);
    const double e_abs = st * std::sqrt(2.0 / std::numbers::pi) * std::exp(-x * x / (2.0 * t)) +
                         x * (2.0 * norm_cdf(x / st) - 1.0);
    return e_abs - std::abs(x);
}

/// E int_0^t 1{a <= B_s <= b} ds for Brownian motion from 0.
inline double bm_occupation_mean(double t, double a, double b) {
    return rdlab::integrate(
        [&](double s) {
            if (s == 0.0) return (a <= 0.0 && 0.0 <= b) ? 1.0 : 0.0;
            return norm_cdf(b / std::sqrt(s)) - norm_cdf(a / std::sqrt(s));
        },
        0.0, t, {1e-9, 50, 64});
}

/// Same expectation for the left-point Riemann sum on a grid of step dt.
inline double bm_occupation_sum_mean(double t, double dt, double a, double b) {
    const auto n = static_cast<long>(std::llround(t / dt));
    double acc = (a <= 0.0 && 0.0 <= b) ? 1.0 : 0.0;
    for (long k = 1; k < n; ++k) {
        const double s = std::sqrt(k * dt);
        acc += norm_cdf(b / s) - norm_cdf(a / s);
    }
    return acc * dt;
}

/// Window-averaged local time (1/2eps) int_{y-eps}^{y+eps} E L_t^x dx.
inline double bm_window_local_time_mean(double t, double y, double eps) {
    return rdlab::integrate([&](double x) { return bm_local_time_mean(t, x); }, y - eps, y + eps, {1e-11, 40, 8}) /
           (2.0 * eps);
}

}  // namespace oracle
