// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "rdlab/error.hpp"
#include "rdlab/quadrature.hpp"

namespace rdlab {

enum class DriftKind { zero, linear, constant, compact_bump, holder_kink, tabulated };
enum class SigmaKind { constant, affine_envelope };

inline const char* to_string(DriftKind k) {
    switch (k) {
        case DriftKind::zero: return "zero";
        case DriftKind::linear: return "linear";
        case DriftKind::constant: return "constant";
        case DriftKind::compact_bump: return "compact_bump";
        case DriftKind::holder_kink: return "holder_kink";
        case DriftKind::tabulated: return "tabulated";
    }
    return "?";
}

inline const char* to_string(SigmaKind k) {
    return k == SigmaKind::constant ? "constant" : "affine_envelope";
}

/// Local Hoelder metadata of the drift around x0.
struct HolderSpec {
    double x0 = 0.0;
    double alpha = 1.0;
    double gamma = 1.0;
    double delta = 0.5;
};

/// dX = sigma(X) dW + b(X) dt from a closed family of coefficients.
///
/// Drift families:
///   zero            b = 0
///   linear(theta)   b = -theta x
///   constant(c)     b = c
///   compact_bump(c) b = c (1 - x^2)^2 on |x| <= 1, 0 elsewhere
///   holder_kink(a)  b = -sign(x) min(|x|^a, 1)
///   tabulated       piecewise linear through (x_i, b_i), flat outside
/// Diffusion families:
///   constant(s)           sigma = s
///   affine_envelope(s0,s1) sigma = sqrt(s0^2 + s1^2 x^2)
struct DiffusionModel {
    std::string name = "bm";
    DriftKind drift_kind = DriftKind::zero;
    double drift_param = 0.0;
    std::vector<std::pair<double, double>> table;
    SigmaKind sigma_kind = SigmaKind::constant;
    double s0 = 1.0;
    double s1 = 0.0;
    double growth_constant = 10.0;
    HolderSpec holder;

    double drift(double x) const {
        switch (drift_kind) {
            case DriftKind::zero: return 0.0;
            case DriftKind::linear: return -drift_param * x;
            case DriftKind::constant: return drift_param;
            case DriftKind::compact_bump: {
                if (std::abs(x) > 1.0) return 0.0;
                const double w = 1.0 - x * x;
                return drift_param * w * w;
            }
            case DriftKind::holder_kink: {
                const double m = std::min(std::pow(std::abs(x), drift_param), 1.0);
                return x > 0.0 ? -m : (x < 0.0 ? m : 0.0);
            }
            case DriftKind::tabulated: return tabulated_drift(x);
        }
        return 0.0;
    }

    double sigma(double x) const {
        if (sigma_kind == SigmaKind::constant) return s0;
        return std::sqrt(s0 * s0 + s1 * s1 * x * x);
    }

    /// Stable textual form; two models are the same iff descriptions match.
    std::string describe() const {
        char buf[256];
        std::string out = name + ":drift=" + to_string(drift_kind);
        std::snprintf(buf, sizeof buf, "(%.17g)", drift_param);
        out += buf;
        for (const auto& [x, b] : table) {
            std::snprintf(buf, sizeof buf, "[%.17g:%.17g]", x, b);
            out += buf;
        }
        std::snprintf(buf, sizeof buf, ";sigma=%s(%.17g,%.17g);C=%.17g;holder=(%.17g,%.17g,%.17g,%.17g)",
                      to_string(sigma_kind), s0, s1, growth_constant, holder.x0, holder.alpha,
                      holder.gamma, holder.delta);
        return out + buf;
    }

    /// 64-bit FNV-1a digest of describe(); used as the model identifier in
    /// binary path dumps.
    std::uint64_t id() const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (unsigned char c : describe()) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        return h;
    }

    static DiffusionModel brownian(double s = 1.0) {
        DiffusionModel m;
        m.name = "bm";
        m.s0 = s;
        return m;
    }
    static DiffusionModel ornstein_uhlenbeck(double theta = 1.0, double s = 1.0) {
        DiffusionModel m;
        m.name = "ou";
        m.drift_kind = DriftKind::linear;
        m.drift_param = theta;
        m.s0 = s;
        m.holder.gamma = theta;
        return m;
    }
    static DiffusionModel constant_drift(double c, double s = 1.0) {
        DiffusionModel m;
        m.name = "constant";
        m.drift_kind = DriftKind::constant;
        m.drift_param = c;
        m.s0 = s;
        return m;
    }
    static DiffusionModel compact_bump(double c = 1.0, double s = 1.0) {
        DiffusionModel m;
        m.name = "compact_bump";
        m.drift_kind = DriftKind::compact_bump;
        m.drift_param = c;
        m.s0 = s;
        m.holder.gamma = 2.0 * std::abs(c);
        return m;
    }
    static DiffusionModel holder_kink(double alpha_b, double s = 1.0) {
        DiffusionModel m;
        m.name = "holder_kink";
        m.drift_kind = DriftKind::holder_kink;
        m.drift_param = alpha_b;
        m.s0 = s;
        m.holder.alpha = alpha_b;
        m.holder.gamma = 1.0;
        return m;
    }

  private:
    double tabulated_drift(double x) const {
        if (table.empty()) return 0.0;
        if (x <= table.front().first) return table.front().second;
        if (x >= table.back().first) return table.back().second;
        auto it = std::upper_bound(table.begin(), table.end(), x,
                                   [](double v, const auto& p) { return v < p.first; });
        const auto& [x1, b1] = *it;
        const auto& [x0, b0] = *(it - 1);
        return b0 + (b1 - b0) * (x - x0) / (x1 - x0);
    }
};

struct ModelCheck {
    std::string name;
    bool passed = false;
    double worst = 0.0;  ///< worst observed value of the checked quantity
    std::string detail;
};

struct ModelReport {
    std::vector<ModelCheck> checks;
    bool ok() const {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
    }
};

/// sup over 2001 points of [x0 - delta, x0 + delta] (x0 excluded) of
/// |b(x) - b(x0)| / |x - x0|^alpha.
inline double holder_ratio_sup(const DiffusionModel& m, const HolderSpec& h) {
    const double b0 = m.drift(h.x0);
    double worst = 0.0;
    constexpr int n = 2001;
    for (int i = 0; i < n; ++i) {
        const double x = h.x0 - h.delta + 2.0 * h.delta * i / (n - 1);
        const double d = std::abs(x - h.x0);
        if (d == 0.0) continue;
        worst = std::max(worst, std::abs(m.drift(x) - b0) / std::pow(d, h.alpha));
    }
    return worst;
}

/// Grid checks of positivity, linear growth and the local Hoelder bound.
inline ModelReport validate_model(const DiffusionModel& m) {
    ModelReport rep;
    auto add = [&](std::string name, bool ok, double worst, std::string detail = {}) {
        rep.checks.push_back({std::move(name), ok, worst, std::move(detail)});
    };

    const auto& h = m.holder;
    add("parameters",
        m.growth_constant > 0.0 && h.alpha > 0.0 && h.alpha <= 1.0 && h.gamma > 0.0 &&
            h.delta > 0.0 && std::isfinite(h.x0),
        0.0, "need C > 0, alpha in (0,1], gamma > 0, delta > 0");
    if (m.drift_kind == DriftKind::holder_kink && !(m.drift_param > 0.0 && m.drift_param <= 1.0))
        add("drift_parameter", false, m.drift_param, "holder_kink exponent must lie in (0,1]");
    if (m.drift_kind == DriftKind::tabulated) {
        bool sorted = !m.table.empty();
        for (std::size_t i = 1; i < m.table.size(); ++i)
            sorted = sorted && m.table[i - 1].first < m.table[i].first;
        add("drift_table", sorted, static_cast<double>(m.table.size()),
            "table must be nonempty with strictly increasing abscissae");
    }

    constexpr int n = 10001;
    double min_sigma = std::numeric_limits<double>::infinity();
    double worst_s = 0.0;
    double worst_b = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = -50.0 + 100.0 * i / (n - 1);
        const double s = m.sigma(x);
        const double b = m.drift(x);
        min_sigma = std::min(min_sigma, s);
        worst_s = std::max(worst_s, s * s / (1.0 + x * x));
        worst_b = std::max(worst_b, std::abs(b) / (1.0 + std::abs(x)));
    }
    add("sigma_positive", min_sigma > 0.0, min_sigma);
    add("sigma_growth", worst_s <= m.growth_constant, worst_s, "sup sigma^2/(1+x^2) vs C");
    add("drift_growth", worst_b <= m.growth_constant, worst_b, "sup |b|/(1+|x|) vs C");
    const double ratio = holder_ratio_sup(m, h);
    add("holder", ratio <= h.gamma, ratio, "sup |b(x)-b(x0)|/|x-x0|^alpha vs gamma");
    return rep;
}

inline void require_valid(const DiffusionModel& m) {
    const auto rep = validate_model(m);
    for (const auto& c : rep.checks) {
        if (!c.passed) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6g", c.worst);
            throw Error("model '" + m.name + "' failed check " + c.name + " (observed " + buf +
                        (c.detail.empty() ? "" : "; " + c.detail) + ")");
        }
    }
}

/// Phi(x) = int_0^x 2 b / sigma^2.
inline double scale_exponent(const DiffusionModel& m, double x) {
    return integrate([&](double v) { const double s = m.sigma(v); return 2.0 * m.drift(v) / (s * s); },
                     0.0, x, {1e-9, 40, 1}, x);
}

/// log of the invariant density 2/sigma^2(x) exp(Phi(x)).
inline double log_invariant_density(const DiffusionModel& m, double x) {
    const double s = m.sigma(x);
    return std::log(2.0) - 2.0 * std::log(s) + scale_exponent(m, x);
}

/// Invariant density in the normalization 2/sigma^2 exp(int_0^x 2b/sigma^2).
inline double invariant_density(const DiffusionModel& m, double x) {
    return std::exp(log_invariant_density(m, x));
}

/// Invariant mass of [a, b].
inline double invariant_mass(const DiffusionModel& m, double a, double b) {
    if (!(a < b)) throw Error("invariant_mass needs a < b");
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / 0.5)));
    return integrate([&](double x) { return invariant_density(m, x); }, a, b, {1e-9, 40, panels},
                     a);
}

enum class MassStatus { finite, infinite, inconclusive };

inline const char* to_string(MassStatus s) {
    switch (s) {
        case MassStatus::finite: return "finite";
        case MassStatus::infinite: return "infinite";
        case MassStatus::inconclusive: return "inconclusive";
    }
    return "?";
}

struct MassResult {
    MassStatus status = MassStatus::inconclusive;
    /// Mass of [-x_max, x_max]; infinity when status is infinite.
    double value = 0.0;
};

struct TruncationOptions {
    double x_max = 50.0;
};

namespace detail {

/// Tail of the density on [x_max, 2 x_max] in direction `dir` (+1 or -1).
inline MassStatus tail_status(const DiffusionModel& m, double x_max, double dir) {
    constexpr int n = 8;
    double prev = log_invariant_density(m, dir * x_max);
    const double first = prev;
    bool geometric = true;
    for (int j = 1; j <= n; ++j) {
        const double cur = log_invariant_density(m, dir * x_max * (1.0 + static_cast<double>(j) / n));
        if (cur - prev > std::log(0.9)) geometric = false;
        prev = cur;
    }
    if (geometric) return MassStatus::finite;
    // x mu(x) not decreasing means the tail is at least as heavy as 1/x.
    if (std::log(2.0) + prev >= first) return MassStatus::infinite;
    return MassStatus::inconclusive;
}

}  // namespace detail

/// Total invariant mass with a tail-decay test beyond the truncation point.
inline MassResult invariant_mass_total(const DiffusionModel& m, const TruncationOptions& opt = {}) {
    const auto right = detail::tail_status(m, opt.x_max, 1.0);
    const auto left = detail::tail_status(m, opt.x_max, -1.0);
    if (right == MassStatus::infinite || left == MassStatus::infinite)
        return {MassStatus::infinite, std::numeric_limits<double>::infinity()};
    if (right == MassStatus::finite && left == MassStatus::finite)
        return {MassStatus::finite, invariant_mass(m, -opt.x_max, opt.x_max)};
    return {MassStatus::inconclusive, std::numeric_limits<double>::quiet_NaN()};
}

/// Scale factor turning the raw density 2/sigma^2 exp(int 2b/sigma^2) into
/// the reference measure used for normalizing additive functionals: total
/// mass when finite (probability normalization), 1 otherwise.
inline double reference_mass(const DiffusionModel& m, const TruncationOptions& opt = {}) {
    const auto total = invariant_mass_total(m, opt);
    if (total.status == MassStatus::finite) return total.value;
    if (total.status == MassStatus::infinite) return 1.0;
    throw Error("model '" + m.name + "': total invariant mass is inconclusive");
}

enum class Recurrence { recurrent, transient_plus, transient_minus, transient_both, inconclusive };

inline const char* to_string(Recurrence r) {
    switch (r) {
        case Recurrence::recurrent: return "recurrent";
        case Recurrence::transient_plus: return "transient_plus";
        case Recurrence::transient_minus: return "transient_minus";
        case Recurrence::transient_both: return "transient_both";
        case Recurrence::inconclusive: return "inconclusive";
    }
    return "?";
}

struct RecurrenceOptions {
    double x_max = 50.0;
    double divergence_threshold = 1e6;
    double convergence_rel_tol = 1e-6;
    int doublings = 12;
};

namespace detail {

enum class Direction { diverges, converges, unknown };

/// Behaviour of s(x) = int_0^x exp(-Phi(y)) dy as x -> dir * infinity,
/// judged on the geometric grid x_max 2^-j.
inline Direction scale_direction(const DiffusionModel& m, double dir, const RecurrenceOptions& opt) {
    // Capping the exponent keeps the integrand finite; a capped integrand
    // already exceeds any sensible divergence threshold.
    auto integrand = [&](double y) { return std::exp(std::min(-scale_exponent(m, y), 700.0)); };
    std::vector<double> xs;
    for (int j = opt.doublings; j >= 0; --j) xs.push_back(dir * opt.x_max * std::ldexp(1.0, -j));

    double s = integrate(integrand, 0.0, xs.front(), {1e-9, 40, 1});
    double prev_inc = std::abs(s);
    double inc = prev_inc;
    double rel_change = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const double piece = integrate(integrand, xs[i - 1], xs[i], {1e-9, 40, 4});
        prev_inc = inc;
        inc = std::abs(piece);
        const double before = s;
        s += piece;
        if (!std::isfinite(s) || std::abs(s) > opt.divergence_threshold) return Direction::diverges;
        rel_change = std::abs(s - before) / std::max(std::abs(s), 1e-300);
    }
    if (rel_change < opt.convergence_rel_tol) return Direction::converges;
    if (inc >= prev_inc) return Direction::diverges;
    return Direction::unknown;
}

}  // namespace detail

/// Scale-function test for recurrence in both directions.
inline Recurrence classify_recurrence(const DiffusionModel& m, const RecurrenceOptions& opt = {}) {
    using detail::Direction;
    const auto plus = detail::scale_direction(m, 1.0, opt);
    const auto minus = detail::scale_direction(m, -1.0, opt);
    if (plus == Direction::unknown || minus == Direction::unknown) return Recurrence::inconclusive;
    if (plus == Direction::diverges && minus == Direction::diverges) return Recurrence::recurrent;
    if (plus == Direction::converges && minus == Direction::converges)
        return Recurrence::transient_both;
    return plus == Direction::converges ? Recurrence::transient_plus : Recurrence::transient_minus;
}

}  // namespace rdlab
