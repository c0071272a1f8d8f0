// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "rdlab/error.hpp"
#include "rdlab/functionals.hpp"
#include "rdlab/kernel.hpp"
#include "rdlab/model.hpp"
#include "rdlab/parallel.hpp"
#include "rdlab/sim.hpp"
#include "rdlab/stats.hpp"

namespace rdlab {

/// Normalizing function g = c 1_[a,b] together with the starting point of
/// the paths over which v_t is averaged.
///
/// For ergodic models the invariant measure is taken as a probability (raw
/// density over its total mass), so mu(g) = 1 makes v_t / t -> 1. Null-recurrent models keep the raw density. In blind mode
/// c = 1 and V_t is the plain occupation time of [a, b].
struct EquivalentSpec {
    double a = 0.0;
    double b = 1.0;
    double c = 1.0;
    double x_init = 0.0;
    bool blind = false;

    double g(double x) const { return (a <= x && x <= b) ? c : 0.0; }
};

inline EquivalentSpec make_equivalent_spec(const DiffusionModel& m, double a, double b,
                                           double x_init, bool blind = false) {
    if (!(a < b)) throw Error("g interval needs a < b");
    EquivalentSpec s{a, b, 1.0, x_init, blind};
    if (!blind) s.c = reference_mass(m) / invariant_mass(m, a, b);
    return s;
}

/// Invariant density in the same normalization as make_equivalent_spec.
inline double reference_density(const DiffusionModel& m, double x) {
    return invariant_density(m, x) / reference_mass(m);
}

/// Monte Carlo estimate of v_t = E_pi int_0^t g(X_s) ds.
struct EquivalentCurve {
    std::vector<double> checkpoints;
    std::vector<double> v_hat;
    std::vector<double> std_error;
    std::size_t n_paths = 0;
};

/// V_t = int_0^t g(X_s) ds on one path.
class ObservableIAF {
  public:
    ObservableIAF(const EquivalentSpec& s, double dt) : window_(s.a, s.b, dt), c_(s.c) {}
    void step(std::size_t k, double x, double dw, double xn) { window_.step(k, x, dw, xn); }
    double value() const { return c_ * window_.value(); }

  private:
    WindowOccupation window_;
    double c_;
};

inline FunctionalSeries observable_iaf(const Path& p, const EquivalentSpec& s,
                                       const std::vector<double>& checkpoints) {
    ObservableIAF acc(s, p.dt);
    return detail::collect_series(p, checkpoints, acc, SeriesKind::af);
}

/// Averages the observable IAF over replicates 0..n_paths-1 of `tmpl`
/// (its x_init is replaced by s.x_init).
inline EquivalentCurve deterministic_equivalent(const DiffusionModel& m, const EquivalentSpec& s,
                                                PathConfig tmpl, std::size_t n_paths,
                                                unsigned workers = default_workers()) {
    if (n_paths == 0) throw Error("deterministic_equivalent needs at least one path");
    tmpl.x_init = s.x_init;
    const auto per_rep = map_replicates(n_paths, workers, [&](std::size_t i) {
        PathConfig cfg = tmpl;
        cfg.replicate_index = i;
        ObservableIAF acc(s, cfg.dt);
        std::vector<double> vals;
        stream_path(
            m, cfg, [&](std::size_t k, double x, double dw, double xn) { acc.step(k, x, dw, xn); },
            [&](std::size_t, double) { vals.push_back(acc.value()); });
        return vals;
    });
    EquivalentCurve curve{tmpl.checkpoints, {}, {}, n_paths};
    for (std::size_t c = 0; c < tmpl.checkpoints.size(); ++c) {
        std::vector<double> col;
        col.reserve(n_paths);
        for (const auto& r : per_rep) col.push_back(r[c]);
        curve.v_hat.push_back(mean(col));
        curve.std_error.push_back(standard_error(col));
    }
    return curve;
}

struct BandwidthRate {
    double H = 0.0;
    double R = 0.0;
};

/// H = min(V^{-1/(2a+1)}, delta), R = V^{a/(2a+1)}; V = 0 gives H = delta, R = 0.
inline BandwidthRate bandwidth_and_rate(double V, double alpha, double delta) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("Hoelder exponent alpha must lie in (0, 1]");
    if (!(delta > 0.0)) throw Error("bandwidth cap delta must be positive");
    if (!(V >= 0.0)) throw Error("observable IAF value must be nonnegative");
    if (V == 0.0) return {delta, 0.0};
    const double p = 2.0 * alpha + 1.0;
    return {std::min(std::pow(V, -1.0 / p), delta), std::pow(V, alpha / p)};
}

struct NadarayaWatson {
    double b_hat = std::numeric_limits<double>::quiet_NaN();
    double denom = 0.0;
    bool defined = false;
};

/// sum phi((X_k - x0)/h) dX_k / sum phi((X_k - x0)/h) dt over the whole path.
inline NadarayaWatson nadaraya_watson(const Path& p, double x0, double h, const KernelSpec& k) {
    if (!(h > 0.0)) throw Error("bandwidth h must be positive");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < p.steps(); ++i) {
        const double u = (p.x[i] - x0) / h;
        if (std::abs(u) >= 1.0) continue;
        const double w = k.phi(u);
        num += w * (p.x[i + 1] - p.x[i]);
        den += w;
    }
    NadarayaWatson out;
    out.denom = den * p.dt;
    if (out.denom > 0.0) {
        out.b_hat = num / out.denom;
        out.defined = true;
    }
    return out;
}

/// One checkpoint of the adaptive estimator.
struct AdaptiveRow {
    double t = 0.0;
    double V = 0.0;
    double H = 0.0;
    double R = 0.0;
    double b_hat = std::numeric_limits<double>::quiet_NaN();
    double denom = 0.0;  ///< A_t^{H_t}
    bool defined = false;
    double martingale = 0.0;  ///< M_t^{H_t}, for diagnostics only
};

struct AdaptiveTrace {
    std::vector<AdaptiveRow> rows;
};

struct AdaptiveOptions {
    double x0 = 0.0;
    double alpha = 1.0;
    double delta = 0.5;
};

/// Streaming adaptive Nadaraya-Watson estimator with H_t, R_t built from the
/// observable IAF.
///
/// Steps with |X_k - x0| < delta are recorded as they arrive; since
/// H_t <= delta only those can carry kernel weight. At each checkpoint the
/// bandwidth is fixed from V_t and the estimator is evaluated over the
/// records so far, so H_t only uses data up to t.
class AdaptiveEstimator {
  public:
    AdaptiveEstimator(const DiffusionModel& m, const EquivalentSpec& s, const KernelSpec& k,
                      AdaptiveOptions opt, double dt)
        : model_(&m), kernel_(&k), opt_(opt), dt_(dt), iaf_(s, dt) {
        bandwidth_and_rate(0.0, opt.alpha, opt.delta);  // validates alpha, delta
    }

    void step(std::size_t k, double x, double dw, double xn) {
        iaf_.step(k, x, dw, xn);
        if (std::abs(x - opt_.x0) < opt_.delta) {
            rec_x_.push_back(x);
            rec_dx_.push_back(xn - x);
            rec_noise_.push_back(std::isnan(dw) ? 0.0 : model_->sigma(x) * dw);
        }
    }

    AdaptiveRow evaluate(double t) const {
        AdaptiveRow row;
        row.t = t;
        row.V = iaf_.value();
        const auto hr = bandwidth_and_rate(row.V, opt_.alpha, opt_.delta);
        row.H = hr.H;
        row.R = hr.R;
        double num = 0.0, den = 0.0, mart = 0.0;
        for (std::size_t i = 0; i < rec_x_.size(); ++i) {
            const double u = (rec_x_[i] - opt_.x0) / row.H;
            if (std::abs(u) >= 1.0) continue;
            const double w = kernel_->phi(u);
            num += w * rec_dx_[i];
            den += w;
            mart += w * rec_noise_[i];
        }
        row.denom = den * dt_;
        row.martingale = mart;
        if (row.denom > 0.0) {
            row.b_hat = num / row.denom;
            row.defined = true;
        }
        return row;
    }

  private:
    const DiffusionModel* model_;
    const KernelSpec* kernel_;
    AdaptiveOptions opt_;
    double dt_;
    ObservableIAF iaf_;
    std::vector<double> rec_x_, rec_dx_, rec_noise_;
};

inline AdaptiveTrace adaptive_estimate(const Path& p, const DiffusionModel& m,
                                       const AdaptiveOptions& opt, const EquivalentSpec& s,
                                       const KernelSpec& k, const std::vector<double>& checkpoints) {
    AdaptiveEstimator est(m, s, k, opt, p.dt);
    AdaptiveTrace trace;
    replay_path(
        p, checkpoints, [&](std::size_t i, double x, double dw, double xn) { est.step(i, x, dw, xn); },
        [&](std::size_t c, double) { trace.rows.push_back(est.evaluate(checkpoints[c])); });
    return trace;
}

/// Runs the adaptive estimator on replicates 0..n_paths-1 of `tmpl`.
inline std::vector<AdaptiveTrace> adaptive_estimate_replicates(
    const DiffusionModel& m, const AdaptiveOptions& opt, const EquivalentSpec& s,
    const KernelSpec& k, PathConfig tmpl, std::size_t n_paths, unsigned workers = default_workers()) {
    tmpl.x_init = s.x_init;
    return map_replicates(n_paths, workers, [&](std::size_t i) {
        PathConfig cfg = tmpl;
        cfg.replicate_index = i;
        AdaptiveEstimator est(m, s, k, opt, cfg.dt);
        AdaptiveTrace trace;
        stream_path(
            m, cfg, [&](std::size_t j, double x, double dw, double xn) { est.step(j, x, dw, xn); },
            [&](std::size_t c, double) { trace.rows.push_back(est.evaluate(cfg.checkpoints[c])); });
        return trace;
    });
}

}  // namespace rdlab
