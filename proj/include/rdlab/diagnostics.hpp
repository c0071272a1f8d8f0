// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "rdlab/error.hpp"
#include "rdlab/estimate.hpp"
#include "rdlab/functionals.hpp"
#include "rdlab/kernel.hpp"
#include "rdlab/model.hpp"
#include "rdlab/parallel.hpp"
#include "rdlab/sim.hpp"
#include "rdlab/stats.hpp"

namespace rdlab {

// ---------------------------------------------------------------------------
// Tightness coverage
// ---------------------------------------------------------------------------

/// Which band counts as "covered" at threshold m.
enum class Band {
    ratio,      ///< 1/m < S < m
    symmetric,  ///< -m < S < m
    upper,      ///< S < m (S >= 0)
};

struct TightnessCurve {
    std::string statistic;
    Band band = Band::ratio;
    std::vector<double> thresholds;
    std::vector<double> checkpoints;
    /// coverage[i][c]: threshold i, checkpoint c
    std::vector<std::vector<double>> coverage;
    std::size_t n_reps = 0;
    /// Fewer than 30 replicates at some checkpoint.
    bool underpowered = false;
};

inline bool in_band(double s, double m, Band band) {
    switch (band) {
        case Band::ratio: return 1.0 / m < s && s < m;
        case Band::symmetric: return -m < s && s < m;
        case Band::upper: return s < m;
    }
    return false;
}

/// Empirical coverage of the band at each threshold; samples[c] holds the
/// replicate values at checkpoint c.
inline TightnessCurve tightness_curve(const std::vector<std::vector<double>>& samples,
                                      const std::vector<double>& checkpoints,
                                      const std::vector<double>& thresholds, Band band,
                                      std::string name = {}) {
    if (samples.empty() || samples.size() != checkpoints.size())
        throw Error("tightness_curve needs one sample vector per checkpoint");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > 0.0) || (i > 0 && !(thresholds[i] > thresholds[i - 1])))
            throw Error("thresholds must be positive and increasing");
    }
    TightnessCurve out{std::move(name), band, thresholds, checkpoints, {}, 0, false};
    out.n_reps = std::numeric_limits<std::size_t>::max();
    for (const auto& s : samples) {
        if (s.empty()) throw Error("tightness_curve: empty sample at a checkpoint");
        for (double v : s)
            if (std::isnan(v)) throw Error("tightness_curve: NaN sample (filter undefined values first)");
        out.n_reps = std::min(out.n_reps, s.size());
    }
    out.underpowered = out.n_reps < 30;
    for (double m : thresholds) {
        std::vector<double> row;
        for (const auto& s : samples) {
            const auto hits = std::count_if(s.begin(), s.end(), [&](double v) { return in_band(v, m, band); });
            row.push_back(static_cast<double>(hits) / static_cast<double>(s.size()));
        }
        out.coverage.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Chacon-Ornstein ratio
// ---------------------------------------------------------------------------

struct RatioSummary {
    double t = 0.0;
    double median = std::numeric_limits<double>::quiet_NaN();
    double q25 = std::numeric_limits<double>::quiet_NaN();
    double q75 = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_defined = 0;
    std::size_t n_undefined = 0;
};

struct ChaconOrnsteinResult {
    std::vector<RatioSummary> rows;
    double theoretical = 0.0;  ///< mu(f) / mu(g)
};

struct Interval {
    double a = 0.0;
    double b = 1.0;
};

/// Per-replicate ratio int 1_f(X) ds / int 1_g(X) ds at each checkpoint.
inline ChaconOrnsteinResult chacon_ornstein_check(const DiffusionModel& m, Interval f, Interval g,
                                                  const PathConfig& tmpl, std::size_t n_paths,
                                                  unsigned workers = default_workers()) {
    const double mf = invariant_mass(m, f.a, f.b);
    const double mg = invariant_mass(m, g.a, g.b);
    if (!(mf > 0.0 && mg > 0.0)) throw Error("both intervals need positive invariant mass");
    const auto per_rep = map_replicates(n_paths, workers, [&](std::size_t i) {
        PathConfig cfg = tmpl;
        cfg.replicate_index = i;
        WindowOccupation af(f.a, f.b, cfg.dt), ag(g.a, g.b, cfg.dt);
        std::vector<double> ratios;
        stream_path(
            m, cfg,
            [&](std::size_t k, double x, double dw, double xn) {
                af.step(k, x, dw, xn);
                ag.step(k, x, dw, xn);
            },
            [&](std::size_t, double) {
                ratios.push_back(ag.count() == 0 ? std::numeric_limits<double>::quiet_NaN()
                                                 : af.value() / ag.value());
            });
        return ratios;
    });
    ChaconOrnsteinResult out;
    out.theoretical = mf / mg;
    for (std::size_t c = 0; c < tmpl.checkpoints.size(); ++c) {
        RatioSummary row;
        row.t = tmpl.checkpoints[c];
        std::vector<double> vals;
        for (const auto& r : per_rep) {
            if (std::isnan(r[c])) ++row.n_undefined;
            else vals.push_back(r[c]);
        }
        row.n_defined = vals.size();
        if (!vals.empty()) {
            row.median = quantile(vals, 0.5);
            row.q25 = quantile(vals, 0.25);
            row.q75 = quantile(vals, 0.75);
        }
        out.rows.push_back(row);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Uniform strong Chacon-Ornstein for local time
// ---------------------------------------------------------------------------

struct ScoResult {
    std::vector<double> grid;
    std::vector<double> checkpoints;
    std::vector<double> target;                  ///< sigma^2(y) mu(y) per grid point
    std::vector<double> v_hat;                   ///< per checkpoint
    std::vector<std::vector<double>> mean_ratio; ///< [c][i] mean L^y / v_hat
    std::vector<double> sup_error;               ///< per checkpoint
    std::vector<double> noise;                   ///< per checkpoint, max_y SE of the ratio
};

/// sup_y |mean L_t^y / v_hat_t - sigma^2(y) mu(y)| over a grid in
/// [x0 - delta, x0 + delta], with both averages over the same replicates.
inline ScoResult uniform_sco_error(const DiffusionModel& m, const EquivalentSpec& s,
                                   const std::vector<double>& grid, double x0, double delta,
                                   PathConfig tmpl, std::size_t n_paths, double eps,
                                   unsigned workers = default_workers()) {
    for (double y : grid)
        if (y < x0 - delta - 1e-12 || y > x0 + delta + 1e-12)
            throw Error("uniform_sco_error: grid point outside [x0 - delta, x0 + delta]");
    tmpl.x_init = s.x_init;
    struct Rep {
        std::vector<std::vector<double>> field;  // [c][i]
        std::vector<double> v;
    };
    const auto reps = map_replicates(n_paths, workers, [&](std::size_t r) {
        PathConfig cfg = tmpl;
        cfg.replicate_index = r;
        OccupationField field(m, grid, eps, cfg.dt);
        ObservableIAF iaf(s, cfg.dt);
        Rep out;
        stream_path(
            m, cfg,
            [&](std::size_t k, double x, double dw, double xn) {
                field.step(k, x, dw, xn);
                iaf.step(k, x, dw, xn);
            },
            [&](std::size_t, double) {
                out.field.push_back(field.values());
                out.v.push_back(iaf.value());
            });
        return out;
    });

    ScoResult res;
    res.grid = grid;
    res.checkpoints = tmpl.checkpoints;
    for (double y : grid) res.target.push_back(m.sigma(y) * m.sigma(y) * reference_density(m, y));
    for (std::size_t c = 0; c < tmpl.checkpoints.size(); ++c) {
        std::vector<double> v;
        for (const auto& r : reps) v.push_back(r.v[c]);
        const double vh = mean(v);
        if (!(vh > 0.0)) throw Error("uniform_sco_error: v_hat is zero at t = " +
                                     std::to_string(tmpl.checkpoints[c]) + " (checkpoint too early)");
        res.v_hat.push_back(vh);
        double sup = 0.0, noise = 0.0;
        std::vector<double> ratios;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            std::vector<double> l;
            for (const auto& r : reps) l.push_back(r.field[c][i]);
            const double ratio = mean(l) / vh;
            ratios.push_back(ratio);
            sup = std::max(sup, std::abs(ratio - res.target[i]));
            noise = std::max(noise, standard_error(l) / vh);
        }
        res.mean_ratio.push_back(ratios);
        res.sup_error.push_back(sup);
        res.noise.push_back(noise);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Kernel additive functional with shrinking bandwidth
// ---------------------------------------------------------------------------

struct KernelLimitRow {
    double t = 0.0;
    double h = 0.0;
    double v_hat = 0.0;
    double value = 0.0;   ///< mean weighted kernel AF / (h v_hat)
    double target = 0.0;  ///< psi(x0) mu(x0)
};

/// E int phi((X_s - x0)/h_t) psi(X_s) ds / (h_t v_hat_t), one bandwidth per
/// checkpoint.
inline std::vector<KernelLimitRow> kernel_af_limit_check(
    const DiffusionModel& m, const EquivalentSpec& s, double x0,
    const std::function<double(double)>& psi, const std::vector<double>& h_per_checkpoint,
    double delta, const KernelSpec& k, PathConfig tmpl, std::size_t n_paths,
    unsigned workers = default_workers()) {
    const auto nc = tmpl.checkpoints.size();
    if (h_per_checkpoint.size() != nc) throw Error("need one bandwidth per checkpoint");
    for (std::size_t c = 0; c < nc; ++c) {
        if (!(h_per_checkpoint[c] > 0.0 && h_per_checkpoint[c] <= delta))
            throw Error("bandwidths must lie in (0, delta]");
        if (c > 0 && h_per_checkpoint[c] > h_per_checkpoint[c - 1])
            throw Error("bandwidths must be nonincreasing along the time grid");
    }
    tmpl.x_init = s.x_init;
    struct Rep {
        std::vector<double> af, v;
    };
    const auto reps = map_replicates(n_paths, workers, [&](std::size_t r) {
        PathConfig cfg = tmpl;
        cfg.replicate_index = r;
        std::vector<double> sums(nc, 0.0);
        ObservableIAF iaf(s, cfg.dt);
        Rep out;
        stream_path(
            m, cfg,
            [&](std::size_t j, double x, double dw, double xn) {
                iaf.step(j, x, dw, xn);
                for (std::size_t c = out.af.size(); c < nc; ++c) {
                    const double u = (x - x0) / h_per_checkpoint[c];
                    if (std::abs(u) < 1.0) sums[c] += k.phi(u) * psi(x);
                }
            },
            [&](std::size_t c, double) {
                out.af.push_back(sums[c] * cfg.dt);
                out.v.push_back(iaf.value());
            });
        return out;
    });
    std::vector<KernelLimitRow> rows;
    for (std::size_t c = 0; c < nc; ++c) {
        std::vector<double> af, v;
        for (const auto& r : reps) {
            af.push_back(r.af[c]);
            v.push_back(r.v[c]);
        }
        KernelLimitRow row;
        row.t = tmpl.checkpoints[c];
        row.h = h_per_checkpoint[c];
        row.v_hat = mean(v);
        if (!(row.v_hat > 0.0)) throw Error("kernel_af_limit_check: v_hat is zero (checkpoint too early)");
        row.value = mean(af) / (row.h * row.v_hat);
        row.target = psi(x0) * reference_density(m, x0);
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Rate regression and the scaled-error statistic
// ---------------------------------------------------------------------------

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    double quantile_used = 0.5;
    std::vector<double> T_grid;
    std::vector<double> quantiles;  ///< q-quantile of |error| per T
};

/// OLS of log(q-quantile of |error|) on log T. NaN entries are undefined
/// replicates and are skipped.
inline RateFit rate_regression(const std::vector<std::vector<double>>& abs_errors,
                               const std::vector<double>& T_grid, double q = 0.5,
                               std::size_t min_defined = 50) {
    if (T_grid.size() < 3) throw Error("rate_regression needs at least three T values");
    if (abs_errors.size() != T_grid.size()) throw Error("rate_regression: one error sample per T");
    RateFit fit;
    fit.quantile_used = q;
    fit.T_grid = T_grid;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < T_grid.size(); ++i) {
        std::vector<double> defined;
        for (double e : abs_errors[i])
            if (!std::isnan(e)) defined.push_back(e);
        if (defined.size() < min_defined) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "rate_regression: only %zu defined replicates at T = %g",
                          defined.size(), T_grid[i]);
            throw Error(buf);
        }
        const double qv = quantile(defined, q);
        if (!(qv > 0.0)) throw Error("rate_regression: zero error quantile at T = " + std::to_string(T_grid[i]));
        fit.quantiles.push_back(qv);
        lx.push_back(std::log(T_grid[i]));
        ly.push_back(std::log(qv));
    }
    const double mx = mean(lx), my = mean(ly);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw Error("rate_regression: T values must be distinct");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        sse += r * r;
    }
    fit.stderr_slope = lx.size() > 2 ? std::sqrt(sse / static_cast<double>(lx.size() - 2) / sxx) : 0.0;
    return fit;
}

struct ScaledErrorSamples {
    std::vector<double> checkpoints;
    /// values[c]: R_t |b_hat - b(x0)| over replicates that are defined or pre-entry
    std::vector<std::vector<double>> values;
    std::vector<std::size_t> n_undefined;
    std::vector<std::size_t> n_pre_entry;
};

/// R_t |b_hat - b(x0)| per replicate and checkpoint. R_t = 0 gives 0 and is
/// counted as pre-entry; otherwise an undefined estimator is counted and
/// left out.
inline ScaledErrorSamples scaled_error_statistic(const std::vector<AdaptiveTrace>& traces,
                                             double b_true) {
    ScaledErrorSamples out;
    if (traces.empty()) return out;
    const auto nc = traces.front().rows.size();
    for (const auto& tr : traces)
        if (tr.rows.size() != nc) throw Error("scaled_error_statistic: traces must share checkpoints");
    out.values.resize(nc);
    out.n_undefined.assign(nc, 0);
    out.n_pre_entry.assign(nc, 0);
    for (std::size_t c = 0; c < nc; ++c) {
        out.checkpoints.push_back(traces.front().rows[c].t);
        for (const auto& tr : traces) {
            const auto& row = tr.rows[c];
            if (row.R == 0.0) {
                out.values[c].push_back(0.0);
                ++out.n_pre_entry[c];
            } else if (!row.defined) {
                ++out.n_undefined[c];
            } else {
                out.values[c].push_back(row.R * std::abs(row.b_hat - b_true));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pooled occupation histogram (ergodic density check)
// ---------------------------------------------------------------------------

struct OccupationHistogram {
    double lo = 0.0, hi = 0.0;
    std::vector<double> centers;
    std::vector<double> density;  ///< time fraction per unit length
};

/// Fraction of total simulated time spent in each of `bins` equal cells of
/// [lo, hi], divided by the cell width, pooled over replicates.
inline OccupationHistogram occupation_histogram(const DiffusionModel& m, const PathConfig& tmpl,
                                                std::size_t n_paths, double lo, double hi,
                                                std::size_t bins, unsigned workers = default_workers()) {
    if (!(lo < hi) || bins == 0) throw Error("occupation_histogram: bad range");
    const double width = (hi - lo) / static_cast<double>(bins);
    const auto reps = map_replicates(n_paths, workers, [&](std::size_t r) {
        PathConfig cfg = tmpl;
        cfg.replicate_index = r;
        cfg.checkpoints = {};
        std::vector<std::uint64_t> counts(bins, 0);
        std::uint64_t total = 0;
        stream_path(
            m, cfg,
            [&](std::size_t, double x, double, double) {
                ++total;
                if (x < lo || x >= hi) return;
                const auto b = std::min(bins - 1, static_cast<std::size_t>((x - lo) / width));
                ++counts[b];
            },
            [](std::size_t, double) {});
        counts.push_back(total);
        return counts;
    });
    OccupationHistogram h{lo, hi, {}, std::vector<double>(bins, 0.0)};
    std::uint64_t total = 0;
    std::vector<std::uint64_t> counts(bins, 0);
    for (const auto& r : reps) {
        for (std::size_t b = 0; b < bins; ++b) counts[b] += r[b];
        total += r[bins];
    }
    for (std::size_t b = 0; b < bins; ++b) {
        h.centers.push_back(lo + (static_cast<double>(b) + 0.5) * width);
        h.density[b] = static_cast<double>(counts[b]) / static_cast<double>(total) / width;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Tightness statistics over one ensemble
// ---------------------------------------------------------------------------

struct TightnessOptions {
    double x0 = 0.0;
    double alpha = 1.0;
    double delta = 0.5;
    std::vector<double> lt_grid;  ///< compact K for the local-time statistics
    double epsilon = 0.0;         ///< occupation window; 0 means default_epsilon(dt)
    double h_min = 0.0;           ///< smallest usable bandwidth; 0 means sqrt(dt)
    int h_levels = 16;            ///< h grid delta 2^-j, j < h_levels
};

struct TightnessStatistic {
    std::string name;
    Band band = Band::ratio;
    std::vector<std::vector<double>> samples;  ///< [c][replicate]
};

struct TightnessEnsemble {
    std::vector<double> checkpoints;
    std::vector<double> v_hat;
    std::vector<double> h_grid;  ///< bandwidths used for the uniform-in-h statistic (0 = limit)
    std::vector<TightnessStatistic> statistics;
};

/// Bandwidth grid delta 2^-j (j < levels) restricted to h >= h_min.
inline std::vector<double> bandwidth_grid(double delta, int levels, double h_min) {
    std::vector<double> out;
    for (int j = 0; j < levels; ++j) {
        const double h = delta * std::ldexp(1.0, -j);
        if (h >= h_min) out.push_back(h);
    }
    return out;
}

/// Collects, on one ensemble, the normalized statistics whose tightness is
/// checked:
///   V/v                   observable IAF over v_hat
///   inf_L/v, sup_L/v      extreme occupation local time over lt_grid
///   inf_Ah/hv, sup_Ah/hv  extremes of A_t^h/(h v_hat) over the h grid and h -> 0
///   A^H/Hv                kernel AF at the random bandwidth H_t
///   M^H/sqrt(hv)          kernel martingale at H_t over sqrt(h_t v_hat)
inline TightnessEnsemble tightness_statistics(const DiffusionModel& m, const EquivalentSpec& s,
                                              const KernelSpec& k, TightnessOptions opt,
                                              PathConfig tmpl, std::size_t n_paths,
                                              unsigned workers = default_workers()) {
    if (opt.lt_grid.empty()) throw Error("tightness_statistics: empty local-time grid");
    if (opt.epsilon <= 0.0) opt.epsilon = default_epsilon(tmpl.dt);
    if (opt.h_min <= 0.0) opt.h_min = std::sqrt(tmpl.dt);
    tmpl.x_init = s.x_init;
    const auto hs = bandwidth_grid(opt.delta, opt.h_levels, opt.h_min);
    const auto nc = tmpl.checkpoints.size();
    const AdaptiveOptions aopt{opt.x0, opt.alpha, opt.delta};

    struct Rep {
        std::vector<double> v, lt_min, lt_max, ah_min, ah_max, a_H, H, m_H;
    };
    const auto reps = map_replicates(n_paths, workers, [&](std::size_t r) {
        PathConfig cfg = tmpl;
        cfg.replicate_index = r;
        ObservableIAF iaf(s, cfg.dt);
        OccupationField field(m, opt.lt_grid, opt.epsilon, cfg.dt);
        OccupationLocalTime at_x0(m, opt.x0, opt.epsilon, cfg.dt);
        std::vector<KernelAF> kafs;
        for (double h : hs) kafs.emplace_back(k, opt.x0, h, cfg.dt);
        AdaptiveEstimator est(m, s, k, aopt, cfg.dt);
        Rep out;
        stream_path(
            m, cfg,
            [&](std::size_t j, double x, double dw, double xn) {
                iaf.step(j, x, dw, xn);
                field.step(j, x, dw, xn);
                at_x0.step(j, x, dw, xn);
                for (auto& a : kafs) a.step(j, x, dw, xn);
                est.step(j, x, dw, xn);
            },
            [&](std::size_t c, double) {
                out.v.push_back(iaf.value());
                const auto lt = field.values();
                out.lt_min.push_back(*std::min_element(lt.begin(), lt.end()));
                out.lt_max.push_back(*std::max_element(lt.begin(), lt.end()));
                // h -> 0 end of the grid: int phi = 1, so (1/h) A^h -> L^{x0} / sigma^2(x0).
                const double s2 = m.sigma(opt.x0) * m.sigma(opt.x0);
                double lo = at_x0.value() / s2, hi = lo;
                for (std::size_t i = 0; i < hs.size(); ++i) {
                    const double v = kafs[i].value() / hs[i];
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                out.ah_min.push_back(lo);
                out.ah_max.push_back(hi);
                const auto row = est.evaluate(cfg.checkpoints[c]);
                out.a_H.push_back(row.denom);
                out.H.push_back(row.H);
                out.m_H.push_back(row.martingale);
            });
        return out;
    });

    TightnessEnsemble ens;
    ens.checkpoints = tmpl.checkpoints;
    ens.h_grid = hs;
    ens.h_grid.push_back(0.0);
    std::vector<TightnessStatistic> st = {{"V/v", Band::ratio, {}}, {"inf_L/v", Band::ratio, {}},
                                          {"sup_L/v", Band::ratio, {}},      {"inf_Ah/hv", Band::ratio, {}},
                                          {"sup_Ah/hv", Band::ratio, {}},    {"A^H/Hv", Band::ratio, {}},
                                          {"M^H/sqrt(hv)", Band::symmetric, {}}};
    for (auto& x : st) x.samples.resize(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        std::vector<double> v;
        for (const auto& r : reps) v.push_back(r.v[c]);
        const double vh = mean(v);
        ens.v_hat.push_back(vh);
        const double h_det = bandwidth_and_rate(vh, opt.alpha, opt.delta).H;
        for (const auto& r : reps) {
            st[0].samples[c].push_back(r.v[c] / vh);
            st[1].samples[c].push_back(r.lt_min[c] / vh);
            st[2].samples[c].push_back(r.lt_max[c] / vh);
            st[3].samples[c].push_back(r.ah_min[c] / vh);
            st[4].samples[c].push_back(r.ah_max[c] / vh);
            st[5].samples[c].push_back(r.a_H[c] / (r.H[c] * vh));
            st[6].samples[c].push_back(r.m_H[c] / std::sqrt(h_det * vh));
        }
    }
    ens.statistics = std::move(st);
    return ens;
}

}  // namespace rdlab
