// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rdlab/error.hpp"
#include "rdlab/kernel.hpp"
#include "rdlab/model.hpp"
#include "rdlab/sim.hpp"

namespace rdlab {

enum class SeriesKind { af, local_time_tanaka, local_time_occupation, kernel_af, kernel_martingale };

inline const char* to_string(SeriesKind k) {
    switch (k) {
        case SeriesKind::af: return "af";
        case SeriesKind::local_time_tanaka: return "local_time_tanaka";
        case SeriesKind::local_time_occupation: return "local_time_occupation";
        case SeriesKind::kernel_af: return "kernel_af";
        case SeriesKind::kernel_martingale: return "kernel_martingale";
    }
    return "?";
}

/// Values of one path functional at a list of checkpoint times.
struct FunctionalSeries {
    std::vector<double> checkpoints;
    std::vector<double> values;
    SeriesKind kind = SeriesKind::af;
    std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// Streaming accumulators. Each consumes (k, x_k, dw_k, x_{k+1}) in order and
// reports the functional over [0, t_{k+1}] through value().
// ---------------------------------------------------------------------------

/// Left-point Riemann sum of f(X) dt. The sum of f is kept unscaled and
/// multiplied by dt on read.
template <class F>
class AdditiveAccumulator {
  public:
    AdditiveAccumulator(F f, double dt) : f_(std::move(f)), dt_(dt) {}

    void step(std::size_t k, double x, double, double) {
        const double v = f_(x);
        if (!std::isfinite(v))
            throw FunctionalError("non-finite integrand at step " + std::to_string(k), k, x);
        sum_ += v;
    }
    double value() const { return sum_ * dt_; }

  private:
    F f_;
    double dt_;
    double sum_ = 0.0;
};

/// Time spent in the closed window [lo, hi], counted in whole steps.
class WindowOccupation {
  public:
    WindowOccupation(double lo, double hi, double dt) : lo_(lo), hi_(hi), dt_(dt) {}

    void step(std::size_t, double x, double, double) {
        if (lo_ <= x && x <= hi_) ++count_;
    }
    std::uint64_t count() const { return count_; }
    double value() const { return static_cast<double>(count_) * dt_; }

  private:
    double lo_, hi_, dt_;
    std::uint64_t count_ = 0;
};

/// Occupation-density estimate sigma^2(y)/(2 eps) * |{s <= t : |X_s - y| <= eps}|.
class OccupationLocalTime {
  public:
    OccupationLocalTime(const DiffusionModel& m, double y, double eps, double dt)
        : window_(y - eps, y + eps, dt), scale_(m.sigma(y) * m.sigma(y) / (2.0 * eps)) {
        if (!(eps > 0.0)) throw Error("occupation window epsilon must be positive");
    }
    void step(std::size_t k, double x, double dw, double xn) { window_.step(k, x, dw, xn); }
    double value() const { return scale_ * window_.value(); }

  private:
    WindowOccupation window_;
    double scale_;
};

/// Discrete Tanaka formula 2[(X_t - y)^+ - (X_0 - y)^+ - sum 1{X_k > y} dX_k].
class TanakaLocalTime {
  public:
    explicit TanakaLocalTime(double y) : y_(y) {}

    void step(std::size_t, double x, double, double xn) {
        if (!started_) {
            start_ = x;
            started_ = true;
        }
        if (x > y_) integral_ += xn - x;
        current_ = xn;
    }
    double value() const {
        if (!started_) return 0.0;
        return 2.0 * (std::max(current_ - y_, 0.0) - std::max(start_ - y_, 0.0) - integral_);
    }

  private:
    double y_;
    bool started_ = false;
    double start_ = 0.0;
    double current_ = 0.0;
    double integral_ = 0.0;
};

/// Kernel additive functional sum phi((X_k - x0)/h) dt.
class KernelAF {
  public:
    KernelAF(const KernelSpec& k, double x0, double h, double dt)
        : kernel_(&k), x0_(x0), h_(h), dt_(dt) {
        if (!(h > 0.0)) throw Error("bandwidth h must be positive");
    }
    void step(std::size_t k, double x, double, double) {
        const double u = (x - x0_) / h_;
        if (std::abs(u) >= 1.0) return;
        const double v = kernel_->phi(u);
        if (!std::isfinite(v))
            throw FunctionalError("non-finite kernel value at step " + std::to_string(k), k, x);
        sum_ += v;
    }
    double value() const { return sum_ * dt_; }

  private:
    const KernelSpec* kernel_;
    double x0_, h_, dt_;
    double sum_ = 0.0;
};

/// Ito sum of phi((X_k - x0)/h) sigma(X_k) dW_k.
class KernelMartingale {
  public:
    KernelMartingale(const DiffusionModel& m, const KernelSpec& k, double x0, double h)
        : model_(&m), kernel_(&k), x0_(x0), h_(h) {
        if (!(h > 0.0)) throw Error("bandwidth h must be positive");
    }
    void step(std::size_t k, double x, double dw, double) {
        const double u = (x - x0_) / h_;
        if (std::abs(u) >= 1.0) return;
        if (std::isnan(dw)) throw FunctionalError("path carries no noise increments", k, x);
        sum_ += kernel_->phi(u) * model_->sigma(x) * dw;
    }
    double value() const { return sum_; }

  private:
    const DiffusionModel* model_;
    const KernelSpec* kernel_;
    double x0_, h_;
    double sum_ = 0.0;
};

/// Occupation local time on a whole grid in one pass.
///
/// The window edges y_i -/+ eps cut the line into atoms (each edge point and
/// each open gap between edges). Step counts are kept per atom; every window
/// is an exact union of atoms, so each grid value equals the pointwise
/// OccupationLocalTime at that point.
class OccupationField {
  public:
    OccupationField(const DiffusionModel& m, std::vector<double> grid, double eps, double dt)
        : grid_(std::move(grid)), eps_(eps), dt_(dt) {
        if (grid_.empty()) throw Error("local-time grid is empty");
        if (!std::is_sorted(grid_.begin(), grid_.end())) throw Error("local-time grid must be sorted");
        if (!(eps > 0.0)) throw Error("occupation window epsilon must be positive");
        for (double y : grid_) {
            edges_.push_back(y - eps);
            edges_.push_back(y + eps);
            scale_.push_back(m.sigma(y) * m.sigma(y) / (2.0 * eps));
        }
        std::sort(edges_.begin(), edges_.end());
        edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
        counts_.assign(2 * edges_.size() + 1, 0);
        for (double y : grid_) {
            first_atom_.push_back(atom_of(y - eps));
            last_atom_.push_back(atom_of(y + eps));
        }
    }

    void step(std::size_t, double x, double, double) {
        if (x < edges_.front() || x > edges_.back()) return;
        ++counts_[atom_of(x)];
    }

    /// Current estimate at every grid point.
    std::vector<double> values() const {
        std::vector<std::uint64_t> prefix(counts_.size() + 1, 0);
        for (std::size_t i = 0; i < counts_.size(); ++i) prefix[i + 1] = prefix[i] + counts_[i];
        std::vector<double> out(grid_.size());
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            const auto n = prefix[last_atom_[i] + 1] - prefix[first_atom_[i]];
            out[i] = scale_[i] * (static_cast<double>(n) * dt_);
        }
        return out;
    }

    const std::vector<double>& grid() const { return grid_; }

  private:
    std::size_t atom_of(double x) const {
        const auto it = std::lower_bound(edges_.begin(), edges_.end(), x);
        const auto j = static_cast<std::size_t>(it - edges_.begin());
        if (it != edges_.end() && *it == x) return 2 * j + 1;
        return 2 * j;
    }

    std::vector<double> grid_;
    double eps_, dt_;
    std::vector<double> edges_;
    std::vector<double> scale_;
    std::vector<std::uint64_t> counts_;
    std::vector<std::size_t> first_atom_, last_atom_;
};

namespace detail {

template <class Acc>
FunctionalSeries collect_series(const Path& p, const std::vector<double>& checkpoints, Acc& acc,
                                SeriesKind kind) {
    FunctionalSeries s{checkpoints, {}, kind, {}};
    s.values.reserve(checkpoints.size());
    replay_path(
        p, checkpoints, [&](std::size_t k, double x, double dw, double xn) { acc.step(k, x, dw, xn); },
        [&](std::size_t, double) { s.values.push_back(acc.value()); });
    return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Path-level operations.
// ---------------------------------------------------------------------------

/// A_t = int_0^t f(X_s) ds as a left-point Riemann sum.
template <class F>
FunctionalSeries additive_functional(const Path& p, F f, const std::vector<double>& checkpoints) {
    AdditiveAccumulator<F> acc(std::move(f), p.dt);
    return detail::collect_series(p, checkpoints, acc, SeriesKind::af);
}

/// A_t^h = int_0^t phi((X_s - x0)/h) ds.
inline FunctionalSeries kernel_af(const Path& p, double x0, double h, const KernelSpec& k,
                                  const std::vector<double>& checkpoints) {
    KernelAF acc(k, x0, h, p.dt);
    return detail::collect_series(p, checkpoints, acc, SeriesKind::kernel_af);
}

/// M_t^h = int_0^t phi((X_s - x0)/h) sigma(X_s) dW_s (left-point Ito sum).
inline FunctionalSeries kernel_martingale(const Path& p, const DiffusionModel& m, double x0,
                                          double h, const KernelSpec& k,
                                          const std::vector<double>& checkpoints) {
    if (p.dw.size() != p.steps()) throw Error("kernel_martingale needs a path with noise increments");
    KernelMartingale acc(m, k, x0, h);
    return detail::collect_series(p, checkpoints, acc, SeriesKind::kernel_martingale);
}

/// Tanaka-formula local time at level y. Values below -10 sqrt(dt) are
/// reported as warnings; small negative values are discretization noise.
inline FunctionalSeries tanaka_local_time(const Path& p, double y,
                                          const std::vector<double>& checkpoints) {
    TanakaLocalTime acc(y);
    auto s = detail::collect_series(p, checkpoints, acc, SeriesKind::local_time_tanaka);
    const double limit = -10.0 * std::sqrt(p.dt);
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        if (s.values[i] < limit) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "Tanaka local time at y=%g, t=%g is %g (below %g)", y,
                          s.checkpoints[i], s.values[i], limit);
            s.warnings.emplace_back(buf);
        }
    }
    return s;
}

/// Occupation-window local time sigma^2(y)/(2 eps) int_0^t 1{|X_s - y| <= eps} ds.
inline FunctionalSeries occupation_local_time(const Path& p, const DiffusionModel& m, double y,
                                              double eps, const std::vector<double>& checkpoints) {
    OccupationLocalTime acc(m, y, eps, p.dt);
    return detail::collect_series(p, checkpoints, acc, SeriesKind::local_time_occupation);
}

/// Estimated local time over a spatial grid and checkpoint times.
struct LocalTimeField {
    std::vector<double> grid;
    std::vector<double> t;
    /// values[i][c]: grid point i, checkpoint c
    std::vector<std::vector<double>> values;
    double epsilon = 0.0;
};

inline LocalTimeField local_time_field(const Path& p, const DiffusionModel& m,
                                       const std::vector<double>& grid, double eps,
                                       const std::vector<double>& checkpoints) {
    OccupationField acc(m, grid, eps, p.dt);
    LocalTimeField f{grid, checkpoints, std::vector<std::vector<double>>(grid.size()), eps};
    replay_path(
        p, checkpoints, [&](std::size_t k, double x, double dw, double xn) { acc.step(k, x, dw, xn); },
        [&](std::size_t, double) {
            const auto v = acc.values();
            for (std::size_t i = 0; i < v.size(); ++i) f.values[i].push_back(v[i]);
        });
    return f;
}

/// Default occupation window: five times the per-step displacement scale.
inline double default_epsilon(double dt) { return 5.0 * std::sqrt(dt); }

}  // namespace rdlab
