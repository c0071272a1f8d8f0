// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "rdlab/error.hpp"
#include "rdlab/model.hpp"
#include "rdlab/rng.hpp"

namespace rdlab {

struct PathConfig {
    double x_init = 0.0;
    double t_max = 1.0;
    double dt = 1e-3;
    std::vector<double> checkpoints;
    std::uint64_t seed = 0;
    std::uint64_t replicate_index = 0;
};

/// Step size used when none is configured.
inline double default_dt(double t_max) { return t_max <= 1e3 ? 1e-3 : 1e-2; }

/// Number of Euler steps needed to reach time t; throws if t is not a
/// multiple of dt.
inline std::size_t steps_for(double t, double dt) {
    const double q = t / dt;
    const double n = std::round(q);
    if (std::abs(q - n) > 1e-6 * std::max(1.0, n)) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "checkpoint %.17g is not a multiple of dt = %.17g", t, dt);
        throw SimulationError(buf, 0);
    }
    return static_cast<std::size_t>(n);
}

/// Step indices of the checkpoints; validates ordering and range.
inline std::vector<std::size_t> checkpoint_steps(const std::vector<double>& checkpoints, double dt,
                                                 double t_max) {
    std::vector<std::size_t> out;
    out.reserve(checkpoints.size());
    double prev = 0.0;
    for (double t : checkpoints) {
        if (!(t > prev)) throw SimulationError("checkpoints must be positive and strictly increasing", 0);
        if (t > t_max * (1.0 + 1e-12)) throw SimulationError("checkpoint beyond t_max", 0);
        out.push_back(steps_for(t, dt));
        prev = t;
    }
    return out;
}

inline std::size_t total_steps(const PathConfig& cfg) {
    if (!(cfg.dt > 0.0) || !(cfg.t_max > 0.0) || cfg.dt > cfg.t_max)
        throw SimulationError("need 0 < dt <= t_max", 0);
    return static_cast<std::size_t>(std::llround(cfg.t_max / cfg.dt));
}

/// Discretized trajectory with the driving noise that produced it.
struct Path {
    double dt = 0.0;
    std::vector<double> x;   ///< N + 1 states
    std::vector<double> dw;  ///< N Brownian increments
    std::uint64_t model_id = 0;
    PathConfig config;

    std::size_t steps() const { return x.empty() ? 0 : x.size() - 1; }
    double t_max() const { return static_cast<double>(steps()) * dt; }
};

/// Runs the Euler-Maruyama scheme for one replicate without storing it.
///
/// on_step(k, x_k, dw_k, x_{k+1}) is called for every step and
/// on_checkpoint(c, x_t) right after the step that reaches checkpoint c.
template <class OnStep, class OnCheckpoint>
void stream_path(const DiffusionModel& m, const PathConfig& cfg, OnStep&& on_step,
                 OnCheckpoint&& on_checkpoint) {
    const std::size_t n = total_steps(cfg);
    const auto marks = checkpoint_steps(cfg.checkpoints, cfg.dt, cfg.t_max);
    NormalStream noise(cfg.seed, cfg.replicate_index);
    const double dt = cfg.dt;
    const double sqrt_dt = std::sqrt(dt);
    double x = cfg.x_init;
    std::size_t next = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double dw = sqrt_dt * noise();
        const double xn = x + m.drift(x) * dt + m.sigma(x) * dw;
        if (!std::isfinite(xn))
            throw SimulationError("non-finite state at step " + std::to_string(k), k);
        on_step(k, x, dw, xn);
        x = xn;
        while (next < marks.size() && marks[next] == k + 1) on_checkpoint(next++, x);
    }
}

inline Path simulate_path(const DiffusionModel& m, const PathConfig& cfg) {
    Path p;
    p.dt = cfg.dt;
    p.model_id = m.id();
    p.config = cfg;
    const std::size_t n = total_steps(cfg);
    p.x.reserve(n + 1);
    p.dw.reserve(n);
    p.x.push_back(cfg.x_init);
    stream_path(
        m, cfg,
        [&](std::size_t, double, double dw, double xn) {
            p.dw.push_back(dw);
            p.x.push_back(xn);
        },
        [](std::size_t, double) {});
    return p;
}

/// Feeds a stored path through the same callbacks as stream_path, using the
/// given checkpoints. A path without noise increments reports dw = NaN.
template <class OnStep, class OnCheckpoint>
void replay_path(const Path& p, const std::vector<double>& checkpoints, OnStep&& on_step,
                 OnCheckpoint&& on_checkpoint) {
    const auto marks = checkpoint_steps(checkpoints, p.dt, p.t_max());
    const std::size_t n = p.steps();
    const bool has_dw = p.dw.size() == n;
    std::size_t next = 0;
    while (next < marks.size() && marks[next] == 0) on_checkpoint(next++, p.x[0]);
    for (std::size_t k = 0; k < n; ++k) {
        on_step(k, p.x[k], has_dw ? p.dw[k] : std::nan(""), p.x[k + 1]);
        while (next < marks.size() && marks[next] == k + 1) on_checkpoint(next++, p.x[k + 1]);
    }
}

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error("truncated path dump");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace detail

/// Binary dump: model_id, seed, replicate, dt, N as little-endian 64-bit
/// fields, then N + 1 doubles of x and N doubles of dw.
inline void write_path_dump(const Path& p, const std::string& file) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw Error("cannot open " + file + " for writing");
    detail::put_u64(os, p.model_id);
    detail::put_u64(os, p.config.seed);
    detail::put_u64(os, p.config.replicate_index);
    detail::put_u64(os, std::bit_cast<std::uint64_t>(p.dt));
    detail::put_u64(os, p.steps());
    for (double v : p.x) detail::put_u64(os, std::bit_cast<std::uint64_t>(v));
    for (double v : p.dw) detail::put_u64(os, std::bit_cast<std::uint64_t>(v));
    if (!os) throw Error("write failed for " + file);
}

inline Path read_path_dump(const std::string& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw Error("cannot open " + file);
    Path p;
    p.model_id = detail::get_u64(is);
    p.config.seed = detail::get_u64(is);
    p.config.replicate_index = detail::get_u64(is);
    p.dt = std::bit_cast<double>(detail::get_u64(is));
    const std::uint64_t n = detail::get_u64(is);
    p.x.resize(n + 1);
    p.dw.resize(n);
    for (auto& v : p.x) v = std::bit_cast<double>(detail::get_u64(is));
    for (auto& v : p.dw) v = std::bit_cast<double>(detail::get_u64(is));
    p.config.dt = p.dt;
    p.config.t_max = static_cast<double>(n) * p.dt;
    p.config.x_init = p.x.front();
    return p;
}

}  // namespace rdlab
