// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "rdlab/cli/config.hpp"
#include "rdlab/cli/io.hpp"
#include "rdlab/diagnostics.hpp"
#include "rdlab/estimate.hpp"
#include "rdlab/functionals.hpp"
#include "rdlab/model.hpp"
#include "rdlab/parallel.hpp"
#include "rdlab/sim.hpp"

namespace rdlab::cli {

struct RunOptions {
    unsigned workers = default_workers();
    bool dump = false;
};

/// Column sets, one per output file.
namespace columns {
inline const std::vector<std::string> paths = {"replicate", "t", "x", "min_x", "max_x", "occupation_g"};
inline const std::vector<std::string> traces = {"replicate", "t", "V", "H", "R", "b_hat", "denom", "defined"};
inline const std::vector<std::string> equivalent = {"t", "v_hat", "std_error", "n_paths"};
inline const std::vector<std::string> chacon = {"t", "median", "q25", "q75", "n_defined", "n_undefined",
                                                "undefined_fraction", "theoretical"};
inline const std::vector<std::string> local_time = {"t", "y", "mean_ratio", "target"};
inline const std::vector<std::string> sco = {"t", "v_hat", "sup_error", "noise"};
inline const std::vector<std::string> coverage = {"statistic", "band", "t", "m", "coverage", "n_reps", "underpowered"};
inline const std::vector<std::string> kernel_af = {"t", "h", "v_hat", "value", "target"};
inline const std::vector<std::string> density = {"x", "empirical", "target"};
inline const std::vector<std::string> errors = {"replicate", "T", "V", "H", "R", "b_hat", "abs_error",
                                                "scaled_error", "defined", "pre_entry"};
inline const std::vector<std::string> ratefit = {"slope", "intercept", "stderr_slope", "quantile", "n_T",
                                                 "target_exponent"};
inline const std::vector<std::string> rate_coverage = {"T", "m", "coverage", "n_counted", "n_undefined",
                                                       "n_pre_entry"};
}  // namespace columns

inline const char* to_string(Band b) {
    switch (b) {
        case Band::ratio: return "ratio";
        case Band::symmetric: return "symmetric";
        case Band::upper: return "upper";
    }
    return "?";
}

/// Theoretical rate exponent: -a/(2a+1) when the invariant mass is finite,
/// -a/(4a+2) for null-recurrent models with v_t ~ sqrt(t).
inline double target_exponent(bool ergodic, double alpha) {
    return ergodic ? -alpha / (2.0 * alpha + 1.0) : -alpha / (4.0 * alpha + 2.0);
}

namespace detail {

inline void prepare_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("output directory '" + dir.string() + "' cannot be created: " + ec.message());
    const auto probe = dir / ".write_probe";
    {
        std::ofstream out(probe);
        if (!out) throw Error("output directory '" + dir.string() + "' is not writable");
    }
    std::filesystem::remove(probe, ec);
}

inline void run_simulate(const RunConfig& cfg, const RunOptions& opt, const std::filesystem::path& dir,
                         Manifest& man) {
    const auto& m = cfg.model;
    const auto tmpl = cfg.path_template();
    const auto spec = cfg.equivalent();
    struct Row {
        double x, lo, hi, occ;
    };
    const auto reps = map_replicates(cfg.sim.replications, opt.workers, [&](std::size_t r) {
        PathConfig pc = tmpl;
        pc.replicate_index = r;
        std::vector<Row> rows;
        double lo = pc.x_init, hi = pc.x_init;
        WindowOccupation occ(spec.a, spec.b, pc.dt);
        auto on_step = [&](std::size_t k, double x, double dw, double xn) {
            occ.step(k, x, dw, xn);
            lo = std::min(lo, xn);
            hi = std::max(hi, xn);
        };
        auto on_cp = [&](std::size_t, double x) { rows.push_back({x, lo, hi, occ.value()}); };
        if (opt.dump) {
            const auto path = simulate_path(m, pc);
            write_path_dump(path, (dir / ("path_" + std::to_string(r) + ".bin")).string());
            replay_path(path, pc.checkpoints, on_step, on_cp);
        } else {
            stream_path(m, pc, on_step, on_cp);
        }
        return rows;
    });
    CsvWriter w(dir / "paths.csv", columns::paths);
    for (std::size_t r = 0; r < reps.size(); ++r)
        for (std::size_t c = 0; c < reps[r].size(); ++c)
            w.row({r, tmpl.checkpoints[c], reps[r][c].x, reps[r][c].lo, reps[r][c].hi, reps[r][c].occ});
    man.add_file(w);
    if (opt.dump) man.set("dumps", std::to_string(reps.size()));
}

inline void write_equivalent(const std::vector<double>& cps, const std::vector<std::vector<double>>& v_by_rep,
                             const std::filesystem::path& dir, Manifest& man) {
    CsvWriter w(dir / "equivalent.csv", columns::equivalent);
    for (std::size_t c = 0; c < cps.size(); ++c) {
        std::vector<double> col;
        for (const auto& r : v_by_rep) col.push_back(r[c]);
        w.row({cps[c], mean(col), col.size() > 1 ? standard_error(col) : 0.0, col.size()});
    }
    man.add_file(w);
}

inline void run_estimate(const RunConfig& cfg, const RunOptions& opt, const std::filesystem::path& dir,
                         Manifest& man) {
    const auto traces = adaptive_estimate_replicates(cfg.model, cfg.adaptive(), cfg.equivalent(), cfg.kernel(),
                                                     cfg.path_template(), cfg.sim.replications, opt.workers);
    CsvWriter w(dir / "traces.csv", columns::traces);
    std::vector<std::vector<double>> v_by_rep;
    for (std::size_t r = 0; r < traces.size(); ++r) {
        std::vector<double> v;
        for (const auto& row : traces[r].rows) {
            w.row({r, row.t, row.V, row.H, row.R, row.b_hat, row.denom, row.defined});
            v.push_back(row.V);
        }
        v_by_rep.push_back(std::move(v));
    }
    man.add_file(w);
    write_equivalent(cfg.sim.checkpoints, v_by_rep, dir, man);
}

inline void run_chacon_ornstein(const RunConfig& cfg, const RunOptions& opt, const std::filesystem::path& dir,
                                Manifest& man) {
    const auto& d = cfg.diagnostics;
    const auto res = chacon_ornstein_check(cfg.model, {d.f_a, d.f_b}, {cfg.estimate.g_a, cfg.estimate.g_b},
                                           cfg.path_template(), cfg.sim.replications, opt.workers);
    CsvWriter w(dir / "chacon_ornstein.csv", columns::chacon);
    for (const auto& r : res.rows) {
        const double frac = static_cast<double>(r.n_undefined) / static_cast<double>(r.n_defined + r.n_undefined);
        w.row({r.t, r.median, r.q25, r.q75, r.n_defined, r.n_undefined, frac, res.theoretical});
    }
    man.add_file(w);
}

inline void run_local_time(const RunConfig& cfg, const RunOptions& opt, const std::filesystem::path& dir,
                           Manifest& man) {
    const auto& d = cfg.diagnostics;
    const auto res = uniform_sco_error(cfg.model, cfg.equivalent(), d.lt_grid, cfg.estimate.x0, cfg.estimate.delta,
                                       cfg.path_template(), cfg.sim.replications, d.epsilon, opt.workers);
    CsvWriter lt(dir / "local_time.csv", columns::local_time);
    CsvWriter sco(dir / "sco.csv", columns::sco);
    for (std::size_t c = 0; c < res.checkpoints.size(); ++c) {
        for (std::size_t i = 0; i < res.grid.size(); ++i)
            lt.row({res.checkpoints[c], res.grid[i], res.mean_ratio[c][i], res.target[i]});
        sco.row({res.checkpoints[c], res.v_hat[c], res.sup_error[c], res.noise[c]});
    }
    man.add_file(lt);
    man.add_file(sco);
}

inline void run_tightness(const RunConfig& cfg, const RunOptions& opt, const std::filesystem::path& dir,
                          Manifest& man) {
    const auto& d = cfg.diagnostics;
    TightnessOptions topt;
    topt.x0 = cfg.estimate.x0;
    topt.alpha = cfg.estimate.alpha;
    topt.delta = cfg.estimate.delta;
    topt.lt_grid = d.lt_grid;
    topt.epsilon = d.epsilon;
    const auto ens = tightness_statistics(cfg.model, cfg.equivalent(), cfg.kernel(), topt, cfg.path_template(),
                                          cfg.sim.replications, opt.workers);
    CsvWriter w(dir / "coverage.csv", columns::coverage);
    for (const auto& st : ens.statistics) {
        const auto curve = tightness_curve(st.samples, ens.checkpoints, d.thresholds, st.band, st.name);
        for (std::size_t c = 0; c < ens.checkpoints.size(); ++c)
            for (std::size_t i = 0; i < d.thresholds.size(); ++i)
                w.row({st.name, to_string(st.band), ens.checkpoints[c], d.thresholds[i], curve.coverage[i][c],
                       curve.n_reps, curve.underpowered});
    }
    man.add_file(w);
    CsvWriter e(dir / "equivalent.csv", {"t", "v_hat"});
    for (std::size_t c = 0; c < ens.checkpoints.size(); ++c) e.row({ens.checkpoints[c], ens.v_hat[c]});
    man.add_file(e);
}

inline void run_kernel_af(const RunConfig& cfg, const RunOptions& opt, const std::filesystem::path& dir,
                          Manifest& man) {
    const auto& d = cfg.diagnostics;
    std::vector<double> hs;
    for (double t : cfg.sim.checkpoints) hs.push_back(std::min(std::pow(t, -d.h_exponent), cfg.estimate.delta));
    const DiffusionModel& m = cfg.model;
    std::function<double(double)> psi = [](double) { return 1.0; };
    if (d.psi == "sigma2") psi = [&m](double x) { return m.sigma(x) * m.sigma(x); };
    const auto rows = kernel_af_limit_check(m, cfg.equivalent(), cfg.estimate.x0, psi, hs, cfg.estimate.delta,
                                            cfg.kernel(), cfg.path_template(), cfg.sim.replications, opt.workers);
    CsvWriter w(dir / "kernel_af.csv", columns::kernel_af);
    for (const auto& r : rows) w.row({r.t, r.h, r.v_hat, r.value, r.target});
    man.add_file(w);
}

inline void run_density(const RunConfig& cfg, const RunOptions& opt, const std::filesystem::path& dir,
                        Manifest& man) {
    const auto& d = cfg.diagnostics;
    const auto h = occupation_histogram(cfg.model, cfg.path_template(), cfg.sim.replications, d.hist_lo, d.hist_hi,
                                        d.hist_bins, opt.workers);
    CsvWriter w(dir / "density.csv", columns::density);
    for (std::size_t b = 0; b < h.centers.size(); ++b)
        w.row({h.centers[b], h.density[b], reference_density(cfg.model, h.centers[b])});
    man.add_file(w);
}

inline void run_rate_study(const RunConfig& cfg, const RunOptions& opt, const std::filesystem::path& dir,
                           Manifest& man) {
    const auto& d = cfg.diagnostics;
    if (d.T_grid.size() < 3) throw ConfigError("rate-study needs 'diagnostics.T_grid' with at least three values");
    // One path per replicate up to max T; the estimate at T uses data up to T
    // only, so this equals separate runs of length T with the same streams.
    PathConfig tmpl = cfg.path_template();
    tmpl.t_max = d.T_grid.back();
    tmpl.checkpoints = d.T_grid;
    const auto traces = adaptive_estimate_replicates(cfg.model, cfg.adaptive(), cfg.equivalent(), cfg.kernel(), tmpl,
                                                     cfg.sim.replications, opt.workers);
    const double b_true = cfg.model.drift(cfg.estimate.x0);
    std::vector<std::vector<double>> abs_errors(d.T_grid.size());
    for (std::size_t c = 0; c < d.T_grid.size(); ++c) {
        CsvWriter w(dir / ("errors_T" + fmt_time(d.T_grid[c]) + ".csv"), columns::errors);
        for (std::size_t r = 0; r < traces.size(); ++r) {
            const auto& row = traces[r].rows[c];
            const double err = row.defined ? std::abs(row.b_hat - b_true) : std::numeric_limits<double>::quiet_NaN();
            abs_errors[c].push_back(err);
            w.row({r, d.T_grid[c], row.V, row.H, row.R, row.b_hat, err, row.R * err, row.defined, row.R == 0.0});
        }
        man.add_file(w);
    }
    const auto mass = invariant_mass_total(cfg.model);
    const bool ergodic = mass.status == MassStatus::finite;
    const auto fit = rate_regression(abs_errors, d.T_grid, d.quantile, d.min_defined);
    CsvWriter f(dir / "ratefit.csv", columns::ratefit);
    f.row({fit.slope, fit.intercept, fit.stderr_slope, fit.quantile_used, d.T_grid.size(),
           target_exponent(ergodic, cfg.estimate.alpha)});
    man.add_file(f);

    const auto st = scaled_error_statistic(traces, b_true);
    CsvWriter cov(dir / "rate_coverage.csv", columns::rate_coverage);
    for (std::size_t c = 0; c < st.checkpoints.size(); ++c) {
        for (double m : d.thresholds) {
            double frac = std::numeric_limits<double>::quiet_NaN();
            if (!st.values[c].empty())
                frac = tightness_curve({st.values[c]}, {st.checkpoints[c]}, {m}, Band::upper).coverage[0][0];
            cov.row({st.checkpoints[c], m, frac, st.values[c].size(), st.n_undefined[c], st.n_pre_entry[c]});
        }
    }
    man.add_file(cov);
}

}  // namespace detail

/// Names accepted by run_experiment.
inline const std::vector<std::string>& experiment_commands() {
    static const std::vector<std::string> names = {
        "simulate",           "estimate",           "diagnose:chacon-ornstein", "diagnose:local-time",
        "diagnose:tightness", "diagnose:kernel-af", "diagnose:density",         "rate-study"};
    return names;
}

/// Runs one command and writes its data files plus manifest.txt and
/// config.resolved.ini into cfg.out_dir. Returns the manifest.
inline Manifest run_experiment(const RunConfig& cfg, const std::string& command, const RunOptions& opt = {}) {
    const auto& names = experiment_commands();
    if (std::find(names.begin(), names.end(), command) == names.end())
        throw Error("unknown command '" + command + "'");
    if (opt.dump && command != "simulate") throw Error("--dump is only valid for simulate");
    const auto start = std::chrono::steady_clock::now();
    const std::filesystem::path dir(cfg.out_dir);
    detail::prepare_directory(dir);

    const auto resolved = resolved_text(cfg);
    Manifest man;
    man.set("version", kVersion);
    man.set("command", command);
    man.set("config_digest", sha256_hex(resolved));
    man.set("seed", std::to_string(cfg.sim.seed));
    man.set("replications", std::to_string(cfg.sim.replications));
    man.set("model", cfg.model.describe());
    man.set("model_name", cfg.model.name);
    man.set("recurrence", to_string(classify_recurrence(cfg.model)));
    man.set("invariant_mass", to_string(invariant_mass_total(cfg.model).status));
    man.set("alpha", fmt(cfg.estimate.alpha));

    if (command == "simulate") detail::run_simulate(cfg, opt, dir, man);
    else if (command == "estimate") detail::run_estimate(cfg, opt, dir, man);
    else if (command == "diagnose:chacon-ornstein") detail::run_chacon_ornstein(cfg, opt, dir, man);
    else if (command == "diagnose:local-time") detail::run_local_time(cfg, opt, dir, man);
    else if (command == "diagnose:tightness") detail::run_tightness(cfg, opt, dir, man);
    else if (command == "diagnose:kernel-af") detail::run_kernel_af(cfg, opt, dir, man);
    else if (command == "diagnose:density") detail::run_density(cfg, opt, dir, man);
    else detail::run_rate_study(cfg, opt, dir, man);

    {
        std::ofstream out(dir / "config.resolved.ini", std::ios::binary | std::ios::trunc);
        out << resolved;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    man.set("workers", std::to_string(opt.workers));
    man.set("wall_clock_seconds", fmt(secs));
    man.write(dir / "manifest.txt");
    return man;
}

}  // namespace rdlab::cli
