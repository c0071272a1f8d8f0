// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: runs the shipped configurations and prints one PASS/FAIL
// line per criterion. Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rdlab/cli/config.hpp"
#include "rdlab/cli/experiment.hpp"
#include "rdlab/diagnostics.hpp"
#include "rdlab/estimate.hpp"
#include "rdlab/functionals.hpp"

namespace fs = std::filesystem;
using namespace rdlab;

namespace {

struct Context {
    fs::path configs;
    fs::path work;
    unsigned workers = 1;
};

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [x]");
    }
};

std::string num(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

cli::RunConfig load(const Context& ctx, const std::string& name) {
    return cli::load_config((ctx.configs / (name + ".ini")).string());
}

fs::path run(const Context& ctx, const std::string& name, const std::string& command) {
    auto cfg = load(ctx, name);
    cfg.out_dir = (ctx.work / name).string();
    cli::run_experiment(cfg, command, {ctx.workers, false});
    return cfg.out_dir;
}

/// Numeric column of a CSV, optionally restricted to rows where `key` == value.
std::vector<double> column(const fs::path& file, const std::string& name, const std::string& key = {},
                           double value = 0.0) {
    const auto t = cli::read_csv(file);
    const auto c = t.column(name);
    std::vector<double> out;
    for (const auto& r : t.rows) {
        if (!key.empty() && std::stod(r[t.column(key)]) != value) continue;
        out.push_back(r[c] == "nan" ? std::nan("") : std::stod(r[c]));
    }
    return out;
}

// ---------------------------------------------------------------------------

Outcome check_invariant_density(const Context& ctx) {
    const auto dir = run(ctx, "c1_density_ou", "diagnose:density");
    const auto x = column(dir / "density.csv", "x");
    const auto emp = column(dir / "density.csv", "empirical");
    const double peak = 1.0 / std::sqrt(std::numbers::pi);
    double sup = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        sup = std::max(sup, std::abs(emp[i] - std::exp(-x[i] * x[i]) * peak));
    Outcome o;
    o.check(x.size() == 41, num(x.size()) + " bins");
    o.check(sup <= 0.05 * peak, "sup |histogram - exp(-x^2)/sqrt(pi)| = " + num(sup) + " <= " + num(0.05 * peak));
    return o;
}

Outcome check_chacon_ornstein(const Context& ctx) {
    const auto dir = run(ctx, "c2_chacon_bm", "diagnose:chacon-ornstein");
    const auto f = dir / "chacon_ornstein.csv";
    const double med = column(f, "median", "t", 1e4).at(0);
    const double undef = column(f, "undefined_fraction", "t", 1e4).at(0);
    Outcome o;
    o.check(std::abs(med - 2.0) <= 0.2, "median ratio at t=1e4 " + num(med) + " within 10% of 2");
    o.check(undef < 0.01, "undefined fraction " + num(undef) + " < 0.01");
    return o;
}

Outcome check_local_time_oracle(const Context& ctx) {
    // No CLI command reports the Tanaka estimator, so this one drives the
    // library directly with the configured model and stream layout.
    const auto cfg = load(ctx, "c3_local_time_bm");
    const auto tmpl = cfg.path_template();
    const double y = cfg.estimate.x0;
    const double eps = cfg.diagnostics.epsilon;
    struct Pair {
        double tanaka, occupation;
    };
    const auto reps = map_replicates(cfg.sim.replications, ctx.workers, [&](std::size_t r) {
        PathConfig pc = tmpl;
        pc.replicate_index = r;
        TanakaLocalTime tan(y);
        OccupationLocalTime occ(cfg.model, y, eps, pc.dt);
        stream_path(
            cfg.model, pc,
            [&](std::size_t k, double x, double dw, double xn) {
                tan.step(k, x, dw, xn);
                occ.step(k, x, dw, xn);
            },
            [](std::size_t, double) {});
        return Pair{tan.value(), occ.value()};
    });
    std::vector<double> tan, occ;
    for (const auto& p : reps) {
        tan.push_back(p.tanaka);
        occ.push_back(p.occupation);
    }
    const double want = std::sqrt(2.0 * cfg.sim.t_max / std::numbers::pi);
    const double mt = mean(tan), mo = mean(occ);
    Outcome o;
    o.check(std::abs(mt / want - 1.0) <= 0.03,
            "Tanaka mean " + num(mt) + " (SE " + num(standard_error(tan), 2) + ") within 3% of " + num(want));
    o.check(std::abs(mo / want - 1.0) <= 0.05, "occupation mean " + num(mo) + " within 5%");
    o.check(std::abs(mo / mt - 1.0) <= 0.05, "estimators agree to " + num(100.0 * std::abs(mo / mt - 1.0), 2) + "%");
    return o;
}

Outcome check_uniform_sco(const Context& ctx) {
    const auto dir = run(ctx, "c4_sco_bm", "diagnose:local-time");
    const auto t = column(dir / "sco.csv", "t");
    const auto err = column(dir / "sco.csv", "sup_error");
    const auto noise = column(dir / "sco.csv", "noise");
    const auto target = column(dir / "local_time.csv", "target");
    Outcome o;
    o.check(std::abs(target.at(0) - 2.0) < 1e-9, "target sigma^2 mu = " + num(target.at(0)));
    o.check(t.back() == 1e4 && err.back() <= 0.2, "sup error at t=1e4 " + num(err.back()) + " <= 0.2");
    bool mono = true;
    std::string seq;
    for (std::size_t i = 0; i < err.size(); ++i) {
        seq += (i ? ", " : "") + num(err[i], 3);
        if (i > 0) mono = mono && err[i] <= err[i - 1] + 1.5 * std::max(noise[i], noise[i - 1]);
    }
    o.check(mono, "sup errors " + seq + " nonincreasing within 1.5x noise");
    return o;
}

Outcome check_deterministic_equivalent(const Context& ctx) {
    Outcome o;
    const auto bm = run(ctx, "c5_equivalent_bm", "estimate");
    for (double t : {1e3, 1e4}) {
        const double v = column(bm / "equivalent.csv", "v_hat", "t", t).at(0);
        const double want = std::sqrt(t / (2.0 * std::numbers::pi));
        o.check(std::abs(v / want - 1.0) <= 0.10, "BM v_hat(" + num(t) + ") " + num(v) + " vs " + num(want));
    }
    const auto ou = run(ctx, "c5_equivalent_ou", "estimate");
    const double v = column(ou / "equivalent.csv", "v_hat", "t", 1e4).at(0);
    o.check(std::abs(v / 1e4 - 1.0) <= 0.05, "OU v_hat/t at 1e4 = " + num(v / 1e4));
    return o;
}

Outcome check_tightness(const Context& ctx) {
    Outcome o;
    for (const char* name : {"c6_tightness_bm", "c6_tightness_ou"}) {
        const auto dir = run(ctx, name, "diagnose:tightness");
        const auto t = cli::read_csv(dir / "coverage.csv");
        double worst = 2.0;
        std::string worst_name;
        std::size_t n = 0;
        for (const auto& r : t.rows) {
            if (std::stod(r[t.column("t")]) != 1e4 || std::stod(r[t.column("m")]) != 20.0) continue;
            ++n;
            const double c = std::stod(r[t.column("coverage")]);
            if (c < worst) {
                worst = c;
                worst_name = r[t.column("statistic")];
            }
        }
        o.check(n == 7 && worst >= 0.95, std::string(name + 3) + ": min coverage at m=20 " + num(worst) + " (" +
                                             worst_name + ") over " + num(n) + " statistics");
    }
    return o;
}

Outcome check_rate(const Context& ctx, const std::string& name, double lo, double hi, bool coverage) {
    const auto dir = run(ctx, name, "rate-study");
    const double slope = column(dir / "ratefit.csv", "slope").at(0);
    const double se = column(dir / "ratefit.csv", "stderr_slope").at(0);
    const double target = column(dir / "ratefit.csv", "target_exponent").at(0);
    Outcome o;
    o.check(lo <= slope && slope <= hi, "slope " + num(slope) + " +/- " + num(se, 2) + " in [" + num(lo) + ", " +
                                            num(hi) + "] (target " + num(target) + ")");
    if (coverage) {
        const auto cov = column(dir / "rate_coverage.csv", "coverage", "T", 1e4);
        const auto m = column(dir / "rate_coverage.csv", "m", "T", 1e4);
        double c10 = std::nan("");
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m[i] == 10.0) c10 = cov[i];
        o.check(c10 >= 0.9, "scaled error coverage at K=10, T=1e4 " + num(c10));
    }
    return o;
}

Outcome check_algebraic(const Context& ctx) {
    Outcome o;
    // bandwidth identities
    bool ident = true, mono = true;
    for (double alpha : {0.2, 0.5, 1.0}) {
        double h_prev = 1e300, r_prev = -1.0;
        for (double V = 0.0; V < 1e7; V = 2.0 * V + 0.5) {
            const auto br = bandwidth_and_rate(V, alpha, 0.5);
            if (br.H < 0.5) ident = ident && std::abs(br.R * std::pow(br.H, alpha) - 1.0) <= 1e-12;
            mono = mono && br.H <= h_prev && br.R >= r_prev;
            h_prev = br.H;
            r_prev = br.R;
        }
    }
    o.check(ident, "R H^alpha = 1 off-cap");
    o.check(mono, "H nonincreasing, R nondecreasing");

    // kernel scaling
    PathConfig pc;
    pc.t_max = 100.0;
    pc.dt = 1e-2;
    pc.seed = 1;
    const auto ou = DiffusionModel::ornstein_uhlenbeck();
    const auto path = simulate_path(ou, pc);
    const auto spec = make_equivalent_spec(ou, -1.0, 1.0, 0.0);
    const auto k = quartic_kernel();
    const auto a = adaptive_estimate(path, ou, {0.1, 1.0, 0.5}, spec, k, {100.0}).rows[0];
    const auto b = adaptive_estimate(path, ou, {0.1, 1.0, 0.5}, spec, scaled_kernel(k, 3.0), {100.0}).rows[0];
    o.check(a.defined && std::abs(a.b_hat - b.b_hat) <= 1e-13 * std::abs(a.b_hat) && a.H == b.H && a.R == b.R,
            "kernel scaling leaves the estimate unchanged");

    // exact power law
    const std::vector<double> T{10, 100, 1000};
    std::vector<std::vector<double>> err;
    for (double t : T) err.push_back(std::vector<double>(50, 2.0 * std::pow(t, -0.4)));
    const auto fit = rate_regression(err, T);
    o.check(std::abs(fit.slope + 0.4) <= 1e-12, "rate regression recovers -0.4 exactly");

    // worker-count determinism
    bool same = true;
    std::string differing;
    for (const auto& cmd : cli::experiment_commands()) {
        std::map<std::string, std::string> files[2];
        const unsigned counts[2] = {1, 4};
        for (int i = 0; i < 2; ++i) {
            auto cfg = load(ctx, "c9_smoke");
            cfg.out_dir = (ctx.work / "c9_smoke").string();
            fs::remove_all(cfg.out_dir);
            cli::run_experiment(cfg, cmd, {counts[i], cmd == "simulate"});
            for (const auto& e : fs::directory_iterator(cfg.out_dir))
                if (e.path().filename() != "manifest.txt")
                    files[i][e.path().filename().string()] = cli::read_file(e.path());
        }
        if (files[0] != files[1] || files[0].empty()) {
            same = false;
            differing += " " + cmd;
        }
    }
    o.check(same, "outputs byte-identical for 1 and 4 workers" + (same ? "" : ":" + differing));
    return o;
}

struct Criterion {
    int id;
    std::string title;
    std::function<Outcome(const Context&)> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance suite"};
    Context ctx;
    std::string configs, work;
    std::vector<int> only;
    ctx.workers = default_workers();
    app.add_option("--configs", configs, "directory with the acceptance configurations")->required();
    app.add_option("--work", work, "scratch directory for run outputs")->required();
    app.add_option("--only", only, "run only these criteria");
    app.add_option("--workers", ctx.workers, "worker threads");
    CLI11_PARSE(app, argc, argv);
    ctx.configs = configs;
    ctx.work = work;
    fs::create_directories(ctx.work);

    const std::vector<Criterion> criteria = {
        {1, "invariant density", check_invariant_density},
        {2, "occupation ratio", check_chacon_ornstein},
        {3, "local time oracle", check_local_time_oracle},
        {4, "uniform local time ratio", check_uniform_sco},
        {5, "deterministic equivalent", check_deterministic_equivalent},
        {6, "tightness coverage", check_tightness},
        {7, "ergodic rate", [](const Context& c) { return check_rate(c, "c7_rate_ou", -0.43, -0.23, true); }},
        {8, "null-recurrent rate", [](const Context& c) { return check_rate(c, "c8_rate_bump", -0.25, -0.09, false); }},
        {9, "exact properties", check_algebraic},
    };

    const std::set<int> selected(only.begin(), only.end());
    int failed = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run(ctx);
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << "  " << c.title << ": " << o.detail
                  << "  (" << num(secs, 3) << " s)" << std::endl;
        if (!o.pass) ++failed;
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed"))
              << std::endl;
    return failed ? 1 : 0;
}
