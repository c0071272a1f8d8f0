// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run configuration: an INI file with sections [model], [sim], [estimate],
// [diagnostics] and [output]. Every key is checked; unknown keys and
// sections are rejected. After loading, all defaults are resolved and
// the canonical text of the resolved configuration is what gets hashed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rdlab/error.hpp"
#include "rdlab/estimate.hpp"
#include "rdlab/functionals.hpp"
#include "rdlab/kernel.hpp"
#include "rdlab/model.hpp"
#include "rdlab/sim.hpp"

namespace rdlab::cli {

struct SimBlock {
    double x_init = 0.0;
    double t_max = 1.0;
    double dt = 0.0;
    std::vector<double> checkpoints;  ///< resolved
    std::uint64_t seed = 0;
    std::size_t replications = 1;
};

struct EstimateBlock {
    double x0 = 0.0;
    double alpha = 1.0;
    double delta = 0.5;
    double g_a = 0.0;
    double g_b = 1.0;
    std::string kernel = "quartic";
    bool blind = false;
};

struct DiagnosticsBlock {
    std::vector<double> thresholds{2.0, 5.0, 10.0, 20.0, 50.0};
    double quantile = 0.5;
    std::vector<double> lt_grid;  ///< resolved points
    double epsilon = 0.0;
    std::vector<double> T_grid;
    double f_a = 0.0;
    double f_b = 2.0;
    std::string psi = "one";
    double h_exponent = 0.0;  ///< kernel-af bandwidth h_t = min(t^-e, delta)
    std::size_t min_defined = 50;
    double hist_lo = -2.0;
    double hist_hi = 2.0;
    std::size_t hist_bins = 41;
};

struct RunConfig {
    DiffusionModel model;
    SimBlock sim;
    EstimateBlock estimate;
    DiagnosticsBlock diagnostics;
    std::string out_dir = "out";

    PathConfig path_template() const {
        PathConfig p;
        p.x_init = sim.x_init;
        p.t_max = sim.t_max;
        p.dt = sim.dt;
        p.checkpoints = sim.checkpoints;
        p.seed = sim.seed;
        return p;
    }
    EquivalentSpec equivalent() const {
        return make_equivalent_spec(model, estimate.g_a, estimate.g_b, sim.x_init, estimate.blind);
    }
    AdaptiveOptions adaptive() const { return {estimate.x0, estimate.alpha, estimate.delta}; }
    KernelSpec kernel() const { return kernel_by_name(estimate.kernel); }
};

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& text) {
    const auto t = trim(text);
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &pos);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
    }
    if (pos != t.size() || !std::isfinite(v))
        throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
    return v;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& text) {
    const auto t = trim(text);
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError("key '" + key + "': expected a nonnegative integer, got '" + text + "'");
    try {
        return std::stoull(t);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': integer out of range: '" + text + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& text) {
    const auto t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + text + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
}

inline std::pair<double, double> parse_interval(const std::string& key, const std::string& text) {
    const auto v = parse_list(key, text);
    if (v.size() != 2 || !(v[0] < v[1]))
        throw ConfigError("key '" + key + "': expected 'a, b' with a < b");
    return {v[0], v[1]};
}

/// Reads keys of one section, remembering which ones were consumed.
class Section {
  public:
    Section(std::string name, const boost::property_tree::ptree* tree) : name_(std::move(name)), tree_(tree) {}

    const std::string* raw(const std::string& key) {
        seen_.insert(key);
        if (!tree_) return nullptr;
        const auto it = tree_->find(key);
        if (it == tree_->not_found()) return nullptr;
        return &it->second.data();
    }
    bool has(const std::string& key) {
        seen_.insert(key);
        return tree_ && tree_->find(key) != tree_->not_found();
    }
    double number(const std::string& key, double fallback) {
        const auto* r = raw(key);
        return r ? parse_double(qualified(key), *r) : fallback;
    }
    std::string text(const std::string& key, const std::string& fallback) {
        const auto* r = raw(key);
        return r ? trim(*r) : fallback;
    }
    std::string qualified(const std::string& key) const { return name_ + "." + key; }

    void reject_unknown() const {
        if (!tree_) return;
        for (const auto& [k, v] : *tree_) {
            if (!seen_.count(k)) throw ConfigError("unknown key '" + name_ + "." + k + "'");
        }
    }

  private:
    std::string name_;
    const boost::property_tree::ptree* tree_;
    std::set<std::string> seen_;
};

inline DriftKind drift_kind_from(const std::string& s) {
    for (auto k : {DriftKind::zero, DriftKind::linear, DriftKind::constant, DriftKind::compact_bump,
                   DriftKind::holder_kink, DriftKind::tabulated})
        if (s == to_string(k)) return k;
    throw ConfigError("key 'model.drift': unknown drift family '" + s + "'");
}

inline DiffusionModel read_model(Section& sec) {
    const auto kind = drift_kind_from(sec.text("drift", "zero"));
    const std::string sigma = sec.text("sigma", "constant");
    const double s = sec.number("s", 1.0);
    DiffusionModel m;
    switch (kind) {
        case DriftKind::zero: m = DiffusionModel::brownian(s); break;
        case DriftKind::linear: m = DiffusionModel::ornstein_uhlenbeck(sec.number("theta", 1.0), s); break;
        case DriftKind::constant: m = DiffusionModel::constant_drift(sec.number("c", 1.0), s); break;
        case DriftKind::compact_bump: m = DiffusionModel::compact_bump(sec.number("c", 1.0), s); break;
        case DriftKind::holder_kink: m = DiffusionModel::holder_kink(sec.number("alpha_b", 0.5), s); break;
        case DriftKind::tabulated: {
            m = DiffusionModel::brownian(s);
            m.name = "tabulated";
            m.drift_kind = DriftKind::tabulated;
            const auto* r = sec.raw("table");
            if (!r) throw ConfigError("key 'model.table' is required for tabulated drift");
            const auto v = parse_list("model.table", *r);
            if (v.size() < 4 || v.size() % 2 != 0)
                throw ConfigError("key 'model.table': expected pairs 'x1, b1, x2, b2, ...'");
            for (std::size_t i = 0; i < v.size(); i += 2) m.table.emplace_back(v[i], v[i + 1]);
            break;
        }
    }
    // Parameters that do not belong to the chosen family are unknown keys.
    const std::map<DriftKind, std::string> owned = {{DriftKind::linear, "theta"},
                                                    {DriftKind::constant, "c"},
                                                    {DriftKind::compact_bump, "c"},
                                                    {DriftKind::holder_kink, "alpha_b"},
                                                    {DriftKind::tabulated, "table"}};
    for (const char* p : {"theta", "c", "alpha_b", "table"}) {
        const auto it = owned.find(kind);
        if (sec.has(p) && (it == owned.end() || it->second != p))
            throw ConfigError("unknown key 'model." + std::string(p) + "' for drift family '" +
                              to_string(kind) + "'");
    }
    if (sigma == "constant") {
        m.sigma_kind = SigmaKind::constant;
        if (sec.has("s0") || sec.has("s1"))
            throw ConfigError("unknown key 'model.s0/s1' for sigma = constant (use 's')");
    } else if (sigma == "affine_envelope") {
        if (sec.has("s")) throw ConfigError("unknown key 'model.s' for sigma = affine_envelope (use 's0', 's1')");
        m.sigma_kind = SigmaKind::affine_envelope;
        m.s0 = sec.number("s0", 1.0);
        m.s1 = sec.number("s1", 0.0);
    } else {
        throw ConfigError("key 'model.sigma': unknown diffusion family '" + sigma + "'");
    }
    if (sec.has("name")) m.name = sec.text("name", m.name);
    m.growth_constant = sec.number("growth_constant", m.growth_constant);
    m.holder.x0 = sec.number("holder_x0", m.holder.x0);
    m.holder.alpha = sec.number("holder_alpha", m.holder.alpha);
    m.holder.gamma = sec.number("holder_gamma", m.holder.gamma);
    m.holder.delta = sec.number("holder_delta", m.holder.delta);
    return m;
}

inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_number(v[i]);
    return out;
}

}  // namespace detail

/// k log-spaced times in [t_min, t_max], rounded down to multiples of dt
/// and deduplicated; times that round to 0 are dropped.
inline std::vector<double> log_spaced_checkpoints(double t_min, double t_max, std::size_t k, double dt) {
    if (k == 0) throw ConfigError("key 'sim.checkpoints': count must be at least 1");
    if (!(t_min > 0.0 && t_min <= t_max)) throw ConfigError("key 'sim.t_min': need 0 < t_min <= t_max");
    std::vector<double> out;
    const auto n_max = static_cast<std::int64_t>(std::llround(t_max / dt));
    for (std::size_t i = 0; i < k; ++i) {
        const double frac = k == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(k - 1);
        const double t = std::exp(std::log(t_min) + frac * (std::log(t_max) - std::log(t_min)));
        // Round down, tolerating representation error just below a multiple.
        auto n = static_cast<std::int64_t>(std::floor(t / dt * (1.0 + 1e-12)));
        n = std::min(n, n_max);
        if (n <= 0) continue;
        const double snapped = static_cast<double>(n) * dt;
        if (out.empty() || snapped > out.back()) out.push_back(snapped);
    }
    if (out.empty()) throw ConfigError("key 'sim.checkpoints': every checkpoint rounds down to 0");
    return out;
}

/// Parses, validates and resolves a configuration given as INI text.
inline RunConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream is(text);
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config does not parse: ") + e.what());
    }
    const std::set<std::string> known = {"model", "sim", "estimate", "diagnostics", "output"};
    for (const auto& [name, sub] : tree) {
        if (!known.count(name)) {
            if (sub.empty()) throw ConfigError("unknown key '" + name + "' outside any section");
            throw ConfigError("unknown section '[" + name + "]'");
        }
    }
    auto child = [&](const char* n) -> const pt::ptree* {
        const auto it = tree.find(n);
        return it == tree.not_found() ? nullptr : &it->second;
    };
    detail::Section msec("model", child("model")), ssec("sim", child("sim")), esec("estimate", child("estimate")),
        dsec("diagnostics", child("diagnostics")), osec("output", child("output"));

    RunConfig cfg;
    cfg.model = detail::read_model(msec);
    try {
        require_valid(cfg.model);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }

    auto& sim = cfg.sim;
    sim.x_init = ssec.number("x_init", 0.0);
    sim.t_max = ssec.number("t_max", 100.0);
    if (!(sim.t_max > 0.0)) throw ConfigError("key 'sim.t_max' must be positive");
    sim.dt = ssec.number("dt", default_dt(sim.t_max));
    if (!(sim.dt > 0.0 && sim.dt <= sim.t_max)) throw ConfigError("key 'sim.dt': need 0 < dt <= t_max");
    try {
        steps_for(sim.t_max, sim.dt);
    } catch (const SimulationError&) {
        throw ConfigError("key 'sim.t_max' is not a multiple of dt");
    }
    if (const auto* r = ssec.raw("seed")) sim.seed = detail::parse_u64("sim.seed", *r);
    if (const auto* r = ssec.raw("replications")) {
        sim.replications = detail::parse_u64("sim.replications", *r);
    }
    if (sim.replications < 1) throw ConfigError("key 'sim.replications' must be at least 1");
    if (const auto* r = ssec.raw("checkpoint_times")) {
        if (ssec.has("checkpoints") || ssec.has("t_min"))
            throw ConfigError("key 'sim.checkpoint_times' excludes 'sim.checkpoints' and 'sim.t_min'");
        sim.checkpoints = detail::parse_list("sim.checkpoint_times", *r);
        for (double t : sim.checkpoints) {
            try {
                steps_for(t, sim.dt);
            } catch (const SimulationError&) {
                throw ConfigError("checkpoint " + detail::format_number(t) + " is not a multiple of dt = " +
                                  detail::format_number(sim.dt));
            }
        }
        try {
            checkpoint_steps(sim.checkpoints, sim.dt, sim.t_max);
        } catch (const SimulationError& e) {
            throw ConfigError(std::string("key 'sim.checkpoint_times': ") + e.what());
        }
    } else {
        std::size_t k = 1;
        if (const auto* r = ssec.raw("checkpoints")) k = detail::parse_u64("sim.checkpoints", *r);
        if (k < 1) throw ConfigError("key 'sim.checkpoints': count must be at least 1");
        const double t_min = ssec.number("t_min", sim.t_max / std::pow(10.0, static_cast<double>(k - 1)));
        sim.checkpoints = log_spaced_checkpoints(t_min, sim.t_max, k, sim.dt);
    }

    auto& est = cfg.estimate;
    est.x0 = esec.number("x0", cfg.model.holder.x0);
    est.alpha = esec.number("alpha", cfg.model.holder.alpha);
    if (!(est.alpha > 0.0 && est.alpha <= 1.0))
        throw ConfigError("key 'estimate.alpha' = " + detail::format_number(est.alpha) +
                          ": the bandwidth exponent needs alpha in (0, 1]");
    est.delta = esec.number("delta", 0.5);
    if (!(est.delta > 0.0)) throw ConfigError("key 'estimate.delta' must be positive");
    if (const auto* r = esec.raw("g_interval")) std::tie(est.g_a, est.g_b) = detail::parse_interval("estimate.g_interval", *r);
    est.kernel = esec.text("kernel", "quartic");
    try {
        kernel_by_name(est.kernel);
    } catch (const Error& e) {
        throw ConfigError(std::string("key 'estimate.kernel': ") + e.what());
    }
    if (const auto* r = esec.raw("blind")) est.blind = detail::parse_bool("estimate.blind", *r);

    auto& dg = cfg.diagnostics;
    if (const auto* r = dsec.raw("thresholds")) dg.thresholds = detail::parse_list("diagnostics.thresholds", *r);
    for (std::size_t i = 0; i < dg.thresholds.size(); ++i)
        if (!(dg.thresholds[i] > 0.0) || (i && !(dg.thresholds[i] > dg.thresholds[i - 1])))
            throw ConfigError("key 'diagnostics.thresholds' must be positive and increasing");
    dg.quantile = dsec.number("quantile", 0.5);
    if (!(dg.quantile > 0.0 && dg.quantile < 1.0)) throw ConfigError("key 'diagnostics.quantile' must lie in (0, 1)");
    {
        // lt_grid = lo, hi, n  (n equispaced points)
        std::vector<double> spec{est.x0 - est.delta, est.x0 + est.delta, 21};
        if (const auto* r = dsec.raw("lt_grid")) spec = detail::parse_list("diagnostics.lt_grid", *r);
        if (spec.size() != 3 || !(spec[0] <= spec[1]) || spec[2] < 1 || spec[2] != std::floor(spec[2]))
            throw ConfigError("key 'diagnostics.lt_grid': expected 'lo, hi, n' with lo <= hi and integer n >= 1");
        const auto n = static_cast<std::size_t>(spec[2]);
        for (std::size_t i = 0; i < n; ++i)
            dg.lt_grid.push_back(n == 1 ? spec[0] : spec[0] + (spec[1] - spec[0]) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    dg.epsilon = dsec.number("epsilon", default_epsilon(sim.dt));
    if (!(dg.epsilon > 0.0)) throw ConfigError("key 'diagnostics.epsilon' must be positive");
    if (const auto* r = dsec.raw("T_grid")) {
        dg.T_grid = detail::parse_list("diagnostics.T_grid", *r);
        for (std::size_t i = 0; i < dg.T_grid.size(); ++i) {
            if (!(dg.T_grid[i] > 0.0) || (i && !(dg.T_grid[i] > dg.T_grid[i - 1])))
                throw ConfigError("key 'diagnostics.T_grid' must be positive and increasing");
            try {
                steps_for(dg.T_grid[i], sim.dt);
            } catch (const SimulationError&) {
                throw ConfigError("T_grid entry " + detail::format_number(dg.T_grid[i]) + " is not a multiple of dt");
            }
        }
    }
    if (const auto* r = dsec.raw("f_interval")) std::tie(dg.f_a, dg.f_b) = detail::parse_interval("diagnostics.f_interval", *r);
    dg.psi = dsec.text("psi", "one");
    if (dg.psi != "one" && dg.psi != "sigma2") throw ConfigError("key 'diagnostics.psi': expected 'one' or 'sigma2'");
    dg.h_exponent = dsec.number("h_exponent", 1.0 / (2.0 * est.alpha + 1.0));
    if (!(dg.h_exponent > 0.0)) throw ConfigError("key 'diagnostics.h_exponent' must be positive");
    if (const auto* r = dsec.raw("min_defined")) dg.min_defined = detail::parse_u64("diagnostics.min_defined", *r);
    if (const auto* r = dsec.raw("hist_range")) std::tie(dg.hist_lo, dg.hist_hi) = detail::parse_interval("diagnostics.hist_range", *r);
    if (const auto* r = dsec.raw("hist_bins")) dg.hist_bins = detail::parse_u64("diagnostics.hist_bins", *r);
    if (dg.hist_bins < 1) throw ConfigError("key 'diagnostics.hist_bins' must be at least 1");

    cfg.out_dir = osec.text("directory", "out");

    for (auto* s : {&msec, &ssec, &esec, &dsec, &osec}) s->reject_unknown();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Canonical text of the fully resolved configuration. Parsing it back
/// gives the same configuration.
inline std::string resolved_text(const RunConfig& c) {
    using detail::format_list;
    using detail::format_number;
    std::ostringstream os;
    const auto& m = c.model;
    os << "[model]\n";
    os << "name = " << m.name << "\n";
    os << "drift = " << to_string(m.drift_kind) << "\n";
    switch (m.drift_kind) {
        case DriftKind::linear: os << "theta = " << format_number(m.drift_param) << "\n"; break;
        case DriftKind::constant:
        case DriftKind::compact_bump: os << "c = " << format_number(m.drift_param) << "\n"; break;
        case DriftKind::holder_kink: os << "alpha_b = " << format_number(m.drift_param) << "\n"; break;
        case DriftKind::tabulated: {
            std::vector<double> flat;
            for (const auto& [x, b] : m.table) {
                flat.push_back(x);
                flat.push_back(b);
            }
            os << "table = " << format_list(flat) << "\n";
            break;
        }
        case DriftKind::zero: break;
    }
    os << "sigma = " << to_string(m.sigma_kind) << "\n";
    if (m.sigma_kind == SigmaKind::constant) {
        os << "s = " << format_number(m.s0) << "\n";
    } else {
        os << "s0 = " << format_number(m.s0) << "\ns1 = " << format_number(m.s1) << "\n";
    }
    os << "growth_constant = " << format_number(m.growth_constant) << "\n";
    os << "holder_x0 = " << format_number(m.holder.x0) << "\n";
    os << "holder_alpha = " << format_number(m.holder.alpha) << "\n";
    os << "holder_gamma = " << format_number(m.holder.gamma) << "\n";
    os << "holder_delta = " << format_number(m.holder.delta) << "\n";

    const auto& s = c.sim;
    os << "\n[sim]\n";
    os << "x_init = " << format_number(s.x_init) << "\n";
    os << "t_max = " << format_number(s.t_max) << "\n";
    os << "dt = " << format_number(s.dt) << "\n";
    os << "checkpoint_times = " << format_list(s.checkpoints) << "\n";
    os << "seed = " << s.seed << "\n";
    os << "replications = " << s.replications << "\n";

    const auto& e = c.estimate;
    os << "\n[estimate]\n";
    os << "x0 = " << format_number(e.x0) << "\n";
    os << "alpha = " << format_number(e.alpha) << "\n";
    os << "delta = " << format_number(e.delta) << "\n";
    os << "g_interval = " << format_number(e.g_a) << ", " << format_number(e.g_b) << "\n";
    os << "kernel = " << e.kernel << "\n";
    os << "blind = " << (e.blind ? "true" : "false") << "\n";

    const auto& d = c.diagnostics;
    os << "\n[diagnostics]\n";
    os << "thresholds = " << format_list(d.thresholds) << "\n";
    os << "quantile = " << format_number(d.quantile) << "\n";
    os << "lt_grid = " << format_number(d.lt_grid.front()) << ", " << format_number(d.lt_grid.back()) << ", "
       << d.lt_grid.size() << "\n";
    os << "epsilon = " << format_number(d.epsilon) << "\n";
    if (!d.T_grid.empty()) os << "T_grid = " << format_list(d.T_grid) << "\n";
    os << "f_interval = " << format_number(d.f_a) << ", " << format_number(d.f_b) << "\n";
    os << "psi = " << d.psi << "\n";
    os << "h_exponent = " << format_number(d.h_exponent) << "\n";
    os << "min_defined = " << d.min_defined << "\n";
    os << "hist_range = " << format_number(d.hist_lo) << ", " << format_number(d.hist_hi) << "\n";
    os << "hist_bins = " << d.hist_bins << "\n";

    os << "\n[output]\n";
    os << "directory = " << c.out_dir << "\n";
    return os.str();
}

}  // namespace rdlab::cli
