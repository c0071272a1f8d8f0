// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>

#include "rdlab/cli/experiment.hpp"
#include "rdlab/cli/io.hpp"

namespace rdlab::cli {

namespace detail {

inline std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline double to_double(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    return std::stod(s);
}

}  // namespace detail

/// Plain-text summary of a run directory.
inline std::string emit_report(const std::filesystem::path& dir) {
    const auto mpath = dir / "manifest.txt";
    if (!std::filesystem::exists(mpath)) throw Error("'" + dir.string() + "' has no manifest.txt");
    const auto man = Manifest::parse(read_file(mpath));
    for (const char* k : {"version", "command", "config_digest", "model", "recurrence", "invariant_mass"})
        if (!man.has(k)) throw Error(std::string("manifest is missing '") + k + "'");

    std::ostringstream os;
    os << "run       " << dir.string() << "\n";
    os << "command   " << man.get("command") << " (version " << man.get("version") << ")\n";
    os << "model     " << man.get("model") << "\n";
    os << "class     " << man.get("recurrence") << ", invariant mass " << man.get("invariant_mass") << "\n";
    os << "seed      " << man.get("seed") << ", replications " << man.get("replications") << ", workers "
       << (man.has("workers") ? man.get("workers") : "?") << "\n";
    os << "digest    " << man.get("config_digest") << "\n";
    if (man.has("alpha") && man.get("invariant_mass") != "inconclusive") {
        const bool ergodic = man.get("invariant_mass") == "finite";
        os << "regime    " << (ergodic ? "ergodic" : "null-recurrent") << ", target exponent "
           << detail::fixed(target_exponent(ergodic, detail::to_double(man.get("alpha")))) << "\n";
    }

    for (const auto& [k, v] : man.entries()) {
        if (k.rfind("file.", 0) == 0 && k.size() > 10 && k.compare(k.size() - 5, 5, ".rows") == 0) {
            const auto name = k.substr(5, k.size() - 10);
            const auto data = read_file(dir / name);
            if (sha256_hex(data) != man.get("file." + name + ".sha256"))
                throw Error("'" + name + "' does not match its manifest hash");
        }
    }

    if (std::filesystem::exists(dir / "coverage.csv")) {
        const auto t = read_csv(dir / "coverage.csv");
        const auto ct = t.column("t"), cs = t.column("statistic"), cm = t.column("m"), cc = t.column("coverage");
        double t_last = 0.0;
        for (const auto& r : t.rows) t_last = std::max(t_last, detail::to_double(r[ct]));
        os << "\ncoverage at t = " << fmt_time(t_last) << "\n";
        std::vector<std::pair<std::string, std::string>> lines;  // statistic, cells
        for (const auto& r : t.rows) {
            if (detail::to_double(r[ct]) != t_last) continue;
            if (lines.empty() || lines.back().first != r[cs]) lines.emplace_back(r[cs], "");
            lines.back().second += "  m=" + r[cm] + " " + detail::fixed(detail::to_double(r[cc]), 3);
        }
        for (const auto& [name, cells] : lines) os << "  " << name << ":" << cells << "\n";
    }

    if (std::filesystem::exists(dir / "ratefit.csv")) {
        const auto t = read_csv(dir / "ratefit.csv");
        if (t.rows.size() != 1) throw Error("ratefit.csv must hold exactly one row");
        const auto& r = t.rows[0];
        os << "\nrate slope " << detail::fixed(detail::to_double(r[t.column("slope")])) << " +/- "
           << detail::fixed(detail::to_double(r[t.column("stderr_slope")])) << " (quantile "
           << r[t.column("quantile")] << ", " << r[t.column("n_T")] << " horizons, target "
           << detail::fixed(detail::to_double(r[t.column("target_exponent")])) << ")\n";
    }

    if (std::filesystem::exists(dir / "rate_coverage.csv")) {
        const auto t = read_csv(dir / "rate_coverage.csv");
        const auto cT = t.column("T");
        double T_last = 0.0;
        for (const auto& r : t.rows) T_last = std::max(T_last, detail::to_double(r[cT]));
        os << "scaled error coverage at T = " << fmt_time(T_last) << ":";
        for (const auto& r : t.rows)
            if (detail::to_double(r[cT]) == T_last)
                os << "  K=" << r[t.column("m")] << " " << detail::fixed(detail::to_double(r[t.column("coverage")]), 3);
        os << "\n";
    }

    if (std::filesystem::exists(dir / "sco.csv")) {
        const auto t = read_csv(dir / "sco.csv");
        os << "\nlocal time sup error\n";
        for (const auto& r : t.rows)
            os << "  t=" << fmt_time(detail::to_double(r[t.column("t")])) << "  "
               << detail::fixed(detail::to_double(r[t.column("sup_error")])) << " (noise "
               << detail::fixed(detail::to_double(r[t.column("noise")])) << ")\n";
    }

    if (std::filesystem::exists(dir / "chacon_ornstein.csv")) {
        const auto t = read_csv(dir / "chacon_ornstein.csv");
        os << "\nratio of occupation times (theoretical "
           << detail::fixed(detail::to_double(t.rows.at(0)[t.column("theoretical")])) << ")\n";
        for (const auto& r : t.rows)
            os << "  t=" << fmt_time(detail::to_double(r[t.column("t")])) << "  median "
               << detail::fixed(detail::to_double(r[t.column("median")])) << "  undefined "
               << r[t.column("n_undefined")] << "\n";
    }
    return os.str();
}

}  // namespace rdlab::cli
