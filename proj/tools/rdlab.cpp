// SPDX-License-Identifier: Apache-2.0
// Command-line front end: rdlab <command> --config FILE [--out DIR] ...

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rdlab/cli/config.hpp"
#include "rdlab/cli/experiment.hpp"
#include "rdlab/cli/report.hpp"
#include "rdlab/kernel.hpp"
#include "rdlab/model.hpp"

namespace {

void print_validation(const rdlab::cli::RunConfig& cfg) {
    const auto rep = rdlab::validate_model(cfg.model);
    for (const auto& c : rep.checks)
        std::cout << (c.passed ? "ok    " : "FAIL  ") << c.name << "  " << c.worst << "\n";
    const auto kr = rdlab::kernel_validate(cfg.kernel());
    for (const auto& c : kr.checks)
        std::cout << (c.passed ? "ok    " : "FAIL  ") << "kernel." << c.name << "  " << c.residual << "\n";
    const auto mass = rdlab::invariant_mass_total(cfg.model);
    std::cout << "recurrence      " << rdlab::to_string(rdlab::classify_recurrence(cfg.model)) << "\n";
    std::cout << "invariant mass  " << rdlab::to_string(mass.status);
    if (mass.status == rdlab::MassStatus::finite) std::cout << " (" << mass.value << ")";
    std::cout << "\n\n" << rdlab::cli::resolved_text(cfg);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and estimation lab for recurrent one-dimensional diffusions"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    unsigned workers = rdlab::default_workers();
    bool dump = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration (INI)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides [output] directory)");
        sub->add_option("--seed", seed, "master seed (overrides [sim] seed)");
        sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    };

    auto* validate = app.add_subcommand("validate", "check and echo the resolved configuration");
    validate->add_option("--config", config_path, "run configuration (INI)")->required()->check(CLI::ExistingFile);
    validate->add_option("--seed", seed, "master seed (overrides [sim] seed)");

    // "diagnose:kind" commands become the nested form "diagnose kind".
    std::vector<std::pair<CLI::App*, std::string>> runs;
    CLI::App* diagnose = app.add_subcommand("diagnose", "run one diagnostic");
    diagnose->require_subcommand(1);
    for (const auto& name : rdlab::cli::experiment_commands()) {
        const auto colon = name.find(':');
        CLI::App* sub = colon == std::string::npos
                            ? app.add_subcommand(name, "run " + name)
                            : diagnose->add_subcommand(name.substr(colon + 1), "run " + name);
        add_common(sub);
        if (name == "simulate") sub->add_flag("--dump", dump, "also write binary path dumps");
        runs.emplace_back(sub, name);
    }

    std::string report_dir;
    auto* report = app.add_subcommand("report", "summarize a run directory");
    report->add_option("dir", report_dir, "run directory")->required();

    std::vector<std::string> args;
    for (int i = argc - 1; i >= 1; --i) {
        const std::string a = argv[i];
        if (a.rfind("diagnose:", 0) == 0) {
            args.push_back(a.substr(9));
            args.push_back("diagnose");
        } else {
            args.push_back(a);
        }
    }
    try {
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (report->parsed()) {
            std::cout << rdlab::cli::emit_report(report_dir);
            return 0;
        }
        auto cfg = rdlab::cli::load_config(config_path);
        if (seed) cfg.sim.seed = *seed;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (validate->parsed()) {
            print_validation(cfg);
            return 0;
        }
        for (const auto& [sub, name] : runs) {
            if (!sub->parsed()) continue;
            const auto man = rdlab::cli::run_experiment(cfg, name, {workers, dump});
            std::cout << "wrote " << cfg.out_dir << " (" << man.get("wall_clock_seconds") << " s)\n";
        }
    } catch (const rdlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
