// SPDX-License-Identifier: Apache-2.0
//
// irs_parafac sweep    --config <path> | --preset paper-fig3  [overrides]
// irs_parafac validate --config <path> | --preset paper-fig3
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "irs_parafac/irs_parafac.hpp"

namespace {

using namespace irs_parafac;

struct SourceOptions {
    std::string config_path;
    std::string preset;
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<std::string> out;
    std::optional<std::string> estimators;
    std::optional<std::string> snr;
    std::optional<std::string> n_list;
};

ScenarioConfig load_source(const SourceOptions& src) {
    if (!src.config_path.empty()) return load_config(src.config_path);
    if (src.preset == "paper-fig3") return reference_preset();
    throw InvalidArgument("unknown preset '" + src.preset + "' (available: paper-fig3)");
}

void apply_overrides(ScenarioConfig& cfg, const Overrides& o) {
    if (o.seed) cfg.seed = *o.seed;
    if (o.trials) cfg.trials = *o.trials;
    if (o.out) cfg.output_path = *o.out;
    if (o.estimators) {
        cfg.estimators.clear();
        for (const auto& e : split_list(*o.estimators)) cfg.estimators.push_back(parse_method(e));
    }
    if (o.snr) cfg.snr_grid_db = parse_snr_range(*o.snr);
    if (o.n_list) {
        cfg.n_values.clear();
        for (const auto& n : split_list(*o.n_list)) cfg.n_values.push_back(static_cast<int>(parse_integer(n)));
        if (!cfg.n_values.empty()) cfg.dims.N = cfg.n_values.front();
    }
}

void add_source_options(CLI::App* cmd, SourceOptions& src) {
    auto* cfg = cmd->add_option("--config", src.config_path, "Scenario config file (JSON)")->check(CLI::ExistingFile);
    auto* preset = cmd->add_option("--preset", src.preset, "Built-in scenario (paper-fig3)");
    cfg->excludes(preset);
    preset->excludes(cfg);
}

int report_problems(const std::vector<std::string>& problems) {
    for (const auto& p : problems) std::cerr << "error: " << p << "\n";
    return problems.empty() ? 0 : 2;
}

int run_validate(const ScenarioConfig& cfg) {
    const auto problems = validate_config(cfg);
    if (problems.empty()) {
        for (Method m : cfg.estimators)
            for (int n : cfg.n_values)
                std::cout << "ok: estimator=" << to_string(m) << " N=" << n << "\n";
    }
    return report_problems(problems);
}

int run_sweep_command(const ScenarioConfig& cfg, unsigned workers, bool timing) {
    if (const auto problems = validate_config(cfg); !problems.empty()) return report_problems(problems);
    if (cfg.output_path.empty()) {
        std::cerr << "error: no output path (use --out or set output_path in the config)\n";
        return 2;
    }
    const RunOptions opts{workers, timing};
    const SweepResult result = run_sweep(cfg, opts);
    write_results(result, cfg.output_path, cfg, opts);
    std::cout << "wrote " << result.rows.size() << " rows to " << cfg.output_path << " (manifest "
              << manifest_path_for(cfg.output_path).string() << ")\n";
    if (const int failed = result.total_failed_trials(); failed > 0) {
        std::cerr << "warning: " << failed << " estimator runs failed; see manifest\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PARAFAC channel estimation for IRS-assisted MIMO: Monte-Carlo sweeps"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(library_version));

    SourceOptions sweep_src;
    Overrides ov;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    bool timing = false;

    auto* sweep = app.add_subcommand("sweep", "Run an NMSE/runtime sweep and write CSV + manifest");
    add_source_options(sweep, sweep_src);
    sweep->add_option("--seed", ov.seed, "Master seed");
    sweep->add_option("--trials", ov.trials, "Monte-Carlo trials per cell")->check(CLI::PositiveNumber);
    sweep->add_option("--out", ov.out, "Output CSV path");
    sweep->add_option("--estimators", ov.estimators, "Comma-separated subset of lskrf,bals");
    sweep->add_option("--snr", ov.snr, "SNR grid in dB as start:step:stop");
    sweep->add_option("--n-list", ov.n_list, "Comma-separated IRS sizes");
    sweep->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    sweep->add_flag("--timing", timing, "Write measured wall times into mean_runtime_s (otherwise 0)");

    SourceOptions validate_src;
    auto* validate = app.add_subcommand("validate", "Check identifiability of every cell, run nothing");
    add_source_options(validate, validate_src);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sweep->parsed()) {
            if (sweep_src.config_path.empty() && sweep_src.preset.empty()) {
                std::cerr << "error: sweep needs --config or --preset\n";
                return 2;
            }
            ScenarioConfig cfg = load_source(sweep_src);
            apply_overrides(cfg, ov);
            return run_sweep_command(cfg, workers, timing);
        }
        if (validate_src.config_path.empty() && validate_src.preset.empty()) {
            std::cerr << "error: validate needs --config or --preset\n";
            return 2;
        }
        return run_validate(load_source(validate_src));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
