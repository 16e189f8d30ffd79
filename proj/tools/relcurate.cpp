// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0
//
// relcurate: command-line driver for the curation pipeline.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 stage failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relcurate/config.hpp"
#include "relcurate/error.hpp"
#include "relcurate/pipeline.hpp"
#include "relcurate/report.hpp"

namespace {

using namespace relcurate;

constexpr int kExitUsage = 1;
constexpr int kExitStage = 2;

struct CommonOptions {
    std::string config_path;
    std::string workdir = "work";
    std::optional<std::uint64_t> seed;
    std::optional<double> fraction;
    bool no_crm = false;
    bool no_clm = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config_path, "JSON config file (defaults apply when omitted)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--workdir", o.workdir, "pipeline working directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "override the config seed");
    cmd->add_option("--fraction", o.fraction, "override the selection fraction");
    cmd->add_flag("--no-crm", o.no_crm, "disable the CRM training phase");
    cmd->add_flag("--no-clm", o.no_clm, "disable the CLM training phase");
}

PipelineConfig effective_config(const CommonOptions& o) {
    PipelineConfig cfg = o.config_path.empty() ? PipelineConfig{} : load_config(o.config_path);
    if (o.seed) cfg.seed = *o.seed;
    if (o.fraction) cfg.selection.fraction = *o.fraction;
    if (o.no_crm) cfg.enable_crm = false;
    if (o.no_clm) cfg.enable_clm = false;
    cfg.validate();
    return cfg;
}

void print_entry(const ManifestEntry& e) {
    std::printf("%-17s %-18s %6lld ms\n", e.stage.c_str(), e.status.c_str(),
                static_cast<long long>(e.duration_ms));
}

void print_report(const MetricsReport& r) {
    std::printf("mean i2c before %.6f  after %.6f  (n=%zu / %zu)\n", r.pre.mean, r.post.mean,
                r.pre.count, r.post.count);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"relcurate: relevance-filtered instruction data curation on a toy world"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "relcurate 0.1.0");

    CommonOptions opts;
    std::vector<double> fractions{0.05, 0.10, 0.20, 0.40};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

    struct StageCommand {
        const char* name;
        Stage stage;
        const char* help;
    };
    const StageCommand stage_commands[] = {
        {"generate-initial", Stage::generate_initial, "pre-train the toy model and generate data"},
        {"filter", Stage::filter, "drop duplicates and length outliers"},
        {"score", Stage::score, "compute the relevance score of every kept sample"},
        {"partition", Stage::partition, "split each image's samples into positive and negatives"},
        {"train-crm", Stage::train_crm, "cross-entropy training on the top-scored fraction"},
        {"train-clm", Stage::train_clm, "contrastive training on the pseudo-labels"},
        {"generate-final", Stage::generate_final, "regenerate data with the trained model"},
        {"report", Stage::report, "write summary and CSV reports"},
    };
    std::vector<std::pair<CLI::App*, Stage>> stage_apps;
    for (const auto& c : stage_commands) {
        auto* cmd = app.add_subcommand(c.name, c.help);
        add_common(cmd, opts);
        stage_apps.emplace_back(cmd, c.stage);
    }

    auto* pipeline = app.add_subcommand("pipeline", "run every stage in order");
    add_common(pipeline, opts);

    auto* sweep = app.add_subcommand("sweep", "repeat training for several selection fractions");
    add_common(sweep, opts);
    sweep->add_option("--fractions", fractions, "fractions in (0, 1]")
        ->delimiter(',')
        ->capture_default_str();

    auto* ablate = app.add_subcommand("ablate", "baseline / CRM / CLM / CRM+CLM grid over seeds");
    add_common(ablate, opts);
    ablate->add_option("--seeds", seeds, "seeds to run")->delimiter(',')->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    PipelineConfig cfg;
    try {
        cfg = effective_config(opts);
    } catch (const Error& e) {
        std::cerr << "relcurate: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        for (const auto& [cmd, stage] : stage_apps) {
            if (cmd->parsed()) {
                print_entry(run_stage(stage, cfg, opts.workdir));
                return 0;
            }
        }
        if (pipeline->parsed()) {
            const auto report = run_pipeline(cfg, opts.workdir);
            for (const auto& s : report.stages) {
                std::printf("%-17s %-18s %6zu %s\n", s.stage.c_str(), s.status.c_str(), s.count,
                            s.what.c_str());
            }
            print_report(report);
        } else if (sweep->parsed()) {
            for (const auto& row : sweep_selection_fraction(cfg, opts.workdir, fractions)) {
                std::printf("fraction %-6g selected %-5zu post mean i2c %.6f\n", row.fraction,
                            row.selected, row.post_mean_i2c);
            }
        } else if (ablate->parsed()) {
            for (const auto& row : run_ablation_grid(cfg, opts.workdir, seeds)) {
                std::printf("seed %-4llu %-9s pre %.6f post %.6f\n",
                            static_cast<unsigned long long>(row.seed), row.arm.c_str(),
                            row.pre_mean_i2c, row.post_mean_i2c);
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "relcurate: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "relcurate: " << e.what() << '\n';
        return kExitStage;
    }
    return 0;
}
