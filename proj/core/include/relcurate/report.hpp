// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "relcurate/contrastive.hpp"

namespace relcurate {

struct StageCount {
    std::string stage;
    std::string status;
    std::size_t count = 0;
    std::string what;  // what `count` counts
};

struct I2cSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
};

I2cSummary summarize_i2c(std::span<const double> scores);

struct LossPoint {
    int step = 0;
    LossReport loss;
};

struct SweepRow {
    double fraction = 0.0;
    std::size_t selected = 0;
    double post_mean_i2c = 0.0;
    double post_median_i2c = 0.0;
};

struct AblationRow {
    std::uint64_t seed = 0;
    std::string arm;  // baseline, crm_only, clm_only, crm_clm
    bool enable_crm = false;
    bool enable_clm = false;
    double pre_mean_i2c = 0.0;
    double post_mean_i2c = 0.0;
    double post_median_i2c = 0.0;
};

struct MetricsReport {
    std::vector<StageCount> stages;
    I2cSummary pre;   // scored initial data
    I2cSummary post;  // regenerated data, same scorer
    std::map<std::string, std::vector<LossPoint>> loss_curves;  // keyed by phase
    std::vector<SweepRow> sweep;
    std::vector<AblationRow> ablation;
};

inline constexpr const char* kSweepFile = "sweep.csv";
inline constexpr const char* kAblationFile = "ablation_grid.csv";

/// Reads the stage artifacts of `workdir` (plus sweep.csv / ablation_grid.csv
/// when present at its root) and writes summary.txt, metrics.json,
/// loss_curves.csv and i2c_histogram.csv into the report stage directory,
/// copying any sweep or ablation table alongside. Throws StageError when a
/// required artifact is missing.
MetricsReport emit_report(const std::filesystem::path& workdir);

// CSV helpers shared with the pipeline.
void write_loss_csv(const std::filesystem::path& path, std::span<const LossPoint> curve);
std::vector<LossPoint> read_loss_csv(const std::filesystem::path& path);
void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows);
std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path);
void write_ablation_csv(const std::filesystem::path& path, std::span<const AblationRow> rows);
std::vector<AblationRow> read_ablation_csv(const std::filesystem::path& path);

/// Equal-width bins spanning [min, max] of both score sets.
struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t pre = 0;
    std::size_t post = 0;
};
std::vector<HistogramBin> i2c_histogram(std::span<const double> pre, std::span<const double> post,
                                        int bins = 20);

}  // namespace relcurate
