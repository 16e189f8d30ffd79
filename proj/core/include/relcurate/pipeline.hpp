// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Stage runner. Each stage reads fixed artifacts from earlier stage
// directories, writes its own, and appends one manifest line. Inputs are
// checked against the manifest: a producer that ran under a different
// configuration, or a file whose digest no longer matches, is rejected.
//
// Training stages always leave a model.ckpt behind; a skipped phase copies
// its input checkpoint so the next stage has a fixed place to read from.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "relcurate/config.hpp"
#include "relcurate/manifest.hpp"
#include "relcurate/report.hpp"

namespace relcurate {

/// Runs one stage. Every failure surfaces as StageError naming the stage.
ManifestEntry run_stage(Stage stage, const PipelineConfig& cfg,
                        const std::filesystem::path& workdir);

/// Stages in execution order for `cfg` (training stages follow phase_order).
std::vector<Stage> stage_order(const PipelineConfig& cfg);

/// All stages in order; returns the report.
MetricsReport run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& workdir);

/// Runs the shared stages in `workdir` when they are missing, then, for every
/// fraction, repeats training and final generation from the partition-stage
/// artifacts under <workdir>/sweep/fraction_<f>. Writes <workdir>/sweep.csv.
std::vector<SweepRow> sweep_selection_fraction(const PipelineConfig& cfg,
                                               const std::filesystem::path& workdir,
                                               std::span<const double> fractions);

/// Baseline, CRM-only, CLM-only and CRM+CLM arms for every seed, sharing the
/// data stages per seed. Layout: <workdir>/ablation/seed_<s>/<arm>. Writes
/// <workdir>/ablation_grid.csv.
std::vector<AblationRow> run_ablation_grid(const PipelineConfig& cfg,
                                           const std::filesystem::path& workdir,
                                           std::span<const std::uint64_t> seeds);

}  // namespace relcurate
