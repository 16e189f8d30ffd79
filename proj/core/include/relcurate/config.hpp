// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pipeline configuration. The on-disk form is a JSON object whose keys mirror
// the struct fields below; unknown keys are rejected.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "relcurate/contrastive.hpp"
#include "relcurate/filter.hpp"
#include "relcurate/relevance.hpp"
#include "relcurate/toy_model.hpp"
#include "relcurate/toy_world.hpp"

namespace relcurate {

enum class Stage {
    generate_initial,
    filter,
    score,
    partition,
    train_crm,
    train_clm,
    generate_final,
    report,
};

inline constexpr std::array<Stage, 8> kStages = {
    Stage::generate_initial, Stage::filter,    Stage::score,          Stage::partition,
    Stage::train_crm,        Stage::train_clm, Stage::generate_final, Stage::report,
};

std::string_view to_string(Stage s) noexcept;
Stage parse_stage(std::string_view name);

/// Directory of a stage inside the workdir, e.g. "02_score".
std::string stage_dir(Stage s);

/// Fixed artifact names inside the stage directories.
namespace artifact {
inline constexpr const char* kImages = "images.jsonl";
inline constexpr const char* kModel = "model.ckpt";
inline constexpr const char* kSamples = "samples.jsonl";
inline constexpr const char* kKept = "kept.jsonl";
inline constexpr const char* kDropped = "dropped.jsonl";
inline constexpr const char* kScored = "scored.jsonl";
inline constexpr const char* kPartitions = "partitions.jsonl";
inline constexpr const char* kSelected = "selected.jsonl";
inline constexpr const char* kLoss = "loss.csv";
inline constexpr const char* kSummary = "summary.txt";
inline constexpr const char* kMetrics = "metrics.json";
inline constexpr const char* kLossCurves = "loss_curves.csv";
inline constexpr const char* kHistogram = "i2c_histogram.csv";
}  // namespace artifact

/// "<stage_dir>/<name>", relative to the workdir.
std::string artifact_path(Stage s, std::string_view name);

enum class Phase { crm, clm };

std::string_view to_string(Phase p) noexcept;
Phase parse_phase(std::string_view name);

struct GenerationConfig {
    int caption_max_tokens = 6;
    int max_question_tokens = 6;
    int max_answer_tokens = 8;
    DecodeMode decode = DecodeMode::sampled;

    bool operator==(const GenerationConfig&) const = default;
};

struct TrainingConfig {
    int crm_steps = 200;
    int clm_steps = 100;
    std::vector<Phase> phase_order{Phase::crm, Phase::clm};
    bool joint = false;  // one combined-objective phase instead of CRM then CLM
    bool train_projection = true;
    int anchor_max_tokens = 8;

    bool operator==(const TrainingConfig&) const = default;
};

struct PipelineConfig {
    std::uint64_t seed = 1;
    int num_images = 200;
    int samples_per_image = 5;
    int initial_count = 1000;
    int final_count = 50;
    int final_samples_per_image = 1;
    SelectionConfig selection;
    FilterConfig filter;
    ContrastiveConfig contrastive;
    ModelDims model;
    double learning_rate = 0.05;
    WorldConfig world;
    GenerationConfig generation;
    TrainingConfig training;
    bool enable_crm = true;
    bool enable_clm = true;

    /// Throws ConfigError on any violated invariant.
    void validate() const;

    /// Enabled phases in execution order.
    std::vector<Phase> active_phases() const;
};

PipelineConfig parse_config(std::string_view json_text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Canonical JSON (sorted keys, no whitespace).
std::string config_to_json(const PipelineConfig& cfg, bool pretty = false);

/// SHA-256 over the canonical JSON of the keys `s` depends on: every stage
/// sees the keys of the stages before it, so changing a downstream knob never
/// invalidates upstream artifacts.
std::string stage_config_hash(const PipelineConfig& cfg, Stage s);

}  // namespace relcurate
