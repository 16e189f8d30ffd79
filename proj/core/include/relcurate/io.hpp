// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Line-delimited JSON record files. Every writer emits fields in a fixed order
// and numbers in shortest round-trip form, so save -> load -> save is
// byte-stable.
//
//   samples     sample_id, image_id, instruction_class, question, answer,
//               p_visual, p_direct
//   scored      samples fields + i2c_score
//   images      image_id, features
//   dropped     sample_id, reason
//   partitions  image_id, positive, negatives, skipped_for_contrastive

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relcurate/filter.hpp"
#include "relcurate/relevance.hpp"
#include "relcurate/types.hpp"

namespace relcurate {

namespace fs = std::filesystem;

std::string sample_to_line(const VlitSample& sample);

/// Parses one record, clamping probabilities in [0, 1e-12) up to the floor.
/// Throws ParseError (with `line_no`) or ValidationError.
VlitSample sample_from_line(std::string_view line, std::size_t line_no = 1);

/// Reads every record in file order. Blank lines are ignored. Throws
/// ParseError, ValidationError (including duplicate sample_id) or IoError.
std::vector<VlitSample> load_samples(const fs::path& path);
void save_samples(std::span<const VlitSample> samples, const fs::path& path);

std::vector<ScoredSample> load_scored(const fs::path& path);
void save_scored(std::span<const ScoredSample> scored, const fs::path& path);

std::vector<ImageRef> load_images(const fs::path& path);
void save_images(std::span<const ImageRef> images, const fs::path& path);

std::vector<DroppedSample> load_dropped(const fs::path& path);
void save_dropped(std::span<const DroppedSample> dropped, const fs::path& path);

std::vector<PseudoLabelPartition> load_partitions(const fs::path& path);
void save_partitions(std::span<const PseudoLabelPartition> partitions, const fs::path& path);

/// Writes `contents` to `path` via a sibling temporary and rename.
void write_file_atomic(const fs::path& path, std::string_view contents);
std::string read_file(const fs::path& path);

}  // namespace relcurate
