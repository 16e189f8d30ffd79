// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoint of a GeneratorState. Little-endian layout:
//
//   magic "RCCKPT\0\0" | u32 version | u64 seed | u64 step | f64 learning_rate
//   i32 context_window | matrix token_embeddings | matrix image_projection
//   | matrix null_image_feature | matrix output_head | matrix proj_weight
//   | matrix proj_bias
//
// where each matrix is `i64 rows | i64 cols | rows*cols f64 (column-major)`.
// Doubles are stored bit-for-bit, so load(save(s)) == s exactly.

#pragma once

#include <filesystem>
#include <string>

#include "relcurate/toy_model.hpp"

namespace relcurate {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const GeneratorState& state);
GeneratorState deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const GeneratorState& state, const std::filesystem::path& path);
/// Throws IoError on a missing file, Error on a bad magic/version or truncation.
GeneratorState load_checkpoint(const std::filesystem::path& path);

}  // namespace relcurate
