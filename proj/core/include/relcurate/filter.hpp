// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relcurate/types.hpp"

namespace relcurate {

enum class DedupKey { exact_qa_pair };

struct FilterConfig {
    int min_answer_tokens = 3;
    int max_answer_tokens = 256;
    DedupKey dedup_on = DedupKey::exact_qa_pair;

    /// Throws ConfigError unless 1 <= min <= max.
    void validate() const;
    bool operator==(const FilterConfig&) const = default;
};

enum class DropReason { duplicate, too_short, too_long, invalid };

std::string_view to_string(DropReason r) noexcept;
DropReason parse_drop_reason(std::string_view name);

struct DroppedSample {
    std::string sample_id;
    DropReason reason = DropReason::invalid;

    bool operator==(const DroppedSample&) const = default;
};

struct FilterResult {
    std::vector<VlitSample> kept;
    std::vector<DroppedSample> dropped;
};

/// Heuristic cleanup of generated samples. Checks run in the order
/// invalid -> length bounds -> duplicate; the first occurrence of an
/// (image_id, question, answer) triple survives. Input order is preserved in
/// both outputs and nothing is thrown for bad samples.
FilterResult filter_samples(std::span<const VlitSample> samples, const FilterConfig& cfg);

}  // namespace relcurate
