// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Image-instruction correspondence scoring. A sample's relevance is measured by
// how much conditioning on the image moves the model's per-token answer
// probabilities:
//
//     i2c = sum_t p_visual[t] * ln(p_visual[t] / p_direct[t])
//
// The sum runs over answer-token positions. The per-token values are not a
// normalised distribution, so the score can be negative when the image makes
// the answer less likely. It is deliberately not length-normalised;
// i2c_mean_per_token() is provided for diagnostics only.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "relcurate/types.hpp"

namespace relcurate {

enum class Condition { with_image, without_image };

/// Visual (with_image) or direct (without_image) answer scores of a sample.
std::vector<double> answer_scores(const VlitSample& sample, Condition condition);

/// Throws Error on length mismatch or empty input.
double i2c_score(std::span<const double> s_av, std::span<const double> s_a);

double i2c_mean_per_token(std::span<const double> s_av, std::span<const double> s_a);

struct ScoredSample {
    VlitSample sample;
    std::vector<double> s_av;
    std::vector<double> s_a;
    double i2c = 0.0;

    bool operator==(const ScoredSample&) const = default;
};

ScoredSample score_sample(const VlitSample& sample);
std::vector<ScoredSample> score_samples(std::span<const VlitSample> samples);

enum class SelectionScope { global, per_image };

struct SelectionConfig {
    double fraction = 0.10;
    SelectionScope scope = SelectionScope::global;

    void validate() const;
};

/// Number of items kept out of `n`: ceil(fraction * n), at least 1 for n > 0.
std::size_t selection_count(std::size_t n, double fraction);

/// Strict weak ordering used everywhere a ranking is needed: i2c descending,
/// then sample_id ascending.
bool ranks_before(const ScoredSample& a, const ScoredSample& b) noexcept;

/// Top ceil(fraction * N) samples by i2c, ties broken by sample_id ascending,
/// returned in rank order. With per_image scope the count is applied inside
/// each image group and the union is returned in rank order.
/// Throws Error on empty input or an invalid fraction.
std::vector<ScoredSample> rank_and_select(std::span<const ScoredSample> scored,
                                          const SelectionConfig& cfg);

struct PseudoLabelPartition {
    std::string image_id;
    std::string positive;
    std::vector<std::string> negatives;  // sorted ascending
    bool skipped_for_contrastive = false;

    bool operator==(const PseudoLabelPartition&) const = default;
};

/// Per image: the top-ranked sample is the positive pseudo-label and every
/// other sample of that image is a negative. Images with a single sample are
/// emitted with no negatives and flagged skipped_for_contrastive. Output
/// follows the order in which images first appear.
std::vector<PseudoLabelPartition> partition_pseudo_labels(std::span<const ScoredSample> scored);

}  // namespace relcurate
