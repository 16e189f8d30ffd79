// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Domain types for candidate vision-language instruction samples.

#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace relcurate {

enum class InstructionClass { conversation, detailed_description, complex_reasoning };

inline constexpr std::array<InstructionClass, 3> kInstructionClasses = {
    InstructionClass::conversation,
    InstructionClass::detailed_description,
    InstructionClass::complex_reasoning,
};

std::string_view to_string(InstructionClass c) noexcept;

/// Throws ConfigError on anything other than the three canonical names.
InstructionClass parse_instruction_class(std::string_view name);

using TokenSeq = std::vector<std::string>;

/// An image is represented only by an abstract feature vector. `features`
/// is empty when probabilities were produced by an external model.
struct ImageRef {
    std::string image_id;
    std::vector<double> features;

    bool operator==(const ImageRef&) const = default;
};

/// One question-answer pair tied to an image, together with the per-answer-token
/// probabilities under the image-conditioned (`p_visual`) and image-withheld
/// (`p_direct`) passes.
struct VlitSample {
    std::string sample_id;
    std::string image_id;
    InstructionClass instruction_class = InstructionClass::conversation;
    TokenSeq question;
    TokenSeq answer;
    std::vector<double> p_visual;
    std::vector<double> p_direct;

    bool operator==(const VlitSample&) const = default;
};

/// Probabilities below this are raised to it on load so log-ratios stay finite.
inline constexpr double kProbabilityFloor = 1e-12;

/// Throws ValidationError (naming sample_id) if any invariant fails:
/// non-empty ids, n >= 1 answer tokens, matching probability lengths,
/// every probability in (0, 1].
void validate(const VlitSample& sample);

/// Non-throwing form of validate(); fills `reason` on failure when non-null.
bool is_valid(const VlitSample& sample, std::string* reason = nullptr);

/// Throws ValidationError if image_id is empty or a feature is non-finite.
void validate(const ImageRef& image);

}  // namespace relcurate
