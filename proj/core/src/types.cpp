// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcurate/types.hpp"

#include <cmath>

#include "relcurate/error.hpp"

namespace relcurate {

std::string_view to_string(InstructionClass c) noexcept {
    switch (c) {
        case InstructionClass::conversation: return "conversation";
        case InstructionClass::detailed_description: return "detailed_description";
        case InstructionClass::complex_reasoning: return "complex_reasoning";
    }
    return "conversation";
}

InstructionClass parse_instruction_class(std::string_view name) {
    for (auto c : kInstructionClasses) {
        if (to_string(c) == name) return c;
    }
    throw ConfigError("unknown instruction_class '" + std::string(name) + "'");
}

bool is_valid(const VlitSample& s, std::string* reason) {
    auto fail = [&](std::string why) {
        if (reason) *reason = std::move(why);
        return false;
    };
    if (s.sample_id.empty()) return fail("empty sample_id");
    if (s.image_id.empty()) return fail("empty image_id");
    const auto n = s.answer.size();
    if (n == 0) return fail("answer must contain at least one token");
    if (s.p_visual.size() != n) {
        return fail("p_visual has " + std::to_string(s.p_visual.size()) +
                    " entries but answer has " + std::to_string(n) + " tokens");
    }
    if (s.p_direct.size() != n) {
        return fail("p_direct has " + std::to_string(s.p_direct.size()) +
                    " entries but answer has " + std::to_string(n) + " tokens");
    }
    for (std::size_t t = 0; t < n; ++t) {
        for (double p : {s.p_visual[t], s.p_direct[t]}) {
            if (!std::isfinite(p) || p <= 0.0 || p > 1.0) {
                return fail("probability at token " + std::to_string(t) + " outside (0, 1]");
            }
        }
    }
    return true;
}

void validate(const VlitSample& s) {
    std::string why;
    if (!is_valid(s, &why)) {
        throw ValidationError(s.sample_id.empty() ? "<no sample_id>" : s.sample_id, why);
    }
}

void validate(const ImageRef& image) {
    if (image.image_id.empty()) throw ValidationError("<no image_id>", "empty image_id");
    for (double f : image.features) {
        if (!std::isfinite(f)) throw ValidationError(image.image_id, "non-finite feature");
    }
}

}  // namespace relcurate
