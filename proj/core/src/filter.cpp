// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcurate/filter.hpp"

#include <set>
#include <tuple>

#include "relcurate/error.hpp"

namespace relcurate {

void FilterConfig::validate() const {
    if (min_answer_tokens < 1 || min_answer_tokens > max_answer_tokens) {
        throw ConfigError("filter bounds must satisfy 1 <= min_answer_tokens <= max_answer_tokens");
    }
}

std::string_view to_string(DropReason r) noexcept {
    switch (r) {
        case DropReason::duplicate: return "duplicate";
        case DropReason::too_short: return "too_short";
        case DropReason::too_long: return "too_long";
        case DropReason::invalid: return "invalid";
    }
    return "invalid";
}

DropReason parse_drop_reason(std::string_view name) {
    for (auto r : {DropReason::duplicate, DropReason::too_short, DropReason::too_long,
                   DropReason::invalid}) {
        if (to_string(r) == name) return r;
    }
    throw ConfigError("unknown drop reason '" + std::string(name) + "'");
}

FilterResult filter_samples(std::span<const VlitSample> samples, const FilterConfig& cfg) {
    cfg.validate();
    using Key = std::tuple<const std::string*, const TokenSeq*, const TokenSeq*>;
    struct KeyLess {
        bool operator()(const Key& a, const Key& b) const {
            auto deref = [](const Key& k) {
                return std::tie(*std::get<0>(k), *std::get<1>(k), *std::get<2>(k));
            };
            return deref(a) < deref(b);
        }
    };
    std::set<Key, KeyLess> seen;

    FilterResult out;
    for (const auto& s : samples) {
        if (!is_valid(s)) {
            out.dropped.push_back({s.sample_id, DropReason::invalid});
            continue;
        }
        const auto n = static_cast<long>(s.answer.size());
        if (n < cfg.min_answer_tokens) {
            out.dropped.push_back({s.sample_id, DropReason::too_short});
            continue;
        }
        if (n > cfg.max_answer_tokens) {
            out.dropped.push_back({s.sample_id, DropReason::too_long});
            continue;
        }
        if (!seen.insert(Key{&s.image_id, &s.question, &s.answer}).second) {
            out.dropped.push_back({s.sample_id, DropReason::duplicate});
            continue;
        }
        out.kept.push_back(s);
    }
    return out;
}

}  // namespace relcurate
