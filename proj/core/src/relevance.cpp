// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcurate/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "relcurate/error.hpp"

namespace relcurate {

std::vector<double> answer_scores(const VlitSample& sample, Condition condition) {
    return condition == Condition::with_image ? sample.p_visual : sample.p_direct;
}

double i2c_score(std::span<const double> s_av, std::span<const double> s_a) {
    if (s_av.size() != s_a.size()) {
        throw Error("i2c_score: length mismatch (" + std::to_string(s_av.size()) + " vs " +
                    std::to_string(s_a.size()) + ")");
    }
    if (s_av.empty()) throw Error("i2c_score: empty answer");
    double sum = 0.0;
    for (std::size_t t = 0; t < s_av.size(); ++t) {
        sum += s_av[t] * std::log(s_av[t] / s_a[t]);
    }
    return sum;
}

double i2c_mean_per_token(std::span<const double> s_av, std::span<const double> s_a) {
    return i2c_score(s_av, s_a) / static_cast<double>(s_av.size());
}

ScoredSample score_sample(const VlitSample& sample) {
    ScoredSample out;
    out.s_av = answer_scores(sample, Condition::with_image);
    out.s_a = answer_scores(sample, Condition::without_image);
    out.i2c = i2c_score(out.s_av, out.s_a);
    out.sample = sample;
    if (!std::isfinite(out.i2c)) throw ValidationError(sample.sample_id, "non-finite i2c score");
    return out;
}

std::vector<ScoredSample> score_samples(std::span<const VlitSample> samples) {
    std::vector<ScoredSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(score_sample(s));
    return out;
}

void SelectionConfig::validate() const {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ConfigError("selection fraction must lie in (0, 1], got " + std::to_string(fraction));
    }
}

std::size_t selection_count(std::size_t n, double fraction) {
    if (n == 0) return 0;
    // Guard against 0.1 * 20 evaluating to 2.0000000000000004.
    const double raw = fraction * static_cast<double>(n);
    const double rounded = std::round(raw);
    const double k = std::abs(raw - rounded) < 1e-9 ? rounded : std::ceil(raw);
    return std::clamp<std::size_t>(static_cast<std::size_t>(k), 1, n);
}

bool ranks_before(const ScoredSample& a, const ScoredSample& b) noexcept {
    if (a.i2c != b.i2c) return a.i2c > b.i2c;
    return a.sample.sample_id < b.sample.sample_id;
}

namespace {

std::vector<ScoredSample> top_k(std::span<const ScoredSample> scored, std::size_t k) {
    std::vector<ScoredSample> sorted(scored.begin(), scored.end());
    std::sort(sorted.begin(), sorted.end(), ranks_before);
    sorted.resize(k);
    return sorted;
}

}  // namespace

std::vector<ScoredSample> rank_and_select(std::span<const ScoredSample> scored,
                                          const SelectionConfig& cfg) {
    cfg.validate();
    if (scored.empty()) throw Error("rank_and_select: empty input");

    if (cfg.scope == SelectionScope::global) {
        return top_k(scored, selection_count(scored.size(), cfg.fraction));
    }

    std::map<std::string, std::vector<ScoredSample>> groups;
    for (const auto& s : scored) groups[s.sample.image_id].push_back(s);
    std::vector<ScoredSample> out;
    for (auto& [image, members] : groups) {
        auto picked = top_k(members, selection_count(members.size(), cfg.fraction));
        out.insert(out.end(), picked.begin(), picked.end());
    }
    std::sort(out.begin(), out.end(), ranks_before);
    return out;
}

std::vector<PseudoLabelPartition> partition_pseudo_labels(std::span<const ScoredSample> scored) {
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<const ScoredSample*>> groups;
    for (const auto& s : scored) {
        auto [it, fresh] = groups.try_emplace(s.sample.image_id);
        if (fresh) order.push_back(s.sample.image_id);
        it->second.push_back(&s);
    }

    std::vector<PseudoLabelPartition> out;
    out.reserve(order.size());
    for (const auto& image : order) {
        const auto& members = groups.at(image);
        const auto* best = *std::min_element(
            members.begin(), members.end(),
            [](const ScoredSample* a, const ScoredSample* b) { return ranks_before(*a, *b); });

        PseudoLabelPartition part;
        part.image_id = image;
        part.positive = best->sample.sample_id;
        for (const auto* m : members) {
            if (m != best) part.negatives.push_back(m->sample.sample_id);
        }
        std::sort(part.negatives.begin(), part.negatives.end());
        part.skipped_for_contrastive = part.negatives.empty();
        out.push_back(std::move(part));
    }
    return out;
}

}  // namespace relcurate
