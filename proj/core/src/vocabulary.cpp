// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcurate/vocabulary.hpp"

#include <cstdio>

#include "relcurate/error.hpp"

namespace relcurate {

namespace {

std::string numbered(char prefix, int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%c%02d", prefix, i);
    return buf;
}

}  // namespace

Vocabulary Vocabulary::build(int vocab_size, int num_concepts) {
    const int questions = kQuestionWordsPerClass * 3;
    const int fixed = kSpecialCount + questions;
    if (num_concepts < 1) throw ConfigError("num_concepts must be >= 1");
    if (vocab_size < fixed + num_concepts + 4) {
        throw ConfigError("vocab_size " + std::to_string(vocab_size) + " too small for " +
                          std::to_string(num_concepts) + " concepts (need at least " +
                          std::to_string(fixed + num_concepts + 4) + ")");
    }

    Vocabulary v;
    v.tokens_ = {"<eos>", "<sep>", "<cap>", "<conversation>", "<detailed_description>",
                 "<complex_reasoning>"};
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < kQuestionWordsPerClass; ++i) {
            v.questions_[c].push_back(v.size());
            v.tokens_.push_back(numbered('q', c * kQuestionWordsPerClass + i));
        }
    }
    for (int i = 0; i < num_concepts; ++i) {
        v.concepts_.push_back(v.size());
        v.tokens_.push_back(numbered('c', i));
    }
    for (int i = 0; v.size() < vocab_size; ++i) {
        v.generic_.push_back(v.size());
        v.tokens_.push_back(numbered('w', i));
    }
    for (int i = 0; i < v.size(); ++i) v.index_.emplace(v.tokens_[i], i);
    return v;
}

int Vocabulary::id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) throw UnknownTokenError(std::string(token));
    return it->second;
}

bool Vocabulary::contains(std::string_view token) const {
    return index_.count(std::string(token)) != 0;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= size()) throw UnknownTokenError("#" + std::to_string(id));
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(std::span<const std::string> tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
}

TokenSeq Vocabulary::decode(std::span<const int> ids) const {
    TokenSeq out;
    out.reserve(ids.size());
    for (int i : ids) out.push_back(token(i));
    return out;
}

std::span<const int> Vocabulary::question_words(InstructionClass c) const {
    return questions_[static_cast<int>(c)];
}

}  // namespace relcurate
