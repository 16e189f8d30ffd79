// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "relcurate/types.hpp"

namespace relcurate {

/// Closed word-level vocabulary of the toy world.
///
/// Layout: six special tokens (<eos>, <sep>, <cap> and one tag per
/// instruction class), four question words per class (q00..q11), one word
/// per visual concept (c00..), and generic filler words (w00..) for the rest.
class Vocabulary {
public:
    static constexpr int kSpecialCount = 6;
    static constexpr int kQuestionWordsPerClass = 4;

    /// Throws ConfigError when `vocab_size` cannot hold the specials, the
    /// question words, `num_concepts` concept words and at least 4 fillers.
    static Vocabulary build(int vocab_size, int num_concepts);

    int size() const noexcept { return static_cast<int>(tokens_.size()); }

    /// Throws UnknownTokenError.
    int id(std::string_view token) const;
    bool contains(std::string_view token) const;
    const std::string& token(int id) const;

    std::vector<int> encode(std::span<const std::string> tokens) const;
    TokenSeq decode(std::span<const int> ids) const;

    int eos() const noexcept { return 0; }
    int sep() const noexcept { return 1; }
    int caption_start() const noexcept { return 2; }
    int class_tag(InstructionClass c) const noexcept { return 3 + static_cast<int>(c); }

    std::span<const int> question_words(InstructionClass c) const;
    std::span<const int> concept_words() const noexcept { return concepts_; }
    std::span<const int> generic_words() const noexcept { return generic_; }
    int concept_word(int concept_index) const { return concepts_.at(concept_index); }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
    std::vector<int> questions_[3];
    std::vector<int> concepts_;
    std::vector<int> generic_;
};

}  // namespace relcurate
