// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded synthetic world with a known notion of image relevance.
//
// Every image carries a few planted concepts: the feature vector has a 1 in
// each concept's dimension plus Gaussian noise. A reference process writes
// captions that name the concepts and question-answer pairs that are either
// grounded (concept words mixed with fillers) or driven purely by a
// language prior (Zipf-distributed filler words, independent of the image).
// Pre-training the toy generator on this corpus produces a model whose own
// generations mix relevant and irrelevant answers, the situation the
// relevance filter is meant to fix.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "relcurate/rng.hpp"
#include "relcurate/toy_model.hpp"
#include "relcurate/types.hpp"
#include "relcurate/vocabulary.hpp"

namespace relcurate {

struct WorldConfig {
    int num_concepts = 16;
    int concepts_per_image = 2;
    double feature_noise = 0.15;
    double grounded_fraction = 0.35;   // share of reference answers that mention the image
    double concept_token_rate = 0.6;   // per-token concept probability inside grounded answers
    double zipf_exponent = 1.0;
    int min_answer_len = 3;
    int max_answer_len = 7;
    int question_len = 3;
    int pretrain_images = 200;
    int pretrain_qa_per_image = 4;
    int pretrain_steps = 300;
    double pretrain_learning_rate = 0.02;
    double null_dropout = 0.3;         // share of pre-training examples seen with the null feature

    void validate(const ModelDims& dims) const;
    bool operator==(const WorldConfig&) const = default;
};

struct WorldImage {
    ImageRef image;
    std::vector<int> concepts;
};

class ToyWorld {
public:
    ToyWorld(WorldConfig cfg, ModelDims dims);

    const Vocabulary& vocab() const noexcept { return vocab_; }
    const WorldConfig& config() const noexcept { return cfg_; }
    const ModelDims& dims() const noexcept { return dims_; }

    /// `count` images named `<prefix>NNNNN`, fully determined by `seed`.
    std::vector<WorldImage> sample_images(int count, std::string_view prefix,
                                          std::uint64_t seed) const;

    std::vector<int> reference_caption(const WorldImage& image, Rng& rng) const;
    std::vector<int> reference_question(InstructionClass c, Rng& rng) const;
    std::vector<int> reference_answer(const WorldImage& image, bool grounded, Rng& rng) const;

    /// Fresh instruction of class `c`, deterministic in (seed, key).
    TokenSeq instruction(InstructionClass c, std::uint64_t seed, std::string_view key) const;

    /// Teacher-forced corpus over captions, questions and answers of freshly
    /// sampled reference images.
    std::vector<LmExample> pretraining_corpus(std::uint64_t seed) const;

    /// Initialises a generator and fits it to the reference corpus with
    /// full-batch Adam. Records the loss curve when requested.
    GeneratorState pretrain(std::uint64_t seed, double learning_rate_after,
                            std::vector<double>* loss_curve = nullptr) const;

    /// Share of `answer` tokens that name one of the image's planted concepts
    /// (ground-truth relevance diagnostic).
    double grounded_share(const WorldImage& image, std::span<const int> answer) const;

private:
    WorldConfig cfg_;
    ModelDims dims_;
    Vocabulary vocab_;
    std::vector<double> prior_;  // Zipf weights over generic words
};

}  // namespace relcurate
