// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcurate/toy_world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "relcurate/error.hpp"
#include "relcurate/rng.hpp"

namespace relcurate {

void WorldConfig::validate(const ModelDims& dims) const {
    if (num_concepts < 1 || num_concepts > dims.image_dim) {
        throw ConfigError("num_concepts must lie in [1, image_dim]");
    }
    if (concepts_per_image < 1 || concepts_per_image > num_concepts) {
        throw ConfigError("concepts_per_image must lie in [1, num_concepts]");
    }
    if (min_answer_len < 1 || min_answer_len > max_answer_len) {
        throw ConfigError("world answer lengths must satisfy 1 <= min <= max");
    }
    if (question_len < 1) throw ConfigError("question_len must be >= 1");
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(grounded_fraction) || !unit(concept_token_rate) || !unit(null_dropout)) {
        throw ConfigError("world probabilities must lie in [0, 1]");
    }
    if (feature_noise < 0.0) throw ConfigError("feature_noise must be >= 0");
    if (pretrain_images < 1 || pretrain_qa_per_image < 1 || pretrain_steps < 0) {
        throw ConfigError("pre-training sizes must be positive");
    }
}

ToyWorld::ToyWorld(WorldConfig cfg, ModelDims dims)
    : cfg_(cfg), dims_(dims), vocab_(Vocabulary::build(dims.vocab_size, cfg.num_concepts)) {
    dims_.validate();
    cfg_.validate(dims_);
    const auto n = vocab_.generic_words().size();
    prior_.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        prior_[r] = 1.0 / std::pow(static_cast<double>(r + 1), cfg_.zipf_exponent);
    }
}

std::vector<WorldImage> ToyWorld::sample_images(int count, std::string_view prefix,
                                                std::uint64_t seed) const {
    std::vector<WorldImage> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Rng rng(derive_seed(seed, "image", static_cast<std::uint64_t>(i)));
        WorldImage img;
        char name[32];
        std::snprintf(name, sizeof name, "%05d", i);
        img.image.image_id = std::string(prefix) + name;

        std::vector<int> pool(static_cast<std::size_t>(cfg_.num_concepts));
        for (int c = 0; c < cfg_.num_concepts; ++c) pool[static_cast<std::size_t>(c)] = c;
        for (int k = 0; k < cfg_.concepts_per_image; ++k) {
            const auto j = static_cast<std::size_t>(k) + uniform_index(rng, pool.size() - static_cast<std::size_t>(k));
            std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
            img.concepts.push_back(pool[static_cast<std::size_t>(k)]);
        }
        std::sort(img.concepts.begin(), img.concepts.end());

        img.image.features.resize(static_cast<std::size_t>(dims_.image_dim));
        for (auto& f : img.image.features) f = cfg_.feature_noise * standard_normal(rng);
        for (int c : img.concepts) img.image.features[static_cast<std::size_t>(c)] += 1.0;
        out.push_back(std::move(img));
    }
    return out;
}

std::vector<int> ToyWorld::reference_caption(const WorldImage& image, Rng& rng) const {
    std::vector<int> caption;
    for (int c : image.concepts) caption.push_back(vocab_.concept_word(c));
    if (uniform01(rng) < 0.5) {
        caption.push_back(vocab_.generic_words()[sample_categorical(rng, prior_)]);
    }
    for (std::size_t i = caption.size(); i > 1; --i) {
        std::swap(caption[i - 1], caption[uniform_index(rng, i)]);
    }
    return caption;
}

std::vector<int> ToyWorld::reference_question(InstructionClass c, Rng& rng) const {
    const auto words = vocab_.question_words(c);
    std::vector<int> q;
    for (int t = 0; t < cfg_.question_len; ++t) q.push_back(words[uniform_index(rng, words.size())]);
    return q;
}

std::vector<int> ToyWorld::reference_answer(const WorldImage& image, bool grounded,
                                            Rng& rng) const {
    const int len = cfg_.min_answer_len +
                    static_cast<int>(uniform_index(
                        rng, static_cast<std::size_t>(cfg_.max_answer_len - cfg_.min_answer_len + 1)));
    std::vector<int> a;
    for (int t = 0; t < len; ++t) {
        if (grounded && uniform01(rng) < cfg_.concept_token_rate) {
            a.push_back(vocab_.concept_word(image.concepts[uniform_index(rng, image.concepts.size())]));
        } else {
            a.push_back(vocab_.generic_words()[sample_categorical(rng, prior_)]);
        }
    }
    return a;
}

TokenSeq ToyWorld::instruction(InstructionClass c, std::uint64_t seed, std::string_view key) const {
    Rng rng(derive_seed(seed, key));
    return vocab_.decode(reference_question(c, rng));
}

std::vector<LmExample> ToyWorld::pretraining_corpus(std::uint64_t seed) const {
    const auto images = sample_images(cfg_.pretrain_images, "ref", derive_seed(seed, "ref-images"));
    std::vector<LmExample> corpus;
    Rng rng(derive_seed(seed, "ref-corpus"));
    const int eos = vocab_.eos();
    const int sep = vocab_.sep();

    auto add = [&](std::vector<int> prompt, std::vector<int> targets, const WorldImage& img) {
        LmExample ex;
        ex.prompt = std::move(prompt);
        ex.targets = std::move(targets);
        ex.features = Eigen::Map<const Vec>(img.image.features.data(),
                                            static_cast<Eigen::Index>(img.image.features.size()));
        ex.null_image = uniform01(rng) < cfg_.null_dropout;
        corpus.push_back(std::move(ex));
    };

    for (const auto& img : images) {
        const auto caption = reference_caption(img, rng);
        auto cap_targets = caption;
        cap_targets.push_back(eos);
        add({vocab_.caption_start()}, cap_targets, img);

        for (int j = 0; j < cfg_.pretrain_qa_per_image; ++j) {
            const auto cls = kInstructionClasses[static_cast<std::size_t>(j) % 3];
            const int tag = vocab_.class_tag(cls);
            const auto question = reference_question(cls, rng);
            const bool grounded = uniform01(rng) < cfg_.grounded_fraction;
            auto answer = reference_answer(img, grounded, rng);

            std::vector<int> q_prompt = caption;
            q_prompt.push_back(tag);
            auto q_targets = question;
            q_targets.push_back(sep);
            add(q_prompt, q_targets, img);

            std::vector<int> a_prompt{tag};
            a_prompt.insert(a_prompt.end(), question.begin(), question.end());
            a_prompt.push_back(sep);
            answer.push_back(eos);
            add(a_prompt, answer, img);
        }
    }
    return corpus;
}

GeneratorState ToyWorld::pretrain(std::uint64_t seed, double learning_rate_after,
                                  std::vector<double>* loss_curve) const {
    auto state = init_generator(dims_, derive_seed(seed, "generator"), learning_rate_after);
    const auto corpus = pretraining_corpus(seed);

    // Adam over the flattened generator parameters (projection excluded).
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    auto params = flatten(state);
    const auto proj_size = static_cast<std::size_t>(state.projection.weight.size() +
                                                    state.projection.bias.size());
    const auto n = params.size() - proj_size;
    std::vector<double> m(n, 0.0), v(n, 0.0);
    for (int step = 0; step < cfg_.pretrain_steps; ++step) {
        GeneratorGrad grad(state);
        const double loss = lm_loss(corpus, state.model, &grad);
        if (loss_curve) loss_curve->push_back(loss);
        const auto g = flatten(grad);
        const double c1 = 1.0 - std::pow(kBeta1, step + 1);
        const double c2 = 1.0 - std::pow(kBeta2, step + 1);
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
            v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
            params[i] -= cfg_.pretrain_learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
        }
        unflatten(params, state);
    }
    state.model.step = 0;
    state.model.learning_rate = learning_rate_after;
    return state;
}

double ToyWorld::grounded_share(const WorldImage& image, std::span<const int> answer) const {
    if (answer.empty()) return 0.0;
    int hits = 0;
    for (int tok : answer) {
        for (int c : image.concepts) {
            if (tok == vocab_.concept_word(c)) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(answer.size());
}

}  // namespace relcurate
