// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcurate/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "relcurate/error.hpp"
#include "relcurate/hashing.hpp"
#include "relcurate/io.hpp"
#include "relcurate/vocabulary.hpp"

namespace relcurate {

using json = nlohmann::json;

std::string_view to_string(Stage s) noexcept {
    switch (s) {
        case Stage::generate_initial: return "generate_initial";
        case Stage::filter: return "filter";
        case Stage::score: return "score";
        case Stage::partition: return "partition";
        case Stage::train_crm: return "train_crm";
        case Stage::train_clm: return "train_clm";
        case Stage::generate_final: return "generate_final";
        case Stage::report: return "report";
    }
    return "?";
}

Stage parse_stage(std::string_view name) {
    for (Stage s : kStages) {
        if (to_string(s) == name) return s;
    }
    throw ConfigError("unknown stage '" + std::string(name) + "'");
}

std::string stage_dir(Stage s) {
    char prefix[4];
    std::snprintf(prefix, sizeof prefix, "%02d", static_cast<int>(s));
    return std::string(prefix) + "_" + std::string(to_string(s));
}

std::string artifact_path(Stage s, std::string_view name) {
    return stage_dir(s) + "/" + std::string(name);
}

std::string_view to_string(Phase p) noexcept { return p == Phase::crm ? "crm" : "clm"; }

Phase parse_phase(std::string_view name) {
    if (name == "crm") return Phase::crm;
    if (name == "clm") return Phase::clm;
    throw ConfigError("unknown phase '" + std::string(name) + "'");
}

void PipelineConfig::validate() const {
    if (num_images < 1 || samples_per_image < 1 || initial_count < 1 || final_count < 1 ||
        final_samples_per_image < 1) {
        throw ConfigError("counts must be >= 1");
    }
    if (static_cast<long long>(initial_count) >
        static_cast<long long>(num_images) * samples_per_image) {
        throw ConfigError("initial_count exceeds num_images * samples_per_image");
    }
    selection.validate();
    filter.validate();
    contrastive.validate();
    model.validate();
    world.validate(model);
    (void)Vocabulary::build(model.vocab_size, world.num_concepts);
    if (!std::isfinite(learning_rate) || learning_rate < 0.0) {
        throw ConfigError("learning_rate must be finite and >= 0");
    }
    if (generation.caption_max_tokens < 1 || generation.max_question_tokens < 1 ||
        generation.max_answer_tokens < 1) {
        throw ConfigError("generation lengths must be >= 1");
    }
    if (training.crm_steps < 0 || training.clm_steps < 0) {
        throw ConfigError("training steps must be >= 0");
    }
    if (training.anchor_max_tokens < 1) throw ConfigError("anchor_max_tokens must be >= 1");

    const auto& order = training.phase_order;
    const std::set<Phase> unique(order.begin(), order.end());
    if (unique.size() != order.size()) throw ConfigError("phase_order lists a phase twice");
    if (enable_crm && !unique.count(Phase::crm)) throw ConfigError("phase_order is missing crm");
    if (enable_clm && !unique.count(Phase::clm)) throw ConfigError("phase_order is missing clm");
}

std::vector<Phase> PipelineConfig::active_phases() const {
    std::vector<Phase> out;
    for (Phase p : training.phase_order) {
        if ((p == Phase::crm && enable_crm) || (p == Phase::clm && enable_clm)) out.push_back(p);
    }
    return out;
}

namespace {

std::string_view scope_name(SelectionScope s) {
    return s == SelectionScope::global ? "global" : "per_image";
}

std::string_view decode_name(DecodeMode m) { return m == DecodeMode::greedy ? "greedy" : "sampled"; }

json section_selection(const SelectionConfig& s) {
    return {{"fraction", s.fraction}, {"scope", scope_name(s.scope)}};
}

json section_filter(const FilterConfig& f) {
    return {{"min_answer_tokens", f.min_answer_tokens},
            {"max_answer_tokens", f.max_answer_tokens},
            {"dedup_on", "exact_qa_pair"}};
}

json section_contrastive(const ContrastiveConfig& c) {
    return {{"temperature", c.temperature},
            {"lambda_c", c.lambda_c},
            {"include_positive_in_denominator", c.include_positive_in_denominator}};
}

json section_model(const ModelDims& m) {
    return {{"embed_dim", m.embed_dim},
            {"image_dim", m.image_dim},
            {"vocab_size", m.vocab_size},
            {"context_window", m.context_window}};
}

json section_world(const WorldConfig& w) {
    return {{"num_concepts", w.num_concepts},
            {"concepts_per_image", w.concepts_per_image},
            {"feature_noise", w.feature_noise},
            {"grounded_fraction", w.grounded_fraction},
            {"concept_token_rate", w.concept_token_rate},
            {"zipf_exponent", w.zipf_exponent},
            {"min_answer_len", w.min_answer_len},
            {"max_answer_len", w.max_answer_len},
            {"question_len", w.question_len},
            {"pretrain_images", w.pretrain_images},
            {"pretrain_qa_per_image", w.pretrain_qa_per_image},
            {"pretrain_steps", w.pretrain_steps},
            {"pretrain_learning_rate", w.pretrain_learning_rate},
            {"null_dropout", w.null_dropout}};
}

json section_generation(const GenerationConfig& g) {
    return {{"caption_max_tokens", g.caption_max_tokens},
            {"max_question_tokens", g.max_question_tokens},
            {"max_answer_tokens", g.max_answer_tokens},
            {"decode", decode_name(g.decode)}};
}

json section_training(const TrainingConfig& t) {
    json order = json::array();
    for (Phase p : t.phase_order) order.push_back(to_string(p));
    return {{"crm_steps", t.crm_steps},
            {"clm_steps", t.clm_steps},
            {"phase_order", order},
            {"joint", t.joint},
            {"train_projection", t.train_projection},
            {"anchor_max_tokens", t.anchor_max_tokens}};
}

json to_json(const PipelineConfig& c) {
    return {{"seed", c.seed},
            {"num_images", c.num_images},
            {"samples_per_image", c.samples_per_image},
            {"initial_count", c.initial_count},
            {"final_count", c.final_count},
            {"final_samples_per_image", c.final_samples_per_image},
            {"selection", section_selection(c.selection)},
            {"filter", section_filter(c.filter)},
            {"contrastive", section_contrastive(c.contrastive)},
            {"model", section_model(c.model)},
            {"learning_rate", c.learning_rate},
            {"world", section_world(c.world)},
            {"generation", section_generation(c.generation)},
            {"training", section_training(c.training)},
            {"enable_crm", c.enable_crm},
            {"enable_clm", c.enable_clm}};
}

// Reads known keys from one JSON object and rejects the rest.
class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(label() + " must be an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!it->is_boolean()) throw ConfigError(label(key) + " must be a boolean");
            } else if constexpr (std::is_integral_v<T>) {
                if (!it->is_number_integer()) throw ConfigError(label(key) + " must be an integer");
                if constexpr (std::is_unsigned_v<T>) {
                    if (it->is_number_unsigned()) {
                        out = it->template get<T>();
                        return;
                    }
                    if (it->template get<long long>() < 0) {
                        throw ConfigError(label(key) + " must be non-negative");
                    }
                }
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!it->is_number()) throw ConfigError(label(key) + " must be a number");
            } else {
                if (!it->is_string()) throw ConfigError(label(key) + " must be a string");
            }
            out = it->template get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(label(key) + ": " + e.what());
        }
    }

    template <typename Fn>
    void section(const char* key, Fn&& fn) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        Reader sub(*it, label(key));
        fn(sub);
        sub.finish();
    }

    const json* raw(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError("unknown config key " + label(it.key()));
        }
    }

    std::string label(const std::string& key = {}) const {
        if (key.empty()) return where_.empty() ? "config" : where_;
        return where_.empty() ? key : where_ + "." + key;
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

PipelineConfig from_json(const json& j) {
    PipelineConfig c;
    Reader r(j, "");
    r.get("seed", c.seed);
    r.get("num_images", c.num_images);
    r.get("samples_per_image", c.samples_per_image);
    r.get("initial_count", c.initial_count);
    r.get("final_count", c.final_count);
    r.get("final_samples_per_image", c.final_samples_per_image);
    r.get("learning_rate", c.learning_rate);
    r.get("enable_crm", c.enable_crm);
    r.get("enable_clm", c.enable_clm);

    r.section("selection", [&](Reader& s) {
        s.get("fraction", c.selection.fraction);
        std::string scope(scope_name(c.selection.scope));
        s.get("scope", scope);
        if (scope == "global") {
            c.selection.scope = SelectionScope::global;
        } else if (scope == "per_image") {
            c.selection.scope = SelectionScope::per_image;
        } else {
            throw ConfigError("selection.scope must be 'global' or 'per_image'");
        }
    });
    r.section("filter", [&](Reader& s) {
        s.get("min_answer_tokens", c.filter.min_answer_tokens);
        s.get("max_answer_tokens", c.filter.max_answer_tokens);
        std::string key = "exact_qa_pair";
        s.get("dedup_on", key);
        if (key != "exact_qa_pair") throw ConfigError("filter.dedup_on must be 'exact_qa_pair'");
    });
    r.section("contrastive", [&](Reader& s) {
        s.get("temperature", c.contrastive.temperature);
        s.get("lambda_c", c.contrastive.lambda_c);
        s.get("include_positive_in_denominator", c.contrastive.include_positive_in_denominator);
    });
    r.section("model", [&](Reader& s) {
        s.get("embed_dim", c.model.embed_dim);
        s.get("image_dim", c.model.image_dim);
        s.get("vocab_size", c.model.vocab_size);
        s.get("context_window", c.model.context_window);
    });
    r.section("world", [&](Reader& s) {
        auto& w = c.world;
        s.get("num_concepts", w.num_concepts);
        s.get("concepts_per_image", w.concepts_per_image);
        s.get("feature_noise", w.feature_noise);
        s.get("grounded_fraction", w.grounded_fraction);
        s.get("concept_token_rate", w.concept_token_rate);
        s.get("zipf_exponent", w.zipf_exponent);
        s.get("min_answer_len", w.min_answer_len);
        s.get("max_answer_len", w.max_answer_len);
        s.get("question_len", w.question_len);
        s.get("pretrain_images", w.pretrain_images);
        s.get("pretrain_qa_per_image", w.pretrain_qa_per_image);
        s.get("pretrain_steps", w.pretrain_steps);
        s.get("pretrain_learning_rate", w.pretrain_learning_rate);
        s.get("null_dropout", w.null_dropout);
    });
    r.section("generation", [&](Reader& s) {
        auto& g = c.generation;
        s.get("caption_max_tokens", g.caption_max_tokens);
        s.get("max_question_tokens", g.max_question_tokens);
        s.get("max_answer_tokens", g.max_answer_tokens);
        std::string mode(decode_name(g.decode));
        s.get("decode", mode);
        if (mode == "greedy") {
            g.decode = DecodeMode::greedy;
        } else if (mode == "sampled") {
            g.decode = DecodeMode::sampled;
        } else {
            throw ConfigError("generation.decode must be 'greedy' or 'sampled'");
        }
    });
    r.section("training", [&](Reader& s) {
        auto& t = c.training;
        s.get("crm_steps", t.crm_steps);
        s.get("clm_steps", t.clm_steps);
        s.get("joint", t.joint);
        s.get("train_projection", t.train_projection);
        s.get("anchor_max_tokens", t.anchor_max_tokens);
        if (const json* order = s.raw("phase_order")) {
            if (!order->is_array()) throw ConfigError("training.phase_order must be an array");
            t.phase_order.clear();
            for (const auto& p : *order) {
                if (!p.is_string()) throw ConfigError("training.phase_order entries must be strings");
                t.phase_order.push_back(parse_phase(p.get<std::string>()));
            }
        }
    });
    r.finish();
    c.validate();
    return c;
}

}  // namespace

PipelineConfig parse_config(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(j);
}

PipelineConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_file(path));
}

std::string config_to_json(const PipelineConfig& cfg, bool pretty) {
    return to_json(cfg).dump(pretty ? 2 : -1);
}

std::string stage_config_hash(const PipelineConfig& cfg, Stage s) {
    const json full = to_json(cfg);
    std::vector<const char*> keys = {"seed",         "num_images", "samples_per_image",
                                     "initial_count", "model",     "learning_rate",
                                     "world",        "generation"};
    const auto rank = static_cast<int>(s);
    if (rank >= static_cast<int>(Stage::filter)) keys.push_back("filter");
    if (rank >= static_cast<int>(Stage::train_crm)) {
        for (const char* k : {"selection", "contrastive", "training", "enable_crm", "enable_clm"}) {
            keys.push_back(k);
        }
    }
    if (rank >= static_cast<int>(Stage::generate_final)) {
        keys.push_back("final_count");
        keys.push_back("final_samples_per_image");
    }
    json subset = json::object();
    for (const char* k : keys) subset[k] = full.at(k);
    return sha256_hex(subset.dump());
}

}  // namespace relcurate
