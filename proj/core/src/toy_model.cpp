// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcurate/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "relcurate/error.hpp"
#include "relcurate/rng.hpp"

namespace relcurate {

void ModelDims::validate() const {
    if (embed_dim < 1 || image_dim < 1) throw ConfigError("model dimensions must be >= 1");
    if (vocab_size < 2) throw ConfigError("vocab_size must be >= 2");
    if (context_window < 1) throw ConfigError("context_window must be >= 1");
}

void GenerationRequest::validate() const {
    if (max_question_tokens < 1 || max_answer_tokens < 1) {
        throw ConfigError("generation lengths must be >= 1");
    }
}

namespace {

void fill_uniform(Mat& m, Rng& rng, double bound) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = uniform(rng, -bound, bound);
    }
}

void check_ids(std::span<const int> ids, int vocab) {
    for (int id : ids) {
        if (id < 0 || id >= vocab) throw UnknownTokenError("#" + std::to_string(id));
    }
}

Eigen::Map<const Vec> as_vec(std::span<const double> s) {
    return {s.data(), static_cast<Eigen::Index>(s.size())};
}

void softmax_inplace(Vec& z) {
    const double m = z.maxCoeff();
    z = (z.array() - m).exp();
    z /= z.sum();
}

/// Mean of the last k context embeddings, or zero for an empty context.
Vec context_mean(std::span<const int> context, const ToyModelParams& p) {
    const auto k = std::min<std::size_t>(context.size(), static_cast<std::size_t>(p.context_window));
    Vec m = Vec::Zero(p.embed_dim());
    if (k == 0) return m;
    for (std::size_t j = context.size() - k; j < context.size(); ++j) {
        m += p.token_embeddings.col(context[j]);
    }
    return m / static_cast<double>(k);
}

/// Distribution given a precomputed image contribution to the logits.
Vec distribution(std::span<const int> context, const Vec& image_logits, const ToyModelParams& p) {
    const int d = p.embed_dim();
    Vec z = p.output_head.leftCols(d) * context_mean(context, p) + image_logits;
    softmax_inplace(z);
    return z;
}

Vec image_logits_for(std::span<const double> features, const ToyModelParams& p) {
    if (static_cast<int>(features.size()) != p.image_dim()) {
        throw ShapeError("image features have dimension " + std::to_string(features.size()) +
                         ", model expects " + std::to_string(p.image_dim()));
    }
    const int d = p.embed_dim();
    return p.output_head.rightCols(d) * (p.image_projection * as_vec(features));
}

int choose(Vec p, DecodeMode mode, Rng& rng, std::initializer_list<int> masked) {
    for (int m : masked) p(m) = 0.0;
    if (mode == DecodeMode::greedy) {
        Eigen::Index best = 0;
        p.maxCoeff(&best);  // first maximal index on ties
        return static_cast<int>(best);
    }
    return static_cast<int>(sample_categorical(rng, {p.data(), static_cast<std::size_t>(p.size())}));
}

std::vector<int> qa_prompt(std::span<const int> question, InstructionClass c,
                           const Vocabulary& vocab) {
    std::vector<int> prompt;
    prompt.reserve(question.size() + 2);
    prompt.push_back(vocab.class_tag(c));
    prompt.insert(prompt.end(), question.begin(), question.end());
    prompt.push_back(vocab.sep());
    return prompt;
}

/// Back-propagates logit gradients `dz` at one position into the context
/// embeddings and the output head (context half). The image half is handled by
/// the caller from the accumulated sum of dz.
void backprop_position(std::span<const int> context, const Vec& ctx_mean, const Vec& dz,
                       const ToyModelParams& p, GeneratorGrad& g) {
    const int d = p.embed_dim();
    g.d_head.leftCols(d).noalias() += dz * ctx_mean.transpose();
    const auto k = std::min<std::size_t>(context.size(), static_cast<std::size_t>(p.context_window));
    if (k == 0) return;
    const Vec d_ctx = p.output_head.leftCols(d).transpose() * dz / static_cast<double>(k);
    for (std::size_t j = context.size() - k; j < context.size(); ++j) {
        g.d_embeddings.col(context[j]) += d_ctx;
    }
}

/// Image-side backward pass for a summed logit gradient.
void backprop_image(const Vec& sum_dz, const Vec& features, bool null_image,
                    const ToyModelParams& p, GeneratorGrad& g) {
    const int d = p.embed_dim();
    const Vec img = p.image_projection * features;
    g.d_head.rightCols(d).noalias() += sum_dz * img.transpose();
    const Vec d_img = p.output_head.rightCols(d).transpose() * sum_dz;
    g.d_image_projection.noalias() += d_img * features.transpose();
    if (null_image) g.d_null.noalias() += p.image_projection.transpose() * d_img;
}

/// Teacher-forced loss of one example, summed over targets and scaled by
/// `weight`; gradient of the scaled loss accumulates into `g` when non-null.
double lm_example_loss(const LmExample& ex, const ToyModelParams& p, double weight,
                       GeneratorGrad* g) {
    const Vec& features = ex.null_image ? p.null_image_feature : ex.features;
    const Vec img_logits =
        image_logits_for({features.data(), static_cast<std::size_t>(features.size())}, p);

    std::vector<int> seq = ex.prompt;
    seq.reserve(ex.prompt.size() + ex.targets.size());
    Vec sum_dz = Vec::Zero(p.vocab_size());
    double loss = 0.0;
    for (int target : ex.targets) {
        const Vec ctx = context_mean(seq, p);
        Vec probs = p.output_head.leftCols(p.embed_dim()) * ctx + img_logits;
        softmax_inplace(probs);
        loss -= std::log(probs(target));
        if (g) {
            Vec dz = weight * probs;
            dz(target) -= weight;
            backprop_position(seq, ctx, dz, p, *g);
            sum_dz += dz;
        }
        seq.push_back(target);
    }
    if (g) backprop_image(sum_dz, features, ex.null_image, p, *g);
    return weight * loss;
}

/// Anchor columns with per-step caches for the backward pass.
struct AnchorForward {
    Mat columns;
    std::vector<std::vector<int>> contexts;
    std::vector<Vec> ctx_means;
    std::vector<Vec> probs;
};

AnchorForward anchor_forward(std::span<const int> prompt, std::span<const int> question,
                             std::span<const double> features, std::span<const int> path,
                             const ToyModelParams& p) {
    check_ids(prompt, p.vocab_size());
    check_ids(question, p.vocab_size());
    check_ids(path, p.vocab_size());
    const Vec img_logits = image_logits_for(features, p);
    std::vector<int> seq(prompt.begin(), prompt.end());

    AnchorForward f;
    const auto q = static_cast<Eigen::Index>(question.size());
    const auto n = static_cast<Eigen::Index>(path.size());
    f.columns.resize(p.embed_dim(), q + n);
    for (Eigen::Index t = 0; t < q; ++t) f.columns.col(t) = p.token_embeddings.col(question[t]);
    for (Eigen::Index t = 0; t < n; ++t) {
        f.contexts.push_back(seq);
        f.ctx_means.push_back(context_mean(seq, p));
        Vec probs = p.output_head.leftCols(p.embed_dim()) * f.ctx_means.back() + img_logits;
        softmax_inplace(probs);
        f.columns.col(q + t) = p.token_embeddings * probs;
        f.probs.push_back(std::move(probs));
        seq.push_back(path[t]);
    }
    return f;
}

void anchor_backward(const AnchorForward& f, std::span<const int> question, const Vec& features,
                     const Mat& d_columns, const ToyModelParams& p, GeneratorGrad& g) {
    const auto q = static_cast<Eigen::Index>(question.size());
    for (Eigen::Index t = 0; t < q; ++t) g.d_embeddings.col(question[t]) += d_columns.col(t);
    Vec sum_dz = Vec::Zero(p.vocab_size());
    for (std::size_t t = 0; t < f.probs.size(); ++t) {
        const Vec& probs = f.probs[t];
        const auto col = d_columns.col(q + static_cast<Eigen::Index>(t));
        // column = E p  =>  dE += dcol p^T,  dp = E^T dcol
        g.d_embeddings.noalias() += col * probs.transpose();
        const Vec dp = p.token_embeddings.transpose() * col;
        // softmax Jacobian: dz = p * (dp - <p, dp>)
        const Vec dz = probs.cwiseProduct((dp.array() - probs.dot(dp)).matrix());
        backprop_position(f.contexts[t], f.ctx_means[t], dz, p, g);
        sum_dz += dz;
    }
    backprop_image(sum_dz, features, false, p, g);
}

}  // namespace

ToyModelParams init_toy_model(const ModelDims& dims, std::uint64_t seed, double learning_rate) {
    dims.validate();
    Rng rng(derive_seed(seed, "toy-model"));
    ToyModelParams p;
    p.token_embeddings.resize(dims.embed_dim, dims.vocab_size);
    fill_uniform(p.token_embeddings, rng, 1.0);
    p.image_projection.resize(dims.embed_dim, dims.image_dim);
    fill_uniform(p.image_projection, rng, 1.0 / std::sqrt(static_cast<double>(dims.image_dim)));
    p.null_image_feature.resize(dims.image_dim);
    for (auto& v : p.null_image_feature) v = uniform(rng, -0.1, 0.1);
    p.output_head.resize(dims.vocab_size, 2 * dims.embed_dim);
    fill_uniform(p.output_head, rng, 1.0 / std::sqrt(2.0 * dims.embed_dim));
    p.context_window = dims.context_window;
    p.learning_rate = learning_rate;
    p.step = 0;
    p.seed = seed;
    return p;
}

GeneratorState init_generator(const ModelDims& dims, std::uint64_t seed, double learning_rate) {
    return {init_toy_model(dims, seed, learning_rate), init_projection(dims.embed_dim, seed)};
}

Vec next_token_distribution(std::span<const int> context, std::span<const double> features,
                            const ToyModelParams& params) {
    check_ids(context, params.vocab_size());
    return distribution(context, image_logits_for(features, params), params);
}

std::vector<int> generate_caption(std::span<const double> features, const ToyModelParams& params,
                                  const Vocabulary& vocab, int max_len, DecodeSpec decode) {
    if (max_len < 1) throw ConfigError("caption max_len must be >= 1");
    Rng rng(derive_seed(decode.seed, "caption"));
    const Vec img_logits = image_logits_for(features, params);
    std::vector<int> seq{vocab.caption_start()};
    std::vector<int> caption;
    for (int t = 0; t < max_len; ++t) {
        const Vec probs = distribution(seq, img_logits, params);
        const int tok = t == 0 ? choose(probs, decode.mode, rng, {vocab.eos()})
                               : choose(probs, decode.mode, rng, {});
        if (tok == vocab.eos()) break;
        caption.push_back(tok);
        seq.push_back(tok);
    }
    return caption;
}

std::string make_sample_id(std::string_view image_id, InstructionClass c, std::uint64_t seed) {
    std::string id(image_id);
    id += '-';
    id += to_string(c);
    id += '-';
    id += std::to_string(seed);
    return id;
}

VlitSample generate_qa(const ImageRef& image, std::span<const int> caption,
                       const GenerationRequest& request, const ToyModelParams& params,
                       const Vocabulary& vocab) {
    request.validate();
    if (caption.empty()) throw Error("generate_qa: empty caption");
    check_ids(caption, params.vocab_size());
    const auto& features =
        request.image ? request.image->features
                      : std::vector<double>(params.null_image_feature.begin(),
                                            params.null_image_feature.end());
    const Vec img_logits = image_logits_for(features, params);
    Rng rng(derive_seed(request.decode.seed, "qa"));
    const auto mode = request.decode.mode;

    std::vector<int> seq(caption.begin(), caption.end());
    seq.push_back(vocab.class_tag(request.instruction_class));

    std::vector<int> question;
    for (int t = 0; t < request.max_question_tokens; ++t) {
        const Vec probs = distribution(seq, img_logits, params);
        const int tok = t == 0 ? choose(probs, mode, rng, {vocab.sep(), vocab.eos()})
                               : choose(probs, mode, rng, {});
        if (tok == vocab.sep() || tok == vocab.eos()) break;
        question.push_back(tok);
        seq.push_back(tok);
    }
    seq.push_back(vocab.sep());

    std::vector<int> answer;
    for (int t = 0; t < request.max_answer_tokens; ++t) {
        const Vec probs = distribution(seq, img_logits, params);
        const int tok = t == 0 ? choose(probs, mode, rng, {vocab.eos()})
                               : choose(probs, mode, rng, {});
        if (tok == vocab.eos()) break;
        answer.push_back(tok);
        seq.push_back(tok);
    }

    VlitSample s;
    s.image_id = image.image_id;
    s.sample_id = make_sample_id(image.image_id, request.instruction_class, request.decode.seed);
    s.instruction_class = request.instruction_class;
    s.question = vocab.decode(question);
    s.answer = vocab.decode(answer);
    return s;
}

std::vector<double> teacher_forced_probs(const VlitSample& qa, Condition condition,
                                         std::span<const double> image_features,
                                         const ToyModelParams& params, const Vocabulary& vocab) {
    const auto question = vocab.encode(qa.question);
    const auto answer = vocab.encode(qa.answer);
    check_ids(answer, params.vocab_size());
    const std::span<const double> features =
        condition == Condition::with_image
            ? image_features
            : std::span<const double>(params.null_image_feature.data(),
                                      static_cast<std::size_t>(params.null_image_feature.size()));
    const Vec img_logits = image_logits_for(features, params);

    auto seq = qa_prompt(question, qa.instruction_class, vocab);
    std::vector<double> out;
    out.reserve(answer.size());
    for (int tok : answer) {
        out.push_back(distribution(seq, img_logits, params)(tok));
        seq.push_back(tok);
    }
    return out;
}

void attach_probabilities(VlitSample& qa, std::span<const double> image_features,
                          const ToyModelParams& scorer, const Vocabulary& vocab) {
    qa.p_visual = teacher_forced_probs(qa, Condition::with_image, image_features, scorer, vocab);
    qa.p_direct = teacher_forced_probs(qa, Condition::without_image, image_features, scorer, vocab);
}

std::vector<int> decode_anchor_path(std::span<const int> question, InstructionClass c,
                                    std::span<const double> features,
                                    const ToyModelParams& params, const Vocabulary& vocab,
                                    int max_answer_tokens) {
    check_ids(question, params.vocab_size());
    const Vec img_logits = image_logits_for(features, params);
    auto seq = qa_prompt(question, c, vocab);
    std::vector<int> path;
    Rng unused(0);
    for (int t = 0; t < max_answer_tokens; ++t) {
        const int tok = choose(distribution(seq, img_logits, params), DecodeMode::greedy, unused, {});
        if (tok == vocab.eos()) break;
        path.push_back(tok);
        seq.push_back(tok);
    }
    return path;
}

Mat anchor_columns(std::span<const int> question, InstructionClass c,
                   std::span<const double> features, std::span<const int> path,
                   const ToyModelParams& params, const Vocabulary& vocab) {
    return anchor_forward(qa_prompt(question, c, vocab), question, features, path, params).columns;
}

AnchorEmbedding anchor_embedding(const TokenSeq& question, InstructionClass c,
                                 const ImageRef& image, const GeneratorState& state,
                                 const Vocabulary& vocab, int max_answer_tokens,
                                 std::string source_sample_id) {
    const auto q = vocab.encode(question);
    const auto path =
        decode_anchor_path(q, c, image.features, state.model, vocab, max_answer_tokens);
    const Mat cols = anchor_columns(q, c, image.features, path, state.model, vocab);
    if (cols.cols() == 0) throw Error("anchor_embedding: empty question and answer");
    return {project(cols, state.projection), std::move(source_sample_id)};
}

// ---------------------------------------------------------------------------
// Training

std::string_view to_string(Objective o) noexcept {
    switch (o) {
        case Objective::crm_only: return "crm_only";
        case Objective::clm_only: return "clm_only";
        case Objective::combined: return "combined";
    }
    return "combined";
}

GeneratorGrad::GeneratorGrad(const GeneratorState& like)
    : d_embeddings(Mat::Zero(like.model.token_embeddings.rows(), like.model.token_embeddings.cols())),
      d_image_projection(
          Mat::Zero(like.model.image_projection.rows(), like.model.image_projection.cols())),
      d_null(Vec::Zero(like.model.null_image_feature.size())),
      d_head(Mat::Zero(like.model.output_head.rows(), like.model.output_head.cols())),
      projection(like.projection.dim()) {}

namespace {

bool uses_lm(Objective o) { return o != Objective::clm_only; }
bool uses_contrast(Objective o) { return o != Objective::crm_only; }

Vec features_of(const ImageRef& image, const ToyModelParams& p) {
    if (static_cast<int>(image.features.size()) != p.image_dim()) {
        throw ShapeError("image " + image.image_id + " has " +
                         std::to_string(image.features.size()) + " features, model expects " +
                         std::to_string(p.image_dim()));
    }
    return as_vec(image.features);
}

std::vector<int> concat_ids(const VlitSample& s, const Vocabulary& vocab) {
    auto ids = vocab.encode(s.question);
    const auto a = vocab.encode(s.answer);
    ids.insert(ids.end(), a.begin(), a.end());
    return ids;
}

}  // namespace

PreparedBatch prepare_batch(std::span<const TrainItem> batch, Objective objective,
                            const GeneratorState& state, const Vocabulary& vocab,
                            const TrainOptions& options) {
    if (batch.empty()) throw Error("train_step: empty batch");
    const auto& p = state.model;
    PreparedBatch out;
    for (const auto& item : batch) {
        if (uses_lm(objective) && item.target) {
            LmExample lm;
            lm.prompt = qa_prompt(vocab.encode(item.target->question),
                                  item.target->instruction_class, vocab);
            lm.targets = vocab.encode(item.target->answer);
            lm.features = features_of(item.image, p);
            if (lm.targets.empty()) throw ValidationError(item.target->sample_id, "empty answer");
            out.lm.push_back(std::move(lm));
        }
        if (uses_contrast(objective) && item.group && !item.group->negatives.empty()) {
            const auto& grp = *item.group;
            PreparedBatch::Contrast c;
            c.positive = concat_ids(grp.positive, vocab);
            for (const auto& n : grp.negatives) c.negatives.push_back(concat_ids(n, vocab));
            c.anchor_question = vocab.encode(grp.anchor_question);
            c.anchor_prompt = qa_prompt(c.anchor_question, grp.anchor_class, vocab);
            c.features = features_of(item.image, p);
            c.anchor_path = decode_anchor_path(
                c.anchor_question, grp.anchor_class,
                {c.features.data(), static_cast<std::size_t>(c.features.size())}, p, vocab,
                options.anchor_max_tokens);
            if (c.anchor_question.empty() && c.anchor_path.empty()) {
                throw Error("train_step: anchor sequence is empty");
            }
            out.contrast.push_back(std::move(c));
        }
    }
    if (uses_lm(objective) && out.lm.empty()) {
        throw Error("train_step: objective " + std::string(to_string(objective)) +
                    " needs at least one cross-entropy target");
    }
    if (uses_contrast(objective) && out.contrast.empty()) {
        throw Error("train_step: every contrastive group in the batch is skipped");
    }
    return out;
}

LossReport evaluate_objective(const PreparedBatch& batch, Objective objective,
                              const GeneratorState& state, const TrainOptions& options,
                              GeneratorGrad* grad) {
    options.contrastive.validate();
    const auto& p = state.model;
    const double lambda = options.contrastive.lambda_c;
    if (grad) *grad = GeneratorGrad(state);

    LossReport report;
    if (uses_lm(objective)) {
        report.l_r = lm_loss(batch.lm, p, grad);
    }

    if (uses_contrast(objective)) {
        const double weight = lambda / static_cast<double>(batch.contrast.size());
        double sum = 0.0;
        for (const auto& c : batch.contrast) {
            const std::span<const double> feats(c.features.data(),
                                                static_cast<std::size_t>(c.features.size()));
            const auto anchor = anchor_forward(c.anchor_prompt, c.anchor_question, feats,
                                               c.anchor_path, p);
            const Vec h_anchor = project(anchor.columns, state.projection);

            const Mat e_pos = embed_sequence(c.positive, p.token_embeddings);
            const Vec h_pos = project(e_pos, state.projection);
            std::vector<Mat> e_negs;
            std::vector<Vec> h_negs;
            e_negs.reserve(c.negatives.size());
            h_negs.reserve(c.negatives.size());
            for (const auto& n : c.negatives) {
                e_negs.push_back(embed_sequence(n, p.token_embeddings));
                h_negs.push_back(project(e_negs.back(), state.projection));
            }

            if (!grad) {
                sum += contrastive_loss(h_anchor, h_pos, h_negs, options.contrastive);
                continue;
            }
            const auto cg = contrastive_loss_grad(h_anchor, h_pos, h_negs, options.contrastive);
            sum += cg.loss;

            auto scatter = [&](std::span<const int> ids, const Mat& d_e) {
                for (std::size_t t = 0; t < ids.size(); ++t) {
                    grad->d_embeddings.col(ids[t]) += d_e.col(static_cast<Eigen::Index>(t));
                }
            };
            scatter(c.positive,
                    project_backward(e_pos, state.projection, weight * cg.d_pos, grad->projection));
            for (std::size_t k = 0; k < c.negatives.size(); ++k) {
                scatter(c.negatives[k], project_backward(e_negs[k], state.projection,
                                                         weight * cg.d_negs[k], grad->projection));
            }
            const Mat d_anchor = project_backward(anchor.columns, state.projection,
                                                  weight * cg.d_anchor, grad->projection);
            anchor_backward(anchor, c.anchor_question, c.features, d_anchor, p, *grad);
        }
        report.l_c = sum / static_cast<double>(batch.contrast.size());
    }

    report.total = report.l_r + lambda * report.l_c;
    return report;
}

double lm_loss(std::span<const LmExample> examples, const ToyModelParams& params,
               GeneratorGrad* grad) {
    if (examples.empty()) throw Error("lm_loss: no examples");
    double total = 0.0;
    const double n_examples = static_cast<double>(examples.size());
    for (const auto& ex : examples) {
        if (ex.targets.empty()) throw Error("lm_loss: example without targets");
        check_ids(ex.prompt, params.vocab_size());
        check_ids(ex.targets, params.vocab_size());
        const double weight = 1.0 / (n_examples * static_cast<double>(ex.targets.size()));
        total += lm_example_loss(ex, params, weight, grad);
    }
    return total;
}

void apply_gradient(GeneratorState& state, const GeneratorGrad& grad, double learning_rate,
                    bool update_projection) {
    auto& p = state.model;
    p.token_embeddings -= learning_rate * grad.d_embeddings;
    p.image_projection -= learning_rate * grad.d_image_projection;
    p.null_image_feature -= learning_rate * grad.d_null;
    p.output_head -= learning_rate * grad.d_head;
    if (update_projection) {
        state.projection.weight -= learning_rate * grad.projection.d_weight;
        state.projection.bias -= learning_rate * grad.projection.d_bias;
    }
}

StepResult train_step(std::span<const TrainItem> batch, Objective objective,
                      const GeneratorState& state, const Vocabulary& vocab,
                      const TrainOptions& options) {
    const auto prepared = prepare_batch(batch, objective, state, vocab, options);
    GeneratorGrad grad(state);
    StepResult out{state, evaluate_objective(prepared, objective, state, options, &grad)};
    apply_gradient(out.state, grad, state.model.learning_rate, options.train_projection);
    ++out.state.model.step;
    return out;
}

namespace {

template <typename Fn>
void visit_blocks(Fn&& fn, Mat& e, Mat& pr, Vec& nul, Mat& h, Mat& w, Vec& b) {
    fn(e.data(), e.size());
    fn(pr.data(), pr.size());
    fn(nul.data(), nul.size());
    fn(h.data(), h.size());
    fn(w.data(), w.size());
    fn(b.data(), b.size());
}

}  // namespace

std::vector<double> flatten(const GeneratorState& state) {
    auto copy = state;
    std::vector<double> out;
    visit_blocks([&](const double* d, Eigen::Index n) { out.insert(out.end(), d, d + n); },
                 copy.model.token_embeddings, copy.model.image_projection,
                 copy.model.null_image_feature, copy.model.output_head, copy.projection.weight,
                 copy.projection.bias);
    return out;
}

void unflatten(std::span<const double> flat, GeneratorState& state) {
    std::size_t pos = 0;
    auto& m = state.model;
    std::size_t expected = 0;
    visit_blocks([&](double*, Eigen::Index n) { expected += static_cast<std::size_t>(n); },
                 m.token_embeddings, m.image_projection, m.null_image_feature, m.output_head,
                 state.projection.weight, state.projection.bias);
    if (flat.size() != expected) {
        throw ShapeError("unflatten: expected " + std::to_string(expected) + " values, got " +
                         std::to_string(flat.size()));
    }
    visit_blocks(
        [&](double* d, Eigen::Index n) {
            std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), n, d);
            pos += static_cast<std::size_t>(n);
        },
        m.token_embeddings, m.image_projection, m.null_image_feature, m.output_head,
        state.projection.weight, state.projection.bias);
}

std::vector<double> flatten(const GeneratorGrad& grad) {
    auto g = grad;
    std::vector<double> out;
    visit_blocks([&](const double* d, Eigen::Index n) { out.insert(out.end(), d, d + n); },
                 g.d_embeddings, g.d_image_projection, g.d_null, g.d_head, g.projection.d_weight,
                 g.projection.d_bias);
    return out;
}

}  // namespace relcurate
