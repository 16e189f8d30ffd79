// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0
//
// A tiny differentiable conditional generator used in place of a real
// vision-language model.
//
// For a context window c (the last k tokens) and conditioning features f:
//
//     x = [ mean_{j in c} E[:, j] ; P f ]          (2d)
//     p = softmax(H x)                              (V)
//
// E is d x V, P is d x d_img and H is V x 2d. The image-withheld condition
// substitutes the learned null feature for f. All gradients are hand-derived
// and cross-checked against finite differences in the test-suite.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relcurate/contrastive.hpp"
#include "relcurate/relevance.hpp"
#include "relcurate/types.hpp"
#include "relcurate/vocabulary.hpp"

namespace relcurate {

struct ModelDims {
    int embed_dim = 16;
    int image_dim = 16;
    int vocab_size = 64;
    int context_window = 3;

    void validate() const;
    bool operator==(const ModelDims&) const = default;
};

struct ToyModelParams {
    Mat token_embeddings;    // d x V
    Mat image_projection;    // d x d_img
    Vec null_image_feature;  // d_img
    int context_window = 3;
    Mat output_head;         // V x 2d
    double learning_rate = 0.05;
    std::uint64_t step = 0;
    std::uint64_t seed = 0;

    int embed_dim() const noexcept { return static_cast<int>(token_embeddings.rows()); }
    int vocab_size() const noexcept { return static_cast<int>(token_embeddings.cols()); }
    int image_dim() const noexcept { return static_cast<int>(image_projection.cols()); }
    ModelDims dims() const noexcept {
        return {embed_dim(), image_dim(), vocab_size(), context_window};
    }

    bool operator==(const ToyModelParams& o) const {
        return token_embeddings == o.token_embeddings && image_projection == o.image_projection &&
               null_image_feature == o.null_image_feature && context_window == o.context_window &&
               output_head == o.output_head && learning_rate == o.learning_rate &&
               step == o.step && seed == o.seed;
    }
};

/// The generator plus the sequence projection used by the contrastive
/// objective; this is the unit that is trained and checkpointed.
struct GeneratorState {
    ToyModelParams model;
    ProjectionParams projection;

    bool operator==(const GeneratorState&) const = default;
};

ToyModelParams init_toy_model(const ModelDims& dims, std::uint64_t seed,
                              double learning_rate = 0.05);
GeneratorState init_generator(const ModelDims& dims, std::uint64_t seed,
                              double learning_rate = 0.05);

/// Softmax over the vocabulary. `context` may be longer than the window; only
/// its last k entries are used, and an empty context contributes a zero
/// vector. Throws UnknownTokenError for out-of-range ids and ShapeError for a
/// feature vector of the wrong size.
Vec next_token_distribution(std::span<const int> context, std::span<const double> features,
                            const ToyModelParams& params);

enum class DecodeMode { greedy, sampled };

struct DecodeSpec {
    DecodeMode mode = DecodeMode::greedy;
    std::uint64_t seed = 0;
};

struct GenerationRequest {
    std::optional<ImageRef> image;  // nullopt -> null image feature
    InstructionClass instruction_class = InstructionClass::conversation;
    int max_question_tokens = 6;
    int max_answer_tokens = 8;
    DecodeSpec decode;

    void validate() const;
};

/// Decodes a caption after the <cap> token, stopping at <eos> or max_len.
/// <eos> is never chosen at the first step, so the caption is non-empty.
std::vector<int> generate_caption(std::span<const double> features, const ToyModelParams& params,
                                  const Vocabulary& vocab, int max_len, DecodeSpec decode);

/// Deterministic sample id for a generated pair.
std::string make_sample_id(std::string_view image_id, InstructionClass c, std::uint64_t seed);

/// Two-step generation: with context `caption <tag>` decode a question
/// (terminated by <sep>), then an answer (terminated by <eos>). <sep> only
/// ever precedes an answer, so the bag-of-context model can tell the phases
/// apart. Both are
/// at least one token long and respect the request's caps. Probability fields
/// of the result are left empty.
VlitSample generate_qa(const ImageRef& image, std::span<const int> caption,
                       const GenerationRequest& request, const ToyModelParams& params,
                       const Vocabulary& vocab);

/// Teacher-forced probability of each answer token given `<tag> question <sep>`
/// and the true answer prefix. without_image substitutes the null feature.
std::vector<double> teacher_forced_probs(const VlitSample& qa, Condition condition,
                                         std::span<const double> image_features,
                                         const ToyModelParams& params, const Vocabulary& vocab);

/// Fills p_visual and p_direct of `qa` using `scorer`.
void attach_probabilities(VlitSample& qa, std::span<const double> image_features,
                          const ToyModelParams& scorer, const Vocabulary& vocab);

struct AnchorEmbedding {
    Vec h_y;
    std::string source_sample_id;
};

/// Hard token path of an anchor answer: greedy decoding after
/// `<tag> question <sep>` until <eos> or `max_answer_tokens`.
std::vector<int> decode_anchor_path(std::span<const int> question, InstructionClass c,
                                    std::span<const double> features,
                                    const ToyModelParams& params, const Vocabulary& vocab,
                                    int max_answer_tokens);

/// Columns of the anchor sequence: hard embeddings of the question followed,
/// for every step of `path`, by the expected embedding E p_t where p_t is the
/// model's distribution at that step (contexts follow the hard path).
Mat anchor_columns(std::span<const int> question, InstructionClass c,
                   std::span<const double> features, std::span<const int> path,
                   const ToyModelParams& params, const Vocabulary& vocab);

AnchorEmbedding anchor_embedding(const TokenSeq& question, InstructionClass c,
                                 const ImageRef& image, const GeneratorState& state,
                                 const Vocabulary& vocab, int max_answer_tokens,
                                 std::string source_sample_id = {});

// ---------------------------------------------------------------------------
// Training

enum class Objective { crm_only, clm_only, combined };

std::string_view to_string(Objective o) noexcept;

/// Positive and negative pseudo-labels for one image plus the instruction used
/// to produce the anchor.
struct ContrastiveGroup {
    VlitSample positive;
    std::vector<VlitSample> negatives;
    TokenSeq anchor_question;
    InstructionClass anchor_class = InstructionClass::conversation;
};

/// One batch element. `target` feeds the cross-entropy term, `group` the
/// contrastive term; a group with no negatives is ignored.
struct TrainItem {
    ImageRef image;
    std::optional<VlitSample> target;
    std::optional<ContrastiveGroup> group;
};

struct TrainOptions {
    ContrastiveConfig contrastive;
    int anchor_max_tokens = 8;
    bool train_projection = true;
};

struct GeneratorGrad {
    Mat d_embeddings;
    Mat d_image_projection;
    Vec d_null;
    Mat d_head;
    ProjectionGrad projection;

    explicit GeneratorGrad(const GeneratorState& like);
};

/// Generic teacher-forced language-model example used for pre-training.
/// With `null_image` set, `features` is ignored and the learned null feature
/// is used (and receives gradient).
struct LmExample {
    std::vector<int> prompt;
    std::vector<int> targets;
    Vec features;
    bool null_image = false;
};

/// Token ids and fixed anchor paths for a batch. Anchor paths are discrete
/// choices, so they are frozen here and treated as constants by the gradient.
struct PreparedBatch {
    struct Contrast {
        std::vector<int> positive;
        std::vector<std::vector<int>> negatives;
        std::vector<int> anchor_question;
        std::vector<int> anchor_prompt;  // <tag> question <sep>
        std::vector<int> anchor_path;
        Vec features;
    };
    std::vector<LmExample> lm;
    std::vector<Contrast> contrast;
};

/// Throws Error on an empty batch, a crm objective without targets, or a clm
/// objective whose groups are all skipped.
PreparedBatch prepare_batch(std::span<const TrainItem> batch, Objective objective,
                            const GeneratorState& state, const Vocabulary& vocab,
                            const TrainOptions& options);

/// Loss of a prepared batch; when `grad` is non-null its contents are
/// overwritten with d(total)/d(params).
///   crm_only: l_r = mean token cross-entropy averaged over targets, l_c = 0
///   clm_only: l_r = 0, l_c = mean contrastive loss over groups
///   combined: both terms
LossReport evaluate_objective(const PreparedBatch& batch, Objective objective,
                              const GeneratorState& state, const TrainOptions& options,
                              GeneratorGrad* grad);

struct StepResult {
    GeneratorState state;
    LossReport loss;  // measured before the update
};

/// One plain gradient-descent step with state.model.learning_rate.
StepResult train_step(std::span<const TrainItem> batch, Objective objective,
                      const GeneratorState& state, const Vocabulary& vocab,
                      const TrainOptions& options);


/// Mean over examples of the mean token cross-entropy; gradient into `grad`
/// when non-null.
double lm_loss(std::span<const LmExample> examples, const ToyModelParams& params,
               GeneratorGrad* grad);

/// In-place descent update: params -= lr * grad. Projection parameters are
/// only touched when `update_projection` is set.
void apply_gradient(GeneratorState& state, const GeneratorGrad& grad, double learning_rate,
                    bool update_projection);

std::vector<double> flatten(const GeneratorState& state);
void unflatten(std::span<const double> flat, GeneratorState& state);
std::vector<double> flatten(const GeneratorGrad& grad);

}  // namespace relcurate
