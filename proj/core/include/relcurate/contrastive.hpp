// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Sequence projection, cosine similarity and the two training losses, each
// paired with its hand-derived backward pass.
//
// A token sequence is embedded as a d x l matrix (one column per token) and
// projected to the latent space by
//
//     h = (1/l) * sum_t ReLU(W e_t + b)
//
// i.e. a per-column affine map followed by ReLU and mean pooling. The
// contrastive loss for anchor y, positive s and negatives S is
//
//     L_c = -sim(h_s, h_y)/tau + log sum_{s' in S} exp(sim(h_s', h_y)/tau)
//
// with the positive excluded from the denominator unless
// include_positive_in_denominator is set.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace relcurate {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct ProjectionParams {
    Mat weight;  // d x d
    Vec bias;    // d

    int dim() const noexcept { return static_cast<int>(bias.size()); }
    bool operator==(const ProjectionParams& o) const {
        return weight == o.weight && bias == o.bias;
    }
};

/// Weight entries uniform in [-1/sqrt(d), 1/sqrt(d)], zero bias.
ProjectionParams init_projection(int d, std::uint64_t seed);

struct ContrastiveConfig {
    double temperature = 0.1;
    double lambda_c = 1.0;
    bool include_positive_in_denominator = false;

    void validate() const;
};

struct LossReport {
    double l_r = 0.0;
    double l_c = 0.0;
    double total = 0.0;
};

/// Column t of the result is column ids[t] of `table`. Throws
/// UnknownTokenError for an id outside the table and ShapeError for l = 0.
Mat embed_sequence(std::span<const int> ids, const Mat& table);

/// Throws ShapeError on inconsistent shapes or an empty sequence.
Vec project(const Mat& e, const ProjectionParams& params);

struct ProjectionGrad {
    Mat d_weight;
    Vec d_bias;

    explicit ProjectionGrad(int d = 0) : d_weight(Mat::Zero(d, d)), d_bias(Vec::Zero(d)) {}
};

/// Back-propagates d_h through project(). Parameter gradients are accumulated
/// into `grad`; the gradient with respect to `e` is returned.
Mat project_backward(const Mat& e, const ProjectionParams& params, const Vec& d_h,
                     ProjectionGrad& grad);

/// Cosine similarity. A zero-norm argument yields 0 and bumps the
/// zero_norm_warnings() counter instead of failing.
double cosine_sim(const Vec& a, const Vec& b);

struct CosineGrad {
    double value = 0.0;
    Vec d_a;
    Vec d_b;
};

CosineGrad cosine_sim_grad(const Vec& a, const Vec& b);

/// Number of zero-norm similarities seen by this thread.
std::uint64_t zero_norm_warnings() noexcept;
void reset_zero_norm_warnings() noexcept;

/// L_c evaluated on precomputed similarities to the anchor.
double contrastive_loss_from_sims(double sim_pos, std::span<const double> sim_negs,
                                  const ContrastiveConfig& cfg);

struct SimilarityGrad {
    double loss = 0.0;
    double d_sim_pos = 0.0;
    std::vector<double> d_sim_negs;
};

SimilarityGrad contrastive_loss_from_sims_grad(double sim_pos, std::span<const double> sim_negs,
                                               const ContrastiveConfig& cfg);

/// Throws Error when `h_negs` is empty.
double contrastive_loss(const Vec& h_anchor, const Vec& h_pos, std::span<const Vec> h_negs,
                        const ContrastiveConfig& cfg);

struct ContrastiveGrad {
    double loss = 0.0;
    Vec d_anchor;
    Vec d_pos;
    std::vector<Vec> d_negs;
};

ContrastiveGrad contrastive_loss_grad(const Vec& h_anchor, const Vec& h_pos,
                                      std::span<const Vec> h_negs, const ContrastiveConfig& cfg);

/// Mean negative log-probability of teacher-forced targets. Throws Error on an
/// empty vector or a probability outside (0, 1].
double cross_entropy_loss(std::span<const double> token_probs);

LossReport combined_loss(double l_r, double l_c, const ContrastiveConfig& cfg);

/// Numerically stable log(sum(exp(x))).
double log_sum_exp(std::span<const double> x);

}  // namespace relcurate
