// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcurate/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "relcurate/error.hpp"
#include "relcurate/rng.hpp"

namespace relcurate {

namespace {
thread_local std::uint64_t g_zero_norm_warnings = 0;
}

ProjectionParams init_projection(int d, std::uint64_t seed) {
    if (d < 1) throw ShapeError("projection dimension must be >= 1");
    Rng rng(derive_seed(seed, "projection"));
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    ProjectionParams p;
    p.weight.resize(d, d);
    for (int c = 0; c < d; ++c) {
        for (int r = 0; r < d; ++r) p.weight(r, c) = uniform(rng, -bound, bound);
    }
    p.bias = Vec::Zero(d);
    return p;
}

void ContrastiveConfig::validate() const {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw ConfigError("contrastive temperature must be > 0");
    }
    if (!(lambda_c >= 0.0) || !std::isfinite(lambda_c)) {
        throw ConfigError("lambda_c must be a non-negative finite number");
    }
}

Mat embed_sequence(std::span<const int> ids, const Mat& table) {
    if (ids.empty()) throw ShapeError("embed_sequence: empty sequence");
    Mat e(table.rows(), static_cast<Eigen::Index>(ids.size()));
    for (std::size_t t = 0; t < ids.size(); ++t) {
        if (ids[t] < 0 || ids[t] >= table.cols()) {
            throw UnknownTokenError("#" + std::to_string(ids[t]));
        }
        e.col(static_cast<Eigen::Index>(t)) = table.col(ids[t]);
    }
    return e;
}

Vec project(const Mat& e, const ProjectionParams& params) {
    if (e.cols() == 0) throw ShapeError("project: empty sequence");
    if (params.weight.cols() != e.rows() || params.weight.rows() != params.bias.size()) {
        throw ShapeError("project: weight is " + std::to_string(params.weight.rows()) + "x" +
                         std::to_string(params.weight.cols()) + " but embeddings have " +
                         std::to_string(e.rows()) + " rows");
    }
    Mat u = params.weight * e;
    u.colwise() += params.bias;
    return u.cwiseMax(0.0).rowwise().mean();
}

Mat project_backward(const Mat& e, const ProjectionParams& params, const Vec& d_h,
                     ProjectionGrad& grad) {
    Mat u = params.weight * e;
    u.colwise() += params.bias;
    const double inv_l = 1.0 / static_cast<double>(e.cols());
    // d u_t = 1[u_t > 0] * d_h / l
    Mat du(u.rows(), u.cols());
    for (Eigen::Index t = 0; t < u.cols(); ++t) {
        for (Eigen::Index r = 0; r < u.rows(); ++r) {
            du(r, t) = u(r, t) > 0.0 ? d_h(r) * inv_l : 0.0;
        }
    }
    grad.d_weight.noalias() += du * e.transpose();
    grad.d_bias += du.rowwise().sum();
    return params.weight.transpose() * du;
}

double cosine_sim(const Vec& a, const Vec& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
        ++g_zero_norm_warnings;
        return 0.0;
    }
    return a.dot(b) / (na * nb);
}

CosineGrad cosine_sim_grad(const Vec& a, const Vec& b) {
    CosineGrad g;
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
        ++g_zero_norm_warnings;
        g.d_a = Vec::Zero(a.size());
        g.d_b = Vec::Zero(b.size());
        return g;
    }
    g.value = a.dot(b) / (na * nb);
    // d/da (a.b / |a||b|) = b/(|a||b|) - cos * a/|a|^2
    g.d_a = b / (na * nb) - g.value * a / (na * na);
    g.d_b = a / (na * nb) - g.value * b / (nb * nb);
    return g;
}

std::uint64_t zero_norm_warnings() noexcept { return g_zero_norm_warnings; }
void reset_zero_norm_warnings() noexcept { g_zero_norm_warnings = 0; }

double log_sum_exp(std::span<const double> x) {
    if (x.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(x.begin(), x.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : x) s += std::exp(v - m);
    return m + std::log(s);
}

SimilarityGrad contrastive_loss_from_sims_grad(double sim_pos, std::span<const double> sim_negs,
                                               const ContrastiveConfig& cfg) {
    cfg.validate();
    if (sim_negs.empty()) throw Error("contrastive loss needs at least one negative");
    const double inv_tau = 1.0 / cfg.temperature;

    std::vector<double> logits;
    logits.reserve(sim_negs.size() + 1);
    for (double s : sim_negs) logits.push_back(s * inv_tau);
    if (cfg.include_positive_in_denominator) logits.push_back(sim_pos * inv_tau);
    const double lse = log_sum_exp(logits);

    SimilarityGrad g;
    g.loss = -sim_pos * inv_tau + lse;
    g.d_sim_negs.resize(sim_negs.size());
    for (std::size_t k = 0; k < sim_negs.size(); ++k) {
        g.d_sim_negs[k] = std::exp(logits[k] - lse) * inv_tau;
    }
    g.d_sim_pos = -inv_tau;
    if (cfg.include_positive_in_denominator) {
        g.d_sim_pos += std::exp(logits.back() - lse) * inv_tau;
    }
    return g;
}

double contrastive_loss_from_sims(double sim_pos, std::span<const double> sim_negs,
                                  const ContrastiveConfig& cfg) {
    return contrastive_loss_from_sims_grad(sim_pos, sim_negs, cfg).loss;
}

double contrastive_loss(const Vec& h_anchor, const Vec& h_pos, std::span<const Vec> h_negs,
                        const ContrastiveConfig& cfg) {
    if (h_negs.empty()) throw Error("contrastive loss needs at least one negative");
    std::vector<double> sims;
    sims.reserve(h_negs.size());
    for (const auto& n : h_negs) sims.push_back(cosine_sim(n, h_anchor));
    return contrastive_loss_from_sims(cosine_sim(h_pos, h_anchor), sims, cfg);
}

ContrastiveGrad contrastive_loss_grad(const Vec& h_anchor, const Vec& h_pos,
                                      std::span<const Vec> h_negs, const ContrastiveConfig& cfg) {
    if (h_negs.empty()) throw Error("contrastive loss needs at least one negative");
    const auto pos = cosine_sim_grad(h_pos, h_anchor);
    std::vector<CosineGrad> negs;
    std::vector<double> sims;
    negs.reserve(h_negs.size());
    for (const auto& n : h_negs) {
        negs.push_back(cosine_sim_grad(n, h_anchor));
        sims.push_back(negs.back().value);
    }
    const auto sg = contrastive_loss_from_sims_grad(pos.value, sims, cfg);

    ContrastiveGrad g;
    g.loss = sg.loss;
    g.d_pos = sg.d_sim_pos * pos.d_a;
    g.d_anchor = sg.d_sim_pos * pos.d_b;
    g.d_negs.reserve(negs.size());
    for (std::size_t k = 0; k < negs.size(); ++k) {
        g.d_negs.push_back(sg.d_sim_negs[k] * negs[k].d_a);
        g.d_anchor += sg.d_sim_negs[k] * negs[k].d_b;
    }
    return g;
}

double cross_entropy_loss(std::span<const double> token_probs) {
    if (token_probs.empty()) throw Error("cross_entropy_loss: empty probability vector");
    double sum = 0.0;
    for (double p : token_probs) {
        if (!(p > 0.0 && p <= 1.0)) throw Error("cross_entropy_loss: probability outside (0, 1]");
        sum -= std::log(p);
    }
    return sum / static_cast<double>(token_probs.size());
}

LossReport combined_loss(double l_r, double l_c, const ContrastiveConfig& cfg) {
    return {l_r, l_c, l_r + cfg.lambda_c * l_c};
}

}  // namespace relcurate
