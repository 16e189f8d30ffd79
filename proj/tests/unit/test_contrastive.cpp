// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <gtest/gtest.h>

#include "relcurate/contrastive.hpp"
#include "relcurate/error.hpp"
#include "relcurate/grad_check.hpp"
#include "relcurate/rng.hpp"

namespace relcurate {
namespace {

Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

Vec random_vec(Rng& rng, int d, double lo = -1.0, double hi = 1.0) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = uniform(rng, lo, hi);
    return v;
}

// Reference value evaluated independently at 30 significant digits.
constexpr double kLn4 = 1.38629436111989061883446424292;

TEST(Embed, ColumnsAreTableColumns) {
    Mat table(8, 5);
    for (int i = 0; i < table.size(); ++i) table.data()[i] = i;
    const std::vector<int> one = {3};
    EXPECT_EQ(embed_sequence(one, table), table.col(3));
    const std::vector<int> five = {0, 1, 2, 3, 4};
    const auto e = embed_sequence(five, table);
    EXPECT_EQ(e.rows(), 8);
    EXPECT_EQ(e.cols(), 5);
    const std::vector<int> repeat = {2, 2};
    const auto r = embed_sequence(repeat, table);
    EXPECT_EQ(r.col(0), r.col(1));
    const std::vector<int> bad = {5};
    EXPECT_THROW(embed_sequence(bad, table), UnknownTokenError);
}

TEST(Project, ZeroInputZeroBiasGivesZero) {
    const auto p = init_projection(4, 1);
    EXPECT_TRUE(project(Mat::Zero(4, 3), p).isZero(0.0));
}

TEST(Project, SingleColumnAndDuplicatedColumns) {
    Rng rng(2);
    auto p = init_projection(5, 3);
    p.bias = random_vec(rng, 5);
    const Vec e = random_vec(rng, 5);
    const Vec single = project(e, p);
    const Vec expected = (p.weight * e + p.bias).cwiseMax(0.0);
    EXPECT_TRUE(single.isApprox(expected, 1e-15));
    Mat twice(5, 2);
    twice << e, e;
    EXPECT_TRUE(project(twice, p).isApprox(single, 1e-15));
}

TEST(Project, InitIsBoundedWithZeroBias) {
    const auto p = init_projection(16, 9);
    EXPECT_TRUE(p.bias.isZero(0.0));
    EXPECT_LE(p.weight.cwiseAbs().maxCoeff(), 0.25);
    EXPECT_EQ(init_projection(16, 9), p);
    EXPECT_FALSE(init_projection(16, 10) == p);
}

TEST(Project, ShapeMismatchThrows) {
    const auto p = init_projection(4, 1);
    EXPECT_THROW(project(Mat::Zero(3, 2), p), ShapeError);
}

TEST(ProjectProperty, NonNegativeAndFixedDimension) {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + static_cast<int>(uniform_index(rng, 8));
        const int l = 1 + static_cast<int>(uniform_index(rng, 10));
        auto p = init_projection(d, trial);
        p.bias = random_vec(rng, d);
        Mat e(d, l);
        for (int i = 0; i < e.size(); ++i) e.data()[i] = uniform(rng, -2, 2);
        const Vec h = project(e, p);
        EXPECT_EQ(h.size(), d);
        EXPECT_GE(h.minCoeff(), 0.0);
    }
}

TEST(Cosine, Examples) {
    EXPECT_DOUBLE_EQ(cosine_sim(vec({1, 2}), vec({1, 2})), 1.0);
    EXPECT_DOUBLE_EQ(cosine_sim(vec({1, 0}), vec({0, 1})), 0.0);
    EXPECT_DOUBLE_EQ(cosine_sim(vec({1, 0}), vec({-1, 0})), -1.0);
}

TEST(Cosine, ZeroNormGivesZeroAndCountsWarning) {
    reset_zero_norm_warnings();
    EXPECT_EQ(cosine_sim(vec({0, 0}), vec({1, 2})), 0.0);
    EXPECT_EQ(zero_norm_warnings(), 1u);
    const auto g = cosine_sim_grad(vec({1, 1}), vec({0, 0}));
    EXPECT_EQ(g.value, 0.0);
    EXPECT_TRUE(g.d_a.isZero(0.0));
    EXPECT_TRUE(g.d_b.isZero(0.0));
    EXPECT_EQ(zero_norm_warnings(), 2u);
}

TEST(CosineProperty, ScaleInvariantAndBounded) {
    Rng rng(6);
    for (int trial = 0; trial < 500; ++trial) {
        const int d = 1 + static_cast<int>(uniform_index(rng, 10));
        const Vec a = random_vec(rng, d), b = random_vec(rng, d);
        const double s = cosine_sim(a, b);
        EXPECT_LE(std::abs(s), 1.0 + 1e-12);
        const double alpha = uniform(rng, 1e-3, 1e3), beta = uniform(rng, 1e-3, 1e3);
        EXPECT_NEAR(cosine_sim(alpha * a, beta * b), s, 1e-12);
    }
}

TEST(ContrastiveLoss, HandEvaluatedExamples) {
    ContrastiveConfig unit_tau;
    unit_tau.temperature = 1.0;
    const std::vector<double> zero = {0.0};
    EXPECT_NEAR(contrastive_loss_from_sims(1.0, zero, unit_tau), -1.0, 1e-9);

    ContrastiveConfig cfg;  // tau = 0.1
    const std::vector<double> four(4, 0.3);
    EXPECT_NEAR(contrastive_loss_from_sims(0.3, four, cfg), kLn4, 1e-9);
    EXPECT_NEAR(contrastive_loss_from_sims(0.0, zero, cfg), 0.0, 1e-9);
}

TEST(ContrastiveLoss, VectorFormMatchesSimilarityForm) {
    Rng rng(8);
    ContrastiveConfig cfg;
    for (int trial = 0; trial < 100; ++trial) {
        const Vec a = random_vec(rng, 6), p = random_vec(rng, 6);
        std::vector<Vec> negs;
        std::vector<double> sims;
        for (int k = 0; k < 3; ++k) {
            negs.push_back(random_vec(rng, 6));
            sims.push_back(cosine_sim(negs.back(), a));
        }
        EXPECT_NEAR(contrastive_loss(a, p, negs, cfg),
                    contrastive_loss_from_sims(cosine_sim(p, a), sims, cfg), 1e-12);
    }
}

TEST(ContrastiveLoss, LnKIdentity) {
    for (double tau : {0.05, 0.1, 1.0}) {
        ContrastiveConfig cfg;
        cfg.temperature = tau;
        for (int k = 2; k <= 32; ++k) {
            const std::vector<double> sims(static_cast<std::size_t>(k), -0.4);
            EXPECT_NEAR(contrastive_loss_from_sims(-0.4, sims, cfg), std::log(k), 1e-9)
                << "K=" << k << " tau=" << tau;
        }
    }
}

TEST(ContrastiveLoss, PositiveInDenominatorVariant) {
    ContrastiveConfig cfg;
    cfg.temperature = 1.0;
    cfg.include_positive_in_denominator = true;
    const std::vector<double> zero = {0.0};
    // -1 + ln(e + 1)
    EXPECT_NEAR(contrastive_loss_from_sims(1.0, zero, cfg), -1.0 + std::log(std::exp(1.0) + 1.0),
                1e-12);
}

TEST(ContrastiveLoss, Errors) {
    ContrastiveConfig cfg;
    EXPECT_THROW(contrastive_loss_from_sims(0.0, {}, cfg), Error);
    cfg.temperature = 0.0;
    const std::vector<double> zero = {0.0};
    EXPECT_THROW(contrastive_loss_from_sims(0.0, zero, cfg), ConfigError);
}

TEST(ContrastiveLoss, StableAtSmallTemperature) {
    ContrastiveConfig cfg;
    cfg.temperature = 1e-4;
    const std::vector<double> sims = {0.99, -0.5};
    const double l = contrastive_loss_from_sims(1.0, sims, cfg);
    EXPECT_TRUE(std::isfinite(l));
    EXPECT_NEAR(l, (0.99 - 1.0) / 1e-4, 1e-6);
}

TEST(ContrastiveProperty, MonotoneInSimilarities) {
    Rng rng(10);
    ContrastiveConfig cfg;
    for (int trial = 0; trial < 300; ++trial) {
        const double pos = uniform(rng, -1, 1);
        std::vector<double> negs;
        for (int k = 0; k < 4; ++k) negs.push_back(uniform(rng, -1, 1));
        const double base = contrastive_loss_from_sims(pos, negs, cfg);
        EXPECT_LT(contrastive_loss_from_sims(pos + 0.01, negs, cfg), base);
        auto up = negs;
        up[uniform_index(rng, up.size())] += 0.01;
        EXPECT_GT(contrastive_loss_from_sims(pos, up, cfg), base);
    }
}

TEST(ContrastiveProperty, InvariantToPositiveRescaling) {
    Rng rng(12);
    ContrastiveConfig cfg;
    const Vec a = random_vec(rng, 5), p = random_vec(rng, 5);
    const std::vector<Vec> negs = {random_vec(rng, 5), random_vec(rng, 5)};
    const double base = contrastive_loss(a, p, negs, cfg);
    EXPECT_NEAR(contrastive_loss(3.0 * a, p, negs, cfg), base, 1e-12);
    EXPECT_NEAR(contrastive_loss(a, 0.2 * p, negs, cfg), base, 1e-12);
    const std::vector<Vec> scaled = {7.0 * negs[0], negs[1]};
    EXPECT_NEAR(contrastive_loss(a, p, scaled, cfg), base, 1e-12);
}

TEST(CrossEntropy, HandEvaluatedExamples) {
    EXPECT_EQ(cross_entropy_loss(std::vector<double>{1.0, 1.0}), 0.0);
    EXPECT_NEAR(cross_entropy_loss(std::vector<double>{0.5}), 0.693147180559945309417232121458,
                1e-9);
    EXPECT_NEAR(cross_entropy_loss(std::vector<double>{0.25, 0.5}),
                1.03972077083991796412584818219, 1e-9);
    EXPECT_THROW(cross_entropy_loss(std::vector<double>{}), Error);
}

TEST(CrossEntropyProperty, NonNegativeZeroOnlyAtOne) {
    Rng rng(13);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> p;
        for (std::size_t i = 0, n = 1 + uniform_index(rng, 8); i < n; ++i) {
            p.push_back(uniform(rng, 1e-9, 1.0));
        }
        EXPECT_GT(cross_entropy_loss(p), 0.0);
    }
}

TEST(Combined, Arithmetic) {
    ContrastiveConfig cfg;
    auto r = combined_loss(0.5, 0.2, cfg);
    EXPECT_DOUBLE_EQ(r.total, 0.7);
    EXPECT_EQ(r.l_r, 0.5);
    EXPECT_EQ(r.l_c, 0.2);
    cfg.lambda_c = 0.0;
    EXPECT_EQ(combined_loss(0.5, 0.2, cfg).total, 0.5);
    cfg.lambda_c = 1.0;
    EXPECT_EQ(combined_loss(0.0, -1.0, cfg).total, -1.0);
}

TEST(LogSumExp, MatchesNaiveAndSurvivesLargeInputs) {
    const std::vector<double> x = {0.1, -2.0, 1.5};
    double naive = 0.0;
    for (double v : x) naive += std::exp(v);
    EXPECT_NEAR(log_sum_exp(x), std::log(naive), 1e-14);
    const std::vector<double> big = {1000.0, 1000.0};
    EXPECT_NEAR(log_sum_exp(big), 1000.0 + std::log(2.0), 1e-12);
}

TEST(GradCheck, QuadraticIsExact) {
    Rng rng(14);
    std::vector<double> x(12);
    for (auto& v : x) v = uniform(rng, -3, 3);
    const auto r = grad_check(
        [](std::span<const double> p) {
            double s = 0.0;
            for (double v : p) s += v * v;
            return s;
        },
        [](std::span<const double> p) {
            std::vector<double> g;
            for (double v : p) g.push_back(2.0 * v);
            return g;
        },
        x, 1e-5);
    EXPECT_LT(r.max_rel_error, 1e-8);
}

TEST(GradCheck, ConstantLossHasZeroGradients) {
    const std::vector<double> x = {1.0, 2.0};
    const auto r = grad_check([](std::span<const double>) { return 3.0; },
                              [](std::span<const double> p) { return std::vector<double>(p.size(), 0.0); },
                              x, 1e-5);
    EXPECT_EQ(r.max_rel_error, 0.0);
}

TEST(GradCheck, DetectsWrongGradientAndBadProbes) {
    const std::vector<double> x = {1.0, 2.0};
    auto sq = [](std::span<const double> p) { return p[0] * p[0] + p[1] * p[1]; };
    const auto r = grad_check(sq, [](std::span<const double> p) {
        return std::vector<double>{2.0 * p[0], p[1]};
    }, x, 1e-5);
    EXPECT_GT(r.max_rel_error, 0.4);
    EXPECT_EQ(r.worst_index, 1u);

    EXPECT_THROW(grad_check(sq, [](std::span<const double>) { return std::vector<double>{0.0}; },
                            x, 1e-5),
                 Error);
    EXPECT_THROW(grad_check(sq, [](std::span<const double>) { return std::vector<double>{0, 0}; },
                            x, 0.0),
                 Error);
    EXPECT_THROW(grad_check([](std::span<const double> p) { return p[0] > 1.0 ? NAN : 0.0; },
                            [](std::span<const double>) { return std::vector<double>{0, 0}; }, x,
                            1e-5),
                 Error);
}

// Contrastive loss through project and cosine similarity, differentiated with
// respect to the projection weights, bias and all input embeddings.
TEST(GradCheck, ContrastiveThroughProjection) {
    Rng rng(15);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 2 + static_cast<int>(uniform_index(rng, 7));
        const int la = 1 + static_cast<int>(uniform_index(rng, 4));
        const int lp = 1 + static_cast<int>(uniform_index(rng, 4));
        const int k = 1 + static_cast<int>(uniform_index(rng, 3));
        ContrastiveConfig cfg;
        cfg.temperature = uniform(rng, 0.1, 1.0);
        cfg.include_positive_in_denominator = trial % 2 == 1;

        std::vector<int> lens = {la, lp};
        for (int i = 0; i < k; ++i) lens.push_back(1 + static_cast<int>(uniform_index(rng, 4)));
        int total_cols = 0;
        for (int l : lens) total_cols += l;
        const auto n_params = static_cast<std::size_t>(d * d + d + d * total_cols);

        auto unpack = [&](std::span<const double> x, ProjectionParams& p, std::vector<Mat>& seqs) {
            p.weight = Eigen::Map<const Mat>(x.data(), d, d);
            p.bias = Eigen::Map<const Vec>(x.data() + d * d, d);
            std::size_t off = static_cast<std::size_t>(d * d + d);
            seqs.clear();
            for (int l : lens) {
                seqs.push_back(Eigen::Map<const Mat>(x.data() + off, d, l));
                off += static_cast<std::size_t>(d * l);
            }
        };
        auto loss = [&](std::span<const double> x) {
            ProjectionParams p;
            std::vector<Mat> seqs;
            unpack(x, p, seqs);
            std::vector<Vec> negs;
            for (std::size_t i = 2; i < seqs.size(); ++i) negs.push_back(project(seqs[i], p));
            return contrastive_loss(project(seqs[0], p), project(seqs[1], p), negs, cfg);
        };
        auto grad = [&](std::span<const double> x) {
            ProjectionParams p;
            std::vector<Mat> seqs;
            unpack(x, p, seqs);
            std::vector<Vec> h;
            for (const auto& s : seqs) h.push_back(project(s, p));
            const std::vector<Vec> negs(h.begin() + 2, h.end());
            const auto cg = contrastive_loss_grad(h[0], h[1], negs, cfg);
            ProjectionGrad pg(d);
            std::vector<Mat> d_seqs;
            d_seqs.push_back(project_backward(seqs[0], p, cg.d_anchor, pg));
            d_seqs.push_back(project_backward(seqs[1], p, cg.d_pos, pg));
            for (std::size_t i = 0; i < negs.size(); ++i) {
                d_seqs.push_back(project_backward(seqs[i + 2], p, cg.d_negs[i], pg));
            }
            std::vector<double> g(pg.d_weight.data(), pg.d_weight.data() + d * d);
            g.insert(g.end(), pg.d_bias.data(), pg.d_bias.data() + d);
            for (const auto& m : d_seqs) g.insert(g.end(), m.data(), m.data() + m.size());
            return g;
        };

        std::vector<double> x(n_params);
        for (auto& v : x) v = uniform(rng, -1, 1);
        const auto r = grad_check(loss, grad, x, 1e-4);
        EXPECT_LT(r.max_rel_error, 1e-4) << "trial " << trial << " worst index " << r.worst_index;
    }
}

TEST(GradCheck, CosineGradient) {
    Rng rng(16);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 1 + static_cast<int>(uniform_index(rng, 6));
        std::vector<double> x(static_cast<std::size_t>(2 * d));
        for (auto& v : x) v = uniform(rng, -1, 1);
        auto split = [d](std::span<const double> p) {
            return std::pair{Vec(Eigen::Map<const Vec>(p.data(), d)),
                             Vec(Eigen::Map<const Vec>(p.data() + d, d))};
        };
        const auto r = grad_check(
            [&](std::span<const double> p) {
                auto [a, b] = split(p);
                return cosine_sim(a, b);
            },
            [&](std::span<const double> p) {
                auto [a, b] = split(p);
                const auto g = cosine_sim_grad(a, b);
                std::vector<double> out(g.d_a.data(), g.d_a.data() + d);
                out.insert(out.end(), g.d_b.data(), g.d_b.data() + d);
                return out;
            },
            x, 1e-6);
        EXPECT_LT(r.max_rel_error, 1e-6);
    }
}

}  // namespace
}  // namespace relcurate
