// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "relcurate/error.hpp"
#include "relcurate/relevance.hpp"
#include "test_util.hpp"

namespace relcurate {
namespace {

using testing::make_sample;

ScoredSample scored(std::string id, std::string image, double i2c) {
    ScoredSample s;
    s.sample = make_sample(std::move(id), std::move(image), {"a", "b", "c"});
    s.s_av = s.sample.p_visual;
    s.s_a = s.sample.p_direct;
    s.i2c = i2c;
    return s;
}

std::vector<std::string> ids(const std::vector<ScoredSample>& v) {
    std::vector<std::string> out;
    for (const auto& s : v) out.push_back(s.sample.sample_id);
    return out;
}

TEST(AnswerScores, PicksTheConditionedVector) {
    const auto s = make_sample("a", "i", {"x", "y"}, {0.9, 0.8}, {0.3, 0.2});
    EXPECT_EQ(answer_scores(s, Condition::with_image), (std::vector<double>{0.9, 0.8}));
    EXPECT_EQ(answer_scores(s, Condition::without_image), (std::vector<double>{0.3, 0.2}));
}

TEST(I2c, IdenticalInputsScoreZero) {
    const std::vector<double> p = {0.5, 0.5};
    EXPECT_EQ(i2c_score(p, p), 0.0);
}

// Reference values evaluated independently at 30 significant digits.
TEST(I2c, SingleTokenClosedForm) {
    const std::vector<double> v = {0.5}, d = {0.25};
    EXPECT_NEAR(i2c_score(v, d), 0.346573590279972654708616060729, 1e-9);
}

TEST(I2c, TwoTokenClosedForm) {
    const std::vector<double> v = {0.8, 0.9}, d = {0.4, 0.3};
    EXPECT_NEAR(i2c_score(v, d), 1.5432688042492549697895064104, 1e-9);
}

TEST(I2c, CanBeNegative) {
    const std::vector<double> v = {0.2}, d = {0.6};
    EXPECT_LT(i2c_score(v, d), 0.0);
}

TEST(I2c, RejectsBadInput) {
    const std::vector<double> a = {0.5, 0.5}, b = {0.5};
    EXPECT_THROW(i2c_score(a, b), Error);
    EXPECT_THROW(i2c_score(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST(I2c, MeanPerTokenIsDiagnosticOnly) {
    const std::vector<double> v = {0.8, 0.9}, d = {0.4, 0.3};
    EXPECT_DOUBLE_EQ(i2c_mean_per_token(v, d), i2c_score(v, d) / 2.0);
}

TEST(I2cProperty, SelfScoreZeroAdditivityAndMonotone) {
    Rng rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = 1 + uniform_index(rng, 12);
        const auto m = 1 + uniform_index(rng, 12);
        std::vector<double> v, d, v2, d2;
        for (std::size_t i = 0; i < n; ++i) {
            v.push_back(uniform(rng, 1e-6, 1.0));
            d.push_back(uniform(rng, 1e-6, 1.0));
        }
        for (std::size_t i = 0; i < m; ++i) {
            v2.push_back(uniform(rng, 1e-6, 1.0));
            d2.push_back(uniform(rng, 1e-6, 1.0));
        }
        EXPECT_EQ(i2c_score(v, v), 0.0);

        auto vc = v, dc = d;
        vc.insert(vc.end(), v2.begin(), v2.end());
        dc.insert(dc.end(), d2.begin(), d2.end());
        EXPECT_NEAR(i2c_score(vc, dc), i2c_score(v, d) + i2c_score(v2, d2), 1e-12);

        // Raising p_v at a token where p_v > p_d raises the score.
        const auto t = uniform_index(rng, n);
        auto hi_v = v, lo_d = d;
        lo_d[t] = std::min(lo_d[t], hi_v[t]) * 0.5;
        const double base = i2c_score(hi_v, lo_d);
        hi_v[t] = hi_v[t] + 0.5 * (1.0 - hi_v[t]);
        if (hi_v[t] > v[t]) {
            EXPECT_GT(i2c_score(hi_v, lo_d), base);
        }
    }
}

TEST(ScoreSample, CopiesScoresAndComputesI2c) {
    const auto s = make_sample("a", "i", {"x"}, {0.5}, {0.25});
    const auto r = score_sample(s);
    EXPECT_EQ(r.s_av, s.p_visual);
    EXPECT_EQ(r.s_a, s.p_direct);
    EXPECT_DOUBLE_EQ(r.i2c, 0.5 * std::log(2.0));
    EXPECT_EQ(score_samples(std::vector<VlitSample>{s, s}).size(), 2u);
}

TEST(Selection, CountIsCeilingWithRoundingGuard) {
    EXPECT_EQ(selection_count(20, 0.10), 2u);
    EXPECT_EQ(selection_count(100, 0.07), 7u);
    EXPECT_EQ(selection_count(3, 0.34), 2u);
    EXPECT_EQ(selection_count(10, 1.0), 10u);
    EXPECT_EQ(selection_count(1, 0.01), 1u);
    EXPECT_EQ(selection_count(1000, 0.10), 100u);
}

TEST(Selection, TwentySamplesTenPercentTakesTopTwo) {
    std::vector<ScoredSample> in;
    for (int i = 0; i < 20; ++i) in.push_back(scored("s" + std::to_string(i), "img", i * 0.1));
    const auto out = rank_and_select(in, {0.10, SelectionScope::global});
    EXPECT_EQ(ids(out), (std::vector<std::string>{"s19", "s18"}));
}

TEST(Selection, FullFractionSortsDescending) {
    const std::vector<ScoredSample> in = {scored("a", "i", 0.5), scored("b", "i", 2.0),
                                          scored("c", "i", -1.0)};
    const auto out = rank_and_select(in, {1.0, SelectionScope::global});
    EXPECT_EQ(ids(out), (std::vector<std::string>{"b", "a", "c"}));
}

TEST(Selection, TiesBrokenBySampleId) {
    const std::vector<ScoredSample> in = {scored("s3", "i", 1.0), scored("s1", "i", 1.0),
                                          scored("s2", "i", 1.0)};
    const auto out = rank_and_select(in, {0.34, SelectionScope::global});
    EXPECT_EQ(ids(out), (std::vector<std::string>{"s1", "s2"}));
}

TEST(Selection, Errors) {
    EXPECT_THROW(rank_and_select({}, SelectionConfig{}), Error);
    const std::vector<ScoredSample> in = {scored("a", "i", 0.0)};
    EXPECT_THROW(rank_and_select(in, {0.0, SelectionScope::global}), ConfigError);
    EXPECT_THROW(rank_and_select(in, {1.5, SelectionScope::global}), ConfigError);
}

TEST(Selection, PerImageScopeSelectsWithinEachImage) {
    std::vector<ScoredSample> in;
    for (int i = 0; i < 10; ++i) in.push_back(scored("a" + std::to_string(i), "A", 10.0 + i));
    for (int i = 0; i < 10; ++i) in.push_back(scored("b" + std::to_string(i), "B", -5.0 + i));
    const auto out = rank_and_select(in, {0.2, SelectionScope::per_image});
    ASSERT_EQ(out.size(), 4u);
    const auto out_ids = ids(out);
    const std::set<std::string> got(out_ids.begin(), out_ids.end());
    EXPECT_EQ(got, (std::set<std::string>{"a9", "a8", "b9", "b8"}));
    EXPECT_TRUE(std::is_sorted(out.begin(), out.end(), ranks_before));
}

TEST(SelectionProperty, RandomSetsObeyTheContract) {
    Rng rng(99);
    for (int trial = 0; trial < 500; ++trial) {
        const auto n = 1 + uniform_index(rng, 60);
        std::vector<ScoredSample> in;
        for (std::size_t i = 0; i < n; ++i) {
            // Coarse scores so ties are common.
            const double v = std::round(uniform(rng, -3.0, 3.0) * 2.0) / 2.0;
            in.push_back(scored("id" + std::to_string(uniform_index(rng, 1000000)) + "_" +
                                    std::to_string(i),
                                "img", v));
        }
        // Each fraction as an exact ratio so the expected count is integer arithmetic.
        for (auto [num, den] : {std::pair<std::size_t, std::size_t>{1, 20}, {1, 10}, {1, 4}, {1, 1}}) {
            const double f = static_cast<double>(num) / static_cast<double>(den);
            const auto out = rank_and_select(in, {f, SelectionScope::global});
            ASSERT_EQ(out.size(), (n * num + den - 1) / den);

            std::set<std::string> chosen;
            double min_in = INFINITY;
            for (const auto& s : out) {
                chosen.insert(s.sample.sample_id);
                min_in = std::min(min_in, s.i2c);
            }
            for (const auto& s : in) {
                if (chosen.count(s.sample.sample_id)) continue;
                EXPECT_GE(min_in, s.i2c);
                if (s.i2c == min_in) {
                    // Tied with the cut-off: every chosen tie must sort first.
                    for (const auto& c : out) {
                        if (c.i2c == min_in) {
                            EXPECT_LT(c.sample.sample_id, s.sample.sample_id);
                        }
                    }
                }
            }
            EXPECT_TRUE(std::is_sorted(out.begin(), out.end(), ranks_before));
            EXPECT_EQ(ids(rank_and_select(in, {f, SelectionScope::global})), ids(out));
        }
    }
}

TEST(Partition, ArgmaxPositiveRestNegative) {
    const std::vector<ScoredSample> in = {scored("a", "I", 0.2), scored("b", "I", 0.9),
                                          scored("c", "I", 0.4)};
    const auto p = partition_pseudo_labels(in);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_EQ(p[0].image_id, "I");
    EXPECT_EQ(p[0].positive, "b");
    EXPECT_EQ(p[0].negatives, (std::vector<std::string>{"a", "c"}));
    EXPECT_FALSE(p[0].skipped_for_contrastive);
}

TEST(Partition, SingleSampleImageIsSkipped) {
    const auto p = partition_pseudo_labels(std::vector<ScoredSample>{scored("only", "I", 1.0)});
    ASSERT_EQ(p.size(), 1u);
    EXPECT_EQ(p[0].positive, "only");
    EXPECT_TRUE(p[0].negatives.empty());
    EXPECT_TRUE(p[0].skipped_for_contrastive);
}

TEST(Partition, TieGoesToSmallerId) {
    const std::vector<ScoredSample> in = {scored("s2", "I", 0.5), scored("s1", "I", 0.5)};
    EXPECT_EQ(partition_pseudo_labels(in).at(0).positive, "s1");
}

TEST(PartitionProperty, PositiveDominatesAndCoversImage) {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ScoredSample> in;
        const auto n = 1 + uniform_index(rng, 40);
        for (std::size_t i = 0; i < n; ++i) {
            in.push_back(scored("s" + std::to_string(i), "img" + std::to_string(uniform_index(rng, 6)),
                                std::round(uniform(rng, -2, 2) * 4) / 4));
        }
        std::map<std::string, std::map<std::string, double>> by_image;
        for (const auto& s : in) by_image[s.sample.image_id][s.sample.sample_id] = s.i2c;

        const auto parts = partition_pseudo_labels(in);
        ASSERT_EQ(parts.size(), by_image.size());
        for (const auto& p : parts) {
            const auto& group = by_image.at(p.image_id);
            std::set<std::string> covered(p.negatives.begin(), p.negatives.end());
            EXPECT_FALSE(covered.count(p.positive));
            covered.insert(p.positive);
            EXPECT_EQ(covered.size(), group.size());
            for (const auto& n : p.negatives) EXPECT_GE(group.at(p.positive), group.at(n));
            EXPECT_TRUE(std::is_sorted(p.negatives.begin(), p.negatives.end()));
            EXPECT_EQ(p.skipped_for_contrastive, group.size() == 1);
        }
    }
}

}  // namespace
}  // namespace relcurate
