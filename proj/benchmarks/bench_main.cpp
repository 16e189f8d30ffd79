// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "relcurate/contrastive.hpp"
#include "relcurate/relevance.hpp"
#include "relcurate/rng.hpp"
#include "relcurate/toy_model.hpp"
#include "relcurate/toy_world.hpp"

namespace {

using namespace relcurate;

std::vector<double> probs(Rng& rng, std::size_t n) {
    std::vector<double> p(n);
    for (auto& x : p) x = uniform(rng, 1e-6, 1.0);
    return p;
}

void BM_I2cScore(benchmark::State& state) {
    Rng rng(1);
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto v = probs(rng, n), d = probs(rng, n);
    for (auto _ : state) benchmark::DoNotOptimize(i2c_score(v, d));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_I2cScore)->Arg(8)->Arg(64)->Arg(512);

void BM_RankAndSelect(benchmark::State& state) {
    Rng rng(2);
    std::vector<ScoredSample> in(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < in.size(); ++i) {
        in[i].sample.sample_id = "s" + std::to_string(i);
        in[i].sample.image_id = "img" + std::to_string(i / 5);
        in[i].i2c = uniform(rng, -1, 3);
    }
    for (auto _ : state) benchmark::DoNotOptimize(rank_and_select(in, {0.1, SelectionScope::global}));
}
BENCHMARK(BM_RankAndSelect)->Arg(1000)->Arg(10000);

void BM_ContrastiveLossGrad(benchmark::State& state) {
    Rng rng(3);
    const int d = static_cast<int>(state.range(0));
    auto rv = [&] {
        Vec v(d);
        for (auto& x : v) x = uniform(rng, -1, 1);
        return v;
    };
    const Vec a = rv(), p = rv();
    std::vector<Vec> negs;
    for (int k = 0; k < 4; ++k) negs.push_back(rv());
    const ContrastiveConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(contrastive_loss_grad(a, p, negs, cfg));
}
BENCHMARK(BM_ContrastiveLossGrad)->Arg(16)->Arg(128);

struct Fixture {
    ToyWorld world{WorldConfig{}, ModelDims{}};
    GeneratorState state = init_generator(ModelDims{}, 4);
    std::vector<WorldImage> images = world.sample_images(20, "img", 5);
};

void BM_TeacherForcing(benchmark::State& state) {
    Fixture f;
    VlitSample s;
    s.sample_id = "s";
    s.image_id = f.images[0].image.image_id;
    s.question = {"q00", "q01", "q02"};
    s.answer = {"c00", "w00", "w01", "c01", "w02", "w03"};
    for (auto _ : state) {
        auto copy = s;
        attach_probabilities(copy, f.images[0].image.features, f.state.model, f.world.vocab());
        benchmark::DoNotOptimize(copy.p_visual.data());
    }
}
BENCHMARK(BM_TeacherForcing);

void BM_TrainStepCombined(benchmark::State& state) {
    Fixture f;
    std::vector<TrainItem> items;
    for (const auto& img : f.images) {
        VlitSample pos;
        pos.sample_id = img.image.image_id + "-p";
        pos.image_id = img.image.image_id;
        pos.question = {"q00", "q01"};
        pos.answer = {"c00", "w00", "w01"};
        auto neg = pos;
        neg.sample_id = img.image.image_id + "-n";
        neg.answer = {"w02", "w03"};
        ContrastiveGroup g{pos, {neg}, {"q00", "q02"}, InstructionClass::conversation};
        items.push_back({img.image, pos, g});
    }
    const TrainOptions opts;
    for (auto _ : state) {
        benchmark::DoNotOptimize(train_step(items, Objective::combined, f.state, f.world.vocab(), opts));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(items.size()));
}
BENCHMARK(BM_TrainStepCombined);

}  // namespace

BENCHMARK_MAIN();
