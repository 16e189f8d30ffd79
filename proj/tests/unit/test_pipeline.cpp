// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "relcurate/checkpoint.hpp"
#include "relcurate/error.hpp"
#include "relcurate/filter.hpp"
#include "relcurate/hashing.hpp"
#include "relcurate/io.hpp"
#include "relcurate/pipeline.hpp"
#include "test_util.hpp"

namespace relcurate {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;
using testing::tiny_config;

fs::path art(const fs::path& w, Stage s, const char* name) { return w / artifact_path(s, name); }

std::map<std::string, std::string> status_by_stage(const fs::path& w) {
    std::map<std::string, std::string> out;
    for (const auto& e : read_manifest(w)) out[e.stage] = e.status;
    return out;
}

// Every regular file under `root` except the manifest, mapped to its bytes.
std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file() || e.path().filename() == kManifestFile) continue;
        out[fs::relative(e.path(), root).string()] = read_file(e.path());
    }
    return out;
}

TEST(Pipeline, StageOrderFollowsPhaseOrder) {
    auto cfg = tiny_config();
    EXPECT_EQ(stage_order(cfg),
              (std::vector<Stage>{Stage::generate_initial, Stage::filter, Stage::score,
                                  Stage::partition, Stage::train_crm, Stage::train_clm,
                                  Stage::generate_final, Stage::report}));
    cfg.training.phase_order = {Phase::clm, Phase::crm};
    const auto rev = stage_order(cfg);
    EXPECT_EQ(rev[4], Stage::train_clm);
    EXPECT_EQ(rev[5], Stage::train_crm);
}

TEST(Pipeline, EndToEndCountsAreConsistent) {
    TempDir dir("pipe");
    const auto cfg = tiny_config();
    const auto report = run_pipeline(cfg, dir.path());
    const auto& w = dir.path();

    const auto samples = load_samples(art(w, Stage::generate_initial, artifact::kSamples));
    const auto kept = load_samples(art(w, Stage::filter, artifact::kKept));
    const auto dropped = load_dropped(art(w, Stage::filter, artifact::kDropped));
    const auto scored = load_scored(art(w, Stage::score, artifact::kScored));
    const auto parts = load_partitions(art(w, Stage::partition, artifact::kPartitions));
    const auto selected = load_scored(art(w, Stage::train_crm, artifact::kSelected));
    const auto final_scored = load_scored(art(w, Stage::generate_final, artifact::kScored));

    EXPECT_EQ(samples.size(), 36u);
    EXPECT_EQ(kept.size() + dropped.size(), samples.size());
    EXPECT_EQ(scored.size(), kept.size());
    EXPECT_EQ(selected.size(), selection_count(scored.size(), 0.25));
    EXPECT_EQ(final_scored.size(), 6u);
    EXPECT_EQ(report.pre.count, scored.size());
    EXPECT_EQ(report.post.count, 6u);

    std::set<std::string> images;
    for (const auto& s : kept) images.insert(s.image_id);
    EXPECT_EQ(parts.size(), images.size());

    std::size_t partitioned = 0;
    for (const auto& p : parts) partitioned += 1 + p.negatives.size();
    EXPECT_EQ(partitioned, scored.size());

    for (const auto& s : scored) {
        EXPECT_NEAR(s.i2c, i2c_score(s.s_av, s.s_a), 1e-12);
    }

    const auto status = status_by_stage(w);
    EXPECT_EQ(status.size(), 8u);
    for (const auto& [stage, st] : status) EXPECT_EQ(st, "ok") << stage;

    EXPECT_TRUE(fs::exists(art(w, Stage::train_crm, artifact::kLoss)));
    EXPECT_EQ(read_loss_csv(art(w, Stage::train_crm, artifact::kLoss)).size(), 5u);
    EXPECT_EQ(read_loss_csv(art(w, Stage::train_clm, artifact::kLoss)).size(), 5u);
}

TEST(Pipeline, ManifestRecordsDigestsAndHashes) {
    TempDir dir("manifest");
    const auto cfg = tiny_config();
    run_pipeline(cfg, dir.path());
    const auto entries = read_manifest(dir.path());
    ASSERT_EQ(entries.size(), 8u);
    for (const auto& e : entries) {
        const auto stage = parse_stage(e.stage);
        EXPECT_EQ(e.config_hash, stage_config_hash(cfg, stage));
        EXPECT_FALSE(e.outputs.empty()) << e.stage;
        for (const auto& [rel, digest] : e.outputs) {
            EXPECT_EQ(sha256_file(dir.path() / rel), digest) << rel;
        }
        EXPECT_GE(e.duration_ms, 0);
    }
    const auto filter = latest_entry(entries, "filter");
    ASSERT_TRUE(filter);
    EXPECT_EQ(filter->inputs.count(artifact_path(Stage::generate_initial, artifact::kSamples)), 1u);
}

TEST(Pipeline, ReportContents) {
    TempDir dir("report");
    run_pipeline(tiny_config(), dir.path());
    const auto rep = dir.path() / stage_dir(Stage::report);
    const auto summary = read_file(rep / artifact::kSummary);
    for (auto s : kStages) {
        EXPECT_NE(summary.find(std::string(to_string(s))), std::string::npos) << to_string(s);
    }
    const auto metrics = nlohmann::json::parse(read_file(rep / artifact::kMetrics));
    EXPECT_TRUE(metrics.contains("i2c_pre"));
    EXPECT_TRUE(metrics.contains("i2c_post"));

    const auto curves = read_file(rep / artifact::kLossCurves);
    EXPECT_EQ(curves.rfind("phase,step,l_r,l_c,total\n", 0), 0u);
    EXPECT_NE(curves.find("\ncrm,"), std::string::npos);
    EXPECT_NE(curves.find("\nclm,"), std::string::npos);

    const auto pre = load_scored(art(dir.path(), Stage::score, artifact::kScored));
    const auto post = load_scored(art(dir.path(), Stage::generate_final, artifact::kScored));
    std::vector<double> a, b;
    for (const auto& s : pre) a.push_back(s.i2c);
    for (const auto& s : post) b.push_back(s.i2c);
    const auto bins = i2c_histogram(a, b);
    ASSERT_EQ(bins.size(), 20u);
    std::size_t pre_total = 0, post_total = 0;
    for (const auto& bin : bins) {
        pre_total += bin.pre;
        post_total += bin.post;
    }
    EXPECT_EQ(pre_total, a.size());
    EXPECT_EQ(post_total, b.size());
    const auto hist = read_file(rep / artifact::kHistogram);
    EXPECT_EQ(hist.rfind("bin_lo,bin_hi,pre_count,post_count\n", 0), 0u);
}

TEST(Pipeline, DisabledPhasesAreRecordedAsSkips) {
    TempDir dir("skip");
    auto cfg = tiny_config();
    cfg.enable_crm = false;
    run_pipeline(cfg, dir.path());
    const auto status = status_by_stage(dir.path());
    EXPECT_EQ(status.at("train_crm"), "skipped(ablation)");
    EXPECT_EQ(status.at("train_clm"), "ok");
    // The skipped stage passes its input checkpoint through unchanged.
    EXPECT_EQ(read_file(art(dir.path(), Stage::train_crm, artifact::kModel)),
              read_file(art(dir.path(), Stage::generate_initial, artifact::kModel)));
    EXPECT_FALSE(fs::exists(art(dir.path(), Stage::train_crm, artifact::kSelected)));
}

TEST(Pipeline, BaselineGeneratesWithTheInitialModel) {
    TempDir dir("baseline");
    auto cfg = tiny_config();
    cfg.enable_crm = false;
    cfg.enable_clm = false;
    run_pipeline(cfg, dir.path());
    EXPECT_EQ(read_file(art(dir.path(), Stage::train_clm, artifact::kModel)),
              read_file(art(dir.path(), Stage::generate_initial, artifact::kModel)));
}

TEST(Pipeline, JointModeTrainsOnceWithBothTerms) {
    TempDir dir("joint");
    auto cfg = tiny_config();
    cfg.training.joint = true;
    run_pipeline(cfg, dir.path());
    const auto status = status_by_stage(dir.path());
    EXPECT_EQ(status.at("train_crm"), "ok");
    EXPECT_EQ(status.at("train_clm"), "skipped(joint)");
    const auto curve = read_loss_csv(art(dir.path(), Stage::train_crm, artifact::kLoss));
    ASSERT_FALSE(curve.empty());
    EXPECT_GT(curve.front().loss.l_r, 0.0);
    EXPECT_NE(curve.front().loss.l_c, 0.0);
    const auto curves = read_file(dir.path() / stage_dir(Stage::report) / artifact::kLossCurves);
    EXPECT_NE(curves.find("\njoint,"), std::string::npos);
}

TEST(Pipeline, ReversedPhaseOrderChainsCheckpoints) {
    TempDir dir("reverse");
    auto cfg = tiny_config();
    cfg.training.phase_order = {Phase::clm, Phase::crm};
    run_pipeline(cfg, dir.path());
    const auto entries = read_manifest(dir.path());
    const auto crm = latest_entry(entries, "train_crm");
    ASSERT_TRUE(crm);
    EXPECT_EQ(crm->inputs.count(artifact_path(Stage::train_clm, artifact::kModel)), 1u);
    const auto fin = latest_entry(entries, "generate_final");
    EXPECT_EQ(fin->inputs.count(artifact_path(Stage::train_crm, artifact::kModel)), 1u);
}

TEST(Pipeline, StagesRunIndividually) {
    TempDir dir("single");
    const auto cfg = tiny_config();
    for (auto s : stage_order(cfg)) {
        const auto e = run_stage(s, cfg, dir.path());
        EXPECT_EQ(e.stage, to_string(s));
    }
    // Rerunning a stage appends a record and reproduces identical outputs.
    const auto before = read_file(art(dir.path(), Stage::score, artifact::kScored));
    run_stage(Stage::score, cfg, dir.path());
    EXPECT_EQ(read_file(art(dir.path(), Stage::score, artifact::kScored)), before);
    EXPECT_EQ(read_manifest(dir.path()).size(), 9u);
}

TEST(Pipeline, MissingInputFailsWithStageName) {
    TempDir dir("missing");
    try {
        run_stage(Stage::score, tiny_config(), dir.path());
        FAIL() << "expected StageError";
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "score");
        EXPECT_NE(std::string(e.what()).find("missing input"), std::string::npos);
    }
}

TEST(Pipeline, ModifiedInputIsStale) {
    TempDir dir("stale");
    const auto cfg = tiny_config();
    run_stage(Stage::generate_initial, cfg, dir.path());
    run_stage(Stage::filter, cfg, dir.path());
    const auto kept = art(dir.path(), Stage::filter, artifact::kKept);
    write_file_atomic(kept, read_file(kept) + "\n");
    try {
        run_stage(Stage::score, cfg, dir.path());
        FAIL() << "expected StageError";
    } catch (const StageError& e) {
        EXPECT_NE(std::string(e.what()).find("stale input"), std::string::npos);
    }
}

TEST(Pipeline, ChangedConfigIsStale) {
    TempDir dir("stale-config");
    auto cfg = tiny_config();
    run_stage(Stage::generate_initial, cfg, dir.path());
    cfg.seed += 1;
    EXPECT_THROW(run_stage(Stage::filter, cfg, dir.path()), StageError);
    // A knob the producer does not depend on leaves the input valid.
    auto other = tiny_config();
    other.selection.fraction = 0.5;
    EXPECT_NO_THROW(run_stage(Stage::filter, other, dir.path()));
}

TEST(Pipeline, InvalidConfigIsAConfigError) {
    TempDir dir("invalid");
    auto cfg = tiny_config();
    cfg.selection.fraction = 0.0;
    EXPECT_THROW(run_pipeline(cfg, dir.path()), StageError);
    try {
        run_stage(Stage::generate_initial, cfg, dir.path());
    } catch (const StageError& e) {
        EXPECT_NE(std::string(e.what()).find("fraction"), std::string::npos);
    }
}

TEST(Pipeline, ReportWithoutArtifactsFails) {
    TempDir dir("empty-report");
    EXPECT_THROW(run_stage(Stage::report, tiny_config(), dir.path()), StageError);
}

TEST(Pipeline, RunsAreByteIdentical) {
    TempDir a("det-a"), b("det-b");
    run_pipeline(tiny_config(11), a.path());
    run_pipeline(tiny_config(11), b.path());
    EXPECT_EQ(snapshot(a.path()), snapshot(b.path()));

    auto strip = [](std::vector<ManifestEntry> v) {
        for (auto& e : v) e.duration_ms = 0;
        return v;
    };
    EXPECT_EQ(strip(read_manifest(a.path())), strip(read_manifest(b.path())));
}

TEST(Pipeline, DifferentSeedsDiffer) {
    TempDir a("seed-a"), b("seed-b");
    run_stage(Stage::generate_initial, tiny_config(1), a.path());
    run_stage(Stage::generate_initial, tiny_config(2), b.path());
    EXPECT_NE(read_file(art(a.path(), Stage::generate_initial, artifact::kSamples)),
              read_file(art(b.path(), Stage::generate_initial, artifact::kSamples)));
}

TEST(Sweep, MatchesThePlainPipelineAtTheSameFraction) {
    TempDir sweep_dir("sweep"), pipe_dir("sweep-ref");
    auto cfg = tiny_config();
    cfg.selection.fraction = 0.10;
    const auto plain = run_pipeline(cfg, pipe_dir.path());
    const std::vector<double> fractions = {0.10, 0.5};
    const auto rows = sweep_selection_fraction(cfg, sweep_dir.path(), fractions);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].post_mean_i2c, plain.post.mean);
    EXPECT_EQ(rows[0].post_median_i2c, plain.post.median);
    const auto scored = load_scored(art(pipe_dir.path(), Stage::score, artifact::kScored));
    EXPECT_EQ(rows[0].selected, selection_count(scored.size(), 0.10));
    EXPECT_EQ(rows[1].selected, selection_count(scored.size(), 0.5));

    const auto csv = read_sweep_csv(sweep_dir.path() / kSweepFile);
    ASSERT_EQ(csv.size(), 2u);
    EXPECT_EQ(csv[1].fraction, 0.5);
    EXPECT_EQ(csv[1].post_mean_i2c, rows[1].post_mean_i2c);
    EXPECT_TRUE(fs::exists(sweep_dir.path() / "sweep" / "fraction_0.5" / stage_dir(Stage::report)));
}

TEST(Sweep, RejectsInvalidFractions) {
    TempDir dir("sweep-bad");
    const std::vector<double> bad = {0.1, 1.5};
    EXPECT_THROW(sweep_selection_fraction(tiny_config(), dir.path(), bad), ConfigError);
    EXPECT_THROW(sweep_selection_fraction(tiny_config(), dir.path(), {}), ConfigError);
    EXPECT_FALSE(fs::exists(dir.path() / kSweepFile));
}

TEST(Ablation, FourArmsPerSeed) {
    TempDir dir("ablate");
    const std::vector<std::uint64_t> seeds = {3};
    const auto rows = run_ablation_grid(tiny_config(), dir.path(), seeds);
    ASSERT_EQ(rows.size(), 4u);
    const std::vector<std::string> arms = {"baseline", "crm_only", "clm_only", "crm_clm"};
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(rows[i].arm, arms[i]);
        EXPECT_EQ(rows[i].seed, 3u);
        EXPECT_EQ(rows[i].pre_mean_i2c, rows[0].pre_mean_i2c);
        EXPECT_TRUE(std::isfinite(rows[i].post_mean_i2c));
    }
    EXPECT_FALSE(rows[0].enable_crm || rows[0].enable_clm);
    EXPECT_TRUE(rows[3].enable_crm && rows[3].enable_clm);

    const auto base = dir.path() / "ablation" / "seed_3";
    EXPECT_EQ(status_by_stage(base / "crm_only").at("train_clm"), "skipped(ablation)");
    EXPECT_EQ(status_by_stage(base / "baseline").at("train_crm"), "skipped(ablation)");
    // Every arm reuses the shared stages byte for byte.
    EXPECT_EQ(read_file(art(base / "crm_clm", Stage::score, artifact::kScored)),
              read_file(art(base / "shared", Stage::score, artifact::kScored)));
    EXPECT_EQ(read_ablation_csv(dir.path() / kAblationFile).size(), 4u);
}

}  // namespace
}  // namespace relcurate
