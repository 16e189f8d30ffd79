// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "relcurate/config.hpp"
#include "relcurate/io.hpp"
#include "relcurate/manifest.hpp"
#include "test_util.hpp"

namespace relcurate {
namespace {

using testing::TempDir;

struct Result {
    int code = -1;
    std::string output;
};

Result run(const std::string& args, const TempDir& dir) {
    const auto log = dir / "cli.log";
    const std::string cmd = std::string(RELCURATE_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.output = read_file(log);
    return r;
}

// Writes the small test configuration and returns the common flags.
std::string setup(const TempDir& dir) {
    write_file_atomic(dir / "cfg.json", config_to_json(testing::tiny_config()));
    return "--config " + (dir / "cfg.json").string() + " --workdir " + (dir / "work").string();
}

TEST(Cli, HelpAndVersion) {
    TempDir dir("cli-help");
    auto r = run("--help", dir);
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.output.find("train-crm"), std::string::npos);
    EXPECT_NE(r.output.find("sweep"), std::string::npos);
    EXPECT_EQ(run("--version", dir).code, 0);
}

TEST(Cli, UsageErrorsExitOne) {
    TempDir dir("cli-usage");
    EXPECT_EQ(run("", dir).code, 1);
    EXPECT_EQ(run("frobnicate", dir).code, 1);
    EXPECT_EQ(run("pipeline --config /nonexistent.json", dir).code, 1);
    const auto flags = setup(dir);
    EXPECT_EQ(run("pipeline " + flags + " --fraction 0", dir).code, 1);
    EXPECT_EQ(run("pipeline " + flags + " --fraction 2", dir).code, 1);
    EXPECT_EQ(run("sweep " + flags + " --fractions 0.1,3", dir).code, 1);
    write_file_atomic(dir / "bad.json", R"({"selection": {"fractoin": 0.1}})");
    const auto r = run("pipeline --config " + (dir / "bad.json").string(), dir);
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.output.find("fractoin"), std::string::npos);
}

TEST(Cli, PipelineRunsAndReports) {
    TempDir dir("cli-pipe");
    const auto r = run("pipeline " + setup(dir), dir);
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("mean i2c before"), std::string::npos);
    EXPECT_TRUE(std::filesystem::exists(dir / "work" / stage_dir(Stage::report) / artifact::kSummary));
    EXPECT_EQ(read_manifest(dir / "work").size(), 8u);
}

TEST(Cli, StageByStageAndFailureCodes) {
    TempDir dir("cli-stage");
    const auto flags = setup(dir);
    const auto missing = run("score " + flags, dir);
    EXPECT_EQ(missing.code, 2);
    EXPECT_NE(missing.output.find("missing input"), std::string::npos);

    for (const char* s : {"generate-initial", "filter", "score", "partition"}) {
        ASSERT_EQ(run(std::string(s) + " " + flags, dir).code, 0) << s;
    }
    ASSERT_EQ(run("train-crm " + flags + " --no-clm", dir).code, 0);
    // enable_clm is part of the training hash, so mixing settings is stale.
    EXPECT_EQ(run("train-clm " + flags, dir).code, 2);
    const auto skipped = run("train-clm " + flags + " --no-clm", dir);
    EXPECT_EQ(skipped.code, 0);
    EXPECT_NE(skipped.output.find("skipped(ablation)"), std::string::npos);

    // A different seed makes every upstream artifact stale.
    const auto stale = run("filter " + flags + " --seed 99", dir);
    EXPECT_EQ(stale.code, 2);
    EXPECT_NE(stale.output.find("stale"), std::string::npos);
}

}  // namespace
}  // namespace relcurate
