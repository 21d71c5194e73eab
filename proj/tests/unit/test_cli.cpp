// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cli.hpp"
#include "flowpinn/checkpoint.hpp"
#include "test_util.hpp"

using namespace flowpinn;
namespace fs = std::filesystem;

namespace {

const char* const kTinyConfig =
    "problem = kovasznay\n"
    "layers = 2,6,3\n"
    "epochs = 12\n"
    "residual_points = 30\n"
    "labeled_points = 10\n"
    "velocity_points = 20\n"
    "edge_points = 4\n"
    "grid = 5 5\n";

struct Invocation {
    int code;
    std::string out, err;
};

Invocation invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "flowpinn");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

struct CliTest : ::testing::Test {
    TempDir dir;
    std::string config;

    void SetUp() override {
        config = (dir.path / "tiny.cfg").string();
        std::ofstream(config) << kTinyConfig;
    }
    std::string path(const std::string& name) const { return (dir.path / name).string(); }
};

}  // namespace

TEST_F(CliTest, TrainWritesArtifacts) {
    const auto r = invoke({"train", "--config", config, "--mode", "forward", "--out", path("run")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("final total loss"), std::string::npos);
    for (const char* f : {"checkpoint.bin", "history.csv", "config.txt", "manifest.json"}) {
        EXPECT_TRUE(fs::exists(dir.path / "run" / f)) << f;
    }
    const auto m = nlohmann::json::parse(read_file(dir.path / "run" / "manifest.json"));
    EXPECT_EQ(m["command"], "train");
    EXPECT_EQ(m["epochs"], 12);
    EXPECT_EQ(m["seeds"]["seed"], 1234);
    for (const auto& [name, p] : m["artifacts"].items()) EXPECT_TRUE(fs::exists(p.get<std::string>())) << name;
    EXPECT_EQ(load_checkpoint(path("run/checkpoint.bin")).params.layer_sizes(), (LayerSizes{2, 6, 3}));
}

TEST_F(CliTest, FlagsOverrideFileValues) {
    const auto r = invoke({"train", "--config", config, "--epochs", "15", "--set", "seed=7", "--out", path("run")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto m = nlohmann::json::parse(read_file(dir.path / "run" / "manifest.json"));
    EXPECT_EQ(m["epochs"], 15);
    EXPECT_EQ(m["seeds"]["seed"], 7);
}

TEST_F(CliTest, AblateShowsZeroResidualWeight) {
    const auto r = invoke({"ablate", "--config", config, "--out", path("abl")});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream h(read_file(dir.path / "abl" / "history.csv"));
    std::string line;
    std::getline(h, line);
    int rows = 0;
    while (std::getline(h, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        ASSERT_GE(cells.size(), 3u);
        EXPECT_EQ(cells[2], "0") << line;
        ++rows;
    }
    EXPECT_EQ(rows, 12);
    const auto t = invoke({"train", "--config", config, "--ablate-dnn", "--out", path("abl2")});
    ASSERT_EQ(t.code, 0);
    EXPECT_EQ(read_file(dir.path / "abl" / "history.csv"), read_file(dir.path / "abl2" / "history.csv"));
}

TEST_F(CliTest, MissingDataFileLeavesNoArtifacts) {
    const auto r = invoke({"train", "--config", config, "--problem", "files", "--set", "mesh=/nonexistent/mesh.csv",
                           "--set", "density=1.225", "--set", "viscosity=1.5e-5", "--out", path("bad")});
    EXPECT_EQ(r.code, cli::kDataError) << r.err;
    EXPECT_FALSE(fs::exists(dir.path / "bad"));
}

TEST_F(CliTest, ExitCodesForConfigErrors) {
    EXPECT_EQ(invoke({"train", "--config", config, "--mode", "sideways", "--out", path("x")}).code, cli::kConfigError);
    EXPECT_EQ(invoke({"train", "--config", path("absent.cfg"), "--out", path("x")}).code, cli::kConfigError);
    EXPECT_EQ(invoke({"train", "--no-such-flag"}).code, cli::kConfigError);
    EXPECT_EQ(invoke({}).code, cli::kConfigError);
    EXPECT_EQ(invoke({"evaluate", "--checkpoint", path("none.bin"), "--out", path("x")}).code, cli::kDataError);
}

TEST_F(CliTest, DivergenceExitCode) {
    const auto r = invoke({"train", "--config", config, "--set", "lr_max=1e300", "--set", "lr_min=1e299",
                           "--set", "adaptive=false", "--out", path("div")});
    EXPECT_EQ(r.code, cli::kDiverged) << r.err;
    EXPECT_FALSE(fs::exists(dir.path / "div"));
}

TEST_F(CliTest, EvaluateAndExport) {
    ASSERT_EQ(invoke({"train", "--config", config, "--out", path("run")}).code, 0);
    const auto e = invoke({"evaluate", "--config", config, "--checkpoint", path("run/checkpoint.bin"), "--out",
                           path("eval")});
    ASSERT_EQ(e.code, 0) << e.err;
    const std::string report = read_file(dir.path / "eval" / "report.txt");
    for (const char* f : {"\nu,", "\nv,", "\np,"}) EXPECT_NE(report.find(f), std::string::npos) << f;
    const FieldExport field = read_field_export(path("eval/field.csv"));
    EXPECT_EQ(field.prediction.size(), 25u);
    EXPECT_TRUE(field.reference.has_value());

    // An untrained network explains little of the variance.
    EXPECT_NE(report.find("r2"), std::string::npos);

    const auto nr = invoke({"evaluate", "--config", config, "--checkpoint", path("run/checkpoint.bin"),
                            "--no-reference", "--out", path("eval2")});
    ASSERT_EQ(nr.code, 0) << nr.err;
    EXPECT_NE(nr.out.find("metrics absent"), std::string::npos);
    EXPECT_FALSE(read_field_export(path("eval2/field.csv")).reference.has_value());

    const auto mismatch = invoke({"evaluate", "--config", config, "--layers", "2,7,3", "--checkpoint",
                                  path("run/checkpoint.bin"), "--out", path("eval3")});
    EXPECT_EQ(mismatch.code, cli::kConfigError);

    const auto x = invoke({"export", "--checkpoint", path("run/checkpoint.bin"), "--grid", "3", "4", "--out",
                           path("grid.csv")});
    ASSERT_EQ(x.code, 0) << x.err;
    EXPECT_EQ(read_field_export(path("grid.csv")).prediction.size(), 12u);
}

TEST_F(CliTest, UntrainedNetworkHasLowRSquared) {
    const auto r = invoke({"train", "--config", config, "--epochs", "0", "--out", path("zero")});
    ASSERT_EQ(r.code, 0) << r.err;
    RunConfig c = load_run_config(config);
    const Checkpoint ck = load_checkpoint(path("zero/checkpoint.bin"));
    const MetricsReport rep = cli::evaluate_run(ck.params, c, reference_field(c));
    for (const auto& f : rep.fields) {
        ASSERT_TRUE(f && f->r_squared);
        EXPECT_LT(*f->r_squared, 0.2);
    }
}

TEST_F(CliTest, NoiseSweepTableAndBaseline) {
    const auto r = invoke({"noise-sweep", "--config", config, "--mode", "inverse", "--levels", "0,0.05", "--seeds",
                           "3,4", "--out", path("sweep")});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream t(read_file(dir.path / "sweep" / "sweep.csv"));
    std::string line;
    std::getline(t, line);
    EXPECT_EQ(line, "level,seed,status,relative_u,relative_v,relative_p,velocity_relative_l2,final_total");
    int rows = 0;
    while (std::getline(t, line)) {
        ++rows;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        ASSERT_EQ(cells.size(), 8u);
        EXPECT_EQ(cells[2], "ok");
        const fs::path run = dir.path / "sweep" / ("level_" + cells[0] + "_seed_" + cells[1]);
        const auto m = nlohmann::json::parse(read_file(run / "manifest.json"));
        EXPECT_EQ(format_double(m["final_loss"]["total"].get<double>()), cells[7]);
    }
    EXPECT_EQ(rows, 4);

    // Level 0 is the plain run with the same seed.
    const auto b = invoke({"train", "--config", config, "--mode", "inverse", "--seed", "3", "--out", path("base")});
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(read_file(dir.path / "base" / "history.csv"),
              read_file(dir.path / "sweep" / "level_0_seed_3" / "history.csv"));
}

TEST_F(CliTest, NoiseSweepNeedsInverseMode) {
    EXPECT_EQ(invoke({"noise-sweep", "--config", config, "--out", path("s")}).code, cli::kConfigError);
}

TEST_F(CliTest, RepeatedRunsAreIdentical) {
    ASSERT_EQ(invoke({"train", "--config", config, "--out", path("a")}).code, 0);
    ASSERT_EQ(invoke({"train", "--config", config, "--out", path("b")}).code, 0);
    EXPECT_EQ(read_file(dir.path / "a" / "history.csv"), read_file(dir.path / "b" / "history.csv"));
    EXPECT_EQ(read_file(dir.path / "a" / "checkpoint.bin"), read_file(dir.path / "b" / "checkpoint.bin"));
}

TEST(CliOutputDir, EnvironmentFallback) {
    EXPECT_EQ(cli::output_dir("x"), fs::path("x"));
    ::setenv("FLOWPINN_OUTPUT_DIR", "/tmp/flowpinn-env", 1);
    EXPECT_EQ(cli::output_dir(""), fs::path("/tmp/flowpinn-env"));
    ::unsetenv("FLOWPINN_OUTPUT_DIR");
    EXPECT_EQ(cli::output_dir(""), fs::path("flowpinn-run"));
}
