#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "altopt/commands.hpp"

using namespace altopt;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kConfigs = fs::path(ALTOPT_SOURCE_DIR) / "configs";

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "altopt_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir.parent_path());
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
    std::vector<std::string> out;
    std::istringstream in(slurp(p));
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

const char* kConvexTask =
    R"("task": {"function": "convex2d", "alpha": 1, "beta": 20, "x0": [50, 50], "iterations": 100})";

}  // namespace

TEST(Cli, TuneBundledHybrid) {
    const fs::path out = scratch("tune");
    const CliResult r = cli({"tune", "--config", (kConfigs / "tune/convex2d-sgd-hybrid.cfg").string(), "--out",
                             out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const json best = json::parse(slurp(out / "best.json"));
    EXPECT_LE(best["final_distance"].get<double>(), 1e-4);
    EXPECT_EQ(best["optimizer"]["rule"], "hybrid");
    const auto rows = lines(out / "leaderboard.csv");
    EXPECT_EQ(rows.front(), "rank,eta,eta_in,eta_out,final_distance,diverged");
    EXPECT_EQ(rows.size(), 1u + best["grid_points"].get<std::size_t>());
}

TEST(Cli, MissingBetaExitsWithUsageError) {
    const fs::path dir = scratch("missing_beta");
    const fs::path cfg = write_config(dir, "bad.cfg", R"({"schema_version": 1,
      "task": {"function": "convex2d", "alpha": 1, "x0": [50, 50], "iterations": 100},
      "optimizer": {"family": "sgd", "rule": "additive"}, "grids": {"eta": [0.001]}})");
    const CliResult r = cli({"tune", "--config", cfg.string(), "--out", (dir / "out").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("task.beta"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, SinglePointGrid) {
    const fs::path dir = scratch("single_point");
    const fs::path cfg = write_config(dir, "one.cfg", std::string(R"({"schema_version": 1, )") + kConvexTask +
                                                          R"(, "optimizer": {"family": "sgd", "rule": "additive"},
      "grids": {"eta": {"lo": 0.001, "hi": 0.001}}})");
    ASSERT_EQ(cli({"tune", "--config", cfg.string(), "--out", (dir / "out").string()}).code, 0);
    EXPECT_EQ(lines(dir / "out/leaderboard.csv").size(), 2u);
}

TEST(Cli, MissingGridForRule) {
    const fs::path dir = scratch("missing_grid");
    const fs::path cfg = write_config(dir, "g.cfg", std::string(R"({"schema_version": 1, )") + kConvexTask +
                                                        R"(, "optimizer": {"family": "sgd", "rule": "hybrid"},
      "grids": {"eta": [0.001], "eta_in": [1]}})");
    const CliResult r = cli({"tune", "--config", cfg.string(), "--out", (dir / "out").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("grids.eta_out"), std::string::npos) << r.err;
}

TEST(Cli, AllDivergedExitsThree) {
    const fs::path dir = scratch("diverged");
    const fs::path cfg = write_config(dir, "d.cfg", std::string(R"({"schema_version": 1, )") + kConvexTask +
                                                        R"(, "optimizer": {"family": "sgd", "rule": "additive"},
      "grids": {"eta": [10, 100]}})");
    const CliResult r = cli({"tune", "--config", cfg.string(), "--out", (dir / "out").string()});
    EXPECT_EQ(r.code, 3);
    const auto rows = lines(dir / "out/leaderboard.csv");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_NE(rows[1].find(",inf,1"), std::string::npos) << rows[1];
    EXPECT_TRUE(json::parse(slurp(dir / "out/best.json"))["final_distance"].is_null());
}

TEST(Cli, RefusesToOverwriteWithoutFlag) {
    const fs::path out = scratch("overwrite");
    const std::string cfg = (kConfigs / "trial/convex2d-sgd-additive.cfg").string();
    ASSERT_EQ(cli({"trial", "--config", cfg, "--out", out.string()}).code, 0);
    const CliResult again = cli({"trial", "--config", cfg, "--out", out.string()});
    EXPECT_EQ(again.code, 2);
    EXPECT_NE(again.err.find("--overwrite"), std::string::npos);
    EXPECT_EQ(cli({"trial", "--config", cfg, "--out", out.string(), "--overwrite"}).code, 0);
}

TEST(Cli, TrialOutputs) {
    const fs::path out = scratch("trial");
    ASSERT_EQ(cli({"trial", "--config", (kConfigs / "trial/convex2d-sgd-hybrid.cfg").string(), "--out",
                   out.string()})
                  .code,
              0);
    const auto rows = lines(out / "trajectory.csv");
    EXPECT_EQ(rows.front(), "iteration,x1,x2,distance");
    EXPECT_EQ(rows.size(), 102u);
    const json record = json::parse(slurp(out / "record.json"));
    EXPECT_EQ(record["iterations_run"], 100);
    EXPECT_LE(record["final_distance"].get<double>(), 1e-4);
}

TEST(Cli, RobustnessSingleRunHasZeroStd) {
    const fs::path dir = scratch("robust_one");
    const fs::path cfg = write_config(dir, "r.cfg", R"({"schema_version": 1, "seed": 3,
      "optimizer": {"family": "adam", "rule": "additive"},
      "evaluation": {"function": "convex2d", "x0_1": {"mean": 50, "std": 5}, "x0_2": 50, "alpha": 1,
                     "beta": 20, "iterations": 100, "runs": 1}})");
    ASSERT_EQ(cli({"robustness", "--config", cfg.string(), "--out", (dir / "out").string()}).code, 0);
    const json stats = json::parse(slurp(dir / "out/stats.json"));
    EXPECT_EQ(stats["n"], 1);
    EXPECT_EQ(stats["std"].get<double>(), 0.0);
    EXPECT_EQ(lines(dir / "out/scores.csv").size(), 2u);
}

TEST(Cli, RobustnessByteIdenticalAcrossRunsAndParallelism) {
    const std::string cfg = (kConfigs / "robustness/convex2d-sgd-hybrid.cfg").string();
    const fs::path a = scratch("robust_a"), b = scratch("robust_b");
    ASSERT_EQ(cli({"robustness", "--config", cfg, "--out", a.string(), "--parallelism", "1"}).code, 0);
    ASSERT_EQ(cli({"robustness", "--config", cfg, "--out", b.string(), "--parallelism", "4"}).code, 0);
    EXPECT_EQ(slurp(a / "scores.csv"), slurp(b / "scores.csv"));
    EXPECT_EQ(slurp(a / "stats.json"), slurp(b / "stats.json"));
    EXPECT_EQ(lines(a / "scores.csv").size(), 101u);

    const fs::path c = scratch("robust_c");
    ASSERT_EQ(cli({"robustness", "--config", cfg, "--out", c.string(), "--seed", "99"}).code, 0);
    EXPECT_NE(slurp(a / "scores.csv"), slurp(c / "scores.csv"));
}

TEST(Cli, ScanDefaultRanges) {
    const fs::path out = scratch("scan");
    ASSERT_EQ(cli({"scan", "--config", (kConfigs / "scan/convex2d-sgd-additive.cfg").string(), "--out",
                   out.string()})
                  .code,
              0);
    const auto rows = lines(out / "surface.csv");
    EXPECT_EQ(rows.front(), "i,j,x1,x2,final_distance,score");
    EXPECT_EQ(rows.size(), 626u);
    const auto matrix = lines(out / "surface_matrix.csv");
    EXPECT_EQ(matrix.size(), 26u);
}

TEST(Cli, ScanCollapsedRanges) {
    const fs::path dir = scratch("scan_collapsed");
    const fs::path cfg = write_config(dir, "s.cfg", std::string(R"({"schema_version": 1, )") + kConvexTask +
                                                        R"(, "optimizer": {"family": "sgd", "rule": "multiplicative"},
      "scan": {"x1": {"lo": 50, "hi": 50}, "x2": {"lo": 50, "hi": 50}, "points": 4}})");
    ASSERT_EQ(cli({"scan", "--config", cfg.string(), "--out", (dir / "out").string()}).code, 0);
    const auto matrix = lines(dir / "out/surface_matrix.csv");
    ASSERT_EQ(matrix.size(), 5u);
    const std::string first = matrix[1].substr(matrix[1].find(','));
    for (std::size_t i = 1; i < matrix.size(); ++i) EXPECT_EQ(matrix[i].substr(matrix[i].find(',')), first);
}

TEST(Cli, ScanHybridWorstCaseBeatsAdditive) {
    auto max_score = [](const fs::path& csv) {
        double worst = 0.0;
        const auto rows = lines(csv);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            worst = std::max(worst, std::stod(rows[i].substr(rows[i].rfind(',') + 1)));
        }
        return worst;
    };
    const fs::path a = scratch("scan_add"), h = scratch("scan_hyb");
    ASSERT_EQ(cli({"scan", "--config", (kConfigs / "scan/convex2d-sgd-additive.cfg").string(), "--out", a.string()}).code, 0);
    ASSERT_EQ(cli({"scan", "--config", (kConfigs / "scan/convex2d-sgd-hybrid.cfg").string(), "--out", h.string()}).code, 0);
    EXPECT_LE(max_score(h / "surface.csv"), max_score(a / "surface.csv"));
}

TEST(Cli, TrainToySummaryShape) {
    const fs::path dir = scratch("toy");
    const fs::path cfg = write_config(dir, "toy.cfg", R"({"schema_version": 1, "seed": 5,
      "toy": {"dataset": {"size": 80}, "runs": 2, "epochs": {"mean": 6, "std": 1},
              "optimizers": [{"family": "sgd", "rule": "additive"},
                             {"family": "sgd", "rule": "multiplicative"}]}})");
    const CliResult r = cli({"train-toy", "--config", cfg.string(), "--out", (dir / "out").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const json summary = json::parse(slurp(dir / "out/summary.json"));
    ASSERT_EQ(summary["optimizers"].size(), 2u);
    for (const json& o : summary["optimizers"]) {
        EXPECT_TRUE(o["epoch5"].contains("mean"));
        EXPECT_TRUE(o["epoch5"].contains("std"));
        EXPECT_TRUE(o["final"].contains("mean"));
        EXPECT_TRUE(o["final"].contains("std"));
        EXPECT_EQ(o["runs"].size(), 2u);
    }
    EXPECT_EQ(summary["optimizers"][1]["sign_flips"], 0);
    EXPECT_EQ(lines(dir / "out/summary.csv").size(), 3u);
    EXPECT_EQ(lines(dir / "out/runs/sgd-additive-run00.csv").front(), "epoch,train_acc,val_acc,loss");
    EXPECT_TRUE(fs::exists(dir / "out/runs/sgd-multiplicative-run01.csv"));
}

TEST(Cli, TrainToyClampsEpochs) {
    const fs::path dir = scratch("toy_clamp");
    const fs::path cfg = write_config(dir, "toy.cfg", R"({"schema_version": 1,
      "toy": {"dataset": {"size": 40}, "runs": 1, "epochs": {"mean": 0.4, "std": 0},
              "optimizers": [{"family": "sgd", "rule": "hybrid"}]}})");
    ASSERT_EQ(cli({"train-toy", "--config", cfg.string(), "--out", (dir / "out").string()}).code, 0);
    EXPECT_EQ(lines(dir / "out/runs/sgd-hybrid-run00.csv").size(), 2u);
}

TEST(Cli, OutputRootFromEnvironment) {
    const fs::path root = scratch("env_root");
    ::setenv(kOutputRootEnv, root.c_str(), 1);
    const CliResult r = cli({"trial", "--config", (kConfigs / "trial/convex2d-sgd-additive.cfg").string()});
    ::unsetenv(kOutputRootEnv);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(root / "trial-convex2d-sgd-additive" / "record.json"));
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(cli({}).code, 2);
    EXPECT_EQ(cli({"bogus"}).code, 2);
    EXPECT_EQ(cli({"tune"}).code, 2);
    EXPECT_EQ(cli({"tune", "--config", "x.cfg", "--parallelism", "0"}).code, 2);
    EXPECT_EQ(cli({"tune", "--config", "/nonexistent/x.cfg", "--out", scratch("nofile").string()}).code, 2);
    EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, CsvNumberFormat) {
    const fs::path out = scratch("format");
    ASSERT_EQ(cli({"trial", "--config", (kConfigs / "trial/rosenbrock-b60-sgd-hybrid.cfg").string(), "--out",
                   out.string()})
                  .code,
              0);
    const std::string text = slurp(out / "trajectory.csv");
    EXPECT_EQ(text.find('\r'), std::string::npos);
    const std::regex real(R"(-?\d\.\d{15}e[+-]\d{2,3})");
    const auto rows = lines(out / "trajectory.csv");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::stringstream ss(rows[i]);
        std::string cell;
        std::getline(ss, cell, ',');
        while (std::getline(ss, cell, ',')) ASSERT_TRUE(std::regex_match(cell, real)) << cell;
    }
}
