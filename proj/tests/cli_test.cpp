#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "genprior_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunResult {
  int code;
  std::string err;
};

RunResult run(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(GENPRIOR_CLI) + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                          err.string();
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), read_file(err)};
}

const char* kTinySolve = R"({
  "seed": 3,
  "decoder": {"k": 2, "p": 16, "hidden": [8], "r": 2},
  "sensing": {"kind": "dense_gaussian", "n": 12},
  "link": {"kind": "linear"},
  "solver": {"method": "pgd_glasso", "iterations": 5, "projection": {"steps": 30}}
})";

}  // namespace

TEST(Cli, SolveWritesArtifacts) {
  const auto dir = scratch("solve");
  write_file(dir / "cfg.json", kTinySolve);
  const auto res = run("solve --quiet --config " + (dir / "cfg.json").string() + " --out " + (dir / "out").string(), dir);
  ASSERT_EQ(res.code, 0) << res.err;
  for (const char* f : {"trajectory.csv", "metrics.json", "instance.json", "observation.csv"})
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  const auto metrics = nlohmann::json::parse(read_file(dir / "out" / "metrics.json"));
  const double cos = metrics.at("cosine_similarity").get<double>();
  EXPECT_GE(cos, -1.0);
  EXPECT_LE(cos, 1.0);
  EXPECT_TRUE(metrics.contains("l2_error"));
  EXPECT_TRUE(metrics.contains("loss"));
  EXPECT_EQ(read_file(dir / "out" / "trajectory.csv").substr(0, 17), "t,loss,error,rati");
}

TEST(Cli, SolveDeterministic) {
  const auto dir = scratch("determinism");
  write_file(dir / "cfg.json", kTinySolve);
  for (const char* out : {"a", "b"})
    ASSERT_EQ(run("solve --quiet --config " + (dir / "cfg.json").string() + " --out " + (dir / out).string(), dir).code, 0);
  for (const char* f : {"trajectory.csv", "metrics.json", "instance.json", "observation.csv"})
    EXPECT_EQ(read_file(dir / "a" / f), read_file(dir / "b" / f)) << f;
}

TEST(Cli, SignLinkWithNlassoIsInapplicable) {
  const auto dir = scratch("inapplicable");
  write_file(dir / "cfg.json", R"({
  "decoder": {"k": 2, "p": 16, "hidden": [8]},
  "sensing": {"n": 12},
  "link": {"kind": "sign_dithered", "sigma_d": 0.1},
  "solver": {"method": "pgd_nlasso"}
})");
  const auto res = run("solve --config " + (dir / "cfg.json").string() + " --out " + (dir / "out").string(), dir);
  EXPECT_EQ(res.code, 3) << res.err;
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, BadConfigReportsLine) {
  const auto dir = scratch("badcfg");
  write_file(dir / "cfg.json", R"({
  "decoder": {"k": 2, "p": 16},
  "sensing": {"n": 12},
  "solver": {
    "method": "pgd_glasso",
    "step_size": -1
  }
})");
  const auto res = run("solve --config " + (dir / "cfg.json").string() + " --out " + (dir / "out").string(), dir);
  EXPECT_EQ(res.code, 2);
  EXPECT_NE(res.err.find(":6:"), std::string::npos) << res.err;
  EXPECT_FALSE(fs::exists(dir / "out"));

  write_file(dir / "broken.json", "{\n  \"seed\": 1,\n  \"decoder\": {\"k\": 2,,}\n}\n");
  const auto broken = run("solve --config " + (dir / "broken.json").string() + " --out " + (dir / "out").string(), dir);
  EXPECT_EQ(broken.code, 2);
  EXPECT_NE(broken.err.find(":3:"), std::string::npos) << broken.err;
}

TEST(Cli, RateTwoRows) {
  const auto dir = scratch("rate");
  write_file(dir / "cfg.json", R"({
  "seed": 1,
  "decoder": {"k": 2, "p": 16, "hidden": [8], "r": 2},
  "link": {"kind": "shifted_cosine", "sigma": 0.1},
  "solver": {"method": "pgd_nlasso", "step_size": 0.23, "iterations": 4, "projection": {"steps": 20}},
  "rate": {"grid": [100, 400], "trials": 10}
})");
  for (const char* out : {"a", "b"}) {
    const auto res = run("rate --quiet --threads 2 --config " + (dir / "cfg.json").string() + " --out " +
                             (dir / out).string(),
                         dir);
    ASSERT_EQ(res.code, 0) << res.err;
  }
  const std::string csv = read_file(dir / "a" / "rate.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(csv.find(",ratio\n"), std::string::npos);
  EXPECT_EQ(csv, read_file(dir / "b" / "rate.csv"));
  EXPECT_EQ(read_file(dir / "a" / "rate.json"), read_file(dir / "b" / "rate.json"));
}

TEST(Cli, CheckSuites) {
  const auto dir = scratch("check");
  write_file(dir / "linear.json", R"({"link": {"kind": "linear"}})");
  EXPECT_EQ(run("check mvt --quiet --config " + (dir / "linear.json").string(), dir).code, 0);
  EXPECT_EQ(run("check adjoint --quiet", dir).code, 0);
  write_file(dir / "under.json", R"({"sensing": {"n": 1}})");
  EXPECT_EQ(run("check tsrec --quiet --config " + (dir / "under.json").string(), dir).code, 1);
  EXPECT_EQ(run("check gradients --quiet --out " + (dir / "g").string(), dir).code, 0);
  EXPECT_TRUE(fs::exists(dir / "g" / "check_gradients.json"));
  EXPECT_EQ(run("check nonsense", dir).code, 2);
}

TEST(Cli, ModelNewAndInfo) {
  const auto dir = scratch("model");
  ASSERT_EQ(run("model new --quiet --preset mnist --out " + (dir / "m").string(), dir).code, 0);
  const auto j = nlohmann::json::parse(read_file(dir / "m" / "decoder.json"));
  EXPECT_EQ(j.at("k").get<int>(), 20);
  EXPECT_EQ(j.at("p").get<int>(), 784);

  ASSERT_EQ(run("model info --quiet --config " + (dir / "m" / "decoder.json").string() + " --out " +
                    (dir / "i").string(),
                dir)
                .code,
            0);
  auto info = nlohmann::json::parse(read_file(dir / "i" / "decoder_info.json"));
  info.erase("num_layers");
  EXPECT_EQ(info, j);

  write_file(dir / "id.json", R"({"k": 4, "p": 4, "r": 1, "activation": "identity", "init": "identity"})");
  ASSERT_EQ(run("model info --quiet --config " + (dir / "id.json").string() + " --out " + (dir / "id").string(), dir)
                .code,
            0);
  const auto id = nlohmann::json::parse(read_file(dir / "id" / "decoder_info.json"));
  EXPECT_NEAR(id.at("lipschitz_bound").get<double>(), 1.0, 1e-6);
}

TEST(Cli, ThreadsEnvironmentOverride) {
  const auto dir = scratch("env");
  write_file(dir / "cfg.json", kTinySolve);
  const auto bad = run("solve --quiet --config " + (dir / "cfg.json").string() + " --out " + (dir / "o").string(),
                       dir);
  ASSERT_EQ(bad.code, 0);
  setenv("GENPRIOR_THREADS", "zero", 1);
  const auto res = run("solve --quiet --config " + (dir / "cfg.json").string() + " --out " + (dir / "o2").string(),
                       dir);
  unsetenv("GENPRIOR_THREADS");
  EXPECT_EQ(res.code, 2);
  EXPECT_FALSE(fs::exists(dir / "o2"));
}
