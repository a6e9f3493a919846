#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "qbary/commands.hpp"
#include "qbary/config.hpp"

using namespace qbary;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("qbary_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string write(const nlohmann::json& j, const std::string& name = "config.json") const {
    std::ofstream(path / name) << j.dump(2);
    return (path / name).string();
  }
};

nlohmann::json k2_config() {
  return {{"graph", {{"kind", "complete"}, {"m", 2}}},
          {"problem",
           {{"n", 3},
            {"support", {0.0, 1.0}},
            {"normalize_cost", false},
            {"measures",
             {{{"type", "finite"}, {"atoms", {0.0}}, {"probs", {1.0}}}, {{"type", "finite"}, {"atoms", {1.0}}}}},
            {"epsilon", 0.4},
            {"omega", 2.718281828459045}}},
          {"iterations", 5}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> value_lines(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string key, rest;
  while (in >> key && std::getline(in, rest)) out[key] = rest.substr(1);
  return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("unknown keys are rejected") {
  auto j = k2_config();
  j["problem"]["epsilonn"] = 0.1;
  CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("epsilonn"), ConfigError);
  auto k = k2_config();
  k["iterationz"] = 3;
  CHECK_THROWS_AS(parse_config(k), ConfigError);
}

TEST_CASE("omega at most one is a config error") {
  TempDir t;
  auto j = k2_config();
  j["problem"]["omega"] = 1.0;
  std::ostringstream out, err;
  CHECK(cmd_run(t.write(j), {}, out, err) == kExitConfig);
  CHECK(err.str().find("omega") != std::string::npos);
}

TEST_CASE("disconnected graphs are a config error") {
  TempDir t;
  auto j = k2_config();
  j["graph"] = {{"kind", "custom"}, {"m", 4}, {"edges", {{1, 2}, {3, 4}}}};
  j["problem"]["measures"] = {{"random_gaussians", {{"mean_range", {0.2, 0.8}}, {"std_range", {0.05, 0.1}}}}};
  std::ostringstream out, err;
  CHECK(cmd_graph_info(t.write(j), out, err) == kExitConfig);
  CHECK(cmd_run(t.write(j), {}, out, err) == kExitConfig);
}

TEST_CASE("scheme B needs explicit batches") {
  auto j = k2_config();
  j["scheme"] = "B";
  CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("batches"), ConfigError);
}

TEST_CASE("graph-info reports the spectrum") {
  TempDir t;
  std::ostringstream out, err;
  REQUIRE(cmd_graph_info(t.write(k2_config()), out, err) == kExitOk);
  auto v = value_lines(out.str());
  CHECK(std::stod(v["chi"]) == doctest::Approx(1.0));
  CHECK(std::stod(v["lambda_max"]) == doctest::Approx(2.0));
  CHECK(v["N_A"] == "35");

  auto j = k2_config();
  j["graph"] = {{"kind", "path"}, {"m", 3}};
  j["problem"]["measures"].push_back({{"type", "gaussian"}, {"mean", 0.5}, {"std", 0.1}});
  std::ostringstream out3;
  REQUIRE(cmd_graph_info(t.write(j), out3, err) == kExitOk);
  v = value_lines(out3.str());
  CHECK(std::stod(v["chi"]) == doctest::Approx(3.0));
  CHECK(v["edges"] == "2");
}

TEST_CASE("unknown suite") {
  std::ostringstream out, err;
  CHECK(cmd_verify("nonsense", out, err) == kExitConfig);
}

TEST_CASE("batch lists write one trajectory per entry") {
  TempDir t;
  auto j = k2_config();
  j["scheme"] = "B";
  j["batches"] = {{{"M1", 1}, {"M2", 10}}, {{"M1", 10}, {"M2", 1}}, {{"M1", 3}, {"M2", 3}}};
  RunOverrides ov;
  ov.out = (t.path / "out").string();
  std::ostringstream out, err;
  REQUIRE(cmd_run(t.write(j), ov, out, err) == kExitOk);
  int trajectories = 0, barycenters = 0;
  for (const auto& e : fs::directory_iterator(*ov.out)) {
    const auto name = e.path().filename().string();
    trajectories += name.rfind("trajectory_", 0) == 0;
    barycenters += name.rfind("barycenters_", 0) == 0;
  }
  CHECK(trajectories == 3);
  CHECK(barycenters == 3);
  CHECK(fs::exists(fs::path(*ov.out) / "trajectory_M1-1_M2-10.csv"));

  std::ifstream rc(fs::path(*ov.out) / "resolved_config.json");
  const auto resolved = nlohmann::json::parse(rc);
  CHECK(resolved.contains("config"));
  CHECK(resolved["runs"].size() == 3);
}

TEST_CASE("same seed, same bytes") {
  TempDir t;
  auto j = k2_config();
  j["problem"]["measures"] = {{"random_gaussians", {{"mean_range", {0.2, 0.8}}, {"std_range", {0.05, 0.1}}, {"seed", 3}}}};
  j["iterations"] = 15;
  j["seed"] = 77;
  const auto path = t.write(j);
  std::string csv[2];
  for (int r = 0; r < 2; ++r) {
    RunOverrides ov;
    ov.out = (t.path / ("run" + std::to_string(r))).string();
    std::ostringstream out, err;
    REQUIRE(cmd_run(path, ov, out, err) == kExitOk);
    csv[r] = slurp(fs::path(*ov.out) / "trajectory.csv") + slurp(fs::path(*ov.out) / "barycenters.csv");
  }
  CHECK(csv[0] == csv[1]);

  RunOverrides other;
  other.out = (t.path / "run_seed").string();
  other.seed = 78;
  std::ostringstream out, err;
  REQUIRE(cmd_run(path, other, out, err) == kExitOk);
  CHECK(slurp(fs::path(*other.out) / "trajectory.csv") != slurp(t.path / "run0" / "trajectory.csv"));
}

}
