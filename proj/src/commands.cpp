#include "qbary/commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "qbary/config.hpp"
#include "qbary/decnet.hpp"
#include "qbary/dual_oracle.hpp"
#include "qbary/graph.hpp"
#include "qbary/suites.hpp"

namespace qbary {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json read_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
  }
}

fs::path output_directory(const RunConfig& config, const std::string& config_path, const RunOverrides& ov) {
  if (ov.out) return fs::path(*ov.out);
  fs::path base = config.output_dir.empty() ? fs::path("qbary_output") / fs::path(config_path).stem()
                                            : fs::path(config.output_dir);
  if (base.is_relative())
    if (const char* root = std::getenv(kOutputRootEnv); root && *root) base = fs::path(root) / base;
  return base;
}

ResolvedRun resolve_or_config_error(const BarycenterProblem& problem, const LaplacianInfo& lap,
                                    const RunSettings& settings) {
  try {
    return resolve_run(problem, lap, settings);
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    const std::string key = what.find("iteration") != std::string::npos ? "iterations"
                            : what.find("radius") != std::string::npos  ? "radius"
                                                                         : "scheme";
    throw ConfigError(key, what);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

int cmd_run(const std::string& config_path, const RunOverrides& overrides, std::ostream& out, std::ostream& err) {
  try {
    json doc = read_document(config_path);
    if (overrides.seed) doc["seed"] = *overrides.seed;
    if (overrides.iterations) doc["iterations"] = *overrides.iterations;
    if (overrides.threads) doc["threads"] = *overrides.threads;
    const RunConfig config = parse_config(doc);
    const GraphTopology graph = build_graph(config);
    const LaplacianInfo lap = build_laplacian(graph);
    const BarycenterProblem problem = build_problem(config);

    std::vector<RunSettings> settings;
    std::vector<ResolvedRun> resolved;
    for (std::size_t b = 0; b < config.batches.size(); ++b) {
      settings.push_back(run_settings(config, b));
      resolved.push_back(resolve_or_config_error(problem, lap, settings.back()));
    }

    const fs::path dir = output_directory(config, config_path, overrides);
    fs::create_directories(dir);

    json echo;
    echo["config"] = config.source;
    echo["derived"] = {{"n", problem.n()},
                       {"m", problem.m()},
                       {"edges", graph.edges().size()},
                       {"epsilon", problem.epsilon},
                       {"omega", problem.omega},
                       {"gamma", problem.gamma},
                       {"cost_scale", problem.cost.scale()},
                       {"lambda_max", lap.lambda_max},
                       {"lambda_min_plus", lap.lambda_min_plus},
                       {"chi", number_or_null(lap.chi)},
                       {"kappa", lap.kappa}};
    echo["runs"] = json::array();

    const bool suffixed = config.batches.size() > 1;
    for (std::size_t b = 0; b < config.batches.size(); ++b) {
      const std::string suffix = suffixed ? "_" + batch_label(config.batches[b]) : "";
      const std::string traj_name = "trajectory" + suffix + ".csv";
      const std::string bary_name = "barycenters" + suffix + ".csv";

      RunResult result = run(problem, lap, settings[b]);
      std::ostringstream traj, bary;
      write_trajectory_csv(traj, result.trajectory, config.per_agent_rows);
      write_barycenters_csv(bary, problem.grid, result.p_hats);
      write_text(dir / traj_name, traj.str());
      write_text(dir / bary_name, bary.str());

      const ResolvedRun& r = result.resolved;
      const RoundLog& last = result.trajectory.back();
      json entry = {{"batches", batch_label(config.batches[b])},
                    {"scheme", r.schedule.kind == Schedule::Case::A ? "A" : "B"},
                    {"mode", to_string(config.mode)},
                    {"L", r.L},
                    {"R", number_or_null(r.R)},
                    {"sigma2_bound", r.sigma2_bound},
                    {"sigma", r.sigma},
                    {"iterations", r.iterations},
                    {"trajectory", traj_name},
                    {"barycenters", bary_name}};
      if (!config.batches[b].auto_schedule) {
        entry["M1"] = config.batches[b].M1;
        entry["M2"] = config.batches[b].M2;
      }
      echo["runs"].push_back(entry);
      out << batch_label(config.batches[b]) << ": " << r.iterations << " rounds, consensus gap "
          << format_double(last.consensus_gap_w) << ", dual " << format_double(last.dual_estimate) << ", "
          << last.total.bits << " bits in final round\n";
    }
    write_text(dir / "resolved_config.json", echo.dump(2) + "\n");
    out << "wrote " << dir.string() << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "invalid config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_verify(const std::string& suite, std::ostream& out, std::ostream& err) {
  std::vector<CheckResult> results;
  try {
    results = run_suite(suite);
  } catch (const std::invalid_argument& e) {
    err << e.what() << "\nknown suites:";
    for (const auto& s : suite_names()) err << ' ' << s;
    err << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "suite " << suite << " failed to run: " << e.what() << "\n";
    return kExitRuntime;
  }
  bool all = true;
  for (const auto& r : results) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%7.2fs", r.seconds);
    out << (r.passed ? "PASS " : "FAIL ") << buf << "  " << r.name << "  " << r.detail << "\n";
    all = all && r.passed;
  }
  out << (all ? "all checks passed" : "some checks failed") << "\n";
  return all ? kExitOk : kExitCheckFailed;
}

int cmd_graph_info(const std::string& config_path, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig config = load_config(config_path);
    const GraphTopology graph = build_graph(config);
    const LaplacianInfo lap = build_laplacian(graph);
    const BarycenterProblem problem = build_problem(config);
    const int m = graph.size();

    out << "m " << m << "\n";
    out << "edges " << graph.edges().size() << "\n";
    out << "lambda_max " << format_double(lap.lambda_max) << "\n";
    out << "lambda_min_plus " << format_double(lap.lambda_min_plus) << "\n";
    out << "chi " << format_double(lap.chi) << "\n";
    out << "kappa " << lap.kappa << "\n";
    out << "n " << problem.n() << "\n";
    out << "gamma " << format_double(problem.gamma) << "\n";

    const double L = lipschitz_constant(m, lap.lambda_max, problem.gamma);
    out << "L " << format_double(L) << "\n";
    if (!(lap.lambda_min_plus > 0.0)) {
      out << "R undefined (single agent)\n";
      return kExitOk;
    }
    const double R = dual_radius_bound(problem.n(), m, lap.lambda_min_plus);
    out << "R " << format_double(R) << "\n";
    out << "N_A " << iterations_case_a(L, R, problem.epsilon) << "\n";
    const BatchPolicy& b = config.batches.front();
    const std::size_t M1 = b.m1(0), M2 = b.m2(0);
    std::vector<std::size_t> m1(static_cast<std::size_t>(m), M1), m2(static_cast<std::size_t>(m), M2);
    const double s2 = config.mode == Mode::Quantized     ? variance_bound(lap.lambda_max, m1, m2)
                      : config.mode == Mode::SampledOnly ? variance_bound(lap.lambda_max, m1, {})
                                                         : 0.0;
    out << "sigma2_bound " << format_double(s2) << " (M1 " << M1 << ", M2 " << M2 << ")\n";
    out << "N_B " << iterations_case_b(L, R, problem.epsilon, std::sqrt(s2)) << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "invalid config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "graph-info failed: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace qbary
