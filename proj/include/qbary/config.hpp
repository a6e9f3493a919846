#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qbary/decnet.hpp"
#include "qbary/graph.hpp"
#include "qbary/problem.hpp"

namespace qbary {

/// Invalid configuration. key is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error("config key '" + key + "': " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

private:
  std::string key_;
};

struct GraphConfig {
  GraphSpec spec;
  /// Explicit 1-indexed edge list; replaces the generator when present.
  std::optional<std::vector<GraphTopology::Edge>> edges;
};

struct ProblemConfig {
  int dim = 1;
  std::array<std::size_t, 2> n{0, 1};
  Point lo{0.0, 0.0};
  Point hi{1.0, 1.0};
  CostKind cost = CostKind::SquaredEuclidean;
  bool normalize_cost = true;
  std::vector<Measure> measures;
  double epsilon = 0.1;
  std::optional<double> omega;
  std::optional<double> gamma;
};

struct RunConfig {
  GraphConfig graph;
  ProblemConfig problem;
  Schedule::Case scheme = Schedule::Case::A;
  std::vector<BatchPolicy> batches;  // one run per entry
  std::optional<long> iterations;
  Mode mode = Mode::Quantized;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::size_t record_stride = 1;
  std::size_t dual_samples = 256;
  unsigned threads = 1;
  std::optional<double> sigma;
  std::optional<double> radius;
  bool per_agent_rows = false;

  /// Input document with command-line overrides applied.
  nlohmann::json source;
};

/// Validates the whole document, rejecting unknown keys. Throws ConfigError.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

/// Throws ConfigError("graph", ...) when the graph is disconnected.
GraphTopology build_graph(const RunConfig& config);
BarycenterProblem build_problem(const RunConfig& config);
RunSettings run_settings(const RunConfig& config, std::size_t batch_index);

std::string batch_label(const BatchPolicy& policy);

}  // namespace qbary
