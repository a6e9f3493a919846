#include "qbary/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace qbary {
namespace {

using nlohmann::json;

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Object view that rejects keys never asked for.
class Section {
public:
  Section(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    for (const auto& [key, _] : j_.items())
      if (!allowed.count(key)) throw ConfigError(join(path_, key), "unknown key");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& at(const std::string& key) const {
    if (!has(key)) throw ConfigError(join(path_, key), "missing");
    return j_.at(key);
  }
  std::string path(const std::string& key) const { return join(path_, key); }

  double number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(path(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path(key), "must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  long integer(const std::string& key, long min) const {
    const json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(path(key), "expected an integer");
    const long x = v.get<long>();
    if (x < min) throw ConfigError(path(key), "must be at least " + std::to_string(min));
    return x;
  }
  long integer(const std::string& key, long min, long fallback) const { return has(key) ? integer(key, min) : fallback; }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw ConfigError(path(key), "expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  std::string string(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(path(key), "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(path(key), "expected true or false");
    return v.get<bool>();
  }

private:
  const json& j_;
  std::string path_;
};

Point read_point(const json& v, int dim, const std::string& path) {
  if (dim == 1) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    return {v.get<double>(), 0.0};
  }
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(path, "expected a pair of numbers");
  return {v[0].get<double>(), v[1].get<double>()};
}

std::pair<double, double> read_range(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(path, "expected [low, high]");
  const double lo = v[0].get<double>(), hi = v[1].get<double>();
  if (!(lo <= hi)) throw ConfigError(path, "low exceeds high");
  return {lo, hi};
}

Measure read_measure(const json& v, int dim, const std::string& path) {
  Section s(v, path, {"type", "atoms", "probs", "mean", "std", "components", "weights"});
  const std::string type = s.string("type");
  try {
    if (type == "finite") {
      FiniteSupport fs;
      const json& atoms = s.at("atoms");
      if (!atoms.is_array()) throw ConfigError(s.path("atoms"), "expected an array");
      for (std::size_t k = 0; k < atoms.size(); ++k)
        fs.atoms.push_back(read_point(atoms[k], dim, s.path("atoms") + "[" + std::to_string(k) + "]"));
      if (s.has("probs")) {
        const json& probs = s.at("probs");
        if (!probs.is_array()) throw ConfigError(s.path("probs"), "expected an array");
        for (const auto& p : probs) {
          if (!p.is_number()) throw ConfigError(s.path("probs"), "expected numbers");
          fs.probs.push_back(p.get<double>());
        }
      } else {
        fs.probs.assign(fs.atoms.size(), 1.0 / static_cast<double>(fs.atoms.size()));
      }
      return Measure(fs, dim);
    }
    if (type == "gaussian") {
      return Measure(Gaussian{read_point(s.at("mean"), dim, s.path("mean")), s.number("std")}, dim);
    }
    if (type == "mixture") {
      GaussianMixture gm;
      const json& comps = s.at("components");
      if (!comps.is_array()) throw ConfigError(s.path("components"), "expected an array");
      for (std::size_t k = 0; k < comps.size(); ++k) {
        const std::string cp = s.path("components") + "[" + std::to_string(k) + "]";
        Section c(comps[k], cp, {"mean", "std"});
        gm.components.push_back(Gaussian{read_point(c.at("mean"), dim, c.path("mean")), c.number("std")});
      }
      if (s.has("weights")) {
        for (const auto& w : s.at("weights")) {
          if (!w.is_number()) throw ConfigError(s.path("weights"), "expected numbers");
          gm.weights.push_back(w.get<double>());
        }
      } else {
        gm.weights.assign(gm.components.size(), 1.0 / static_cast<double>(gm.components.size()));
      }
      return Measure(gm, dim);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(s.path("type"), "expected finite, gaussian or mixture");
}

// Gaussians with means and deviations drawn uniformly from the given ranges.
std::vector<Measure> random_gaussians(const json& v, int dim, std::size_t count, const std::string& path) {
  Section s(v, path, {"count", "mean_range", "std_range", "seed"});
  if (s.has("count")) count = static_cast<std::size_t>(s.integer("count", 1));
  const auto [m_lo, m_hi] = read_range(s.at("mean_range"), s.path("mean_range"));
  const auto [s_lo, s_hi] = read_range(s.at("std_range"), s.path("std_range"));
  if (!(s_lo > 0.0)) throw ConfigError(s.path("std_range"), "deviations must be positive");
  RandomStream rs = RandomStream::derive(s.seed("seed", 0), 0, stream_tag::measures);
  std::vector<Measure> out;
  for (std::size_t i = 0; i < count; ++i) {
    Gaussian g;
    for (int d = 0; d < dim; ++d) g.mean[static_cast<std::size_t>(d)] = m_lo + (m_hi - m_lo) * rs.uniform();
    g.stddev = s_lo + (s_hi - s_lo) * rs.uniform();
    out.emplace_back(g, dim);
  }
  return out;
}

BatchPolicy read_batch(const json& v, const std::string& path) {
  BatchPolicy b;
  if (v.is_string()) {
    if (v.get<std::string>() != "auto") throw ConfigError(path, "expected \"auto\" or {M1, M2}");
    b.auto_schedule = true;
    return b;
  }
  Section s(v, path, {"M1", "M2"});
  b.M1 = static_cast<std::size_t>(s.integer("M1", 1));
  b.M2 = static_cast<std::size_t>(s.integer("M2", 1));
  return b;
}

GraphConfig read_graph(const json& v) {
  Section s(v, "graph", {"kind", "m", "p", "degree", "seed", "edges"});
  GraphConfig g;
  g.spec.m = static_cast<int>(s.integer("m", 1));
  g.spec.seed = s.seed("seed", 0);
  if (s.has("edges")) {
    const json& e = s.at("edges");
    if (!e.is_array()) throw ConfigError("graph.edges", "expected an array of [i, j] pairs");
    std::vector<GraphTopology::Edge> edges;
    for (const auto& pair : e) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number_integer())
        throw ConfigError("graph.edges", "expected [i, j] pairs of 1-based node indices");
      edges.emplace_back(pair[0].get<int>() - 1, pair[1].get<int>() - 1);
    }
    if (s.has("kind") && s.string("kind") != "custom")
      throw ConfigError("graph.kind", "explicit edges require kind \"custom\"");
    g.edges = std::move(edges);
    return g;
  }
  try {
    g.spec.kind = parse_graph_kind(s.string("kind"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("graph.kind", e.what());
  }
  g.spec.p = s.number("p", g.spec.p);
  if (!(g.spec.p >= 0.0 && g.spec.p <= 1.0)) throw ConfigError("graph.p", "must lie in [0, 1]");
  g.spec.degree = static_cast<int>(s.integer("degree", 1, g.spec.degree));
  return g;
}

ProblemConfig read_problem(const json& v, std::size_t m) {
  Section s(v, "problem", {"dim", "n", "support", "cost", "normalize_cost", "measures", "epsilon", "omega", "gamma"});
  ProblemConfig p;
  p.dim = static_cast<int>(s.integer("dim", 1, 1));
  if (p.dim > 2) throw ConfigError("problem.dim", "must be 1 or 2");

  const json& n = s.at("n");
  if (p.dim == 1) {
    if (!n.is_number_integer() || n.get<long>() < 1) throw ConfigError("problem.n", "expected a positive integer");
    p.n = {n.get<std::size_t>(), 1};
  } else {
    if (!n.is_array() || n.size() != 2 || !n[0].is_number_integer() || !n[1].is_number_integer() ||
        n[0].get<long>() < 1 || n[1].get<long>() < 1)
      throw ConfigError("problem.n", "expected [nx, ny] with positive entries");
    p.n = {n[0].get<std::size_t>(), n[1].get<std::size_t>()};
  }

  if (s.has("support")) {
    const json& sup = s.at("support");
    if (p.dim == 1) {
      const auto [lo, hi] = read_range(sup, "problem.support");
      p.lo = {lo, 0.0};
      p.hi = {hi, 0.0};
    } else {
      if (!sup.is_array() || sup.size() != 2) throw ConfigError("problem.support", "expected [[x0, x1], [y0, y1]]");
      const auto [x0, x1] = read_range(sup[0], "problem.support[0]");
      const auto [y0, y1] = read_range(sup[1], "problem.support[1]");
      p.lo = {x0, y0};
      p.hi = {x1, y1};
    }
  }

  if (s.has("cost")) {
    const std::string c = s.string("cost");
    if (c == "squared_euclidean") p.cost = CostKind::SquaredEuclidean;
    else if (c == "euclidean") p.cost = CostKind::Euclidean;
    else throw ConfigError("problem.cost", "expected squared_euclidean or euclidean");
  }
  p.normalize_cost = s.boolean("normalize_cost", true);

  const json& ms = s.at("measures");
  if (ms.is_array()) {
    for (std::size_t k = 0; k < ms.size(); ++k)
      p.measures.push_back(read_measure(ms[k], p.dim, "problem.measures[" + std::to_string(k) + "]"));
  } else if (ms.is_object() && ms.contains("random_gaussians")) {
    Section wrap(ms, "problem.measures", {"random_gaussians"});
    p.measures = random_gaussians(ms.at("random_gaussians"), p.dim, m, "problem.measures.random_gaussians");
  } else {
    throw ConfigError("problem.measures", "expected a list of measures or {random_gaussians: ...}");
  }
  if (p.measures.size() != m)
    throw ConfigError("problem.measures", "expected " + std::to_string(m) + " measures (one per node), got " +
                                              std::to_string(p.measures.size()));

  p.epsilon = s.number("epsilon");
  if (!(p.epsilon > 0.0)) throw ConfigError("problem.epsilon", "must be positive");
  if (s.has("omega")) {
    p.omega = s.number("omega");
    if (!(*p.omega > 1.0)) throw ConfigError("problem.omega", "must exceed 1");
  }
  if (s.has("gamma")) {
    p.gamma = s.number("gamma");
    if (!(*p.gamma > 0.0)) throw ConfigError("problem.gamma", "must be positive");
  }
  return p;
}

}  // namespace

RunConfig parse_config(const json& doc) {
  Section s(doc, "", {"graph", "problem", "scheme", "batches", "iterations", "mode", "seed", "output_dir",
                      "record_stride", "dual_samples", "threads", "sigma", "radius", "per_agent_rows"});
  RunConfig c;
  c.source = doc;
  c.graph = read_graph(s.at("graph"));
  c.problem = read_problem(s.at("problem"), static_cast<std::size_t>(c.graph.spec.m));

  if (s.has("scheme")) {
    const std::string sc = s.string("scheme");
    if (sc == "A") c.scheme = Schedule::Case::A;
    else if (sc == "B") c.scheme = Schedule::Case::B;
    else throw ConfigError("scheme", "expected \"A\" or \"B\"");
  }

  if (!s.has("batches")) {
    c.batches.push_back(read_batch("auto", "batches"));
  } else if (s.at("batches").is_array()) {
    const json& arr = s.at("batches");
    if (arr.empty()) throw ConfigError("batches", "empty list");
    for (std::size_t k = 0; k < arr.size(); ++k)
      c.batches.push_back(read_batch(arr[k], "batches[" + std::to_string(k) + "]"));
  } else {
    c.batches.push_back(read_batch(s.at("batches"), "batches"));
  }

  if (s.has("mode")) {
    try {
      c.mode = parse_mode(s.string("mode"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("mode", e.what());
    }
  }
  if (s.has("iterations")) c.iterations = s.integer("iterations", 1);
  c.seed = s.seed("seed", 0);
  if (s.has("output_dir")) c.output_dir = s.string("output_dir");
  c.record_stride = static_cast<std::size_t>(s.integer("record_stride", 1, 1));
  c.dual_samples = static_cast<std::size_t>(s.integer("dual_samples", 1, 256));
  c.threads = static_cast<unsigned>(s.integer("threads", 1, 1));
  if (s.has("sigma")) {
    c.sigma = s.number("sigma");
    if (!(*c.sigma >= 0.0)) throw ConfigError("sigma", "must be nonnegative");
  }
  if (s.has("radius")) {
    c.radius = s.number("radius");
    if (!(*c.radius > 0.0)) throw ConfigError("radius", "must be positive");
  }
  c.per_agent_rows = s.boolean("per_agent_rows", false);

  const double omega = c.problem.omega ? *c.problem.omega
                                       : default_omega(c.problem.n[0] * c.problem.n[1], c.problem.lo, c.problem.hi,
                                                       c.problem.dim);
  for (auto& b : c.batches) {
    b.omega = omega;
    if (b.auto_schedule && c.scheme == Schedule::Case::B)
      throw ConfigError("batches", "scheme B needs explicit {M1, M2}");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

GraphTopology build_graph(const RunConfig& config) {
  GraphTopology g;
  try {
    g = config.graph.edges ? GraphTopology(config.graph.spec.m, *config.graph.edges) : generate_graph(config.graph.spec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("graph", e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError("graph", e.what());
  }
  if (!g.connected()) throw ConfigError("graph", "graph is disconnected");
  return g;
}

BarycenterProblem build_problem(const RunConfig& config) {
  const ProblemConfig& p = config.problem;
  SupportGrid grid = p.dim == 1 ? SupportGrid::uniform_1d(p.n[0], p.lo[0], p.hi[0])
                                : SupportGrid::uniform_2d(p.n[0], p.n[1], p.lo, p.hi);
  CostOracle cost = p.normalize_cost ? CostOracle::normalized(p.cost, grid, p.lo, p.hi) : CostOracle(p.cost, 1.0);
  const double omega = config.batches.front().omega;
  double gamma = 0.0;
  try {
    gamma = p.gamma ? *p.gamma : gamma_from_epsilon(p.epsilon, omega);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("problem.omega", e.what());
  }
  BarycenterProblem prob{std::move(grid), cost, p.measures, p.epsilon, omega, gamma};
  try {
    prob.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("problem", e.what());
  }
  return prob;
}

RunSettings run_settings(const RunConfig& config, std::size_t batch_index) {
  RunSettings s;
  s.scheme = config.scheme;
  s.mode = config.mode;
  s.batches = config.batches.at(batch_index);
  s.iterations = config.iterations;
  s.sigma = config.sigma;
  s.radius = config.radius;
  s.seed = config.seed;
  s.dual_samples = config.dual_samples;
  s.threads = config.threads;
  s.record_stride = config.record_stride;
  return s;
}

std::string batch_label(const BatchPolicy& policy) {
  if (policy.auto_schedule) return "auto";
  return "M1-" + std::to_string(policy.M1) + "_M2-" + std::to_string(policy.M2);
}

}  // namespace qbary
