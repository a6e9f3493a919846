#include "qbary/graph.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "qbary/random.hpp"

namespace qbary {

GraphTopology::GraphTopology(int m, std::vector<Edge> edges) : m_(m), edges_(std::move(edges)) {
  if (m_ < 1) throw std::invalid_argument("graph: need at least one node");
  for (auto& [i, j] : edges_) {
    if (i == j) throw std::invalid_argument("graph: self-loops are not allowed");
    if (i < 0 || j < 0 || i >= m_ || j >= m_) throw std::invalid_argument("graph: edge endpoint out of range");
    if (i > j) std::swap(i, j);
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
    throw std::invalid_argument("graph: duplicate edge");
}

std::vector<int> GraphTopology::degrees() const {
  std::vector<int> deg(static_cast<std::size_t>(m_), 0);
  for (auto [i, j] : edges_) {
    ++deg[static_cast<std::size_t>(i)];
    ++deg[static_cast<std::size_t>(j)];
  }
  return deg;
}

bool GraphTopology::connected() const {
  std::vector<int> parent(static_cast<std::size_t>(m_));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& px = parent[static_cast<std::size_t>(x)];
      px = parent[static_cast<std::size_t>(px)];
      x = px;
    }
    return x;
  };
  int components = m_;
  for (auto [i, j] : edges_) {
    int a = find(i), b = find(j);
    if (a != b) {
      parent[static_cast<std::size_t>(a)] = b;
      --components;
    }
  }
  return components == 1;
}

GraphKind parse_graph_kind(const std::string& name) {
  if (name == "path") return GraphKind::Path;
  if (name == "cycle") return GraphKind::Cycle;
  if (name == "star") return GraphKind::Star;
  if (name == "complete") return GraphKind::Complete;
  if (name == "erdos_renyi") return GraphKind::ErdosRenyi;
  if (name == "expander") return GraphKind::Expander;
  throw std::invalid_argument("unknown graph kind '" + name + "'");
}

std::string to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::Path: return "path";
    case GraphKind::Cycle: return "cycle";
    case GraphKind::Star: return "star";
    case GraphKind::Complete: return "complete";
    case GraphKind::ErdosRenyi: return "erdos_renyi";
    case GraphKind::Expander: return "expander";
  }
  return "unknown";
}

namespace {

using Edge = GraphTopology::Edge;

// Pairing model: shuffle m*d stubs and pair them up; reject on loops or
// multi-edges. Returns false on rejection.
bool try_regular(int m, int d, RandomStream& rng, std::vector<Edge>& out) {
  std::vector<int> stubs;
  stubs.reserve(static_cast<std::size_t>(m * d));
  for (int v = 0; v < m; ++v)
    for (int k = 0; k < d; ++k) stubs.push_back(v);
  for (std::size_t i = stubs.size(); i > 1; --i) std::swap(stubs[i - 1], stubs[rng.below(i)]);
  out.clear();
  for (std::size_t s = 0; s + 1 < stubs.size(); s += 2) {
    int a = stubs[s], b = stubs[s + 1];
    if (a == b) return false;
    out.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(out.begin(), out.end());
  return std::adjacent_find(out.begin(), out.end()) == out.end();
}

}  // namespace

GraphTopology generate_graph(const GraphSpec& spec) {
  const int m = spec.m;
  if (m < 1) throw std::invalid_argument("graph: m must be at least 1");
  std::vector<Edge> edges;
  switch (spec.kind) {
    case GraphKind::Path:
      for (int i = 0; i + 1 < m; ++i) edges.emplace_back(i, i + 1);
      return GraphTopology(m, std::move(edges));
    case GraphKind::Cycle:
      for (int i = 0; i + 1 < m; ++i) edges.emplace_back(i, i + 1);
      if (m >= 3) edges.emplace_back(0, m - 1);
      return GraphTopology(m, std::move(edges));
    case GraphKind::Star:
      for (int i = 1; i < m; ++i) edges.emplace_back(0, i);
      return GraphTopology(m, std::move(edges));
    case GraphKind::Complete:
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) edges.emplace_back(i, j);
      return GraphTopology(m, std::move(edges));
    case GraphKind::ErdosRenyi: {
      if (!(spec.p > 0.0 && spec.p <= 1.0)) throw std::invalid_argument("erdos_renyi: p must lie in (0, 1]");
      RandomStream rng = RandomStream::derive(spec.seed, 0, stream_tag::graph);
      for (int attempt = 0; attempt < kConnectRetries; ++attempt) {
        edges.clear();
        for (int i = 0; i < m; ++i)
          for (int j = i + 1; j < m; ++j)
            if (rng.uniform() < spec.p) edges.emplace_back(i, j);
        GraphTopology g(m, edges);
        if (g.connected()) return g;
      }
      throw std::runtime_error("erdos_renyi: no connected sample within the retry budget");
    }
    case GraphKind::Expander: {
      const int d = spec.degree;
      if (d < 2 || d % 2 != 0 || d >= m)
        throw std::invalid_argument("expander: degree must be even, at least 2 and below m");
      RandomStream rng = RandomStream::derive(spec.seed, 1, stream_tag::graph);
      // Simple pairings are rare for larger d, so each connectivity attempt
      // gets its own bounded pool of pairing draws.
      for (int attempt = 0; attempt < kConnectRetries; ++attempt) {
        for (int draw = 0; draw < 1000; ++draw) {
          if (!try_regular(m, d, rng, edges)) continue;
          GraphTopology g(m, edges);
          if (g.connected()) return g;
          break;
        }
      }
      throw std::runtime_error("expander: no connected regular graph within the retry budget");
    }
  }
  throw std::invalid_argument("graph: unknown kind");
}

LaplacianInfo build_laplacian(const GraphTopology& g) {
  if (!g.connected()) throw std::invalid_argument("laplacian: graph is disconnected");
  const int m = g.size();
  LaplacianInfo info;
  info.matrix = Eigen::MatrixXd::Zero(m, m);
  for (auto [i, j] : g.edges()) {
    info.matrix(i, j) = -1.0;
    info.matrix(j, i) = -1.0;
    info.matrix(i, i) += 1.0;
    info.matrix(j, j) += 1.0;
  }
  info.nnz_rows.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) info.nnz_rows[static_cast<std::size_t>(i)] = static_cast<int>((info.matrix.row(i).array() != 0.0).count());
  info.kappa = std::accumulate(info.nnz_rows.begin(), info.nnz_rows.end(), 0);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info.matrix);
  if (es.info() != Eigen::Success) throw std::runtime_error("laplacian: eigensolve failed");
  info.spectrum = es.eigenvalues();
  info.eigenvectors = es.eigenvectors();
  info.lambda_max = info.spectrum[m - 1];
  if (m == 1) {
    info.lambda_min_plus = 0.0;
    info.chi = 1.0;
    return info;
  }
  int zeros = 0;
  for (int k = 0; k < m; ++k)
    if (std::abs(info.spectrum[k]) < kZeroEigenvalue) ++zeros;
  if (zeros != 1) throw std::runtime_error("laplacian: kernel dimension is not one");
  info.lambda_min_plus = info.spectrum[1];
  info.chi = info.lambda_max / info.lambda_min_plus;
  return info;
}

Eigen::MatrixXd sqrt_laplacian(const LaplacianInfo& info) {
  Eigen::VectorXd roots = info.spectrum.unaryExpr([](double v) { return v < 1e-12 ? 0.0 : std::sqrt(v); });
  Eigen::MatrixXd s = info.eigenvectors * roots.asDiagonal() * info.eigenvectors.transpose();
  return 0.5 * (s + s.transpose());
}

void write_edge_list(std::ostream& os, const GraphTopology& g) {
  os << "# nodes " << g.size() << '\n';
  for (auto [i, j] : g.edges()) os << (i + 1) << ' ' << (j + 1) << '\n';
}

GraphTopology read_edge_list(std::istream& is) {
  std::vector<Edge> edges;
  int declared = -1, largest = 0;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      if (hs >> key && key == "nodes") hs >> declared;
      continue;
    }
    std::istringstream ls(line);
    int i = 0, j = 0;
    if (!(ls >> i >> j) || i < 1 || j < 1) throw std::invalid_argument("edge list: malformed line '" + line + "'");
    edges.emplace_back(i - 1, j - 1);
    largest = std::max({largest, i, j});
  }
  return GraphTopology(declared > 0 ? declared : std::max(largest, 1), std::move(edges));
}

}  // namespace qbary
