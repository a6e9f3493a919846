#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace qbary {

/// Undirected simple graph on nodes 0..m-1. Edges are stored with i < j,
/// sorted lexicographically.
class GraphTopology {
public:
  using Edge = std::pair<int, int>;

  GraphTopology() = default;
  /// Normalizes orientation and order; rejects self-loops, duplicates and
  /// out-of-range endpoints.
  GraphTopology(int m, std::vector<Edge> edges);

  int size() const { return m_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::vector<int> degrees() const;
  bool connected() const;

private:
  int m_ = 0;
  std::vector<Edge> edges_;
};

enum class GraphKind { Path, Cycle, Star, Complete, ErdosRenyi, Expander };

struct GraphSpec {
  GraphKind kind = GraphKind::Path;
  int m = 2;
  double p = 0.5;   // ErdosRenyi edge probability
  int degree = 4;   // Expander regular degree
  std::uint64_t seed = 0;
};

GraphKind parse_graph_kind(const std::string& name);
std::string to_string(GraphKind kind);

inline constexpr int kConnectRetries = 100;

/// Random kinds are resampled until connected, at most kConnectRetries times;
/// throws std::runtime_error when the budget is exhausted.
GraphTopology generate_graph(const GraphSpec& spec);

/// Laplacian with its spectral summary.
struct LaplacianInfo {
  Eigen::MatrixXd matrix;
  double lambda_max = 0.0;
  double lambda_min_plus = 0.0;
  double chi = 1.0;
  std::vector<int> nnz_rows;
  int kappa = 0;
  /// Ascending eigenvalues.
  Eigen::VectorXd spectrum;
  Eigen::MatrixXd eigenvectors;

  int size() const { return static_cast<int>(matrix.rows()); }
};

inline constexpr double kZeroEigenvalue = 1e-8;

/// Throws std::invalid_argument for disconnected graphs. A single node yields
/// the 1x1 zero Laplacian with lambda_max = lambda_min_plus = 0 and chi = 1.
LaplacianInfo build_laplacian(const GraphTopology& g);

/// Symmetric PSD square root; eigenvalues below 1e-12 are clamped to zero.
Eigen::MatrixXd sqrt_laplacian(const LaplacianInfo& info);

/// Edge list, one 1-indexed "i j" pair per line, preceded by "# nodes m".
void write_edge_list(std::ostream& os, const GraphTopology& g);
/// Lines starting with '#' are comments except "# nodes m". Without that
/// header the node count is the largest index seen.
GraphTopology read_edge_list(std::istream& is);

}  // namespace qbary
