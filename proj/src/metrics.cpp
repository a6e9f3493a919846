#include "qbary/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qbary {

namespace {
void check_shapes(const std::vector<SimplexVector>& p_hats, const LaplacianInfo& laplacian) {
  if (static_cast<int>(p_hats.size()) != laplacian.size())
    throw std::invalid_argument("consensus_gap: need one vector per agent");
  for (const auto& p : p_hats)
    if (p.size() != p_hats.front().size()) throw std::invalid_argument("consensus_gap: dimension mismatch");
}
}  // namespace

ConsensusReport consensus_gap(const std::vector<SimplexVector>& p_hats, const LaplacianInfo& laplacian) {
  check_shapes(p_hats, laplacian);
  const int m = laplacian.size();
  ConsensusReport out;
  double quad = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double w = laplacian.matrix(i, j);
      if (w != 0.0) quad += w * p_hats[static_cast<std::size_t>(i)].dot(p_hats[static_cast<std::size_t>(j)]);
    }
    for (int j = i + 1; j < m; ++j)
      out.gap_max = std::max(out.gap_max, (p_hats[static_cast<std::size_t>(i)] - p_hats[static_cast<std::size_t>(j)]).norm());
  }
  out.gap_w = std::sqrt(std::max(quad, 0.0));
  return out;
}

std::vector<ConsensusReport> consensus_gap_per_agent(const std::vector<SimplexVector>& p_hats,
                                                     const LaplacianInfo& laplacian) {
  check_shapes(p_hats, laplacian);
  const int m = laplacian.size();
  std::vector<ConsensusReport> out(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    double edge_sum = 0.0;
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      const double d = (p_hats[static_cast<std::size_t>(i)] - p_hats[static_cast<std::size_t>(j)]).norm();
      if (laplacian.matrix(i, j) != 0.0) edge_sum += d * d;
      out[static_cast<std::size_t>(i)].gap_max = std::max(out[static_cast<std::size_t>(i)].gap_max, d);
    }
    out[static_cast<std::size_t>(i)].gap_w = std::sqrt(0.5 * edge_sum);
  }
  return out;
}

double dual_objective_estimate(const std::vector<DualPotential>& lam_bars, const BarycenterProblem& problem,
                               std::size_t M, RandomStream& stream) {
  if (lam_bars.size() != problem.m()) throw std::invalid_argument("dual_objective_estimate: need one potential per agent");
  double acc = 0.0;
  for (std::size_t i = 0; i < lam_bars.size(); ++i)
    acc += dual_local_value_auto(lam_bars[i], problem.measures[i], problem.grid, problem.cost, problem.gamma, M, stream);
  return acc / static_cast<double>(lam_bars.size());
}

std::vector<double> local_dual_values(const std::vector<DualPotential>& lam_bars, const BarycenterProblem& problem,
                                      std::size_t M, std::uint64_t seed) {
  if (lam_bars.size() != problem.m()) throw std::invalid_argument("local_dual_values: need one potential per agent");
  std::vector<double> out(lam_bars.size());
  for (std::size_t i = 0; i < lam_bars.size(); ++i) {
    RandomStream stream = RandomStream::derive(seed, i, stream_tag::dual_value);
    out[i] = dual_local_value_auto(lam_bars[i], problem.measures[i], problem.grid, problem.cost, problem.gamma, M, stream);
  }
  return out;
}

}  // namespace qbary
