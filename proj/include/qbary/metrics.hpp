#pragma once

#include <cstdint>
#include <vector>

#include "qbary/dual_oracle.hpp"
#include "qbary/graph.hpp"
#include "qbary/problem.hpp"

namespace qbary {

/// Disagreement among the agents' barycenter estimates.
struct ConsensusReport {
  double gap_w = 0.0;    // sqrt(sum_ij Wbar_ij <p_i, p_j>)
  double gap_max = 0.0;  // max_ij ||p_i - p_j||_2
};

ConsensusReport consensus_gap(const std::vector<SimplexVector>& p_hats, const LaplacianInfo& laplacian);

/// Per-agent share of the consensus gaps: gap_w_i^2 = (1/2) sum_{j~i} ||p_i - p_j||^2,
/// so that sum_i gap_w_i^2 = gap_w^2; gap_max_i = max_j ||p_i - p_j||.
std::vector<ConsensusReport> consensus_gap_per_agent(const std::vector<SimplexVector>& p_hats,
                                                     const LaplacianInfo& laplacian);

/// (1/m) sum_i W*_i(lam_bar_i), finite supports evaluated exactly, other
/// measures with M Monte-Carlo draws each taken in agent order from stream.
double dual_objective_estimate(const std::vector<DualPotential>& lam_bars, const BarycenterProblem& problem,
                               std::size_t M, RandomStream& stream);

/// Per-agent local dual values where agent i draws from its own stream
/// derived from (seed, i). Fixing the seed across rounds evaluates every
/// round on the same samples.
std::vector<double> local_dual_values(const std::vector<DualPotential>& lam_bars, const BarycenterProblem& problem,
                                      std::size_t M, std::uint64_t seed);

}  // namespace qbary
