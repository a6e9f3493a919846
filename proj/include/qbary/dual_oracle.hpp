#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qbary/problem.hpp"
#include "qbary/random.hpp"

namespace qbary {

/// Per-agent dual potential: the transformed variable m [sqrt(W) lambda]_i.
using DualPotential = Vector;
/// Nonnegative n-vector summing to one.
using SimplexVector = Vector;

/// True when entries are nonnegative and sum to one within tol.
bool is_simplex(const Vector& p, double tol = 1e-12);

/// softmax((lam - c) / gamma) with max-subtraction.
SimplexVector softmax_transport_plan(const DualPotential& lam, const Vector& cvec, double gamma);
void softmax_transport_plan(const DualPotential& lam, const Vector& cvec, double gamma, Vector& out);

/// gamma * log sum exp((lam - c) / gamma) with max-subtraction.
double log_sum_exp(const DualPotential& lam, const Vector& cvec, double gamma);

/// Average of M1 transport plans at i.i.d. samples Y_r ~ measure.
SimplexVector sampled_gradient(const DualPotential& lam, const Measure& measure, const SupportGrid& grid,
                               const CostOracle& cost, std::size_t M1, double gamma, RandomStream& stream);

/// Sparse categorical histogram: sorted (coordinate, count) pairs with
/// counts summing to the number of draws.
struct Histogram {
  std::vector<std::pair<std::size_t, std::size_t>> entries;
  std::size_t draws = 0;

  /// counts / draws as a dense n-vector.
  SimplexVector decode(std::size_t n) const;
};

/// Histogram of categorical draws from pbar, one per uniform in u, selecting
/// the first coordinate whose cumulative mass exceeds u.
Histogram quantize_from_uniforms(const SimplexVector& pbar, std::span<const double> u);

/// M2 categorical draws from pbar; consumes exactly M2 uniforms.
Histogram quantize_histogram(const SimplexVector& pbar, std::size_t M2, RandomStream& stream);
SimplexVector quantize_gradient(const SimplexVector& pbar, std::size_t M2, RandomStream& stream);

/// Exact expectation of the transport plan over a finite-support measure.
/// Throws std::invalid_argument for other measures.
SimplexVector exact_gradient_finite(const DualPotential& lam, const Measure& measure, const SupportGrid& grid,
                                    const CostOracle& cost, double gamma);

/// Monte-Carlo estimate of E_Y[gamma log sum_l exp((lam_l - c_l(Y)) / gamma)],
/// the local dual value without the lambda-independent -gamma E log q(Y) term.
double dual_local_value(const DualPotential& lam, const Measure& measure, const SupportGrid& grid,
                        const CostOracle& cost, double gamma, std::size_t M, RandomStream& stream);

/// Same quantity with the expectation taken exactly over a finite support.
double dual_local_value_exact(const DualPotential& lam, const Measure& measure, const SupportGrid& grid,
                              const CostOracle& cost, double gamma);

/// Gradient Lipschitz constant of the stacked dual: m * lambda_max / gamma.
double lipschitz_constant(int m, double lambda_max, double gamma);

/// Bound on the norm of a dual solution for costs normalized to [0, 1]:
/// sqrt(2n / (m * lambda_min_plus)). Throws std::domain_error when
/// lambda_min_plus is not positive.
double dual_radius_bound(std::size_t n, int m, double lambda_min_plus);

/// Finite-support measures evaluate exactly, others by Monte-Carlo.
double dual_local_value_auto(const DualPotential& lam, const Measure& measure, const SupportGrid& grid,
                             const CostOracle& cost, double gamma, std::size_t M, RandomStream& stream);

}  // namespace qbary
