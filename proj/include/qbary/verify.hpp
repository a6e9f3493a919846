#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qbary/decnet.hpp"
#include "qbary/dual_oracle.hpp"
#include "qbary/graph.hpp"
#include "qbary/pdasgd.hpp"
#include "qbary/problem.hpp"

namespace qbary {

/// Central differences (f(x + h e_l) - f(x - h e_l)) / 2h.
Vector finite_diff_gradient(const std::function<double(const Vector&)>& f, const Vector& point, double h);

/// Applies (S kron I_n) to a stacked vector of m blocks of length n.
Vector apply_blockwise(const Eigen::MatrixXd& S, const Vector& stacked, Eigen::Index n);

/// The stacked dual phi(lambda) = (1/m) sum_i W*_i(m [sqrt(W) lambda]_i) over
/// lambda in R^{mn}, with gradient sqrt(W) [g_1; ...; g_m] and primal
/// retrieval [g_1; ...; g_m]. In Exact mode the local gradients are exact
/// expectations; otherwise each query draws M1 samples per agent (and M2
/// categorical draws in Quantized mode) from per-agent streams seeded from the
/// query stream.
class StackedDualOracle : public StochasticDualOracle {
public:
  StackedDualOracle(const BarycenterProblem& problem, const LaplacianInfo& laplacian, Mode mode = Mode::Exact,
                    std::size_t M1 = 1, std::size_t M2 = 1);

  Eigen::Index dual_dim() const override { return static_cast<Eigen::Index>(n_ * m_); }
  Sample query(const Vector& lambda, RandomStream& stream) override;
  std::optional<Vector> exact_gradient(const Vector& lambda) const override;
  std::optional<double> value(const Vector& lambda) const override;
  std::optional<double> constraint_residual(const Vector& x) const override;

  /// lam_bar_i = m [sqrt(W) lambda]_i.
  std::vector<DualPotential> lam_bars(const Vector& lambda) const;
  /// Local gradients (exact) stacked.
  Vector exact_local_gradients(const Vector& lambda) const;
  const Eigen::MatrixXd& sqrt_w() const { return sqrt_w_; }

private:
  const BarycenterProblem& problem_;
  Eigen::MatrixXd sqrt_w_;
  Mode mode_;
  std::size_t M1_, M2_;
  std::size_t n_, m_;
};

struct ReferenceOptions {
  double tol = 1e-8;
  long max_iterations = 1'000'000;
  /// Nonzero: start from a random point of norm `perturbation` drawn with this seed.
  std::uint64_t perturbation_seed = 0;
  double perturbation = 0.0;
};

struct ReferenceSolution {
  std::vector<SimplexVector> p_star;  // per agent
  SimplexVector p_average;
  Vector lambda_star;
  double dual_value = 0.0;
  double residual = 0.0;
  long iterations = 0;
};

/// High-precision barycenter of a finite-support instance: the deterministic
/// Case-A method on the stacked dual, stopped once ||sqrt(W) p_hat|| and the
/// change of phi(eta) between consecutive steps are both below tol. Throws
/// std::runtime_error when the iteration cap is reached first.
ReferenceSolution reference_barycenter(const BarycenterProblem& problem, const LaplacianInfo& laplacian,
                                       const ReferenceOptions& options = {});

struct Lemma3Report {
  Vector mean_error;      // per coordinate: empirical mean minus exact gradient
  Vector standard_error;  // per coordinate: sqrt(sample variance / trials)
  double empirical_variance = 0.0;  // mean of ||g~ - grad||^2
  double bound = 0.0;               // 2 lambda_max sum_i (1/M1 + 1/M2)
  std::size_t trials = 0;

  /// Largest |mean_error| / standard_error, treating zero-variance coordinates
  /// as exact (any deviation above 1e-12 counts as infinite).
  double max_z_score() const;
};

/// Monte-Carlo statistics of the stacked quantized gradient sqrt(W) [g~_i]
/// at fixed potentials against the exact stacked gradient. Mode::Exact
/// replaces every local estimate by its expectation.
Lemma3Report lemma3_statistics(const BarycenterProblem& problem, const LaplacianInfo& laplacian,
                               const std::vector<DualPotential>& lam_bars, std::size_t M1, std::size_t M2,
                               std::size_t trials, std::uint64_t seed, Mode mode = Mode::Quantized);

/// Fixture CSV: '#'-prefixed comment lines holding the generating config, a
/// header row, then numeric rows.
struct Fixture {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_fixture(std::ostream& os, const Fixture& fixture);
Fixture read_fixture(std::istream& is);

}  // namespace qbary
