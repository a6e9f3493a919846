#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "qbary/random.hpp"

namespace qbary {

using Vector = Eigen::VectorXd;

/// Coefficient sequences of the accelerated method.
///
/// Case A: alpha_k = (k+1)/2, A_k = (k+1)(k+2)/4, beta_k = 2L.
/// Case B: alpha_k = (k+1)/(2 sqrt 2), A_k = (k+1)(k+2)/(4 sqrt 2),
///         beta_k = L + sigma (k+2)^{3/2} / (2^{1/4} sqrt(3) R).
/// Both satisfy A_k = sum_{l<=k} alpha_l and the coupling condition
/// alpha_k^2 beta_k <= A_k beta_{k-1}.
struct Schedule {
  enum class Case { A, B };

  Case kind = Case::A;
  double L = 1.0;
  double sigma = 0.0;
  double R = 1.0;

  static Schedule case_a(double L);
  /// Falls back to Case A when sigma == 0. Throws std::invalid_argument for
  /// negative sigma or non-positive R.
  static Schedule case_b(double L, double sigma, double R);

  double alpha(long k) const;
  double beta(long k) const;
  double A(long k) const;
  double tau(long k) const { return alpha(k + 1) / A(k + 1); }
};

struct Coefficients {
  double alpha;
  double beta;
  double A;
  double tau;
};

Coefficients schedule_coeffs(const Schedule& sched, long k);

/// Stochastic first-order oracle for the dual of min { f(x) : x in Q, Ax = b }.
/// One query returns the stochastic dual gradient and the primal retrieval
/// x(-A^T lambda, xi) drawn with the same randomness.
class StochasticDualOracle {
public:
  struct Sample {
    Vector gradient;
    Vector primal;
  };

  virtual ~StochasticDualOracle() = default;
  virtual Eigen::Index dual_dim() const = 0;
  virtual Sample query(const Vector& lambda, RandomStream& stream) = 0;

  /// Optional hooks for monitoring and verification.
  virtual std::optional<Vector> exact_gradient(const Vector&) const { return std::nullopt; }
  virtual std::optional<double> value(const Vector&) const { return std::nullopt; }
  virtual std::optional<double> constraint_residual(const Vector&) const { return std::nullopt; }
};

/// Iterates after step k (index k + 1 quantities). Before the first step,
/// k == -1 and only lambda, eta, zeta, z, s and x_hat are meaningful.
struct SolverState {
  long k = -1;
  Vector lambda, eta, zeta, z;
  Vector s;       // sum_{l<=k} alpha_l g_l
  Vector x_hat;   // (1/A_{k+1}) sum_{l<=k+1} alpha_l x_l
  Vector grad;    // most recent gradient g_{k+1}
  double A_acc = 0.0;
};

struct IterationRecord {
  long iteration;                   // number of completed steps
  std::optional<double> dual_value;  // phi(eta)
  std::optional<double> residual;    // ||A x_hat - b||
};

struct PdasgdOptions {
  /// Prox center and starting point; zero when empty.
  Vector start;
  /// Record every stride-th iteration plus the last one.
  std::size_t record_stride = 1;
  /// Called after initialization and after every step.
  std::function<void(const SolverState&)> observer;
  /// Early exit once this returns true (checked after every step).
  std::function<bool(const SolverState&)> stop;
};

struct PdasgdResult {
  Vector lambda;
  Vector eta;
  Vector x_hat;
  long iterations = 0;
  std::vector<IterationRecord> trajectory;
};

/// Primal-dual accelerated stochastic gradient method with the Euclidean prox
/// function. Runs N steps (fewer if options.stop fires). Throws
/// std::runtime_error on a non-finite oracle output.
PdasgdResult pdasgd_run(StochasticDualOracle& oracle, const Schedule& sched, long N, RandomStream& stream,
                        const PdasgdOptions& options = {});

/// ceil(sqrt(8 L R^2 / eps)).
long iterations_case_a(double L, double R, double epsilon);
/// ceil(max{sqrt(4 L R^2 / eps), 9 sigma^2 R^2 / eps^2}).
long iterations_case_b(double L, double R, double epsilon, double sigma);

/// 2 lambda_max * sum_i (1/M1_i + 1/M2_i). An empty M2 list drops the
/// quantization term.
double variance_bound(double lambda_max, std::span<const std::size_t> M1, std::span<const std::size_t> M2);

/// max{1, ceil((k + 2) / ln omega)}.
std::size_t batch_schedule_a(long k, double omega);

}  // namespace qbary
