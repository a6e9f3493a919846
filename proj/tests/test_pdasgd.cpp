#include <doctest.h>

#include <cmath>

#include "qbary/pdasgd.hpp"

using namespace qbary;

namespace {

// min 1/2 ||x - (1, 3)||^2 s.t. x1 - x2 = 0. Dual: phi(l) = l^2 + 2l, x(l) = c - A^T l.
class QuadraticOracle : public StochasticDualOracle {
public:
  Eigen::Index dual_dim() const override { return 1; }
  Sample query(const Vector& lambda, RandomStream&) override {
    ++queries;
    return {*exact_gradient(lambda), primal(lambda)};
  }
  std::optional<Vector> exact_gradient(const Vector& lambda) const override {
    return Vector::Constant(1, 2.0 * lambda[0] + 2.0);
  }
  std::optional<double> value(const Vector& lambda) const override { return lambda[0] * lambda[0] + 2.0 * lambda[0]; }
  std::optional<double> constraint_residual(const Vector& x) const override { return std::abs(x[0] - x[1]); }
  static Vector primal(const Vector& lambda) { return (Vector(2) << 1.0 - lambda[0], 3.0 + lambda[0]).finished(); }
  int queries = 0;
};

// Simplex-valued primal retrievals with a noisy gradient.
class NoisySimplexOracle : public StochasticDualOracle {
public:
  Eigen::Index dual_dim() const override { return 3; }
  Sample query(const Vector& lambda, RandomStream& stream) override {
    Vector x = (-lambda).array().exp();
    x /= x.sum();
    Vector g = x;
    for (Eigen::Index k = 0; k < 3; ++k) g[k] += 0.1 * stream.normal();
    return {g, x};
  }
};

}  // namespace

TEST_SUITE("pdasgd") {

TEST_CASE("schedule coefficients") {
  const Schedule a = Schedule::case_a(1.0);
  const auto c0 = schedule_coeffs(a, 0);
  CHECK(c0.alpha == doctest::Approx(0.5));
  CHECK(c0.beta == doctest::Approx(2.0));
  CHECK(c0.A == doctest::Approx(0.5));
  CHECK(c0.tau == doctest::Approx(2.0 / 3.0));

  const Schedule b = Schedule::case_b(3.0, 0.5, 2.0);
  CHECK(b.alpha(0) == doctest::Approx(1.0 / (2.0 * std::sqrt(2.0))));
  CHECK(b.A(0) == doctest::Approx(0.35355).epsilon(1e-4));
  CHECK(b.beta(0) > 3.0);
  CHECK(Schedule::case_b(3.0, 0.0, 2.0).kind == Schedule::Case::A);
  CHECK_THROWS_AS(Schedule::case_b(3.0, -1.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(Schedule::case_b(3.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("schedule identities") {
  for (const Schedule& s : {Schedule::case_a(5.0), Schedule::case_b(5.0, 2.0, 3.0)}) {
    double sum = 0.0;
    for (long k = 0; k <= 10000; ++k) {
      sum += s.alpha(k);
      if (k <= 1000) CHECK(std::abs(s.A(k) - sum) <= 1e-10 * s.A(k));
      if (k >= 1) {
        CHECK(s.alpha(k) * s.alpha(k) * s.beta(k) <= s.A(k) * s.beta(k - 1));
        CHECK(s.beta(k) >= s.beta(k - 1));
      }
    }
    CHECK(s.alpha(0) <= 1.0);
  }
}

TEST_CASE("iteration counts") {
  CHECK(iterations_case_a(4, 1, 2) == 4);
  CHECK(iterations_case_a(1, 1, 8) == 1);
  CHECK(iterations_case_a(100, 2, 0.5) == 80);
  CHECK(iterations_case_b(1, 1, 4, 0) == 1);
  CHECK(iterations_case_b(1, 1, 1, 1) == 9);
  CHECK(iterations_case_b(16, 1, 1, 0.1) == 8);
}

TEST_CASE("variance bound and batch schedule") {
  const std::vector<std::size_t> ones(2, 1), fours(2, 4);
  CHECK(variance_bound(2.0, ones, ones) == doctest::Approx(16.0));
  CHECK(variance_bound(2.0, fours, fours) == doctest::Approx(4.0));
  const std::vector<std::size_t> huge(2, 1'000'000'000);
  CHECK(variance_bound(2.0, huge, huge) < 1e-7);
  CHECK(variance_bound(2.0, ones, {}) == doctest::Approx(8.0));
  CHECK(batch_schedule_a(0, std::exp(1.0)) == 2);
  CHECK(batch_schedule_a(0, std::exp(10.0)) == 1);
  CHECK(batch_schedule_a(98, std::exp(10.0)) == 10);
}

TEST_CASE("quadratic test problem") {
  QuadraticOracle oracle;
  const double L = 2.0, R = 1.0;
  const long N = iterations_case_a(L, R, 1e-8 * 8.0 * L * R * R);
  RandomStream rs(0);
  const auto res = pdasgd_run(oracle, Schedule::case_a(L), N, rs);
  CHECK((res.x_hat - Eigen::Vector2d(2.0, 2.0)).norm() <= 1e-4);
  CHECK(oracle.queries == N + 1);
}

TEST_CASE("constraint residual falls below eps / R") {
  const double L = 2.0, R = 1.0;
  double prev = INFINITY;
  for (double eps : {1e-2, 1e-4}) {
    QuadraticOracle oracle;
    RandomStream rs(0);
    const long N = iterations_case_a(L, R, eps);
    const auto res = pdasgd_run(oracle, Schedule::case_a(L), N, rs);
    const double r = *oracle.constraint_residual(res.x_hat);
    CHECK(r <= eps / R);
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("dual value decays quadratically") {
  const double L = 2.0, phi_star = -1.0;
  auto gap = [&](long N) {
    QuadraticOracle oracle;
    RandomStream rs(0);
    // Start away from the optimum so the gap is not already zero.
    PdasgdOptions opt;
    opt.start = Vector::Constant(1, 5.0);
    const auto res = pdasgd_run(oracle, Schedule::case_a(L), N, rs, opt);
    return *oracle.value(res.eta) - phi_star;
  };
  for (long N : {4, 8, 16}) CHECK(gap(N) / gap(2 * N) >= 3.0);
}

TEST_CASE("deterministic runs are bit-identical") {
  QuadraticOracle o1, o2;
  RandomStream r1(5), r2(9);
  const auto a = pdasgd_run(o1, Schedule::case_a(2.0), 50, r1);
  const auto b = pdasgd_run(o2, Schedule::case_a(2.0), 50, r2);
  CHECK(a.eta == b.eta);
  CHECK(a.x_hat == b.x_hat);
}

TEST_CASE("z equals the recomputed weighted gradient sum") {
  NoisySimplexOracle oracle;
  const Schedule s = Schedule::case_b(4.0, 0.3, 2.0);
  std::vector<Vector> grads;
  std::vector<SolverState> states;
  PdasgdOptions opt;
  opt.observer = [&](const SolverState& st) { states.push_back(st); };
  RandomStream rs(21);
  pdasgd_run(oracle, s, 20, rs, opt);
  // grad of the initial state is g_0; each later state's grad is g_{k+1}.
  for (const auto& st : states) grads.push_back(st.grad);
  for (std::size_t k = 1; k < states.size(); ++k) {
    const long kk = states[k].k;
    Vector sum = Vector::Zero(3);
    for (long l = 0; l <= kk; ++l) sum += s.alpha(l) * grads[static_cast<std::size_t>(l)];
    CHECK((states[k].z + sum / s.beta(kk)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(states[k].x_hat.sum() - 1.0) <= 1e-12);
    CHECK(states[k].x_hat.minCoeff() >= 0.0);
  }
}

TEST_CASE("non-finite oracle output fails") {
  class Broken : public StochasticDualOracle {
  public:
    Eigen::Index dual_dim() const override { return 1; }
    Sample query(const Vector&, RandomStream&) override { return {Vector::Constant(1, NAN), Vector::Zero(1)}; }
  } broken;
  RandomStream rs(0);
  CHECK_THROWS_AS(pdasgd_run(broken, Schedule::case_a(1.0), 3, rs), std::runtime_error);
}

}
