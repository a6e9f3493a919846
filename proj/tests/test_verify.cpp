#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "qbary/verify.hpp"

using namespace qbary;

namespace {

LaplacianInfo laplacian(GraphKind kind, int m) {
  GraphSpec s;
  s.kind = kind;
  s.m = m;
  return build_laplacian(generate_graph(s));
}

BarycenterProblem finite_problem(std::vector<Measure> ms, std::size_t n, double gamma) {
  return {SupportGrid::uniform_1d(n, 0.0, 1.0), CostOracle(CostKind::SquaredEuclidean, 1.0), std::move(ms), 4 * gamma,
          std::exp(1.0), gamma};
}

}  // namespace

TEST_SUITE("verify") {

TEST_CASE("finite differences of polynomials") {
  const Vector a = (Vector(3) << 1.0, -2.0, 0.5).finished();
  const Vector x = (Vector(3) << 0.3, 0.1, -0.7).finished();
  const auto lin = finite_diff_gradient([&](const Vector& v) { return a.dot(v); }, x, 1e-4);
  CHECK((lin - a).cwiseAbs().maxCoeff() <= 1e-10);
  const auto quad = finite_diff_gradient([](const Vector& v) { return v.squaredNorm(); }, x, 1e-3);
  CHECK((quad - 2 * x).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("blockwise application") {
  const Eigen::Matrix2d S{{1, 2}, {3, 4}};
  const Vector x = (Vector(4) << 1, 2, 3, 4).finished();
  const Vector y = apply_blockwise(S, x, 2);
  CHECK(y == (Vector(4) << 7, 10, 15, 22).finished());
}

TEST_CASE("stacked oracle gradient matches finite differences") {
  const auto lap = laplacian(GraphKind::Path, 3);
  const auto prob = finite_problem({Measure::finite({0.1, 0.4}, {0.3, 0.7}), Measure::finite({0.6}, {1.0}),
                                    Measure::finite({0.2, 0.9}, {0.5, 0.5})},
                                   4, 0.2);
  StackedDualOracle oracle(prob, lap);
  RandomStream rs(4);
  Vector lam(12);
  for (auto& v : lam) v = rs.normal() * 0.1;
  const Vector fd = finite_diff_gradient([&](const Vector& v) { return *oracle.value(v); }, lam, 1e-5);
  CHECK((fd - *oracle.exact_gradient(lam)).cwiseAbs().maxCoeff() <= 1e-7);
  const auto q = oracle.query(lam, rs);
  CHECK((q.gradient - *oracle.exact_gradient(lam)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((q.primal - oracle.exact_local_gradients(lam)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("reference matches the closed form on two Diracs") {
  const auto prob = finite_problem({Measure::finite({0.0}, {1.0}), Measure::finite({1.0}, {1.0})}, 3, 0.1);
  const auto ref = reference_barycenter(prob, laplacian(GraphKind::Complete, 2));
  std::ifstream in(std::string(QBARY_FIXTURE_DIR) + "/k2_two_dirac_reference.csv");
  REQUIRE(in);
  const Fixture f = read_fixture(in);
  REQUIRE(f.rows.size() == 3);
  for (std::size_t l = 0; l < 3; ++l) {
    CHECK(std::abs(ref.p_average[static_cast<Eigen::Index>(l)] - f.rows[l][1]) <= 1e-6);
    for (const auto& p : ref.p_star) CHECK(std::abs(p[static_cast<Eigen::Index>(l)] - f.rows[l][1]) <= 1e-6);
  }
  CHECK(ref.residual < 1e-8);
}

TEST_CASE("reference symmetries") {
  SUBCASE("identical measures") {
    const Measure mu = Measure::finite({0.25, 0.8}, {0.6, 0.4});
    const auto prob = finite_problem({mu, mu, mu}, 5, 0.1);
    const auto ref = reference_barycenter(prob, laplacian(GraphKind::Path, 3));
    const auto grid = SupportGrid::uniform_1d(5, 0.0, 1.0);
    const Vector expect = exact_gradient_finite(Vector::Zero(5), mu, grid, prob.cost, 0.1);
    CHECK((ref.p_average - expect).cwiseAbs().maxCoeff() <= 1e-6);
  }
  SUBCASE("mirrored measures give a palindromic barycenter") {
    const auto prob = finite_problem({Measure::finite({0.1, 0.3}, {0.5, 0.5}), Measure::finite({0.7, 0.9}, {0.5, 0.5})},
                                     7, 0.05);
    const auto ref = reference_barycenter(prob, laplacian(GraphKind::Complete, 2));
    CHECK((ref.p_average - ref.p_average.reverse()).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("reference input checks") {
  const auto prob = finite_problem({Measure::gaussian(0.5, 0.1), Measure::finite({1.0}, {1.0})}, 3, 0.1);
  CHECK_THROWS(reference_barycenter(prob, laplacian(GraphKind::Complete, 2)));
  const auto ok = finite_problem({Measure::finite({0.0}, {1.0}), Measure::finite({1.0}, {1.0})}, 3, 0.1);
  ReferenceOptions o;
  o.max_iterations = 3;
  CHECK_THROWS_AS(reference_barycenter(ok, laplacian(GraphKind::Complete, 2), o), std::runtime_error);
}

TEST_CASE("variance statistics") {
  const auto lap = laplacian(GraphKind::Complete, 2);
  const auto prob = finite_problem({Measure::finite({0.0, 0.5}, {0.5, 0.5}), Measure::finite({1.0}, {1.0})}, 3, 0.1);
  const std::vector<DualPotential> bars{Vector::Zero(3), Vector::LinSpaced(3, -0.1, 0.1)};

  const auto exact = lemma3_statistics(prob, lap, bars, 1, 1, 50, 1, Mode::Exact);
  CHECK(exact.empirical_variance == 0.0);
  CHECK(exact.mean_error.cwiseAbs().maxCoeff() == 0.0);

  const auto r1 = lemma3_statistics(prob, lap, bars, 1, 1, 2000, 2);
  CHECK(r1.bound == doctest::Approx(16.0));
  CHECK(r1.empirical_variance <= r1.bound);
  const auto r2 = lemma3_statistics(prob, lap, bars, 2, 2, 2000, 3);
  CHECK(r2.bound == doctest::Approx(8.0));
  CHECK(r2.trials == 2000);
}

TEST_CASE("fixture round trip") {
  Fixture f;
  f.comments = {"generated for a test", "second line"};
  f.columns = {"a", "b"};
  f.rows = {{0.1, 1e-300}, {-3.0, 0.70509460661205073}};
  std::stringstream ss;
  write_fixture(ss, f);
  const Fixture g = read_fixture(ss);
  CHECK(g.comments == f.comments);
  CHECK(g.columns == f.columns);
  CHECK(g.rows == f.rows);
}

}
