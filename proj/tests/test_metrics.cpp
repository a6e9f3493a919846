#include <doctest.h>

#include <cmath>
#include <limits>

#include "qbary/metrics.hpp"

using namespace qbary;

namespace {
// Infinite scale makes every cost zero.
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

namespace {

LaplacianInfo laplacian(GraphKind kind, int m) {
  GraphSpec s;
  s.kind = kind;
  s.m = m;
  return build_laplacian(generate_graph(s));
}

std::vector<SimplexVector> random_simplex(std::size_t m, Eigen::Index n, RandomStream& rs) {
  std::vector<SimplexVector> out;
  for (std::size_t i = 0; i < m; ++i) {
    Vector v(n);
    for (Eigen::Index l = 0; l < n; ++l) v[l] = rs.uniform() + 1e-3;
    out.push_back(v / v.sum());
  }
  return out;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("consensus gap of identical estimates is zero") {
  const Vector p = Vector::Constant(4, 0.25);
  const auto r = consensus_gap({p, p, p}, laplacian(GraphKind::Path, 3));
  CHECK(r.gap_w == 0.0);
  CHECK(r.gap_max == 0.0);
}

TEST_CASE("consensus gap on K2") {
  const Vector a = (Vector(3) << 0.5, 0.3, 0.2).finished();
  const Vector b = (Vector(3) << 0.1, 0.6, 0.3).finished();
  const auto r = consensus_gap({a, b}, laplacian(GraphKind::Complete, 2));
  CHECK(r.gap_w == doctest::Approx((a - b).norm()));
  CHECK(r.gap_max == doctest::Approx((a - b).norm()));
}

TEST_CASE("gap equals the edge sum and is bounded by the spectrum") {
  RandomStream rs(3);
  for (auto [kind, m] : {std::pair{GraphKind::Path, 3}, std::pair{GraphKind::Cycle, 6}, std::pair{GraphKind::Star, 5}}) {
    const auto lap = laplacian(kind, m);
    GraphSpec gs;
    gs.kind = kind;
    gs.m = m;
    const auto g = generate_graph(gs);
    for (int t = 0; t < 20; ++t) {
      const auto p = random_simplex(static_cast<std::size_t>(m), 5, rs);
      double edge_sum = 0.0;
      for (auto [i, j] : g.edges()) edge_sum += (p[static_cast<std::size_t>(i)] - p[static_cast<std::size_t>(j)]).squaredNorm();
      const auto r = consensus_gap(p, lap);
      CHECK(r.gap_w * r.gap_w == doctest::Approx(edge_sum));
      Vector mean = Vector::Zero(5);
      for (const auto& v : p) mean += v;
      mean /= m;
      double dev = 0.0;
      for (const auto& v : p) dev += (v - mean).squaredNorm();
      CHECK(r.gap_w * r.gap_w >= lap.lambda_min_plus * dev * (1 - 1e-12));
      CHECK(r.gap_w * r.gap_w <= lap.lambda_max * dev * (1 + 1e-12));

      const auto per = consensus_gap_per_agent(p, lap);
      double s = 0.0, worst = 0.0;
      for (const auto& a : per) {
        s += a.gap_w * a.gap_w;
        worst = std::max(worst, a.gap_max);
      }
      CHECK(s == doctest::Approx(edge_sum));
      CHECK(worst == doctest::Approx(r.gap_max));
    }
  }
}

TEST_CASE("dual objective estimate") {
  const auto grid = SupportGrid::uniform_1d(5, 0.0, 1.0);
  const CostOracle zero(CostKind::SquaredEuclidean, kInf);
  BarycenterProblem prob{grid, zero, {Measure::gaussian(0.3, 0.1), Measure::finite({0.5}, {1.0})}, 0.4,
                         std::exp(1.0), 0.25};
  RandomStream rs(1);
  CHECK(dual_objective_estimate({Vector::Zero(5), Vector::Zero(5)}, prob, 10, rs) ==
        doctest::Approx(0.25 * std::log(5.0)));

  BarycenterProblem single{grid, CostOracle(CostKind::SquaredEuclidean, 1.0), {Measure::gaussian(0.3, 0.1)}, 0.4,
                           std::exp(1.0), 0.25};
  const Vector lam = Vector::LinSpaced(5, -0.2, 0.3);
  RandomStream a(9), b(9);
  CHECK(dual_objective_estimate({lam}, single, 100, a) ==
        doctest::Approx(dual_local_value(lam, single.measures[0], grid, single.cost, 0.25, 100, b)));
}

TEST_CASE("dual estimate is permutation invariant and Monte-Carlo consistent") {
  const auto grid = SupportGrid::uniform_1d(6, 0.0, 1.0);
  const CostOracle cost(CostKind::SquaredEuclidean, 1.0);
  const Measure f1 = Measure::finite({0.1, 0.8}, {0.5, 0.5}), f2 = Measure::finite({0.4}, {1.0});
  BarycenterProblem p12{grid, cost, {f1, f2}, 0.4, std::exp(1.0), 0.1};
  BarycenterProblem p21{grid, cost, {f2, f1}, 0.4, std::exp(1.0), 0.1};
  const Vector l1 = Vector::LinSpaced(6, -0.1, 0.2), l2 = Vector::LinSpaced(6, 0.3, -0.3);
  RandomStream rs(0);
  const double v12 = dual_objective_estimate({l1, l2}, p12, 1, rs);
  CHECK(v12 == doctest::Approx(dual_objective_estimate({l2, l1}, p21, 1, rs)));
  const double exact = (dual_local_value_exact(l1, f1, grid, cost, 0.1) + dual_local_value_exact(l2, f2, grid, cost, 0.1)) / 2;
  CHECK(v12 == doctest::Approx(exact));

  const auto per = local_dual_values({l1, l2}, p12, 1, 4);
  CHECK((per[0] + per[1]) / 2 == doctest::Approx(exact));
}

}
