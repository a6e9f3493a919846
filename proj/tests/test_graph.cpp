#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qbary/graph.hpp"

using namespace qbary;

namespace {

GraphTopology make(GraphKind kind, int m, std::uint64_t seed = 0, double p = 0.5, int degree = 4) {
  GraphSpec s;
  s.kind = kind;
  s.m = m;
  s.seed = seed;
  s.p = p;
  s.degree = degree;
  return generate_graph(s);
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("deterministic generators") {
  const auto path = make(GraphKind::Path, 4);
  const std::vector<GraphTopology::Edge> expect{{0, 1}, {1, 2}, {2, 3}};
  CHECK(path.edges() == expect);
  CHECK(make(GraphKind::Complete, 3).edges().size() == 3);
  CHECK(make(GraphKind::Cycle, 5).edges().size() == 5);
  CHECK(make(GraphKind::Star, 6).degrees()[0] == 5);
}

TEST_CASE("erdos-renyi edge set is reproducible") {
  const auto g = make(GraphKind::ErdosRenyi, 10, 7);
  CHECK(g.connected());
  CHECK(g.edges() == make(GraphKind::ErdosRenyi, 10, 7).edges());
  std::ifstream in(QBARY_FIXTURE_DIR "/er_p0.5_m10_seed7.edges");
  REQUIRE(in);
  const auto fixture = read_edge_list(in);
  CHECK(fixture.size() == 10);
  CHECK(g.edges() == fixture.edges());
}

TEST_CASE("unconnectable parameters fail") {
  CHECK_THROWS_AS(make(GraphKind::ErdosRenyi, 30, 1, 1e-6), std::runtime_error);
  CHECK_THROWS_AS(make(GraphKind::ErdosRenyi, 30, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make(GraphKind::Expander, 10, 1, 0.5, 3), std::invalid_argument);
  CHECK_THROWS_AS(make(GraphKind::Expander, 4, 1, 0.5, 4), std::invalid_argument);
}

TEST_CASE("expander degrees") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto g = make(GraphKind::Expander, 20, seed, 0.5, 4);
    CHECK(g.connected());
    for (int d : g.degrees()) CHECK(d == 4);
  }
}

TEST_CASE("topology validation") {
  CHECK_THROWS_AS(GraphTopology(3, {{0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(GraphTopology(3, {{0, 1}, {1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(GraphTopology(3, {{0, 3}}), std::invalid_argument);
  CHECK_FALSE(GraphTopology(3, {{0, 1}}).connected());
  CHECK_THROWS_AS(build_laplacian(GraphTopology(3, {{0, 1}})), std::invalid_argument);
}

TEST_CASE("laplacian of K2") {
  const auto info = build_laplacian(make(GraphKind::Complete, 2));
  Eigen::Matrix2d W;
  W << 1, -1, -1, 1;
  CHECK(info.matrix == W);
  CHECK(info.lambda_max == doctest::Approx(2.0));
  CHECK(info.lambda_min_plus == doctest::Approx(2.0));
  CHECK(info.chi == doctest::Approx(1.0));
  const Eigen::MatrixXd S = sqrt_laplacian(info);
  CHECK((S - W / std::sqrt(2.0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("laplacian of path-3") {
  const auto info = build_laplacian(make(GraphKind::Path, 3));
  Eigen::Matrix3d W;
  W << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  CHECK(info.matrix == W);
  CHECK(info.spectrum[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(info.spectrum[1] == doctest::Approx(1.0));
  CHECK(info.spectrum[2] == doctest::Approx(3.0));
  CHECK(info.chi == doctest::Approx(3.0));
  CHECK(info.kappa == 7);
}

TEST_CASE("laplacian of K3") {
  const auto info = build_laplacian(make(GraphKind::Complete, 3));
  CHECK(info.matrix.diagonal() == Eigen::Vector3d(2, 2, 2));
  CHECK(info.matrix(0, 1) == -1.0);
  CHECK(info.spectrum[1] == doctest::Approx(3.0));
  CHECK(info.spectrum[2] == doctest::Approx(3.0));
  CHECK(info.chi == doctest::Approx(1.0));
  CHECK(info.kappa == 9);
}

TEST_CASE("single node") {
  const auto info = build_laplacian(GraphTopology(1, {}));
  CHECK(info.lambda_max == 0.0);
  CHECK(info.chi == 1.0);
}

TEST_CASE("laplacian invariants on generated graphs") {
  std::vector<GraphTopology> graphs{make(GraphKind::Path, 7),       make(GraphKind::Cycle, 8),
                                    make(GraphKind::Star, 6),       make(GraphKind::Complete, 5),
                                    make(GraphKind::ErdosRenyi, 12, 3), make(GraphKind::Expander, 10, 4, 0.5, 4)};
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (const auto& g : graphs) {
    const auto info = build_laplacian(g);
    const auto& W = info.matrix;
    CHECK(W == W.transpose());
    for (Eigen::Index i = 0; i < W.rows(); ++i) CHECK(W.row(i).sum() == 0.0);
    CHECK(info.lambda_min_plus > 0.0);
    CHECK(info.chi >= 1.0);
    CHECK(info.kappa == g.size() + 2 * static_cast<int>(g.edges().size()));
    int zeros = 0;
    for (Eigen::Index k = 0; k < info.spectrum.size(); ++k) zeros += std::abs(info.spectrum[k]) < kZeroEigenvalue;
    CHECK(zeros == 1);
    for (int t = 0; t < 100; ++t) {
      Eigen::VectorXd v(W.rows());
      for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = nd(rng);
      CHECK(v.dot(W * v) >= -1e-10);
    }
    const Eigen::MatrixXd S = sqrt_laplacian(info);
    CHECK((S * S - W).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((S * Eigen::VectorXd::Ones(W.rows())).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("edge list round trip") {
  const auto g = make(GraphKind::Cycle, 5);
  std::stringstream ss;
  write_edge_list(ss, g);
  const auto back = read_edge_list(ss);
  CHECK(back.size() == 5);
  CHECK(back.edges() == g.edges());
}

TEST_CASE("graph kind names") {
  for (auto k : {GraphKind::Path, GraphKind::Cycle, GraphKind::Star, GraphKind::Complete, GraphKind::ErdosRenyi,
                 GraphKind::Expander})
    CHECK(parse_graph_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_graph_kind("torus"), std::invalid_argument);
}

}
