#include "qbary/verify.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qbary {

Vector finite_diff_gradient(const std::function<double(const Vector&)>& f, const Vector& point, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_gradient: h must be positive");
  Vector grad(point.size());
  Vector x = point;
  for (Eigen::Index l = 0; l < point.size(); ++l) {
    x[l] = point[l] + h;
    const double up = f(x);
    x[l] = point[l] - h;
    const double down = f(x);
    x[l] = point[l];
    grad[l] = (up - down) / (2.0 * h);
  }
  return grad;
}

Vector apply_blockwise(const Eigen::MatrixXd& S, const Vector& stacked, Eigen::Index n) {
  const Eigen::Index m = S.rows();
  if (stacked.size() != n * m) throw std::invalid_argument("apply_blockwise: dimension mismatch");
  Eigen::Map<const Eigen::MatrixXd> X(stacked.data(), n, m);
  Vector out(n * m);
  Eigen::Map<Eigen::MatrixXd> Y(out.data(), n, m);
  Y.noalias() = X * S.transpose();
  return out;
}

StackedDualOracle::StackedDualOracle(const BarycenterProblem& problem, const LaplacianInfo& laplacian, Mode mode,
                                     std::size_t M1, std::size_t M2)
    : problem_(problem), sqrt_w_(sqrt_laplacian(laplacian)), mode_(mode), M1_(M1), M2_(M2),
      n_(problem.n()), m_(problem.m()) {
  if (static_cast<std::size_t>(laplacian.size()) != m_)
    throw std::invalid_argument("stacked oracle: graph size differs from the number of measures");
  if (mode_ == Mode::Exact)
    for (const auto& mu : problem_.measures)
      if (!mu.exact_expectation_supported()) throw std::invalid_argument("stacked oracle: exact mode needs finite supports");
}

std::vector<DualPotential> StackedDualOracle::lam_bars(const Vector& lambda) const {
  const auto n = static_cast<Eigen::Index>(n_);
  const Vector t = static_cast<double>(m_) * apply_blockwise(sqrt_w_, lambda, n);
  std::vector<DualPotential> out;
  for (std::size_t i = 0; i < m_; ++i) out.push_back(t.segment(static_cast<Eigen::Index>(i) * n, n));
  return out;
}

Vector StackedDualOracle::exact_local_gradients(const Vector& lambda) const {
  const auto n = static_cast<Eigen::Index>(n_);
  const auto bars = lam_bars(lambda);
  Vector g(n * static_cast<Eigen::Index>(m_));
  for (std::size_t i = 0; i < m_; ++i)
    g.segment(static_cast<Eigen::Index>(i) * n, n) =
        exact_gradient_finite(bars[i], problem_.measures[i], problem_.grid, problem_.cost, problem_.gamma);
  return g;
}

StochasticDualOracle::Sample StackedDualOracle::query(const Vector& lambda, RandomStream& stream) {
  const auto n = static_cast<Eigen::Index>(n_);
  Vector local;
  if (mode_ == Mode::Exact) {
    local = exact_local_gradients(lambda);
  } else {
    const auto bars = lam_bars(lambda);
    local.resize(n * static_cast<Eigen::Index>(m_));
    const std::uint64_t query_seed = stream.next_u64();
    for (std::size_t i = 0; i < m_; ++i) {
      RandomStream ys = RandomStream::derive(query_seed, i, stream_tag::samples);
      Vector pbar = sampled_gradient(bars[i], problem_.measures[i], problem_.grid, problem_.cost, M1_, problem_.gamma, ys);
      if (mode_ == Mode::Quantized) {
        RandomStream qs = RandomStream::derive(query_seed, i, stream_tag::quantize);
        pbar = quantize_gradient(pbar, M2_, qs);
      }
      local.segment(static_cast<Eigen::Index>(i) * n, n) = pbar;
    }
  }
  return {apply_blockwise(sqrt_w_, local, n), local};
}

std::optional<Vector> StackedDualOracle::exact_gradient(const Vector& lambda) const {
  return apply_blockwise(sqrt_w_, exact_local_gradients(lambda), static_cast<Eigen::Index>(n_));
}

std::optional<double> StackedDualOracle::value(const Vector& lambda) const {
  for (const auto& mu : problem_.measures)
    if (!mu.exact_expectation_supported()) return std::nullopt;
  const auto bars = lam_bars(lambda);
  double acc = 0.0;
  for (std::size_t i = 0; i < m_; ++i)
    acc += dual_local_value_exact(bars[i], problem_.measures[i], problem_.grid, problem_.cost, problem_.gamma);
  return acc / static_cast<double>(m_);
}

std::optional<double> StackedDualOracle::constraint_residual(const Vector& x) const {
  return apply_blockwise(sqrt_w_, x, static_cast<Eigen::Index>(n_)).norm();
}

ReferenceSolution reference_barycenter(const BarycenterProblem& problem, const LaplacianInfo& laplacian,
                                       const ReferenceOptions& options) {
  if (problem.n() * problem.m() > 10'000) throw std::invalid_argument("reference_barycenter: instance too large");
  if (!(options.tol >= 1e-10)) throw std::invalid_argument("reference_barycenter: tol must be at least 1e-10");
  StackedDualOracle oracle(problem, laplacian, Mode::Exact);
  const Eigen::Index dim = oracle.dual_dim();
  const double L = lipschitz_constant(static_cast<int>(problem.m()), laplacian.lambda_max, problem.gamma);
  if (!(L > 0.0)) throw std::invalid_argument("reference_barycenter: needs at least one edge");

  PdasgdOptions opts;
  opts.start = Vector::Zero(dim);
  if (options.perturbation > 0.0) {
    RandomStream rs(options.perturbation_seed);
    for (Eigen::Index k = 0; k < dim; ++k) opts.start[k] = rs.normal();
    opts.start *= options.perturbation / opts.start.norm();
  }
  opts.record_stride = static_cast<std::size_t>(options.max_iterations);
  double prev_value = std::numeric_limits<double>::infinity();
  bool converged = false;
  double last_residual = 0.0;
  opts.stop = [&](const SolverState& st) {
    const double v = *oracle.value(st.eta);
    last_residual = *oracle.constraint_residual(st.x_hat);
    const bool done = last_residual < options.tol && std::abs(v - prev_value) < options.tol;
    prev_value = v;
    converged = converged || done;
    return done;
  };

  RandomStream unused(0);
  PdasgdResult res = pdasgd_run(oracle, Schedule::case_a(L), options.max_iterations, unused, opts);
  if (!converged)
    throw std::runtime_error("reference_barycenter: no convergence within " + std::to_string(options.max_iterations) +
                             " iterations (residual " + std::to_string(last_residual) + ")");

  ReferenceSolution sol;
  const auto n = static_cast<Eigen::Index>(problem.n());
  sol.p_average = Vector::Zero(n);
  for (std::size_t i = 0; i < problem.m(); ++i) {
    sol.p_star.push_back(res.x_hat.segment(static_cast<Eigen::Index>(i) * n, n));
    sol.p_average += sol.p_star.back();
  }
  sol.p_average /= static_cast<double>(problem.m());
  sol.lambda_star = res.eta;
  sol.dual_value = *oracle.value(res.eta);
  sol.residual = last_residual;
  sol.iterations = res.iterations;
  return sol;
}

double Lemma3Report::max_z_score() const {
  double worst = 0.0;
  for (Eigen::Index l = 0; l < mean_error.size(); ++l) {
    const double err = std::abs(mean_error[l]);
    if (standard_error[l] > 0.0) {
      worst = std::max(worst, err / standard_error[l]);
    } else if (err > 1e-12) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return worst;
}

Lemma3Report lemma3_statistics(const BarycenterProblem& problem, const LaplacianInfo& laplacian,
                               const std::vector<DualPotential>& lam_bars, std::size_t M1, std::size_t M2,
                               std::size_t trials, std::uint64_t seed, Mode mode) {
  if (lam_bars.size() != problem.m()) throw std::invalid_argument("lemma3_statistics: need one potential per agent");
  if (trials == 0) throw std::invalid_argument("lemma3_statistics: trials must be positive");
  const std::size_t m = problem.m();
  const auto n = static_cast<Eigen::Index>(problem.n());
  const Eigen::MatrixXd S = sqrt_laplacian(laplacian);

  Vector exact_local(n * static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i)
    exact_local.segment(static_cast<Eigen::Index>(i) * n, n) =
        exact_gradient_finite(lam_bars[i], problem.measures[i], problem.grid, problem.cost, problem.gamma);
  const Vector truth = apply_blockwise(S, exact_local, n);

  std::vector<RandomStream> ys, qs;
  for (std::size_t i = 0; i < m; ++i) {
    ys.push_back(RandomStream::derive(seed, i, stream_tag::samples));
    qs.push_back(RandomStream::derive(seed, i, stream_tag::quantize));
  }

  // Welford accumulation of the per-coordinate error.
  Vector mean = Vector::Zero(truth.size());
  Vector m2 = Vector::Zero(truth.size());
  double sq_acc = 0.0;
  Vector local(truth.size());
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < m; ++i) {
      Vector g;
      if (mode == Mode::Exact) {
        g = exact_local.segment(static_cast<Eigen::Index>(i) * n, n);
      } else {
        g = sampled_gradient(lam_bars[i], problem.measures[i], problem.grid, problem.cost, M1, problem.gamma, ys[i]);
        if (mode == Mode::Quantized) g = quantize_gradient(g, M2, qs[i]);
      }
      local.segment(static_cast<Eigen::Index>(i) * n, n) = g;
    }
    const Vector err = apply_blockwise(S, local, n) - truth;
    sq_acc += err.squaredNorm();
    const Vector delta = err - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta.cwiseProduct(err - mean);
  }

  Lemma3Report rep;
  rep.trials = trials;
  rep.mean_error = mean;
  const double denom = trials > 1 ? static_cast<double>(trials - 1) : 1.0;
  rep.standard_error = (m2 / denom / static_cast<double>(trials)).cwiseSqrt();
  rep.empirical_variance = sq_acc / static_cast<double>(trials);
  std::vector<std::size_t> m1v(m, M1), m2v(m, M2);
  rep.bound = mode == Mode::Quantized ? variance_bound(laplacian.lambda_max, m1v, m2v)
            : mode == Mode::SampledOnly ? variance_bound(laplacian.lambda_max, m1v, {})
                                        : 0.0;
  return rep;
}

void write_fixture(std::ostream& os, const Fixture& fixture) {
  for (const auto& c : fixture.comments) os << "# " << c << '\n';
  for (std::size_t k = 0; k < fixture.columns.size(); ++k) os << (k ? "," : "") << fixture.columns[k];
  os << '\n';
  for (const auto& row : fixture.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << format_double(row[k]);
    os << '\n';
  }
}

Fixture read_fixture(std::istream& is) {
  Fixture f;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      f.comments.push_back(line.size() > 2 ? line.substr(2) : "");
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    if (!header) {
      while (std::getline(ss, cell, ',')) f.columns.push_back(cell);
      header = true;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != f.columns.size()) throw std::invalid_argument("fixture: row width differs from header");
    f.rows.push_back(std::move(row));
  }
  return f;
}

}  // namespace qbary
