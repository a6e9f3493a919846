#include "qbary/pdasgd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qbary {

namespace {
const double kSqrt2 = std::sqrt(2.0);
const double kCaseBScale = std::pow(2.0, 0.25) * std::sqrt(3.0);
}  // namespace

Schedule Schedule::case_a(double L) {
  if (!(L >= 0.0)) throw std::invalid_argument("schedule: L must be nonnegative");
  return Schedule{Case::A, L, 0.0, 1.0};
}

Schedule Schedule::case_b(double L, double sigma, double R) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("schedule: sigma must be nonnegative");
  if (sigma == 0.0) return case_a(L);
  if (!(R > 0.0)) throw std::invalid_argument("schedule: R must be positive");
  if (!(L >= 0.0)) throw std::invalid_argument("schedule: L must be nonnegative");
  return Schedule{Case::B, L, sigma, R};
}

double Schedule::alpha(long k) const {
  const double k1 = static_cast<double>(k + 1);
  return kind == Case::A ? 0.5 * k1 : k1 / (2.0 * kSqrt2);
}

double Schedule::A(long k) const {
  const double prod = static_cast<double>(k + 1) * static_cast<double>(k + 2);
  return kind == Case::A ? 0.25 * prod : prod / (4.0 * kSqrt2);
}

double Schedule::beta(long k) const {
  if (kind == Case::A) return 2.0 * L;
  return L + sigma * std::pow(static_cast<double>(k + 2), 1.5) / (kCaseBScale * R);
}

Coefficients schedule_coeffs(const Schedule& sched, long k) {
  if (k < 0) throw std::invalid_argument("schedule: k must be nonnegative");
  return {sched.alpha(k), sched.beta(k), sched.A(k), sched.tau(k)};
}

PdasgdResult pdasgd_run(StochasticDualOracle& oracle, const Schedule& sched, long N, RandomStream& stream,
                        const PdasgdOptions& options) {
  if (N < 1) throw std::invalid_argument("pdasgd: N must be at least 1");
  const Eigen::Index dim = oracle.dual_dim();
  const Vector start = options.start.size() == 0 ? Vector::Zero(dim) : options.start;
  if (start.size() != dim) throw std::invalid_argument("pdasgd: start has the wrong dimension");
  const std::size_t stride = std::max<std::size_t>(options.record_stride, 1);

  auto checked_query = [&](const Vector& lam, long k) {
    auto out = oracle.query(lam, stream);
    if (out.gradient.size() != dim) throw std::invalid_argument("pdasgd: oracle gradient has the wrong dimension");
    if (!out.gradient.allFinite() || !out.primal.allFinite())
      throw std::runtime_error("pdasgd: non-finite oracle output at iteration " + std::to_string(k));
    return out;
  };

  SolverState st;
  st.lambda = st.eta = st.zeta = st.z = start;
  st.s = Vector::Zero(dim);
  auto first = checked_query(st.lambda, 0);
  st.grad = std::move(first.gradient);
  st.x_hat = std::move(first.primal);
  st.A_acc = sched.A(0);

  PdasgdResult result;
  auto record = [&](long iteration) {
    result.trajectory.push_back({iteration, oracle.value(st.eta), oracle.constraint_residual(st.x_hat)});
  };
  record(0);
  if (options.observer) options.observer(st);

  long k = 0;
  for (; k < N; ++k) {
    const Coefficients c = schedule_coeffs(sched, k);
    const double alpha_next = sched.alpha(k + 1);
    const double A_next = sched.A(k + 1);

    st.s += c.alpha * st.grad;
    st.z = start - st.s / c.beta;
    st.lambda = c.tau * st.z + (1.0 - c.tau) * st.eta;

    auto q = checked_query(st.lambda, k + 1);
    st.grad = std::move(q.gradient);
    st.zeta = st.z - (alpha_next / c.beta) * st.grad;
    st.eta = c.tau * st.zeta + (1.0 - c.tau) * st.eta;
    st.x_hat = (alpha_next * q.primal + c.A * st.x_hat) / A_next;
    st.A_acc = A_next;
    st.k = k;

    const long done = k + 1;
    const bool stopping = options.stop && options.stop(st);
    if (done % static_cast<long>(stride) == 0 || done == N || stopping) record(done);
    if (options.observer) options.observer(st);
    if (stopping) {
      ++k;
      break;
    }
  }

  result.lambda = st.lambda;
  result.eta = st.eta;
  result.x_hat = st.x_hat;
  result.iterations = k;
  return result;
}

long iterations_case_a(double L, double R, double epsilon) {
  if (!(L > 0.0 && R > 0.0 && epsilon > 0.0)) throw std::invalid_argument("iterations_case_a: inputs must be positive");
  return static_cast<long>(std::ceil(std::sqrt(8.0 * L * R * R / epsilon)));
}

long iterations_case_b(double L, double R, double epsilon, double sigma) {
  if (!(L > 0.0 && R > 0.0 && epsilon > 0.0 && sigma >= 0.0))
    throw std::invalid_argument("iterations_case_b: inputs must be positive");
  const double smooth = std::sqrt(4.0 * L * R * R / epsilon);
  const double noise = 9.0 * sigma * sigma * R * R / (epsilon * epsilon);
  return static_cast<long>(std::ceil(std::max(smooth, noise)));
}

double variance_bound(double lambda_max, std::span<const std::size_t> M1, std::span<const std::size_t> M2) {
  if (!M2.empty() && M2.size() != M1.size()) throw std::invalid_argument("variance_bound: batch lists differ in length");
  double acc = 0.0;
  for (std::size_t i = 0; i < M1.size(); ++i) {
    if (M1[i] == 0 || (!M2.empty() && M2[i] == 0)) throw std::invalid_argument("variance_bound: batches must be positive");
    acc += 1.0 / static_cast<double>(M1[i]);
    if (!M2.empty()) acc += 1.0 / static_cast<double>(M2[i]);
  }
  return 2.0 * lambda_max * acc;
}

std::size_t batch_schedule_a(long k, double omega) {
  if (k < 0) throw std::invalid_argument("batch_schedule_a: k must be nonnegative");
  if (!(omega > 1.0)) throw std::invalid_argument("batch_schedule_a: omega must exceed 1");
  const double v = std::ceil(static_cast<double>(k + 2) / std::log(omega));
  return static_cast<std::size_t>(std::max(1.0, v));
}

}  // namespace qbary
