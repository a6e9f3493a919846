#include "qbary/dual_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qbary {

bool is_simplex(const Vector& p, double tol) {
  if (p.size() == 0) return false;
  if ((p.array() < 0.0).any() || !p.allFinite()) return false;
  return std::abs(p.sum() - 1.0) <= tol;
}

void softmax_transport_plan(const DualPotential& lam, const Vector& cvec, double gamma, Vector& out) {
  out = (lam - cvec) / gamma;
  out.array() -= out.maxCoeff();
  out = out.array().exp();
  out /= out.sum();
}

SimplexVector softmax_transport_plan(const DualPotential& lam, const Vector& cvec, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("softmax: gamma must be positive");
  Vector out;
  softmax_transport_plan(lam, cvec, gamma, out);
  return out;
}

double log_sum_exp(const DualPotential& lam, const Vector& cvec, double gamma) {
  const Vector x = (lam - cvec) / gamma;
  const double top = x.maxCoeff();
  return gamma * (top + std::log((x.array() - top).exp().sum()));
}

SimplexVector sampled_gradient(const DualPotential& lam, const Measure& measure, const SupportGrid& grid,
                               const CostOracle& cost, std::size_t M1, double gamma, RandomStream& stream) {
  if (M1 == 0) throw std::invalid_argument("sampled_gradient: M1 must be at least 1");
  Vector acc = Vector::Zero(lam.size());
  Vector cvec, plan;
  for (std::size_t r = 0; r < M1; ++r) {
    cost_vector(grid, cost, measure.sample(stream), cvec);
    softmax_transport_plan(lam, cvec, gamma, plan);
    acc += plan;
  }
  return acc / static_cast<double>(M1);
}

SimplexVector Histogram::decode(std::size_t n) const {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(n));
  for (auto [l, c] : entries) out[static_cast<Eigen::Index>(l)] = static_cast<double>(c) / static_cast<double>(draws);
  return out;
}

Histogram quantize_from_uniforms(const SimplexVector& pbar, std::span<const double> u) {
  std::vector<double> cum(static_cast<std::size_t>(pbar.size()));
  double total = 0.0;
  for (Eigen::Index l = 0; l < pbar.size(); ++l) {
    total += std::max(pbar[l], 0.0);
    cum[static_cast<std::size_t>(l)] = total;
  }
  std::vector<std::size_t> counts(cum.size(), 0);
  for (double v : u) ++counts[inverse_cdf(cum, v)];
  Histogram h;
  h.draws = u.size();
  for (std::size_t l = 0; l < counts.size(); ++l)
    if (counts[l] > 0) h.entries.emplace_back(l, counts[l]);
  return h;
}

Histogram quantize_histogram(const SimplexVector& pbar, std::size_t M2, RandomStream& stream) {
  if (M2 == 0) throw std::invalid_argument("quantize: M2 must be at least 1");
  std::vector<double> u(M2);
  for (auto& v : u) v = stream.uniform();
  return quantize_from_uniforms(pbar, u);
}

SimplexVector quantize_gradient(const SimplexVector& pbar, std::size_t M2, RandomStream& stream) {
  return quantize_histogram(pbar, M2, stream).decode(static_cast<std::size_t>(pbar.size()));
}

SimplexVector exact_gradient_finite(const DualPotential& lam, const Measure& measure, const SupportGrid& grid,
                                    const CostOracle& cost, double gamma) {
  const auto& fs = measure.finite_support();
  Vector acc = Vector::Zero(lam.size());
  Vector cvec, plan;
  for (std::size_t s = 0; s < fs.atoms.size(); ++s) {
    if (fs.probs[s] == 0.0) continue;
    cost_vector(grid, cost, fs.atoms[s], cvec);
    softmax_transport_plan(lam, cvec, gamma, plan);
    acc += fs.probs[s] * plan;
  }
  return acc;
}

double dual_local_value(const DualPotential& lam, const Measure& measure, const SupportGrid& grid,
                        const CostOracle& cost, double gamma, std::size_t M, RandomStream& stream) {
  if (M == 0) throw std::invalid_argument("dual_local_value: M must be at least 1");
  double acc = 0.0;
  Vector cvec;
  for (std::size_t r = 0; r < M; ++r) {
    cost_vector(grid, cost, measure.sample(stream), cvec);
    acc += log_sum_exp(lam, cvec, gamma);
  }
  return acc / static_cast<double>(M);
}

double dual_local_value_exact(const DualPotential& lam, const Measure& measure, const SupportGrid& grid,
                              const CostOracle& cost, double gamma) {
  const auto& fs = measure.finite_support();
  double acc = 0.0;
  Vector cvec;
  for (std::size_t s = 0; s < fs.atoms.size(); ++s) {
    if (fs.probs[s] == 0.0) continue;
    cost_vector(grid, cost, fs.atoms[s], cvec);
    acc += fs.probs[s] * log_sum_exp(lam, cvec, gamma);
  }
  return acc;
}

double dual_local_value_auto(const DualPotential& lam, const Measure& measure, const SupportGrid& grid,
                             const CostOracle& cost, double gamma, std::size_t M, RandomStream& stream) {
  if (measure.exact_expectation_supported()) return dual_local_value_exact(lam, measure, grid, cost, gamma);
  return dual_local_value(lam, measure, grid, cost, gamma, M, stream);
}

double lipschitz_constant(int m, double lambda_max, double gamma) {
  return static_cast<double>(m) * lambda_max / gamma;
}

double dual_radius_bound(std::size_t n, int m, double lambda_min_plus) {
  if (!(lambda_min_plus > 0.0)) throw std::domain_error("dual_radius_bound: lambda_min_plus must be positive");
  return std::sqrt(2.0 * static_cast<double>(n) / (static_cast<double>(m) * lambda_min_plus));
}

}  // namespace qbary
