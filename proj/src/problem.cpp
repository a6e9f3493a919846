#include "qbary/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qbary {

namespace {

std::vector<double> cumulate(const std::vector<double>& probs, const char* what) {
  if (probs.empty()) throw std::invalid_argument(std::string(what) + ": empty probability vector");
  std::vector<double> cum(probs.size());
  double total = 0.0;
  for (std::size_t s = 0; s < probs.size(); ++s) {
    if (!(probs[s] >= 0.0) || !std::isfinite(probs[s]))
      throw std::invalid_argument(std::string(what) + ": probabilities must be finite and nonnegative");
    total += probs[s];
    cum[s] = total;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument(std::string(what) + ": probabilities must sum to 1");
  return cum;
}

Point gaussian_draw(const Gaussian& g, int dim, RandomStream& stream) {
  Point y{};
  y[0] = g.mean[0] + g.stddev * stream.normal();
  if (dim == 2) y[1] = g.mean[1] + g.stddev * stream.normal();
  return y;
}

void check_gaussian(const Gaussian& g) {
  if (!(g.stddev > 0.0) || !std::isfinite(g.stddev) || !std::isfinite(g.mean[0]) ||
      !std::isfinite(g.mean[1]))
    throw std::invalid_argument("gaussian: need finite mean and stddev > 0");
}

}  // namespace

SupportGrid::SupportGrid(std::vector<Point> points, int dim) : points_(std::move(points)), dim_(dim) {
  if (dim_ != 1 && dim_ != 2) throw std::invalid_argument("support grid: dimension must be 1 or 2");
  if (points_.empty()) throw std::invalid_argument("support grid: need at least one point");
  for (auto& p : points_)
    if (dim_ == 1) p[1] = 0.0;
  std::vector<Point> sorted = points_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("support grid: points must be pairwise distinct");
}

SupportGrid SupportGrid::uniform_1d(std::size_t n, double lo, double hi) {
  if (n == 0) throw std::invalid_argument("support grid: n must be positive");
  if (!(hi > lo)) throw std::invalid_argument("support grid: empty interval");
  std::vector<Point> pts(n);
  for (std::size_t l = 0; l < n; ++l)
    pts[l] = {n == 1 ? lo : lo + (hi - lo) * static_cast<double>(l) / static_cast<double>(n - 1), 0.0};
  return SupportGrid(std::move(pts), 1);
}

SupportGrid SupportGrid::uniform_2d(std::size_t nx, std::size_t ny, Point lo, Point hi) {
  if (nx == 0 || ny == 0) throw std::invalid_argument("support grid: shape must be positive");
  auto coord = [](std::size_t i, std::size_t count, double a, double b) {
    return count == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
  };
  std::vector<Point> pts;
  pts.reserve(nx * ny);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) pts.push_back({coord(i, nx, lo[0], hi[0]), coord(j, ny, lo[1], hi[1])});
  return SupportGrid(std::move(pts), 2);
}

double CostOracle::raw(const Point& z, const Point& y) const {
  const double dx = z[0] - y[0];
  const double dy = z[1] - y[1];
  const double sq = dx * dx + dy * dy;
  return kind_ == CostKind::SquaredEuclidean ? sq : std::sqrt(sq);
}

CostOracle::CostOracle(CostKind kind, double scale) : kind_(kind), scale_(scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("cost scale must be positive");
}

double CostOracle::operator()(const Point& z, const Point& y) const { return raw(z, y) / scale_; }

CostOracle CostOracle::normalized(CostKind kind, const SupportGrid& grid, Point lo, Point hi) {
  CostOracle unit(kind, 1.0);
  std::vector<Point> corners;
  if (grid.dim() == 1) {
    corners = {{lo[0], 0.0}, {hi[0], 0.0}};
  } else {
    corners = {{lo[0], lo[1]}, {lo[0], hi[1]}, {hi[0], lo[1]}, {hi[0], hi[1]}};
  }
  double scale = 0.0;
  for (const auto& z : grid.points())
    for (const auto& c : corners) scale = std::max(scale, unit.raw(z, c));
  // Degenerate box and single grid point: every cost is zero already.
  if (scale <= 0.0) scale = 1.0;
  return CostOracle(kind, scale);
}

Measure::Measure(Variant v, int dim) : variant_(std::move(v)), dim_(dim) {
  if (dim_ != 1 && dim_ != 2) throw std::invalid_argument("measure: dimension must be 1 or 2");
  if (auto* fs = std::get_if<FiniteSupport>(&variant_)) {
    if (fs->atoms.size() != fs->probs.size())
      throw std::invalid_argument("finite measure: atoms and probs differ in length");
    cumulative_ = cumulate(fs->probs, "finite measure");
    if (dim_ == 1)
      for (auto& a : fs->atoms) a[1] = 0.0;
  } else if (auto* g = std::get_if<Gaussian>(&variant_)) {
    check_gaussian(*g);
  } else {
    auto& mix = std::get<GaussianMixture>(variant_);
    if (mix.components.size() != mix.weights.size())
      throw std::invalid_argument("gaussian mixture: components and weights differ in length");
    for (const auto& c : mix.components) check_gaussian(c);
    cumulative_ = cumulate(mix.weights, "gaussian mixture");
  }
}

Measure Measure::finite(std::vector<double> atoms, std::vector<double> probs) {
  FiniteSupport fs;
  fs.atoms.reserve(atoms.size());
  for (double a : atoms) fs.atoms.push_back({a, 0.0});
  fs.probs = std::move(probs);
  return Measure(std::move(fs), 1);
}

Measure Measure::gaussian(double mean, double stddev) { return Measure(Gaussian{{mean, 0.0}, stddev}, 1); }

const FiniteSupport& Measure::finite_support() const {
  if (auto* fs = std::get_if<FiniteSupport>(&variant_)) return *fs;
  throw std::invalid_argument("measure has no finite support");
}

std::size_t inverse_cdf(const std::vector<double>& cumulative, double u) {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it != cumulative.end()) return static_cast<std::size_t>(it - cumulative.begin());
  // u beyond the rounded total: fall back to the last index with mass.
  std::size_t last = cumulative.size() - 1;
  while (last > 0 && cumulative[last] == cumulative[last - 1]) --last;
  return last;
}

Point Measure::sample(RandomStream& stream) const {
  if (auto* fs = std::get_if<FiniteSupport>(&variant_)) return fs->atoms[inverse_cdf(cumulative_, stream.uniform())];
  if (auto* g = std::get_if<Gaussian>(&variant_)) return gaussian_draw(*g, dim_, stream);
  const auto& mix = std::get<GaussianMixture>(variant_);
  const std::size_t c = inverse_cdf(cumulative_, stream.uniform());
  return gaussian_draw(mix.components[c], dim_, stream);
}

Point draw_sample(const Measure& measure, RandomStream& stream) { return measure.sample(stream); }

void BarycenterProblem::validate() const {
  if (measures.empty()) throw std::invalid_argument("problem: need at least one measure");
  if (!(epsilon > 0.0)) throw std::invalid_argument("problem: epsilon must be positive");
  if (!(omega > 1.0)) throw std::invalid_argument("problem: omega must exceed 1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("problem: gamma must be positive");
  for (const auto& mu : measures)
    if (mu.dim() != grid.dim()) throw std::invalid_argument("problem: measure and grid dimensions differ");
}

void cost_vector(const SupportGrid& grid, const CostOracle& cost, const Point& y, Vector& out) {
  out.resize(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t l = 0; l < grid.size(); ++l) out[static_cast<Eigen::Index>(l)] = cost(grid[l], y);
}

Vector cost_vector(const SupportGrid& grid, const CostOracle& cost, const Point& y) {
  Vector out;
  cost_vector(grid, cost, y, out);
  return out;
}

double gamma_from_epsilon(double epsilon, double omega) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("gamma_from_epsilon: epsilon must be positive");
  if (!(omega > 1.0)) throw std::invalid_argument("gamma_from_epsilon: omega must exceed 1");
  return epsilon / (4.0 * std::log(omega));
}

double default_omega(std::size_t n, Point lo, Point hi, int dim) {
  double volume = hi[0] - lo[0];
  if (dim == 2) volume *= hi[1] - lo[1];
  return std::max(static_cast<double>(n) * volume, std::numbers::e);
}

}  // namespace qbary
