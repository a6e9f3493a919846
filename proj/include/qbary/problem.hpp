#pragma once

#include <array>
#include <cstddef>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "qbary/random.hpp"

namespace qbary {

using Vector = Eigen::VectorXd;

/// A point of the sample space or of the barycenter support. One-dimensional
/// problems leave the second coordinate at zero.
using Point = std::array<double, 2>;

/// Fixed finite support z_1..z_n of the barycenter.
class SupportGrid {
public:
  SupportGrid(std::vector<Point> points, int dim);

  /// n equispaced points on [lo, hi] (n == 1 places the point at lo).
  static SupportGrid uniform_1d(std::size_t n, double lo, double hi);
  /// nx * ny tensor grid on [x0, x1] x [y0, y1], row-major in x.
  static SupportGrid uniform_2d(std::size_t nx, std::size_t ny, Point lo, Point hi);

  std::size_t size() const { return points_.size(); }
  int dim() const { return dim_; }
  const Point& operator[](std::size_t l) const { return points_[l]; }
  const std::vector<Point>& points() const { return points_; }

private:
  std::vector<Point> points_;
  int dim_;
};

enum class CostKind { SquaredEuclidean, Euclidean };

/// Transport cost c(z, y) with optional normalization so that costs over the
/// grid and the sample box lie in [0, 1].
class CostOracle {
public:
  CostOracle() = default;
  /// Costs are raw / scale; throws std::invalid_argument unless scale > 0.
  CostOracle(CostKind kind, double scale);

  /// Normalized oracle: scale is the maximum raw cost between a grid point
  /// and a corner of the box [lo, hi]. Both cost kinds are convex in y, so the
  /// maximum over the box is attained at a corner.
  static CostOracle normalized(CostKind kind, const SupportGrid& grid, Point lo, Point hi);

  double operator()(const Point& z, const Point& y) const;
  double raw(const Point& z, const Point& y) const;

  CostKind kind() const { return kind_; }
  double scale() const { return scale_; }

private:
  CostKind kind_ = CostKind::SquaredEuclidean;
  double scale_ = 1.0;
};

struct FiniteSupport {
  std::vector<Point> atoms;
  std::vector<double> probs;
};

struct Gaussian {
  Point mean{};
  double stddev = 1.0;
};

struct GaussianMixture {
  std::vector<Gaussian> components;
  std::vector<double> weights;
};

/// Source measure mu_i. Only FiniteSupport measures admit exact expectations.
class Measure {
public:
  using Variant = std::variant<FiniteSupport, Gaussian, GaussianMixture>;

  /// Validates the variant; dim is the sample-space dimension (1 or 2).
  Measure(Variant v, int dim);

  static Measure finite(std::vector<double> atoms, std::vector<double> probs);
  static Measure gaussian(double mean, double stddev);

  Point sample(RandomStream& stream) const;

  bool exact_expectation_supported() const {
    return std::holds_alternative<FiniteSupport>(variant_);
  }
  const Variant& variant() const { return variant_; }
  /// Throws std::invalid_argument unless the measure has finite support.
  const FiniteSupport& finite_support() const;
  int dim() const { return dim_; }

private:
  Variant variant_;
  int dim_;
  std::vector<double> cumulative_;  // FiniteSupport atoms or mixture weights
};

/// First index whose cumulative probability exceeds u. If rounding leaves the
/// total below u, returns the last index carrying positive mass.
std::size_t inverse_cdf(const std::vector<double>& cumulative, double u);

struct BarycenterProblem {
  SupportGrid grid;
  CostOracle cost;
  std::vector<Measure> measures;
  double epsilon;
  double omega;
  double gamma;

  std::size_t n() const { return grid.size(); }
  std::size_t m() const { return measures.size(); }
  /// Throws std::invalid_argument on an inconsistent instance.
  void validate() const;
};

/// v_l = cost(z_l, y).
Vector cost_vector(const SupportGrid& grid, const CostOracle& cost, const Point& y);
void cost_vector(const SupportGrid& grid, const CostOracle& cost, const Point& y, Vector& out);

/// Regularization that makes an eps-solution of the regularized problem a
/// 2*eps-solution of the unregularized one: eps / (4 ln omega).
double gamma_from_epsilon(double epsilon, double omega);

/// n times the volume of the sample box, clamped below by e.
double default_omega(std::size_t n, Point lo, Point hi, int dim);

Point draw_sample(const Measure& measure, RandomStream& stream);

}  // namespace qbary
