#pragma once

#include <Eigen/Dense>
#include <cstddef>

namespace sdobs {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Uniform partition of [0,1] with `nodes` points, x_k = k / (nodes - 1).
class Grid {
 public:
  explicit Grid(std::size_t nodes);

  std::size_t nodes() const { return nodes_; }
  double dx() const { return dx_; }
  double x(std::size_t k) const { return static_cast<double>(k) * dx_; }
  Vec points() const;

  /// Composite trapezoid weights (dx/2 at the ends, dx inside).
  const Vec& weights() const { return weights_; }

  bool operator==(const Grid& other) const { return nodes_ == other.nodes_; }

 private:
  std::size_t nodes_;
  double dx_;
  Vec weights_;
};

double inner(const Grid& grid, const Vec& a, const Vec& b);
double l2_norm(const Grid& grid, const Vec& a);
double sup_norm(const Vec& a);

/// Cumulative trapezoid integral F(x_k) = ∫_0^{x_k} f.
Vec cumulative_integral(const Grid& grid, const Vec& f);

/// Restrict samples on a finer uniform grid to `target` by subsampling.
/// Throws GridMismatch unless (from - 1) is an integer multiple of (target - 1).
Vec restrict_to(const Grid& target, const Vec& samples);

}  // namespace sdobs
