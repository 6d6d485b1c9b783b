#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace leafwise {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Orthonormal basis for the column span of `vectors` (modified Gram-Schmidt,
// two passes). Returns false in `independent` when a column collapses below
// `rel_tol` relative to its original length.
struct Orthonormalized {
  Mat basis;
  bool independent = true;
};
Orthonormalized orthonormalize(const Mat& vectors, double rel_tol = 1e-10);

// Orthonormal basis of the orthogonal complement of the span of the
// (orthonormal) columns of `basis` in R^n.
Mat orthogonal_complement(const Mat& basis);

// Operator-norm distance between the orthogonal projectors onto two subspaces
// given by orthonormal column bases.
double grassmann_distance(const Mat& a, const Mat& b);

Mat projector(const Mat& orthonormal_basis);

double max_abs(const Mat& m);

// Axis-aligned box [lo, hi] in R^n.
struct Box {
  Vec lo;
  Vec hi;

  Box() = default;
  Box(Vec lo_, Vec hi_);
  static Box cube(int n, double a, double b);

  [[nodiscard]] int dim() const { return static_cast<int>(lo.size()); }
  [[nodiscard]] bool contains(const Vec& x, double tol = 0.0) const;
  [[nodiscard]] bool contains_open(const Vec& x) const;
  [[nodiscard]] bool intersects(const Box& other) const;
  [[nodiscard]] Box grown(double margin) const;
  [[nodiscard]] Box scaled(double factor) const;
  [[nodiscard]] Box united(const Box& other) const;
  [[nodiscard]] Vec center() const { return 0.5 * (lo + hi); }
  [[nodiscard]] Vec extent() const { return hi - lo; }
  // Point at normalized coordinates u in [0,1]^n.
  [[nodiscard]] Vec at(const Vec& u) const;
  // All points of a tensor grid with `per_axis` points per axis, endpoints included.
  [[nodiscard]] std::vector<Vec> grid(int per_axis) const;
};

}  // namespace leafwise
