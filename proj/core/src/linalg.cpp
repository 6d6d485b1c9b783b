#include "leafwise/linalg.hpp"

#include "leafwise/error.hpp"

#include <algorithm>
#include <cmath>

namespace leafwise {

Orthonormalized orthonormalize(const Mat& vectors, double rel_tol) {
  Orthonormalized out;
  out.basis = vectors;
  const auto k = vectors.cols();
  for (Eigen::Index j = 0; j < k; ++j) {
    const double original = vectors.col(j).norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) {
        out.basis.col(j) -= out.basis.col(i).dot(out.basis.col(j)) * out.basis.col(i);
      }
    }
    const double len = out.basis.col(j).norm();
    if (!(len > rel_tol * std::max(original, 1e-300)) || original == 0.0) {
      out.independent = false;
      out.basis.col(j).setZero();
      continue;
    }
    out.basis.col(j) /= len;
  }
  return out;
}

Mat orthogonal_complement(const Mat& basis) {
  const auto n = basis.rows();
  const auto k = basis.cols();
  if (k == 0) return Mat::Identity(n, n);
  if (k >= n) return Mat(n, 0);
  Eigen::HouseholderQR<Mat> qr(basis);
  Mat q = qr.householderQ() * Mat::Identity(n, n);
  return q.rightCols(n - k);
}

Mat projector(const Mat& b) { return b * b.transpose(); }

double grassmann_distance(const Mat& a, const Mat& b) {
  const Mat diff = projector(a) - projector(b);
  Eigen::SelfAdjointEigenSolver<Mat> es(diff, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Box::Box(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  require(lo.size() == hi.size(), ErrorKind::Precondition, "box bounds differ in dimension");
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    require(lo[i] <= hi[i], ErrorKind::Precondition, "box is empty");
  }
}

Box Box::cube(int n, double a, double b) { return {Vec::Constant(n, a), Vec::Constant(n, b)}; }

bool Box::contains(const Vec& x, double tol) const {
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
  }
  return true;
}

bool Box::contains_open(const Vec& x) const {
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (!(x[i] > lo[i] && x[i] < hi[i])) return false;
  }
  return true;
}

bool Box::intersects(const Box& o) const {
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (o.hi[i] < lo[i] || o.lo[i] > hi[i]) return false;
  }
  return true;
}

Box Box::grown(double m) const {
  return {lo.array() - m, hi.array() + m};
}

Box Box::scaled(double f) const {
  const Vec c = center();
  return {c + f * (lo - c), c + f * (hi - c)};
}

Box Box::united(const Box& o) const { return {lo.cwiseMin(o.lo), hi.cwiseMax(o.hi)}; }

Vec Box::at(const Vec& u) const { return lo + u.cwiseProduct(hi - lo); }

std::vector<Vec> Box::grid(int per_axis) const {
  const int n = dim();
  std::vector<Vec> pts;
  if (per_axis < 1 || n == 0) return pts;
  std::vector<int> idx(n, 0);
  while (true) {
    Vec p(n);
    for (int i = 0; i < n; ++i) {
      const double t = per_axis == 1 ? 0.5 : static_cast<double>(idx[i]) / (per_axis - 1);
      p[i] = lo[i] + t * (hi[i] - lo[i]);
    }
    pts.push_back(std::move(p));
    int d = 0;
    while (d < n && ++idx[d] == per_axis) idx[d++] = 0;
    if (d == n) break;
  }
  return pts;
}

}  // namespace leafwise
