#include "leafwise/presets.hpp"

#include "leafwise/error.hpp"

#include <cmath>

namespace leafwise::presets {

using geom::PlaneField;
using geom::Point;
using geom::Smoothness;
using geom::TwoFormField;

PlaneField constant_plane(const Mat& frame) {
  const auto on = orthonormalize(frame);
  require(on.independent, ErrorKind::DegenerateInput, "constant plane frame is rank deficient");
  const Mat basis = on.basis;
  const Mat perp = orthogonal_complement(basis);
  return PlaneField(static_cast<int>(basis.rows()), static_cast<int>(basis.cols()),
                    [basis](const Point&) { return basis; }, Smoothness::AnalyticPreset, 0.0,
                    [perp](const Point&) { return perp; }, true);
}

PlaneField coordinate_plane(int n, int i, int j) {
  Mat f = Mat::Zero(n, 2);
  f(i, 0) = 1.0;
  f(j, 1) = 1.0;
  return constant_plane(f);
}

PlaneField rotating_plane(int n, double rate) {
  require(n >= 3, ErrorKind::Precondition, "rotating plane needs n >= 3");
  auto frame = [n, rate](const Point& x) {
    const double t = rate * x[0];
    Mat f = Mat::Zero(n, 2);
    f(0, 0) = 1.0;
    f(1, 1) = std::cos(t);
    f(2, 1) = std::sin(t);
    return f;
  };
  auto perp = [n, rate](const Point& x) {
    const double t = rate * x[0];
    Mat p = Mat::Zero(n, n - 2);
    p(1, 0) = -std::sin(t);
    p(2, 0) = std::cos(t);
    for (int c = 1; c < n - 2; ++c) p(c + 2, c) = 1.0;
    return p;
  };
  return PlaneField(n, 2, frame, Smoothness::AnalyticPreset, std::abs(rate), perp, rate == 0.0);
}

TwoFormField constant_form(const Mat& m) {
  return TwoFormField(static_cast<int>(m.rows()), [m](const Point&) { return m; }, true);
}

TwoFormField coordinate_form(int n, int i, int j, double scale) {
  Mat m = Mat::Zero(n, n);
  m(i, j) = scale;
  m(j, i) = -scale;
  return constant_form(m);
}

namespace {
Mat standard_matrix(int n) {
  Mat m = Mat::Zero(n, n);
  for (int i = 0; i + 1 < n; i += 2) {
    m(i, i + 1) = 1.0;
    m(i + 1, i) = -1.0;
  }
  return m;
}
}  // namespace

TwoFormField standard_form(int n) { return constant_form(standard_matrix(n)); }

TwoFormField zero_form(int n) { return constant_form(Mat::Zero(n, n)); }

TwoFormField pinched_form(int n) {
  const Mat m = standard_matrix(n);
  return TwoFormField(n, [m](const Point& x) { return Mat(x.squaredNorm() * m); });
}

geom::PairedDistribution make_pair(std::string_view name, int n, double param) {
  require(n >= 3, ErrorKind::Precondition, "pair presets need n >= 3");
  if (name == "constant") return {coordinate_plane(n, 0, 1), standard_form(n)};
  if (name == "rotating") return {rotating_plane(n, param), standard_form(n)};
  if (name == "zero") return {coordinate_plane(n, 0, 1), zero_form(n)};
  if (name == "pinched") return {coordinate_plane(n, 0, 1), pinched_form(n)};
  fail(ErrorKind::Precondition, "unknown pair preset '" + std::string(name) + "'");
}

std::vector<std::string> pair_names() { return {"constant", "rotating", "zero", "pinched"}; }

}  // namespace leafwise::presets
