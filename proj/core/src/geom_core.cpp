#include "leafwise/geom_core.hpp"

#include "leafwise/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace leafwise::geom {

PlaneFieldSample::PlaneFieldSample(Point base, const Mat& frame) : base_(std::move(base)) {
  require(frame.rows() == base_.size(), ErrorKind::Precondition, "frame rows must match point dimension");
  auto on = orthonormalize(frame);
  require(on.independent, ErrorKind::DegenerateInput, "plane-field frame is rank deficient");
  frame_ = std::move(on.basis);
}

PlaneField::PlaneField(int n, int k, FrameFn frame, Smoothness smoothness, double lipschitz,
                       FrameFn complement, bool constant)
    : n_(n),
      k_(k),
      frame_(std::move(frame)),
      complement_(std::move(complement)),
      smoothness_(smoothness),
      lipschitz_(lipschitz),
      constant_(constant) {
  require(n >= 1 && k >= 0 && k <= n, ErrorKind::Precondition, "invalid plane-field dimensions");
  require(static_cast<bool>(frame_), ErrorKind::Precondition, "plane field needs an evaluator");
}

PlaneFieldSample PlaneField::sample(const Point& x) const {
  require(x.size() == n_, ErrorKind::Precondition, "point dimension mismatch");
  Mat f = frame_(x);
  require(f.rows() == n_ && f.cols() == k_, ErrorKind::Precondition, "evaluator returned wrong shape");
  return {x, f};
}

Mat PlaneField::complement(const Point& x) const {
  if (complement_) return complement_(x);
  return orthogonal_complement(sample(x).frame());
}

ContinuityReport PlaneField::check_continuity(const Box& region, int pairs, std::uint64_t seed,
                                              double step, double slack) const {
  ContinuityReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int p = 0; p < pairs; ++p) {
    Vec u(n_);
    for (int i = 0; i < n_; ++i) u[i] = unit(rng);
    const Vec x = region.at(u);
    Vec d(n_);
    for (int i = 0; i < n_; ++i) d[i] = gauss(rng);
    d *= step / d.norm();
    const double dist = grassmann_distance(sample(x).frame(), sample(x + d).frame());
    const double bound = lipschitz_ * step;
    const double ratio = bound > 0 ? dist / bound : (dist > 1e-12 ? INFINITY : 0.0);
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    ++rep.pairs;
  }
  rep.ok = rep.worst_ratio <= 1.0 + slack;
  return rep;
}

TwoFormField::TwoFormField(int n, MatrixFn matrix, bool constant)
    : n_(n), matrix_(std::move(matrix)), constant_(constant) {
  require(static_cast<bool>(matrix_), ErrorKind::Precondition, "two-form needs an evaluator");
}

Mat TwoFormField::at(const Point& x) const {
  Mat m = matrix_(x);
  require(m.rows() == n_ && m.cols() == n_, ErrorKind::Precondition, "two-form evaluator returned wrong shape");
  require(max_abs(m + m.transpose()) <= 1e-14, ErrorKind::Precondition, "two-form is not antisymmetric");
  return m;
}

LeafwiseForm::LeafwiseForm(int degree, Evaluator eval) : degree_(degree), eval_(std::move(eval)) {
  require(degree >= 0, ErrorKind::Precondition, "negative form degree");
}

double LeafwiseForm::operator()(const Point& x, const Mat& vectors) const {
  require(vectors.cols() == degree_, ErrorKind::Precondition, "form applied to wrong number of vectors");
  return eval_(x, vectors);
}

double LeafwiseForm::alternation_defect(const Point& x, const Mat& vectors, int trials,
                                        std::uint64_t seed) const {
  if (degree_ < 2) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, degree_ - 1);
  double worst = 0.0;
  const double base = (*this)(x, vectors);
  for (int t = 0; t < trials; ++t) {
    int i = pick(rng);
    int j = pick(rng);
    if (i == j) j = (i + 1) % degree_;
    Mat swapped = vectors;
    swapped.col(i).swap(swapped.col(j));
    worst = std::max(worst, std::abs(base + (*this)(x, swapped)));
  }
  return worst;
}

BivectorField::BivectorField(int n, MatrixFn matrix) : n_(n), matrix_(std::move(matrix)) {}

Mat BivectorField::at(const Point& x) const {
  Mat m = matrix_(x);
  require(max_abs(m + m.transpose()) <= 1e-12 * std::max(1.0, max_abs(m)), ErrorKind::Precondition,
          "bivector is not antisymmetric");
  return m;
}

namespace {
Mat columns(std::initializer_list<Vec> cols) {
  Mat m(cols.begin()->size(), static_cast<Eigen::Index>(cols.size()));
  Eigen::Index j = 0;
  for (const auto& c : cols) m.col(j++) = c;
  return m;
}
Vec v3(double a, double b, double c) { return Eigen::Vector3d(a, b, c); }
}  // namespace

FoliatedChart FoliatedChart::horizontal() {
  return {"horizontal", 3, 2,
          [](const Point&) { return columns({v3(1, 0, 0), v3(0, 1, 0)}); },
          [](const Point&) { return columns({v3(0, 0, 1)}); }};
}

FoliatedChart FoliatedChart::tilted() {
  const double s = 1.0 / std::sqrt(2.0);
  return {"tilted", 3, 2,
          [s](const Point&) { return columns({v3(s, 0, s), v3(0, 1, 0)}); },
          [s](const Point&) { return columns({v3(-s, 0, s)}); }};
}

FoliatedChart FoliatedChart::curved() {
  return {"curved", 3, 2,
          [](const Point& x) {
            const double c = std::cos(x[0]);
            const double len = std::sqrt(1.0 + c * c);
            return columns({v3(1 / len, 0, c / len), v3(0, 1, 0)});
          },
          [](const Point& x) {
            const double c = std::cos(x[0]);
            const double len = std::sqrt(1.0 + c * c);
            return columns({v3(-c / len, 0, 1 / len)});
          }};
}

double min_singular_value_2x2(double a, double b, double c, double d) noexcept {
  // [[a, b], [c, d]]
  const double s1 = std::hypot(a + d, c - b);
  const double s2 = std::hypot(a - d, c + b);
  const double smax = 0.5 * (s1 + s2);
  if (smax == 0.0) return 0.0;
  return std::abs(a * d - b * c) / smax;
}

Projection project_along_complement(const Mat& tau_perp, const Mat& subspace) {
  require(tau_perp.rows() == subspace.rows(), ErrorKind::Precondition, "dimension mismatch in projection");
  auto on = orthonormalize(subspace);
  require(on.independent, ErrorKind::DegenerateInput, "subspace vectors are linearly dependent");
  Projection p;
  p.matrix = tau_perp.transpose() * on.basis;
  const auto m = p.matrix.cols();
  if (m == 0) {
    p.margin = INFINITY;
  } else if (p.matrix.rows() < m) {
    p.margin = 0.0;
  } else if (p.matrix.rows() == 2 && m == 2) {
    p.margin = min_singular_value_2x2(p.matrix(0, 0), p.matrix(0, 1), p.matrix(1, 0), p.matrix(1, 1));
  } else {
    Eigen::JacobiSVD<Mat> svd(p.matrix);
    p.margin = svd.singularValues()(m - 1);
  }
  return p;
}

Projection project_along(const PlaneFieldSample& tau, const Mat& subspace) {
  return project_along_complement(tau.complement(), subspace);
}

Nondegeneracy frame_nondegenerate(const Mat& frame, const Mat& omega, int half_rank, double floor) {
  require(frame.cols() == 2 * half_rank, ErrorKind::Precondition,
          "plane rank must equal twice the half rank");
  const Mat w = frame.transpose() * omega * frame;
  double margin = 0.0;
  if (half_rank == 1) {
    margin = std::abs(w(0, 1));
  } else {
    double fact = 1.0;
    for (int i = 2; i <= half_rank; ++i) fact *= i;
    margin = fact * std::sqrt(std::abs(w.determinant()));
  }
  return {margin > floor, margin};
}

Nondegeneracy pair_nondegenerate(const PairedDistribution& pair, const Point& x, int half_rank,
                                 double floor) {
  require(pair.tau.rank() % 2 == 0, ErrorKind::Precondition, "odd-rank plane field has no nondegenerate 2-form");
  return frame_nondegenerate(pair.tau.sample(x).frame(), pair.omega.at(x), half_rank, floor);
}

namespace {

Vec directional(const VectorField& field, const Point& x, const Vec& v, double h) {
  return (field(x + h * v) - field(x - h * v)) / (2.0 * h);
}

Mat assemble(const std::vector<VectorField>& fields, const std::vector<int>& idx, const Point& y,
             const Vec* first) {
  Mat m(y.size(), static_cast<Eigen::Index>(idx.size() + (first ? 1 : 0)));
  Eigen::Index c = 0;
  if (first) m.col(c++) = *first;
  for (int i : idx) m.col(c++) = fields[static_cast<std::size_t>(i)](y);
  return m;
}

}  // namespace

double tangential_derivative(const LeafwiseForm& eta, const FoliatedChart& chart, const Point& x,
                             const std::vector<VectorField>& fields, const DerivativeOptions& opt) {
  const int p = eta.degree();
  require(static_cast<int>(fields.size()) == p + 1, ErrorKind::Precondition,
          "tangential derivative needs degree + 1 fields");
  const Mat normal = chart.normal_frame(x);
  for (const auto& f : fields) {
    const Vec v = f(x);
    const double off = (normal.transpose() * v).norm();
    require(off <= opt.tangency_tol * std::max(1.0, v.norm()), ErrorKind::Precondition,
            "vector field is not tangent to the leaves");
  }
  const double h = opt.step;
  double total = 0.0;
  for (int i = 0; i <= p; ++i) {
    std::vector<int> rest;
    for (int j = 0; j <= p; ++j) if (j != i) rest.push_back(j);
    const Vec xi = fields[static_cast<std::size_t>(i)](x);
    auto g = [&](const Point& y) { return eta(y, assemble(fields, rest, y, nullptr)); };
    const double deriv = (g(x + h * xi) - g(x - h * xi)) / (2.0 * h);
    total += (i % 2 == 0 ? 1.0 : -1.0) * deriv;
  }
  for (int i = 0; i <= p; ++i) {
    for (int j = i + 1; j <= p; ++j) {
      const Vec xi = fields[static_cast<std::size_t>(i)](x);
      const Vec xj = fields[static_cast<std::size_t>(j)](x);
      const Vec bracket = directional(fields[static_cast<std::size_t>(j)], x, xi, h) -
                          directional(fields[static_cast<std::size_t>(i)], x, xj, h);
      std::vector<int> rest;
      for (int k = 0; k <= p; ++k) if (k != i && k != j) rest.push_back(k);
      total += ((i + j) % 2 == 0 ? 1.0 : -1.0) * eta(x, assemble(fields, rest, x, &bracket));
    }
  }
  return total;
}

ExtendedForm extend_by_normal_kernel(const LeafwiseForm& eta, const FoliatedChart& chart,
                                     const ExtensionOptions& opt) {
  require(eta.degree() == 1, ErrorKind::Precondition, "kernel extension is implemented for 1-forms");
  ExtendedForm out;
  out.eval = [eta, chart](const Point& x, const Vec& v) {
    const Mat t = chart.tangent_frame(x);
    Mat pv(v.size(), 1);
    pv.col(0) = t * (t.transpose() * v);
    return eta(x, pv);
  };
  const int n = chart.n;
  const double h = opt.step;
  for (const Vec& x : opt.grid_box.grid(opt.grid_per_axis)) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const Vec ei = Vec::Unit(n, i);
        const Vec ej = Vec::Unit(n, j);
        const double di = (out.eval(x + h * ei, ej) - out.eval(x - h * ei, ej)) / (2 * h);
        const double dj = (out.eval(x + h * ej, ei) - out.eval(x - h * ej, ei)) / (2 * h);
        out.report.max_ambient_derivative = std::max(out.report.max_ambient_derivative, std::abs(di - dj));
      }
    }
    std::vector<VectorField> frame_fields;
    for (int c = 0; c < chart.leaf_dim; ++c) {
      frame_fields.emplace_back([chart, c](const Point& y) { return Vec(chart.tangent_frame(y).col(c)); });
    }
    for (int a = 0; a < chart.leaf_dim; ++a) {
      for (int b = a + 1; b < chart.leaf_dim; ++b) {
        const double d = tangential_derivative(eta, chart, x, {frame_fields[a], frame_fields[b]},
                                               {h, 1e-8});
        out.report.max_leafwise_derivative = std::max(out.report.max_leafwise_derivative, std::abs(d));
      }
    }
    ++out.report.samples;
  }
  out.report.leafwise_closed = out.report.max_leafwise_derivative <= opt.closed_tol;
  return out;
}

BivectorSample bivector_from_pair(const PairedDistribution& pair, const Point& x) {
  const Mat f = pair.tau.sample(x).frame();
  const Mat omega = pair.omega.at(x);
  const Mat w = f.transpose() * omega * f;
  const auto nd = frame_nondegenerate(f, omega, static_cast<int>(f.cols()) / 2);
  require(f.cols() % 2 == 0 && nd.ok, ErrorKind::Inversion, "omega restricted to tau is degenerate");
  Eigen::FullPivLU<Mat> lu(w);
  require(lu.isInvertible(), ErrorKind::Inversion, "omega restricted to tau is singular");
  const Mat pi_frame = -lu.inverse();
  BivectorSample s;
  s.pi = f * pi_frame * f.transpose();
  s.pi = 0.5 * (s.pi - s.pi.transpose());
  Eigen::JacobiSVD<Mat> svd(s.pi, Eigen::ComputeFullU);
  s.image = svd.matrixU().leftCols(f.cols());
  s.image_distance = grassmann_distance(s.image, f);
  return s;
}

BivectorField bivector_field(PairedDistribution pair) {
  const int n = pair.tau.dim();
  return BivectorField(n, [pair = std::move(pair)](const Point& x) { return bivector_from_pair(pair, x).pi; });
}

}  // namespace leafwise::geom
