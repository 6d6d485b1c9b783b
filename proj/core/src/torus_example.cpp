#include "leafwise/torus_example.hpp"

#include "leafwise/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace leafwise::torus {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

CutoffTriple CutoffTriple::defaults() {
  return {Plateau{-kInf, -kInf, 0.25, 0.34}, Plateau{0.26, 0.40, 0.60, 0.74}, Plateau{0.66, 0.75, kInf, kInf}};
}

CutoffTriple CutoffTriple::overlapping() {
  return {Plateau{-kInf, -kInf, 0.55, 0.80}, Plateau{0.26, 0.40, 0.60, 0.74}, Plateau{0.66, 0.75, kInf, kInf}};
}

CutoffCheck validate(const CutoffTriple& c, int samples) {
  CutoffCheck chk;
  double last0 = 0.0;
  double first1 = 1.0;
  bool seen1 = false;
  for (int i = 0; i < samples; ++i) {
    const double r = static_cast<double>(i) / (samples - 1);
    const double l0 = c.lambda0(r);
    const double lh = c.lambda_half(r);
    const double l1 = c.lambda1(r);
    for (double v : {l0, lh, l1}) chk.in_range = chk.in_range && v >= 0.0 && v <= 1.0;
    if (l0 > 0.0) last0 = r;
    if (l1 > 0.0 && !seen1) {
      first1 = r;
      seen1 = true;
    }
    if (l0 == 0.0 && lh == 0.0 && l1 == 0.0) chk.never_all_zero = false;
  }
  chk.disjoint = last0 < first1;
  chk.plateaus_ok = c.lambda0(0.0) == 1.0 && c.lambda0(0.01) == 1.0 && c.lambda_half(0.5) == 1.0 &&
                    c.lambda_half(0.49) == 1.0 && c.lambda_half(0.51) == 1.0 && c.lambda1(1.0) == 1.0 &&
                    c.lambda1(0.99) == 1.0;
  return chk;
}

Vec3 to_cartesian(double r, double phi, double theta) { return {r * std::cos(phi), r * std::sin(phi), theta}; }

namespace {

struct Polar {
  double r;
  double x;
  double y;
};

Polar polar_of(const Vec3& p) { return {std::hypot(p[0], p[1]), p[0], p[1]}; }

// Rows: dr, dphi, dtheta expressed in (dx, dy, dtheta). Requires r > 0.
Mat3 jacobian(const Polar& q) {
  Mat3 j = Mat3::Zero();
  j(0, 0) = q.x / q.r;
  j(0, 1) = q.y / q.r;
  const double r2 = q.r * q.r;
  j(1, 0) = -q.y / r2;
  j(1, 1) = q.x / r2;
  j(2, 2) = 1.0;
  return j;
}

Vec3 beta_polar(const SolidTorusModel& m, double r) {
  const auto& c = m.cutoffs;
  return {c.lambda_half(r), -m.a * c.lambda1(r), c.lambda0(r) + c.lambda1(r)};
}

Vec3 beta_polar_derivative(const SolidTorusModel& m, double r) {
  const auto& c = m.cutoffs;
  return {c.half.derivative(r), -m.a * c.one.derivative(r), c.zero.derivative(r) + c.one.derivative(r)};
}

Eigen::Matrix<double, 3, 2> kernel_basis(const Vec3& covector) {
  const double len = covector.norm();
  require(len > 0.0, ErrorKind::DegenerateInput, "1-form vanishes");
  Mat b = covector / len;
  const Mat k = orthogonal_complement(b);
  return k;
}

}  // namespace

BetaSample beta_form(const SolidTorusModel& m, const Vec3& p) {
  const Polar q = polar_of(p);
  BetaSample s;
  s.polar = beta_polar(m, q.r);
  if (q.r == 0.0) {
    s.polar[1] = 0.0;
    s.cartesian = {0.0, 0.0, s.polar[2]};
    require(s.polar[0] == 0.0, ErrorKind::ModelConsistency, "lambda_1/2 must vanish at the core");
  } else {
    s.cartesian = jacobian(q).transpose() * s.polar;
  }
  s.kernel = kernel_basis(s.cartesian);
  return s;
}

double integrability_coefficient(const SolidTorusModel& m, double r) {
  // beta depends on r only, so beta ^ d beta on (r, phi, theta) is
  // sum over cyclic (i, j, k) of beta_i (d_j beta_k - d_k beta_j) with only d_r non-zero.
  const Vec3 b = beta_polar(m, r);
  const Vec3 db = beta_polar_derivative(m, r);
  Vec3 grad[3] = {db, Vec3::Zero(), Vec3::Zero()};  // grad[j][k] = d_j beta_k
  double total = 0.0;
  constexpr int cyc[3][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}};
  for (const auto& c : cyc) {
    total += b[c[0]] * (grad[c[1]][c[2]] - grad[c[2]][c[1]]);
  }
  return total;
}

double integrability_defect_at(const SolidTorusModel& m, const Vec3& p) {
  const double r = std::hypot(p[0], p[1]);
  const double c = integrability_coefficient(m, r);
  if (c == 0.0) return 0.0;
  // dr ^ dphi = (1/r) dx ^ dy
  return c / r;
}

Mat3 omega_polar(const SolidTorusModel& m, double r, bool inner) {
  const auto& c = m.cutoffs;
  Mat3 w = Mat3::Zero();
  auto put = [&w](int i, int j, double v) {
    w(i, j) += v;
    w(j, i) -= v;
  };
  const double half_sign = m.half_term == HalfTerm::Oriented ? 1.0 : -1.0;
  if (inner) {
    put(0, 1, c.lambda0(r) * r);
  } else {
    put(0, 1, c.lambda1(r));
    put(0, 2, m.a * c.lambda1(r));
  }
  put(1, 2, half_sign * c.lambda_half(r));  // lambda_{1/2} dphi ^ dtheta (Oriented)
  return w;
}

namespace {

void require_pieces_agree(const SolidTorusModel& m) {
  const auto& c = m.cutoffs;
  require(c.lambda0(0.5) == 0.0 && c.lambda1(0.5) == 0.0, ErrorKind::ModelConsistency,
          "inner and outer 2-form pieces disagree at r = 1/2");
}

}  // namespace

Mat3 omega_form(const SolidTorusModel& m, const Vec3& p) {
  require_pieces_agree(m);
  const Polar q = polar_of(p);
  const bool inner = q.r <= 0.5;
  const auto& c = m.cutoffs;
  Mat3 w = Mat3::Zero();
  if (inner) {
    // lambda0 r dr ^ dphi = lambda0 dx ^ dy, smooth through the core.
    const double l0 = c.lambda0(q.r);
    w(0, 1) = l0;
    w(1, 0) = -l0;
    if (q.r > 0.0) {
      Mat3 rest = omega_polar(m, q.r, true);
      rest(0, 1) = rest(1, 0) = 0.0;
      const Mat3 j = jacobian(q);
      w += j.transpose() * rest * j;
    } else {
      require(c.lambda_half(0.0) == 0.0, ErrorKind::ModelConsistency, "lambda_1/2 must vanish at the core");
    }
    return w;
  }
  const Mat3 j = jacobian(q);
  return j.transpose() * omega_polar(m, q.r, false) * j;
}

double leafwise_margin(const SolidTorusModel& m, const Vec3& p) {
  const auto k = beta_form(m, p).kernel;
  return std::abs(k.col(0).dot(omega_form(m, p) * k.col(1)));
}

InducedBoundaryForm induced_boundary_form(const SolidTorusModel& m, double phi, double theta) {
  const Vec3 p = to_cartesian(1.0, phi, theta);
  const BetaSample b = beta_form(m, p);
  const Vec3 d_r(std::cos(phi), std::sin(phi), 0.0);
  const Vec3 d_phi(-std::sin(phi), std::cos(phi), 0.0);
  const Vec3 d_theta(0.0, 0.0, 1.0);
  InducedBoundaryForm out;
  const double bp = b.cartesian.dot(d_phi);
  const double bt = b.cartesian.dot(d_theta);
  require(std::hypot(bp, bt) > 0.0, ErrorKind::ModelConsistency, "foliation tangent to the boundary");
  out.leaf_tangent = (bt * d_phi - bp * d_theta).normalized();
  Vec3 x = b.kernel * (b.kernel.transpose() * d_r);
  x -= out.leaf_tangent.dot(x) * out.leaf_tangent;
  const double dr = x.dot(d_r);
  require(std::abs(dr) > 1e-12, ErrorKind::ModelConsistency, "foliation tangent to the boundary");
  out.x_field = x / dr;
  const Mat3 w = omega_form(m, p);
  out.alpha = w.transpose() * out.x_field;
  out.value = out.alpha.dot(out.leaf_tangent);
  return out;
}

bool VerifyReport::passes(double defect_tol, double margin_floor) const {
  return cutoffs_ok && beta_vanishing == 0 && defect_max < defect_tol && margin_min > margin_floor && boundary_alpha_check < 1e-12 &&
         continuity_max < 1e-12;
}

VerifyReport verify_example(const SolidTorusModel& m, int grid, int boundary_probes) {
  require(grid >= 2, ErrorKind::Precondition, "grid needs at least two points per axis");
  VerifyReport rep;
  rep.a = m.a;
  rep.grid = grid;
  rep.cutoffs_ok = validate(m.cutoffs).ok();
  for (int i = 0; i < grid; ++i) {
    const double r = static_cast<double>(i) / (grid - 1);
    for (int j = 0; j < grid; ++j) {
      const double phi = kTwoPi * j / grid;
      for (int k = 0; k < grid; ++k) {
        const double theta = kTwoPi * k / grid;
        const Vec3 p = to_cartesian(r, phi, theta);
        rep.defect_max = std::max(rep.defect_max, std::abs(integrability_defect_at(m, p)));
        double margin = 0.0;
        try {
          margin = leafwise_margin(m, p);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::DegenerateInput) throw;
          ++rep.beta_vanishing;
        }
        if (margin < rep.margin_min) {
          rep.margin_min = margin;
          rep.margin_argmin = {r, phi, theta};
        }
        ++rep.points;
      }
    }
  }
  // Boundary identities on the torus r = 1.
  const int side = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(boundary_probes)))));
  for (int s = 0; s < boundary_probes; ++s) {
    const double phi = kTwoPi * (s % side) / side + 0.1;
    const double theta = kTwoPi * (s / side) / std::max(1, boundary_probes / side) + 0.05;
    const Vec3 p = to_cartesian(1.0, phi, theta);
    const Mat3 w = omega_form(m, p);
    const Vec3 d_r(std::cos(phi), std::sin(phi), 0.0);
    const Vec3 d_phi(-std::sin(phi), std::cos(phi), 0.0);
    const Vec3 d_theta(0.0, 0.0, 1.0);
    const double e1 = std::abs(d_r.dot(w * d_phi) - 1.0);      // alpha(d_phi) = 1
    const double e2 = std::abs(d_r.dot(w * d_theta) - m.a);    // alpha(d_theta) = a
    const double e3 = std::abs(d_r.dot(w * d_r));
    rep.boundary_alpha_check = std::max({rep.boundary_alpha_check, e1, e2, e3});
    ++rep.boundary_probes;
  }
  {
    const Vec3 p = to_cartesian(1.0, 0.0, 0.0);
    const Mat3 w = omega_form(m, p);
    const Vec3 d_r(1.0, 0.0, 0.0);
    const Vec3 v(0.0, 1.0, m.a);  // a d_theta + d_phi at phi = 0
    rep.kernel_value = d_r.dot(w * v);
    rep.alpha_on_kernel = m.a * m.a + 1.0;  // alpha = a dtheta + dphi
  }
  // Piece continuity where both pieces are defined.
  for (int i = 0; i <= 200; ++i) {
    const double r = 0.35 + 0.3 * i / 200.0;
    const auto& c = m.cutoffs;
    if (c.lambda0(r) != 0.0 || c.lambda1(r) != 0.0) {
      if (std::abs(r - 0.5) < 1e-12) rep.continuity_max = kInf;
      continue;
    }
    rep.continuity_max = std::max(rep.continuity_max, max_abs(omega_polar(m, r, true) - omega_polar(m, r, false)));
  }
  return rep;
}

double FamilyModel::f(const Vec& z) const {
  return f_max * (1.0 - smooth_step((z.norm() - f_inner) / (f_outer - f_inner)));
}

double FamilyModel::g(const Vec& z) const { return 1.0 - smooth_step((z.norm() - g_inner) / (g_outer - g_inner)); }

FamilySample family_forms(const FamilyModel& fam, const Vec& point) {
  const int m = fam.param_dim;
  require(m >= 1, ErrorKind::Precondition, "family needs n >= 4");
  require(point.size() == 3 + m, ErrorKind::Precondition, "family point has wrong dimension");
  require(fam.f_outer <= fam.g_inner, ErrorKind::Precondition, "g must equal 1 on the support of f");
  const Vec z = point.tail(m);
  require(z.norm() <= 1.0 + 1e-12, ErrorKind::Precondition, "parameter outside the unit disk");
  FamilySample s;
  s.f = fam.f(z);
  s.g = fam.g(z);
  require(!(s.f > 0.0 && s.g < 1.0), ErrorKind::Precondition, "g < 1 where f > 0");
  SolidTorusModel model = fam.base;
  model.a = s.f;
  const Vec3 p = point.head<3>();
  const BetaSample b = beta_form(model, p);
  Vec3 one = s.g * b.cartesian;
  one[2] += 1.0 - s.g;
  Mat3 two = s.g * omega_form(model, p);
  const double r = std::hypot(p[0], p[1]);
  if (!fam.literal_dtheta) {
    two(0, 1) += 1.0 - s.g;  // r dr ^ dphi = dx ^ dy
    two(1, 0) -= 1.0 - s.g;
  } else if (r > 0.0) {
    // r dr ^ dtheta = x dx ^ dtheta + y dy ^ dtheta
    two(0, 2) += (1.0 - s.g) * p[0];
    two(2, 0) -= (1.0 - s.g) * p[0];
    two(1, 2) += (1.0 - s.g) * p[1];
    two(2, 1) -= (1.0 - s.g) * p[1];
  }
  s.one_form = Vec::Zero(3 + m);
  s.one_form.head<3>() = one;
  s.two_form = Mat::Zero(3 + m, 3 + m);
  s.two_form.topLeftCorner<3, 3>() = two;
  const auto k = kernel_basis(one);
  s.margin = std::abs(k.col(0).dot(two * k.col(1)));
  // Slice integrability: beta_slice = (1-g) dtheta + g beta_f, d along the slice only.
  if (r > 0.0) {
    const Vec3 bp = beta_polar(model, r);
    const Vec3 dbp = beta_polar_derivative(model, r);
    const Vec3 sb(s.g * bp[0], s.g * bp[1], (1.0 - s.g) + s.g * bp[2]);
    const Vec3 sdb = s.g * dbp;
    s.defect = (sb[2] * sdb[1] - sb[1] * sdb[2]) / r;
  }
  return s;
}

FamilyReport verify_family(const FamilyModel& fam, int grid) {
  FamilyReport rep;
  const int m = fam.param_dim;
  for (int iz = 0; iz < grid; ++iz) {
    const double zr = static_cast<double>(iz) / (grid - 1);
    Vec z = Vec::Zero(m);
    z[0] = zr;
    for (int i = 0; i < grid; ++i) {
      const double r = static_cast<double>(i) / (grid - 1);
      for (int j = 0; j < grid; ++j) {
        const double phi = kTwoPi * j / grid;
        Vec pt(3 + m);
        pt.head<3>() = to_cartesian(r, phi, 0.3);
        pt.tail(m) = z;
        const FamilySample s = family_forms(fam, pt);
        rep.margin_min = std::min(rep.margin_min, s.margin);
        rep.defect_max = std::max(rep.defect_max, std::abs(s.defect));
        if (s.g == 1.0) {
          SolidTorusModel model = fam.base;
          model.a = s.f;
          const Vec3 p = pt.head<3>();
          const double d1 = (beta_form(model, p).cartesian - s.one_form.head<3>()).cwiseAbs().maxCoeff();
          const double d2 = max_abs(omega_form(model, p) - s.two_form.topLeftCorner<3, 3>());
          rep.reduction_error = std::max({rep.reduction_error, d1, d2});
        }
        ++rep.points;
      }
    }
  }
  return rep;
}

}  // namespace leafwise::torus
