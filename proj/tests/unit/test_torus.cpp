#include "generators.hpp"

#include "leafwise/error.hpp"
#include "leafwise/torus_example.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace leafwise;
using namespace leafwise::torus;
using leafwise::testing::Gen;

namespace {

constexpr double kPi = std::numbers::pi;

// Forms written out by hand on (r, phi, theta), Oriented half term.
Vec3 beta_oracle(const CutoffTriple& c, double a, double r) {
  return {c.lambda_half(r), -a * c.lambda1(r), c.lambda1(r) + c.lambda0(r)};
}

Mat3 two_form(int i, int j, double coef) {
  Mat3 m = Mat3::Zero();
  m(i, j) += coef;
  m(j, i) -= coef;
  return m;
}

constexpr int R = 0;
constexpr int PHI = 1;
constexpr int TH = 2;

Mat3 omega_inner_oracle(const CutoffTriple& c, double r) {
  return two_form(R, PHI, c.lambda0(r) * r) + two_form(PHI, TH, c.lambda_half(r));
}

Mat3 omega_outer_oracle(const CutoffTriple& c, double a, double r) {
  return two_form(R, PHI, c.lambda1(r)) + two_form(PHI, TH, c.lambda_half(r)) + two_form(R, TH, a * c.lambda1(r));
}

// d(r, phi, theta) / d(x, y, theta).
Mat3 polar_jacobian(double r, double phi) {
  Mat3 j;
  j << std::cos(phi), std::sin(phi), 0, -std::sin(phi) / r, std::cos(phi) / r, 0, 0, 0, 1;
  return j;
}

double numeric_derivative(const Plateau& p, double r) {
  const double h = 1e-6;
  return (p(r + h) - p(r - h)) / (2 * h);
}

}  // namespace

TEST_SUITE("torus_example") {
  TEST_CASE("default cutoffs satisfy the contract") {
    const auto c = CutoffTriple::defaults();
    CHECK(validate(c).ok());
    CHECK(c.lambda0(0.0) == 1.0);
    CHECK(c.lambda_half(0.5) == 1.0);
    CHECK(c.lambda1(1.0) == 1.0);
    CHECK_FALSE(validate(CutoffTriple::overlapping()).disjoint);
  }

  TEST_CASE("beta examples") {
    const SolidTorusModel m;
    const auto b1 = beta_form(m, to_cartesian(1.0, 0.7, 1.1));
    CHECK(b1.polar(0) == doctest::Approx(0.0));
    CHECK(b1.polar(1) == doctest::Approx(-0.5));
    CHECK(b1.polar(2) == doctest::Approx(1.0));
    // Kernel at r = 1 is span(d_r, a d_theta + d_phi) in polar coordinates.
    const double phi = 0.7;
    const Mat3 jinv = polar_jacobian(1.0, phi).inverse();
    Eigen::Matrix<double, 3, 2> expected;
    expected.col(0) = jinv * Vec3(1, 0, 0);
    expected.col(1) = jinv * Vec3(0, 1, 0.5);
    CHECK(grassmann_distance(b1.kernel, Mat(expected.householderQr().householderQ() * Mat::Identity(3, 2))) < 1e-12);

    const auto b0 = beta_form(m, Vec3::Zero());
    CHECK(b0.cartesian.isApprox(Vec3(0, 0, 1)));
    Eigen::Matrix<double, 3, 2> disk;
    disk << 1, 0, 0, 1, 0, 0;
    CHECK(grassmann_distance(b0.kernel, disk) < 1e-14);

    const auto bh = beta_form(m, to_cartesian(0.5, 2.0, 0.3));
    CHECK(bh.polar(0) == 1.0);
  }

  TEST_CASE("property: beta matches the hand-written form and its kernel") {
    Gen g(31);
    for (int i = 0; i < 500; ++i) {
      const SolidTorusModel m{g.uniform(0.05, 1.0)};
      const double r = g.uniform(0.01, 1.0);
      const double phi = g.uniform(0, 2 * kPi);
      const auto s = beta_form(m, to_cartesian(r, phi, g.uniform(0, 2 * kPi)));
      const Vec3 bp = beta_oracle(m.cutoffs, m.a, r);
      CHECK((s.polar - bp).norm() < 1e-14);
      const Vec3 bc = polar_jacobian(r, phi).transpose() * bp;
      CHECK((s.cartesian - bc).norm() < 1e-12);
      CHECK((bc.transpose() * s.kernel).norm() < 1e-12);
      CHECK((s.kernel.transpose() * s.kernel - Eigen::Matrix2d::Identity()).norm() < 1e-12);
    }
  }

  TEST_CASE("integrability coefficient: oracle and controls") {
    Gen g(32);
    for (const auto& c : {CutoffTriple::defaults(), CutoffTriple::overlapping()}) {
      const SolidTorusModel m{0.5, c};
      for (int i = 0; i < 200; ++i) {
        const double r = g.uniform(0.01, 0.99);
        const double oracle =
            m.a * (c.lambda1(r) * numeric_derivative(c.zero, r) - c.lambda0(r) * numeric_derivative(c.one, r));
        CHECK(std::abs(integrability_coefficient(m, r) - oracle) < 1e-7 * std::max(1.0, std::abs(oracle)));
      }
    }
    double worst_valid = 0.0;
    double worst_overlap = 0.0;
    double worst_flat = 0.0;
    for (int i = 0; i <= 2000; ++i) {
      const double r = i / 2000.0;
      worst_valid = std::max(worst_valid, std::abs(integrability_coefficient({0.5}, r)));
      worst_overlap = std::max(worst_overlap, std::abs(integrability_coefficient({0.5, CutoffTriple::overlapping()}, r)));
      worst_flat = std::max(worst_flat, std::abs(integrability_coefficient({0.0, CutoffTriple::overlapping()}, r)));
    }
    CHECK(worst_valid < 1e-12);
    CHECK(worst_overlap > 0.1);
    CHECK(worst_flat == 0.0);
  }

  TEST_CASE("omega pieces match the hand-written forms") {
    Gen g(33);
    for (int i = 0; i < 300; ++i) {
      const SolidTorusModel m{g.uniform(0.05, 1.0)};
      const double r = g.uniform(0.0, 1.0);
      CHECK((omega_polar(m, r, true) - omega_inner_oracle(m.cutoffs, r)).norm() < 1e-14);
      CHECK((omega_polar(m, r, false) - omega_outer_oracle(m.cutoffs, m.a, r)).norm() < 1e-14);
    }
    // AsPrinted flips the half term only.
    SolidTorusModel printed;
    printed.half_term = HalfTerm::AsPrinted;
    const Mat3 diff = omega_polar(printed, 0.5, true) - omega_polar(SolidTorusModel{}, 0.5, true);
    CHECK((diff - two_form(TH, PHI, 2.0)).norm() < 1e-14);
  }

  TEST_CASE("pieces agree across the middle band") {
    const SolidTorusModel m;
    for (int i = 0; i <= 100; ++i) {
      const double r = 0.34 + (0.66 - 0.34) * i / 100.0;
      CHECK((omega_polar(m, r, true) - omega_polar(m, r, false)).norm() < 1e-14);
    }
  }

  TEST_CASE("boundary identities at r = 1") {
    for (double a : {0.5, 0.25, 1.0}) {
      const SolidTorusModel m{a};
      const Mat3 w = omega_polar(m, 1.0, false);
      const Vec3 contraction = w.row(R).transpose();
      CHECK((contraction - Vec3(0, 1, a)).norm() < 1e-14);
      const Vec3 k(0, 1, a);
      CHECK(Vec3(1, 0, 0).dot(w * k) == doctest::Approx(a * a + 1).epsilon(1e-14));
    }
    const auto rep = verify_example(SolidTorusModel{}, 12, 200);
    CHECK(rep.kernel_value == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(std::abs(rep.alpha_on_kernel - 1.25) < 1e-12);
    CHECK(rep.boundary_alpha_check < 1e-12);
    CHECK(rep.boundary_probes == 200);
  }

  TEST_CASE("a = 0 boundary: alpha is dphi") {
    const SolidTorusModel m{0.0};
    const auto b = induced_boundary_form(m, 0.4, 1.3);
    CHECK(std::abs(b.value) == doctest::Approx(1.0).epsilon(1e-12));
    const auto rep = verify_example(m, 8, 50);
    CHECK(rep.alpha_on_kernel == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.defect_max == 0.0);
  }

  TEST_CASE("near the core the form is the Cartesian area form") {
    const SolidTorusModel m;
    const Mat3 w0 = omega_form(m, Vec3::Zero());
    CHECK(w0(0, 1) == doctest::Approx(1.0));
    CHECK(leafwise_margin(m, Vec3::Zero()) == doctest::Approx(1.0));
    for (double r : {1e-3, 1e-5, 1e-8}) {
      const Mat3 w = omega_form(m, to_cartesian(r, 0.9, 0.2));
      CHECK(std::abs(w(0, 1) - 1.0) < 1e-12);
    }
  }

  TEST_CASE("property: Cartesian chart agrees with the polar formulas") {
    Gen g(34);
    const SolidTorusModel m;
    for (int i = 0; i < 300; ++i) {
      const double r = g.uniform(1e-3, 1.0);
      const double phi = g.uniform(0, 2 * kPi);
      const Mat3 j = polar_jacobian(r, phi);
      const Mat3 polar = r <= 0.5 ? omega_inner_oracle(m.cutoffs, r) : omega_outer_oracle(m.cutoffs, m.a, r);
      const Mat3 oracle = j.transpose() * polar * j;
      const Mat3 got = omega_form(m, to_cartesian(r, phi, g.uniform(0, 2 * kPi)));
      CHECK((got - oracle).norm() < 1e-10 * std::max(1.0, oracle.norm()));
    }
    // Continuity probe: below r = 1e-3 the chart stays within 1e-6 of the value there.
    const Mat3 ref = omega_form(m, to_cartesian(1e-3, 0.3, 0.0));
    for (double r : {5e-4, 1e-4, 1e-6, 0.0}) CHECK((omega_form(m, to_cartesian(r, 0.3, 0.0)) - ref).norm() < 1e-6);
  }

  TEST_CASE("property: leafwise margin equals |omega| on an SVD kernel basis") {
    Gen g(35);
    const SolidTorusModel m;
    for (int i = 0; i < 300; ++i) {
      const Vec3 p = to_cartesian(g.uniform(0.0, 1.0), g.uniform(0, 2 * kPi), g.uniform(0, 2 * kPi));
      const Vec3 b = beta_form(m, p).cartesian;
      Eigen::JacobiSVD<Mat3> svd(Mat3(b * b.transpose()), Eigen::ComputeFullU);
      const Vec3 k1 = svd.matrixU().col(1);
      const Vec3 k2 = svd.matrixU().col(2);
      const double oracle = std::abs(k1.dot(omega_form(m, p) * k2));
      CHECK(leafwise_margin(m, p) == doctest::Approx(oracle).epsilon(1e-10));
      CHECK(oracle > 0.0);
    }
  }

  TEST_CASE("verify_example on a coarse grid") {
    const auto rep = verify_example(SolidTorusModel{}, 16, 100);
    CHECK(rep.passes());
    CHECK(rep.defect_max < 1e-12);
    CHECK(rep.margin_min > 0.2);
    CHECK(rep.continuity_max < 1e-12);
    CHECK(rep.points == 16u * 16u * 16u);
  }

  TEST_CASE("corrupted half cutoff loses nondegeneracy at r = 1/2") {
    SolidTorusModel m;
    m.cutoffs.half = Plateau{0.26, 0.40, 0.40, 0.50};
    CHECK(m.cutoffs.lambda_half(0.5) == 0.0);
    // All three cutoffs vanish at r = 1/2, so beta does too.
    CHECK_THROWS_AS((void)leafwise_margin(m, to_cartesian(0.5, 0.0, 0.0)), Error);
    const auto rep = verify_example(m, 17, 20);
    CHECK(rep.margin_min == 0.0);
    CHECK(rep.margin_argmin(0) == doctest::Approx(0.5));
    CHECK(rep.beta_vanishing > 0);
    CHECK_FALSE(rep.passes());
  }

  TEST_CASE("family reduces to the model where g = 1 and to product data where g = 0") {
    Gen g(36);
    FamilyModel fam;
    fam.param_dim = 1;
    for (int i = 0; i < 200; ++i) {
      const double r = g.uniform(0.0, 1.0);
      const double phi = g.uniform(0, 2 * kPi);
      const Vec3 p = to_cartesian(r, phi, g.uniform(0, 2 * kPi));
      Vec pt(4);
      pt << p, g.uniform(-0.5, 0.5);
      const auto s = family_forms(fam, pt);
      if (s.g == 1.0) {
        const SolidTorusModel m{s.f};
        CHECK((s.one_form.head(3) - beta_form(m, p).cartesian).norm() < 1e-14);
        CHECK((s.two_form.topLeftCorner(3, 3) - omega_form(m, p)).norm() < 1e-14);
      }
      CHECK(s.defect < 1e-12);
      CHECK(s.margin > 0.0);
    }
    for (double z : {0.85, -0.9, 0.99}) {
      Vec pt(4);
      pt << to_cartesian(0.6, 1.0, 2.0), z;
      const auto s = family_forms(fam, pt);
      CHECK(s.f == 0.0);
      CHECK(s.g == 0.0);
      CHECK((s.one_form - Vec::Unit(4, 2)).norm() < 1e-14);
      CHECK(s.margin == doctest::Approx(1.0).epsilon(1e-12));
    }
    const auto rep = verify_family(fam, 8);
    CHECK(rep.reduction_error < 1e-12);
    CHECK(rep.defect_max < 1e-12);
    CHECK(rep.margin_min > 0.0);

    FamilyModel broken = fam;
    broken.g_inner = 0.2;
    broken.g_outer = 0.3;
    Vec pt(4);
    pt << 0.1, 0.1, 0.0, 0.25;
    CHECK_THROWS_AS((void)family_forms(broken, pt), Error);
  }
}
