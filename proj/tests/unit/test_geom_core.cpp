#include "generators.hpp"

#include "leafwise/error.hpp"
#include "leafwise/field_io.hpp"
#include "leafwise/geom_core.hpp"
#include "leafwise/presets.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace leafwise;
using leafwise::testing::Gen;
using leafwise::testing::sigma_min;

namespace {

Mat cols(std::initializer_list<Vec> vs) {
  Mat m(vs.begin()->size(), static_cast<Eigen::Index>(vs.size()));
  Eigen::Index c = 0;
  for (const Vec& v : vs) m.col(c++) = v;
  return m;
}

Vec e(int n, int i) { return Vec::Unit(n, i); }

geom::PlaneFieldSample sample_of(const Mat& frame) { return geom::PlaneFieldSample(Vec::Zero(frame.rows()), frame); }

geom::LeafwiseForm dy_form() {
  return geom::LeafwiseForm(1, [](const Vec&, const Mat& v) { return v(1, 0); });
}

geom::LeafwiseForm x_dy_form() {
  return geom::LeafwiseForm(1, [](const Vec& x, const Mat& v) { return x[0] * v(1, 0); });
}

}  // namespace

TEST_SUITE("geom_core") {
  TEST_CASE("project_along: complement, kernel and skew subspaces") {
    const auto tau = sample_of(cols({e(4, 0), e(4, 1)}));
    CHECK(geom::project_along(tau, cols({e(4, 2), e(4, 3)})).margin == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(geom::project_along(tau, cols({e(4, 0), e(4, 1)})).margin == doctest::Approx(0.0));

    // Oracle: orthonormalize the subspace, project onto span(e3, e4), dense SVD.
    const Mat sub = cols({e(4, 0) + e(4, 2), e(4, 1) + e(4, 3)});
    const Mat q = Eigen::HouseholderQR<Mat>(sub).householderQ() * Mat::Identity(4, 2);
    const double oracle = sigma_min(q.bottomRows(2));
    CHECK(oracle == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(geom::project_along(tau, sub).margin == doctest::Approx(oracle).epsilon(1e-12));
  }

  TEST_CASE("project_along rejects dependent subspaces") {
    const auto tau = sample_of(cols({e(4, 0), e(4, 1)}));
    try {
      (void)geom::project_along(tau, cols({e(4, 2), 2.0 * e(4, 2)}));
      FAIL("expected DegenerateInput");
    } catch (const Error& err) {
      CHECK(err.kind() == ErrorKind::DegenerateInput);
    }
  }

  TEST_CASE("property: project_along margin is invariant under re-framing tau") {
    Gen g(101);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = g.integer(3, 6);
      const int k = g.integer(1, n - 1);
      const Mat f = g.frame(n, k);
      const Mat sub = g.gaussian(n, n - k);
      const double base = geom::project_along(sample_of(f), sub).margin;
      const double turned = geom::project_along(sample_of(f * g.orthogonal(k)), sub).margin;
      CHECK(turned == doctest::Approx(base).epsilon(1e-10));
      // Independent oracle: orthonormal bases of the subspace and of tau^perp.
      const Mat perp = Eigen::JacobiSVD<Mat>(f, Eigen::ComputeFullU).matrixU().rightCols(n - k);
      const Mat qs = Eigen::HouseholderQR<Mat>(sub).householderQ() * Mat::Identity(n, n - k);
      CHECK(base == doctest::Approx(sigma_min(perp.transpose() * qs)).epsilon(1e-9));
    }
  }

  TEST_CASE("property: PlaneFieldSample frames are orthonormal") {
    Gen g(7);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = g.integer(3, 7);
      const int k = g.integer(1, n);
      const geom::PlaneFieldSample s(g.gaussian(n), g.gaussian(n, k));
      const Mat gram = s.frame().transpose() * s.frame();
      CHECK(max_abs(gram - Mat::Identity(k, k)) < 1e-12);
      CHECK(s.rank() == k);
    }
  }

  TEST_CASE("pair_nondegenerate on the listed pairs") {
    const auto t12 = presets::coordinate_plane(4, 0, 1);
    const Vec x = Vec::Zero(4);
    {
      const geom::PairedDistribution p{t12, presets::coordinate_form(4, 0, 1)};
      const auto nd = geom::pair_nondegenerate(p, x);
      CHECK(nd.ok);
      CHECK(nd.margin == doctest::Approx(1.0));
    }
    {
      const geom::PairedDistribution p{t12, presets::coordinate_form(4, 2, 3)};
      const auto nd = geom::pair_nondegenerate(p, x);
      CHECK_FALSE(nd.ok);
      CHECK(nd.margin == 0.0);
    }
    {
      const Vec f1 = e(4, 0);
      const Vec f2 = std::cos(0.4) * e(4, 1) + std::sin(0.4) * e(4, 2);
      const geom::PairedDistribution p{presets::constant_plane(cols({f1, f2})), presets::standard_form(4)};
      Mat w = Mat::Zero(4, 4);
      w(0, 1) = 1;
      w(1, 0) = -1;
      w(2, 3) = 1;
      w(3, 2) = -1;
      const double oracle = std::abs(f1.dot(w * f2));  // omega(f1, f2) evaluated directly
      const auto nd = geom::pair_nondegenerate(p, x);
      CHECK(nd.ok);
      CHECK(oracle == doctest::Approx(std::cos(0.4)).epsilon(1e-15));
      CHECK(nd.margin == doctest::Approx(oracle).epsilon(1e-14));
    }
  }

  TEST_CASE("pair_nondegenerate rejects odd rank") {
    const geom::PairedDistribution p{presets::constant_plane(cols({e(4, 0)})), presets::standard_form(4)};
    CHECK_THROWS_AS((void)geom::pair_nondegenerate(p, Vec::Zero(4)), Error);
  }

  TEST_CASE("property: nondegeneracy is open under small form perturbations") {
    Gen g(33);
    // Rank k = 2, entrywise bound delta / (2 k!) = delta / 4. For unit f1, f2
    // in R^n with n <= 4, |f1^T N f2| <= |N|_max |f1|_1 |f2|_1 <= 4 |N|_max < delta.
    int tested = 0;
    for (int trial = 0; trial < 400; ++trial) {
      const int n = g.integer(3, 4);
      const Mat f = g.frame(n, 2);
      const Mat w = g.antisymmetric(n);
      const auto base = geom::frame_nondegenerate(f, w);
      if (base.margin < 1e-3) continue;
      const double bound = 0.999 * base.margin / 4.0;
      Mat noise = Mat::Zero(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          noise(i, j) = g.uniform(-bound, bound);
          noise(j, i) = -noise(i, j);
        }
      }
      CHECK(geom::frame_nondegenerate(f, w + noise).ok);
      ++tested;
    }
    CHECK(tested > 100);
  }

  TEST_CASE("TwoFormField rejects asymmetric matrices") {
    const geom::TwoFormField bad(3, [](const Vec&) { return Mat::Identity(3, 3); });
    CHECK_THROWS_AS((void)bad.at(Vec::Zero(3)), Error);
  }

  TEST_CASE("tangential_derivative examples") {
    const auto chart = geom::FoliatedChart::horizontal();
    const geom::VectorField dx = [](const Vec&) { return Vec(Vec::Unit(3, 0)); };
    const geom::VectorField dy = [](const Vec&) { return Vec(Vec::Unit(3, 1)); };
    const Vec x = (Vec(3) << 0.3, -0.2, 0.7).finished();
    const geom::LeafwiseForm constant(1, [](const Vec&, const Mat& v) { return 2.0 * v(0, 0) - v(1, 0); });
    CHECK(std::abs(geom::tangential_derivative(constant, chart, x, {dx, dy})) < 1e-8);
    CHECK(geom::tangential_derivative(x_dy_form(), chart, x, {dx, dy}) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(geom::tangential_derivative(dy_form(), chart, x, {dx, dy})) < 1e-8);
  }

  TEST_CASE("tangential_derivative rejects fields leaving the leaves") {
    const auto chart = geom::FoliatedChart::horizontal();
    const geom::VectorField dx = [](const Vec&) { return Vec(Vec::Unit(3, 0)); };
    const geom::VectorField dz = [](const Vec&) { return Vec(Vec::Unit(3, 2)); };
    CHECK_THROWS_AS((void)geom::tangential_derivative(dy_form(), chart, Vec::Zero(3), {dx, dz}), Error);
  }

  TEST_CASE("property: d_F of a 1-form with commuting fields is X0 eta(X1) - X1 eta(X0)") {
    Gen g(5);
    const auto chart = geom::FoliatedChart::horizontal();
    for (int trial = 0; trial < 50; ++trial) {
      const double a = g.uniform(-2, 2), b = g.uniform(-2, 2), c = g.uniform(-2, 2);
      // eta = (a y + c x^2) dx + (b x) dy restricted to the leaves z = const
      const geom::LeafwiseForm eta(1, [=](const Vec& p, const Mat& v) {
        return (a * p[1] + c * p[0] * p[0]) * v(0, 0) + b * p[0] * v(1, 0);
      });
      const Vec u = g.unit(2);
      const Vec w = g.unit(2);
      const geom::VectorField x0 = [u](const Vec&) { return Vec((Vec(3) << u[0], u[1], 0).finished()); };
      const geom::VectorField x1 = [w](const Vec&) { return Vec((Vec(3) << w[0], w[1], 0).finished()); };
      const Vec p = g.gaussian(3);
      // d eta = (b - a) dx ^ dy, evaluated on (u, w)
      const double oracle = (b - a) * (u[0] * w[1] - u[1] * w[0]);
      CHECK(geom::tangential_derivative(eta, chart, p, {x0, x1}) == doctest::Approx(oracle).epsilon(1e-6));
    }
  }

  TEST_CASE("property: leafwise forms alternate") {
    Gen g(17);
    const geom::LeafwiseForm area(2, [](const Vec&, const Mat& v) { return v(0, 0) * v(1, 1) - v(1, 0) * v(0, 1); });
    for (int trial = 0; trial < 50; ++trial) {
      CHECK(area.alternation_defect(g.gaussian(3), g.gaussian(3, 2), 5, g.seed()) < 1e-14);
    }
    const geom::LeafwiseForm symmetric(2, [](const Vec&, const Mat& v) { return v(0, 0) * v(0, 1); });
    CHECK(symmetric.alternation_defect(Vec::Zero(3), g.gaussian(3, 2), 5, 1) > 1e-3);
  }

  TEST_CASE("extend_by_normal_kernel on the three charts") {
    geom::ExtensionOptions opt;
    const auto flat = geom::extend_by_normal_kernel(dy_form(), geom::FoliatedChart::horizontal(), opt);
    CHECK(flat.report.leafwise_closed);
    CHECK(flat.report.max_ambient_derivative < 1e-8);

    const auto tilted_chart = geom::FoliatedChart::tilted();
    const auto tilted = geom::extend_by_normal_kernel(dy_form(), tilted_chart, opt);
    CHECK(tilted.report.leafwise_closed);
    CHECK(tilted.report.max_ambient_derivative < 1e-6);
    // Symbolic oracle: the extension is dy; it kills nu ~ (-1, 0, 1).
    Gen g(3);
    for (int i = 0; i < 20; ++i) {
      const Vec x = g.gaussian(3);
      const Vec v = g.gaussian(3);
      CHECK(tilted.eval(x, v) == doctest::Approx(v[1]).epsilon(1e-12));
      CHECK(std::abs(tilted.eval(x, (Vec(3) << -1, 0, 1).finished())) < 1e-14);
    }

    const auto curved = geom::extend_by_normal_kernel(dy_form(), geom::FoliatedChart::curved(), opt);
    CHECK(curved.report.leafwise_closed);
    CHECK(curved.report.max_ambient_derivative < 1e-6);

    const auto open = geom::extend_by_normal_kernel(x_dy_form(), geom::FoliatedChart::horizontal(), opt);
    CHECK_FALSE(open.report.leafwise_closed);
    CHECK(open.report.max_ambient_derivative == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("bivector_from_pair examples") {
    const auto t12 = presets::coordinate_plane(4, 0, 1);
    const Vec x = Vec::Zero(4);
    const auto s1 = geom::bivector_from_pair({t12, presets::coordinate_form(4, 0, 1)}, x);
    CHECK(s1.pi(0, 1) == doctest::Approx(1.0));
    CHECK(s1.pi(1, 0) == doctest::Approx(-1.0));
    CHECK(max_abs(s1.pi.bottomRightCorner(2, 2)) == 0.0);
    CHECK(s1.image_distance < 1e-12);

    const auto s2 = geom::bivector_from_pair({t12, presets::coordinate_form(4, 0, 1, 2.0)}, x);
    CHECK(s2.pi(0, 1) == doctest::Approx(0.5));
    CHECK(s2.image_distance < 1e-12);

    CHECK_THROWS_AS((void)geom::bivector_from_pair({t12, presets::coordinate_form(4, 2, 3)}, x), Error);
  }

  TEST_CASE("property: bivector image equals tau and re-contraction is the identity on tau") {
    Gen g(2024);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = g.integer(3, 6);
      const Mat f = g.frame(n, 2);
      Mat w = g.antisymmetric(n);
      if (std::abs(f.col(0).dot(w * f.col(1))) < 1e-2) continue;
      const geom::PairedDistribution p{presets::constant_plane(f), presets::constant_form(w)};
      const auto s = geom::bivector_from_pair(p, Vec::Zero(n));
      CHECK(s.image_distance < 1e-10);
      // Oracle projector onto tau from the raw frame.
      CHECK(grassmann_distance(s.image, f) == doctest::Approx(s.image_distance).epsilon(1e-6));
      CHECK(max_abs(s.pi + s.pi.transpose()) < 1e-14 * std::max(1.0, max_abs(s.pi)));
      Eigen::FullPivLU<Mat> lu(s.pi);
      lu.setThreshold(1e-10);
      CHECK(lu.rank() == 2);
      for (int c = 0; c < 2; ++c) {
        const Vec v = f.col(c);
        const Vec covector = w.transpose() * v;  // omega(v, -)
        CHECK((s.pi * covector - v).norm() < 1e-10);
      }
    }
  }

  TEST_CASE("rotating preset: continuity and Lipschitz bound") {
    const auto tau = presets::rotating_plane(4, 0.5);
    const auto rep = tau.check_continuity(Box::cube(4, -2, 2), 500, 9, 1e-3);
    CHECK(rep.ok);
    CHECK(rep.pairs == 500);
    CHECK(rep.worst_ratio <= 1.05);
  }

  TEST_CASE("field samples round-trip exactly") {
    Gen g(8);
    const auto pair = presets::make_pair("rotating", 4, 0.3);
    std::vector<io::FieldRecord> recs;
    for (int i = 0; i < 25; ++i) recs.push_back(io::record_at(pair, g.gaussian(4)));
    std::stringstream ss;
    io::write_field_samples(ss, 4, 2, recs);
    const auto back = io::read_field_samples(ss);
    REQUIRE(back.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      CHECK((back[i].x - recs[i].x).cwiseAbs().maxCoeff() == 0.0);
      CHECK(max_abs(back[i].frame - recs[i].frame) == 0.0);
      CHECK(max_abs(back[i].omega - recs[i].omega) == 0.0);
    }
  }

  TEST_CASE("field sample parser reports malformed rows") {
    std::stringstream ss("4 2\n0 0 0 | 1 0 0 0\n");
    CHECK_THROWS_AS(io::read_field_samples(ss), Error);
  }
}
