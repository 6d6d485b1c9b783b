#include "generators.hpp"

#include "leafwise/diffeo_group.hpp"
#include "leafwise/diffeo_paths.hpp"
#include "leafwise/error.hpp"
#include "leafwise/torus_example.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace leafwise;
using namespace leafwise::diffeo;
using leafwise::testing::Gen;

namespace {

constexpr double kPi = std::numbers::pi;

// exp(-1/t) step and the radial bump, written out again for the oracles.
double step_oracle(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

double bump_oracle(double s) { return 1.0 - step_oracle(s); }

// Fixed-step RK4 for x' = bump(|x - c| / r) d.
Vec rk4_flow(const Vec& x0, const Vec& c, double r, const Vec& d, double time, int steps) {
  auto field = [&](const Vec& x) -> Vec { return bump_oracle((x - c).norm() / r) * d; };
  Vec x = x0;
  const double h = time / steps;
  for (int i = 0; i < steps; ++i) {
    const Vec k1 = field(x);
    const Vec k2 = field(x + 0.5 * h * k1);
    const Vec k3 = field(x + 0.5 * h * k2);
    const Vec k4 = field(x + h * k3);
    x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return x;
}

double wrap(double angle) { return std::remainder(angle, 2 * kPi); }

RotationChart chart2() { return {2, 1.0, 0.5}; }

std::vector<Vec> chart_probes(std::size_t count, std::uint64_t seed) {
  return probe_points(chart2().box().grown(0.2), count, seed);
}

FlowOptions tight() {
  FlowOptions f;
  f.tolerance = 1e-13;
  return f;
}

}  // namespace

TEST_SUITE("diffeo_group") {
  TEST_CASE("bump flow: time zero, oracle, support") {
    const Vec c = Vec::Zero(2);
    const auto id = make_bump_flow(c, 1.0, Vec::Unit(2, 0), 0.0);
    CHECK(id.is_identity());

    const auto f = make_bump_flow(c, 1.0, Vec::Unit(2, 0), 1.0);
    const Vec coarse = rk4_flow(c, c, 1.0, Vec::Unit(2, 0), 1.0, 20000);
    const Vec fine = rk4_flow(c, c, 1.0, Vec::Unit(2, 0), 1.0, 40000);
    CHECK((coarse - fine).norm() < 1e-12);
    CHECK((f(c) - fine).norm() < 1e-9);
    CHECK(f(c)[1] == 0.0);

    Gen g(41);
    for (int i = 0; i < 20; ++i) {
      const Vec x = g.in_box(Box::cube(2, -0.9, 0.9)) * 0.7;
      CHECK((f(x) - rk4_flow(x, c, 1.0, Vec::Unit(2, 0), 1.0, 20000)).norm() < 1e-9);
    }
    for (int i = 0; i < 200; ++i) {
      const Vec x = g.unit(2) * g.uniform(1.0, 3.0);
      CHECK(f(x) == x);
      CHECK(f.apply_inverse(x) == x);
    }
  }

  TEST_CASE("group axioms and support algebra") {
    Gen g(42);
    const auto a = make_bump_flow(Vec::Zero(2), 1.0, Vec::Unit(2, 0), 0.7);
    const auto b = make_bump_flow(Vec::Constant(2, 0.4), 0.8, Vec::Unit(2, 1), -0.5);
    const auto id = CDiffeo::identity(2);
    const auto probes = probe_points(Box::cube(2, -2, 2), 1000, 3);
    CHECK(max_discrepancy(compose(id, b), b, probes) == 0.0);
    CHECK(max_discrepancy(compose(b, id), b, probes) == 0.0);
    CHECK(max_discrepancy(compose(a, a.inverse()), id, probes) < 1e-9);
    CHECK(max_discrepancy(compose(a.inverse(), a), id, probes) < 1e-9);
    const auto c = make_displacement(Vec::Zero(2), 1.5, Vec::Unit(2, 1), 0.1);
    CHECK(max_discrepancy(compose(compose(a, b), c), compose(a, compose(b, c)), probes) < 1e-14);
    CHECK(max_discrepancy(product({a, b, c}), compose(a, compose(b, c)), probes) < 1e-14);

    const Box u = compose(a, b).support();
    CHECK(u.contains(a.support().lo));
    CHECK(u.contains(b.support().hi));
    for (const Vec& x : probes) {
      if (!u.contains(x)) CHECK(compose(a, b)(x) == x);
    }
  }

  TEST_CASE("disjoint supports commute") {
    const auto a = make_bump_flow(Vec::Unit(2, 0) * -2.0, 1.0, Vec::Unit(2, 1), 0.8, tight());
    const auto b = make_bump_flow(Vec::Unit(2, 0) * 2.0, 1.0, Vec::Unit(2, 0), -0.6, tight());
    const auto probes = probe_points(Box::cube(2, -3.5, 3.5), 1000, 4);
    CHECK(max_discrepancy(commutator(a, b), CDiffeo::identity(2), probes) < 1e-12);
  }

  TEST_CASE("conjugate of a commutator is the commutator of the conjugates") {
    const auto a = make_bump_flow(Vec::Zero(2), 1.0, Vec::Unit(2, 0), 0.5, tight());
    const auto b = make_bump_flow(Vec::Constant(2, 0.3), 0.9, Vec::Unit(2, 1), 0.4, tight());
    const auto g = make_displacement(Vec::Zero(2), 2.0, Vec::Constant(2, 1.0), 0.2);
    const auto probes = probe_points(Box::cube(2, -2.5, 2.5), 1000, 5);
    CHECK(max_discrepancy(conjugate(g, commutator(a, b)), commutator(conjugate(g, a), conjugate(g, b)), probes) < 1e-9);
  }

  TEST_CASE("v_eps norm: identity and dense-grid oracle") {
    CHECK(v_eps_norm(CDiffeo::identity(2)) == 0.0);
    const double c = 0.01;
    const auto d = make_displacement(Vec::Zero(2), 1.0, Vec::Unit(2, 0), c);
    // d - id = c bump(|x|) e1, so |de_x| = c |bump'(|x|)|; grid of 316^2 points.
    double oracle = 0.0;
    const int n = 316;
    const double h = 1e-6;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double x = -1.0 + 2.0 * (i + 0.5) / n;
        const double y = -1.0 + 2.0 * (j + 0.5) / n;
        const double s = std::hypot(x, y);
        oracle = std::max(oracle, c * std::abs(bump_oracle(s + h) - bump_oracle(s - h)) / (2 * h));
      }
    }
    const double est = v_eps_norm(d);
    CHECK(est == doctest::Approx(oracle).epsilon(0.02));
    CHECK(in_v_eps(est, 2.0 * oracle));
    CHECK_FALSE(in_v_eps(est, 0.5 * oracle));
  }

  TEST_CASE("property: composing two V_eps elements obeys the chain bound") {
    Compose72Options opt;
    const double eps = 0.1;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto a = random_v_eps_element(eps, opt, 2 * seed);
      const auto b = random_v_eps_element(eps, opt, 2 * seed + 1);
      const double na = v_eps_norm(a);
      const double nb = v_eps_norm(b);
      CHECK(na < eps);
      CHECK(nb < eps);
      CHECK(v_eps_norm(compose(a, b)) <= (na + nb + na * nb) * 1.02);
    }
  }

  TEST_CASE("Tsuboi identity") {
    const auto sc = random_tsuboi_scenario(2, 1);
    const auto trivial = tsuboi_verify(CDiffeo::identity(2), CDiffeo::identity(2), sc.h, sc.u, 1000);
    CHECK(trivial.preconditions_met());
    CHECK(trivial.discrepancy < 1e-9);

    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto s = random_tsuboi_scenario(2, seed);
      const auto rep = tsuboi_verify(s.a, s.b, s.h, s.u, 2000, seed);
      CHECK(rep.preconditions_met());
      CHECK(rep.discrepancy < 1e-9);
      CHECK(rep.factors.size() == 4);
    }

    const auto s2 = random_tsuboi_scenario(2, 7);
    const auto cor = tsuboi_product_verify({{sc.a, sc.b}, {s2.a, s2.b}}, sc.h, sc.u, 2000);
    CHECK(cor.preconditions_met());
    CHECK(cor.factors.size() == 8);
    CHECK(cor.discrepancy < 1e-9);

    // Overlapping a, b: the identity holds with the displacing h and fails for h = id.
    const auto a = make_bump_flow(Vec::Zero(2), 0.4, Vec::Unit(2, 0), 0.3, tight());
    const auto b = make_bump_flow(Vec::Unit(2, 0) * 0.1, 0.4, Vec::Unit(2, 1), 0.3, tight());
    CHECK(max_discrepancy(commutator(a, b), CDiffeo::identity(2), probe_points(sc.u, 500, 2)) > 1e-3);
    CHECK(tsuboi_verify(a, b, sc.h, sc.u, 2000).discrepancy < 1e-9);
    const auto bad = tsuboi_verify(a, b, CDiffeo::identity(2), sc.u, 2000);
    CHECK_FALSE(bad.displaced);
    CHECK(bad.discrepancy > 1e-3);
  }

  TEST_CASE("fragmentation identity") {
    const auto id = CDiffeo::identity(2);
    const BumpField zero{Vec::Zero(2), 1.0, Vec::Zero(2)};
    std::vector<CDiffeo> ids(6, id);
    std::vector<BumpField> zeros(6, zero);
    CHECK(fragmentation_verify(id, ids, zeros, 500).discrepancy == 0.0);

    const auto s = make_bump_flow(Vec::Zero(2), 1.0, Vec::Unit(2, 1), 0.4, tight());
    const BumpField x{Vec::Constant(2, 0.3), 0.8, Vec::Unit(2, 0) * 0.5};
    const auto g = commutator(s, exp_field(x, tight()));
    auto sigmas = ids;
    auto fields = zeros;
    sigmas[0] = s;
    fields[0] = x;
    CHECK(fragmentation_verify(g, sigmas, fields, 2000, 1, tight()).discrepancy < 1e-9);

    sigmas[0] = make_bump_flow(Vec::Constant(2, -0.5), 1.0, Vec::Unit(2, 0), 0.9);
    fields[1] = BumpField{Vec::Constant(2, 0.5), 1.0, Vec::Unit(2, 1)};
    CHECK(fragmentation_verify(g, sigmas, fields, 2000).discrepancy > 1e-2);

    CHECK_THROWS_AS((void)fragmentation_verify(g, {id}, zeros), Error);
  }

  TEST_CASE("rotation path h_f") {
    const auto chart = chart2();
    const auto zero = make_rotation_path([](const Vec&) { return 0.0; }, chart);
    const auto probes = chart_probes(500, 6);
    for (double t : {0.0, 0.3, 1.0}) CHECK(max_discrepancy(zero.at(t), CDiffeo::identity(2), probes) == 0.0);

    const auto f = disk_bump(0.5);
    const auto h = make_rotation_path(f, chart);
    const auto h1 = h.at(1.0);
    for (const Vec& y : probes) {
      const Vec z = h1(y);
      const Vec x = chart.disk_coordinate(y);
      CHECK(z.norm() == doctest::Approx(y.norm()).epsilon(1e-14));
      CHECK((chart.disk_coordinate(z) - x).norm() < 1e-12);
      const double turn = x.norm() >= 1.0 ? 0.0 : f(x);
      CHECK(std::abs(wrap(std::atan2(z[1], z[0]) - std::atan2(y[1], y[0]) - turn)) < 1e-12);
    }

    const auto minus = make_rotation_path_unchecked(f, chart, -1.0);
    for (double t : {0.25, 0.5, 1.0}) {
      CHECK(max_discrepancy(compose(h.at(t), minus.at(t)), CDiffeo::identity(2), probes) < 1e-12);
      CHECK(max_discrepancy(h.at(t).inverse(), minus.at(t), probes) < 1e-12);
    }

    CHECK_THROWS_AS((void)make_rotation_path([](const Vec&) { return 2.0; }, chart), Error);
    CHECK_THROWS_AS((void)make_rotation_path([](const Vec&) { return 0.5; }, chart), Error);
  }

  TEST_CASE("concatenation") {
    const auto chart = chart2();
    const auto probes = chart_probes(500, 7);
    const auto c = adjust(with_time_form(constant_path(2)));
    const auto cc = concatenate(c, c, probes);
    CHECK(cc.path.adjusted());
    for (double t : {0.0, 0.3, 0.5, 0.8, 1.0}) CHECK(max_discrepancy(cc.path.at(t), CDiffeo::identity(2), probes) == 0.0);

    const auto f = disk_bump(0.5);
    const auto p = adjust(with_time_form(make_rotation_path(f, chart)));
    const auto pp = concatenate(p, p, probes);
    const auto two_f = make_rotation_path_unchecked(f, chart, 2.0).at(1.0);
    CHECK(max_discrepancy(pp.path.at(1.0), two_f, probes) < 1e-12);
    CHECK(max_discrepancy(pp.path.at(1.0), compose(p.path.at(1.0), p.path.at(1.0)), probes) < 1e-12);
    CHECK(alpha_margin(pp, chart_probes(50, 8)) > 0.0);

    CHECK_THROWS_AS((void)concatenate(with_time_form(make_rotation_path(f, chart)), p, probes), Error);
  }

  TEST_CASE("subdivision") {
    const auto chart = chart2();
    const auto probes = chart_probes(300, 9);
    const auto f = disk_bump(0.5);
    const auto gamma = with_time_form(make_rotation_path(f, chart));

    const auto one = subdivide_path(gamma, 1);
    REQUIRE(one.size() == 1);
    CHECK(max_discrepancy(one[0].path.at(1.0), gamma.path.at(1.0), probes) < 1e-12);

    const auto two = subdivide_path(gamma, 2);
    const auto half = make_rotation_path_unchecked(f, chart, 0.5).at(1.0);
    for (const auto& seg : two) CHECK(max_discrepancy(seg.path.at(1.0), half, probes) < 1e-12);

    const auto four = subdivide_path(gamma, 4);
    CDiffeo acc = CDiffeo::identity(2);
    for (const auto& seg : four) acc = compose(seg.path.at(1.0), acc);
    CHECK(max_discrepancy(acc, gamma.path.at(1.0), probes) < 1e-10);
    for (const auto& seg : four) CHECK(max_discrepancy(seg.path.at(0.0), CDiffeo::identity(2), probes) < 1e-14);

    VEpsOptions coarse;
    coarse.per_axis = 16;
    double last = INFINITY;
    for (int q : {1, 2, 4, 8}) {
      const double norm = segment_norm(subdivide_path(gamma, q), coarse);
      CHECK(norm < last);
      last = norm;
    }
  }

  TEST_CASE("suspension holonomy") {
    const auto chart = chart2();
    const auto constant = suspend(with_time_form(constant_path(2)));
    Gen g(43);
    for (int i = 0; i < 20; ++i) {
      const Vec y = g.in_box(chart.box());
      CHECK((constant.holonomy(y) - y).norm() < 1e-14);
    }

    const auto f = disk_bump(0.5);
    const auto s = suspend(with_time_form(make_rotation_path(f, chart)));
    const auto rep = check_suspension(s, 200, 1);
    CHECK(rep.holonomy_error < 1e-8);
    CHECK(rep.outside_error < 1e-12);
    CHECK(rep.alpha_min > 0.0);
    for (const Vec& y : chart_probes(30, 10)) {
      const Vec z = s.holonomy(y);
      const Vec x = chart.disk_coordinate(y);
      const double turn = x.norm() >= 1.0 ? 0.0 : f(x);
      CHECK(std::abs(wrap(std::atan2(z[1], z[0]) - std::atan2(y[1], y[0]) - turn)) < 1e-8);
    }
  }

  TEST_CASE("torus boundary data: induced form is nonvanishing on suspension tangents") {
    for (double a : {0.25, 0.5, 1.0}) {
      const torus::SolidTorusModel m{a};
      double worst = INFINITY;
      for (int i = 0; i < 24; ++i) {
        for (int j = 0; j < 24; ++j) {
          const auto b = torus::induced_boundary_form(m, 2 * kPi * i / 24, 2 * kPi * j / 24);
          worst = std::min(worst, std::abs(b.value));
          // X = d_r, leaf tangent (d_phi + a d_theta) / sqrt(1 + a^2): omega(X, v) = sqrt(1 + a^2).
          CHECK(std::abs(b.value) == doctest::Approx(std::sqrt(1 + a * a)).epsilon(1e-12));
        }
      }
      CHECK(worst > 0.0);
    }
  }

  TEST_CASE("72-fold compositions") {
    std::vector<CDiffeo> ids(72, CDiffeo::identity(2));
    CHECK(v_eps_norm(product(ids)) == 0.0);

    const auto small = compose_72_check(0.005, 1, 3);
    CHECK(small.trials.size() == 3);
    CHECK(small.all_in_v1());
    CHECK(small.worst_norm < 0.95);
    for (const auto& t : small.trials) CHECK(t.worst_factor_norm < 0.005);

    const auto large = compose_72_check(0.5, 1, 3);
    CHECK_FALSE(large.all_in_v1());
  }
}
