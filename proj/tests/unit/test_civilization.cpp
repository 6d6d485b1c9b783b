#include "generators.hpp"

#include "leafwise/checkpoint.hpp"
#include "leafwise/civilization.hpp"
#include "leafwise/error.hpp"
#include "leafwise/presets.hpp"
#include "leafwise/triangulation.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace leafwise;
using leafwise::testing::Gen;

namespace {

Vec e(int i) { return Vec::Unit(4, i); }

civ::Simplex vertex_at(const Vec& x) { return {{0}, x, Mat(4, 0)}; }

civ::Simplex edge(const Vec& a, const Vec& b) {
  Mat edges(4, 1);
  edges.col(0) = b - a;
  return {{0, 1}, a, edges};
}

bool same_bits(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && std::equal(a.data(), a.data() + a.size(), b.data());
}

// Projector and form deviation between two pair values.
double deviation(const geom::PairedDistribution& p, const Vec& x, const geom::PairedDistribution& q, const Vec& y) {
  return std::max(max_abs(p.tau.sample(x).projector() - q.tau.sample(y).projector()),
                  max_abs(p.omega.at(x) - q.omega.at(y)));
}

// Fiber coordinates about a vertex computed from scratch: B = tau(x), E = tau(x)^perp.
double vertex_rho(const geom::PlaneField& tau, const Vec& x, const Vec& y, double delta, double eta) {
  const Mat b = tau.sample(x).frame();
  const Mat en = orthogonal_complement(b);
  return std::max((b.transpose() * (y - x)).norm() / delta, (en.transpose() * (y - x)).norm() / eta);
}

constexpr double kDelta = 0.1;
constexpr double kEta = 0.05;
constexpr double kKappa = 1.5;

geom::PairedDistribution rotating() { return presets::make_pair("rotating", 4, 0.8); }

// A jiggled l = 2 complex in general position for span(e1, e2) near the unit corner cube.
const tri::SimplicialComplex& small_complex() {
  static const tri::SimplicialComplex complex = [] {
    tri::SearchOptions opt;
    opt.budget = {2, 2, 50, tri::Schedule::Linear};
    opt.domain_margin = 0.5;
    const auto r = tri::find_general_position(presets::coordinate_plane(4, 0, 1), Box::cube(4, 0.0, 0.5), opt);
    require(r.success, ErrorKind::GeneralPosition, "no general-position jiggling for the test complex");
    return r.jiggled->complex;
  }();
  return complex;
}

// Jiggled images of the lattice vertices {0, 1/2}^4 (displacements stay below 0.05).
Box small_region() { return Box::cube(4, -0.05, 0.55); }

// Four of those vertices: {0, 1/2}^2 x {0}^2.
Box face_region() {
  Vec lo = Vec::Constant(4, -0.05);
  Vec hi(4);
  hi << 0.55, 0.55, 0.05, 0.05;
  return {lo, hi};
}

civ::SkeletonState fresh(const geom::PairedDistribution& pair) { return {-1, {}, {}, pair, 1.5, 0.5}; }

}  // namespace

TEST_SUITE("civilization") {
  TEST_CASE("tubular_fiber examples") {
    const auto tau = presets::coordinate_plane(4, 0, 1);
    const Vec o = Vec::Zero(4);

    const auto v = civ::tubular_fiber(o, vertex_at(o), tau, kDelta, kEta);
    CHECK(v.kind == civ::FiberKind::Disk);
    CHECK(v.b_basis.cols() == 2);
    CHECK(v.e_basis.cols() == 2);
    CHECK(v.dim() == 4);
    CHECK(grassmann_distance(v.b_basis, tau.sample(o).frame()) < 1e-14);
    Mat e34(4, 2);
    e34 << e(2), e(3);
    CHECK(grassmann_distance(v.e_basis, e34) < 1e-14);

    const auto f = civ::tubular_fiber(o, edge(o, e(2)), tau, kDelta, kEta);
    CHECK(f.dim() == 3);
    REQUIRE(f.e_basis.cols() == 1);
    CHECK(std::abs(std::abs(f.e_basis(3, 0)) - 1.0) < 1e-14);

    CHECK_THROWS_AS((void)civ::tubular_fiber(o, edge(o, e(0)), tau, kDelta, kEta), Error);
    try {
      (void)civ::tubular_fiber(o, edge(o, e(0)), tau, kDelta, kEta);
    } catch (const Error& err) {
      CHECK(err.kind() == ErrorKind::GeneralPosition);
    }
  }

  TEST_CASE("tubular_fiber: codimension-one simplices get the line fiber") {
    const auto tau = presets::coordinate_plane(4, 0, 1);
    Mat edges(4, 3);
    edges << e(0), e(2), e(3);
    const civ::Simplex facet{{0, 1, 2, 3}, Vec::Zero(4), edges};
    const auto f = civ::tubular_fiber(Vec::Zero(4), facet, tau, kDelta, kEta);
    CHECK(f.kind == civ::FiberKind::Line);
    REQUIRE(f.b_basis.cols() == 1);
    // tau cap T(sigma) = span(e1); its complement inside tau is span(e2).
    CHECK(std::abs(std::abs(f.b_basis(1, 0)) - 1.0) < 1e-14);
    CHECK(f.e_basis.cols() == 0);
  }

  TEST_CASE("property: fiber spaces are transverse and of dimension n - p") {
    Gen g(5);
    const auto tau = presets::rotating_plane(4, 0.8);
    for (int trial = 0; trial < 100; ++trial) {
      const Vec a = g.gaussian(4) * 0.5;
      const Vec b = a + g.gaussian(4);
      const auto s = edge(a, b);
      const double t = g.uniform();
      const Vec x = s.point(Vec::Constant(1, t));
      const auto f = civ::tubular_fiber(x, s, tau, kDelta, kEta);
      CHECK(f.dim() == 3);
      CHECK(max_abs(f.e_basis.transpose() * f.e_basis - Mat::Identity(1, 1)) < 1e-12);
      CHECK(max_abs(f.e_basis.transpose() * f.b_basis) < 1e-12);
      CHECK(std::abs(f.e_basis.col(0).dot((b - a).normalized())) < 1e-12);
      Mat all(4, 4);
      all << f.b_basis, f.e_basis, (b - a);
      CHECK(std::abs(all.determinant()) > 1e-12);
    }
  }

  TEST_CASE("RadialRetraction profile") {
    const civ::RadialRetraction f{1.0, 1.5};
    CHECK(f(0.0) == 0.0);
    CHECK(f(0.5) == 0.0);
    CHECK(f(1.0) == 0.0);
    CHECK(f(1.5) == 1.5);
    CHECK(f(2.0) == 2.0);
    CHECK(f(1.25) == doctest::Approx(0.75));
    double prev = -1.0;
    for (int i = 0; i <= 3000; ++i) {
      const double s = i * 1e-3;
      CHECK(f(s) >= prev);
      prev = f(s);
      CHECK(f.at_time(s, 0.0) == s);
      CHECK(f.at_time(s, 1.0) == doctest::Approx(f(s)).epsilon(1e-15));
    }
  }

  TEST_CASE("vertex step: inner fibers take the base value") {
    const auto in = rotating();
    const Vec x = 0.3 * e(0) + 0.1 * e(1);
    const civ::CivilizationStep step(in, {vertex_at(x)}, kDelta, kEta, {kKappa});
    const auto out = step.output();
    const auto fib = civ::tubular_fiber(x, vertex_at(x), in.tau, kDelta, kEta);
    double worst = 0.0;
    for (double rho : {0.1, 0.5, 0.9, 1.0}) {
      for (const Vec& off : civ::fiber_offsets(fib, rho, 16)) worst = std::max(worst, deviation(out, x + off, in, x));
    }
    CHECK(worst < 1e-9);
  }

  TEST_CASE("vertex step: annulus values are input values at the retracted point") {
    Gen g(6);
    const auto in = rotating();
    const Vec x = 0.3 * e(0);
    const civ::CivilizationStep step(in, {vertex_at(x)}, kDelta, kEta, {kKappa});
    const auto out = step.output();
    const auto fib = civ::tubular_fiber(x, vertex_at(x), in.tau, kDelta, kEta);
    const civ::RadialRetraction f{1.0, kKappa};
    for (int i = 0; i < 100; ++i) {
      const double rho = g.uniform(1.0 + 1e-6, kKappa - 1e-6);
      const Vec off = fib.b_basis * g.unit(2) * g.uniform(0.0, 1.0) * rho * kDelta + fib.e_basis * g.unit(2) * rho * kEta;
      const Vec y = x + off;
      const double r = vertex_rho(in.tau, x, y, kDelta, kEta);
      CHECK(r == doctest::Approx(rho).epsilon(1e-12));
      const Vec pre = x + (f(r) / r) * off;
      CHECK((step.retract(y) - pre).norm() < 1e-12);
      CHECK(deviation(out, y, in, pre) < 1e-12);
      // Homotopy at t = 1/2 stops halfway along the ray.
      const Vec half = x + (f.at_time(r, 0.5) / r) * off;
      CHECK((step.retract(y, 0.5) - half).norm() < 1e-12);
    }
  }

  TEST_CASE("vertex step: identical to the input outside the outer tube") {
    Gen g(7);
    const auto in = rotating();
    const Vec x = 0.3 * e(0);
    const civ::CivilizationStep step(in, {vertex_at(x)}, kDelta, kEta, {kKappa});
    const auto out = step.output();
    int probes = 0;
    while (probes < 1000) {
      const Vec y = x + g.gaussian(4) * 0.2;
      if (vertex_rho(in.tau, x, y, kDelta, kEta) <= kKappa * (1.0 + 1e-9)) continue;
      ++probes;
      CHECK(same_bits(out.tau.sample(y).frame(), in.tau.sample(y).frame()));
      CHECK(same_bits(out.omega.at(y), in.omega.at(y)));
    }
  }

  TEST_CASE("homotopy endpoints") {
    Gen g(8);
    const auto in = rotating();
    const Vec x = 0.3 * e(0);
    const civ::CivilizationStep step(in, {vertex_at(x)}, kDelta, kEta, {kKappa});
    const auto p0 = step.pair_at(0.0);
    const auto p1 = step.pair_at(1.0);
    const auto out = step.output();
    for (int i = 0; i < 200; ++i) {
      const Vec y = x + g.gaussian(4) * 0.1;
      CHECK(same_bits(p0.tau.sample(y).frame(), in.tau.sample(y).frame()));
      CHECK(same_bits(p0.omega.at(y), in.omega.at(y)));
      CHECK(same_bits(p1.tau.sample(y).frame(), out.tau.sample(y).frame()));
      CHECK(same_bits(p1.omega.at(y), out.omega.at(y)));
    }
    CHECK_THROWS_AS((void)step.pair_at(1.5), Error);
  }

  TEST_CASE("property: value inheritance keeps nondegeneracy margins") {
    Gen g(9);
    const auto in = rotating();
    const Vec x = 0.3 * e(0) + 0.2 * e(2);
    const civ::CivilizationStep step(in, {vertex_at(x)}, kDelta, kEta, {kKappa});
    const auto out = step.output();
    const auto fib = civ::tubular_fiber(x, vertex_at(x), in.tau, kDelta, kEta);
    double min_in = INFINITY;
    double min_out = INFINITY;
    for (int i = 0; i < 1000; ++i) {
      const double rho = g.uniform(0.0, kKappa);
      const Vec off = fib.b_basis * g.unit(2) * rho * kDelta * g.uniform() + fib.e_basis * g.unit(2) * rho * kEta;
      const Vec y = x + off;
      const double mo = geom::pair_nondegenerate(out, y).margin;
      const Vec pre = step.retract(y);
      CHECK(mo == geom::pair_nondegenerate(in, pre).margin);
      min_out = std::min(min_out, mo);
      min_in = std::min({min_in, geom::pair_nondegenerate(in, y).margin, geom::pair_nondegenerate(in, pre).margin});
    }
    CHECK(min_out >= min_in);
    CHECK(min_out > 0.0);
  }

  TEST_CASE("step applied twice changes nothing on inner fibers") {
    const auto in = rotating();
    const Vec x = 0.3 * e(0);
    const civ::CivilizationStep once(in, {vertex_at(x)}, kDelta, kEta, {kKappa});
    const civ::CivilizationStep twice(once.output(), {vertex_at(x)}, kDelta, kEta, {kKappa});
    const auto a = once.output();
    const auto b = twice.output();
    const auto fib = civ::tubular_fiber(x, vertex_at(x), in.tau, kDelta, kEta);
    double worst = 0.0;
    for (double rho : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      for (const Vec& off : civ::fiber_offsets(fib, rho, 16)) worst = std::max(worst, deviation(a, x + off, b, x + off));
    }
    CHECK(worst == 0.0);
  }

  TEST_CASE("edge step: inner fibers are constant and the foot is recovered") {
    const auto in = rotating();
    const Vec a = Vec::Zero(4);
    const Vec b = 0.5 * e(0) + 0.5 * e(2);
    const auto s = edge(a, b);
    const civ::CivilizationStep step(in, {s}, kDelta, kEta, {kKappa});
    const auto out = step.output();
    double worst = 0.0;
    for (double t : {0.2, 0.5, 0.8}) {
      const Vec x = s.point(Vec::Constant(1, t));
      const auto fib = civ::tubular_fiber(x, s, in.tau, kDelta, kEta);
      for (const Vec& off : civ::fiber_offsets(fib, 0.9, 16)) {
        const auto loc = civ::locate(s, in.tau, x + off, kDelta, kEta);
        CHECK(loc.converged);
        CHECK((loc.foot - x).norm() < 1e-12);
        CHECK(loc.rho == doctest::Approx(0.9).epsilon(1e-10));
        worst = std::max(worst, deviation(out, x + off, in, x));
      }
    }
    CHECK(worst < 1e-9);
  }

  TEST_CASE("input constant near sigma: output equals input") {
    Gen g(10);
    const auto in = presets::make_pair("constant", 4);
    const civ::CivilizationStep step(in, {vertex_at(Vec::Zero(4))}, kDelta, kEta, {kKappa});
    const auto out = step.output();
    for (int i = 0; i < 100; ++i) {
      const Vec y = g.gaussian(4) * 0.1;
      CHECK(same_bits(out.tau.sample(y).frame(), in.tau.sample(y).frame()));
    }
  }

  TEST_CASE("civilize_simplex matches the step with scaled radii") {
    Gen g(11);
    const auto in = rotating();
    const Vec x = 0.3 * e(0);
    const auto single = civ::civilize_simplex(in, vertex_at(x), 0.2, 0.1, {0.5, 0.75});
    const auto step = civ::CivilizationStep(in, {vertex_at(x)}, 0.1, 0.05, {1.5}).output();
    for (int i = 0; i < 200; ++i) {
      const Vec y = x + g.gaussian(4) * 0.08;
      CHECK(deviation(single, y, step, y) < 1e-14);
    }
    CHECK_THROWS_AS((void)civ::civilize_simplex(in, vertex_at(x), 0.2, 0.1, {1.0, 0.5}), Error);
    CHECK_THROWS_AS(civ::CivilizationStep(in, {vertex_at(x)}, 0.0, 0.1), Error);
  }

  TEST_CASE("check_civilized: constant pair has zero deviation") {
    const auto complex = small_complex();
    auto state = fresh(presets::make_pair("constant", 4));
    state = civ::civilize_skeleton(state, complex, small_region()).next;
    state = civ::civilize_skeleton(state, complex, small_region()).next;
    const auto rep = civ::check_civilized(state, complex, small_region());
    CHECK(rep.ok());
    CHECK(rep.max_deviation == 0.0);
    CHECK(rep.fibers_sampled > 0);
  }

  TEST_CASE("check_civilized: uncivilized varying pair fails (D) in proportion to delta") {
    const auto complex = small_complex();
    const auto pair = rotating();
    auto state_of = [&](double delta) {
      civ::SkeletonState s = fresh(pair);
      s.j = 0;
      s.deltas = {delta};
      s.etas = {delta / 8.0};
      return civ::check_civilized(s, complex, small_region());
    };
    const auto r1 = state_of(0.01);
    const auto r2 = state_of(0.02);
    CHECK_FALSE(r1.d_ok);
    CHECK_FALSE(r2.d_ok);
    CHECK(r2.max_deviation / r1.max_deviation == doctest::Approx(2.0).epsilon(0.05));
  }

  TEST_CASE("check_civilized: non-decreasing constants are reported") {
    const auto complex = small_complex();
    civ::SkeletonState s = fresh(presets::make_pair("constant", 4));
    s.j = 1;
    s.deltas = {0.01, 0.02};
    s.etas = {0.001, 0.0005};
    const auto rep = civ::check_civilized(s, complex, small_region());
    CHECK_FALSE(rep.monotone);
    CHECK_FALSE(rep.ok());
  }

  TEST_CASE("vertex and edge skeleta of a rotating pair civilize") {
    const auto complex = small_complex();
    auto state = fresh(presets::make_pair("rotating", 4, 0.05));
    const auto s0 = civ::civilize_skeleton(state, complex, face_region());
    CHECK(s0.embedding.ok);
    CHECK(s0.step.simplices().size() == 4);
    const auto s1 = civ::civilize_skeleton(s0.next, complex, face_region());
    CHECK(s1.step.simplices().size() == 5);
    CHECK(s1.embedding.ok);
    CHECK(s1.next.deltas[1] < s1.next.deltas[0]);
    CHECK(s1.next.etas[1] < s1.next.etas[0]);
    const auto rep = civ::check_civilized(s1.next, complex, face_region());
    CHECK(rep.ok());
    CHECK(rep.max_deviation < 1e-9);
    CHECK(rep.max_exit_ratio < 1.0);
    CHECK(rep.e_violations == 0);
  }

  TEST_CASE("oversized radii fail the embedding check") {
    const auto complex = small_complex();
    const auto pair = presets::make_pair("constant", 4);
    const auto verts = civ::skeleton_simplices(complex, small_region(), 0);
    REQUIRE(verts.size() == 16);
    const auto rep = civ::check_embedding(verts, pair.tau, 0.5, 0.5, 1.5, {}, fresh(pair));
    CHECK_FALSE(rep.ok);
    CHECK(rep.overlap_violations > 0);
  }

  TEST_CASE("checkpoint round-trip and replay") {
    const auto complex = small_complex();
    auto state = fresh(presets::make_pair("rotating", 4, 0.05));
    state = civ::civilize_skeleton(state, complex, small_region()).next;
    const auto c = civ::checkpoint_of(state, complex, "rotating", 0.05, "mesh.txt", small_region());
    CHECK(c.samples.size() == 16);
    std::stringstream ss;
    civ::write_checkpoint(ss, c);
    const auto back = civ::read_checkpoint(ss);
    CHECK(back.preset == "rotating");
    CHECK(back.preset_param == c.preset_param);
    CHECK(back.j == 0);
    CHECK(back.deltas == c.deltas);
    CHECK(back.etas == c.etas);
    CHECK(back.region.lo == c.region.lo);
    REQUIRE(back.samples.size() == c.samples.size());
    for (std::size_t i = 0; i < c.samples.size(); ++i) {
      CHECK(same_bits(back.samples[i].frame, c.samples[i].frame));
      CHECK(same_bits(back.samples[i].omega, c.samples[i].omega));
    }

    const auto replayed = civ::replay(back, complex);
    CHECK(replayed.j == 0);
    CHECK(replayed.deltas == state.deltas);

    auto wrong = back;
    wrong.preset_param = 0.5;
    try {
      (void)civ::replay(wrong, complex);
      FAIL("replay accepted a mismatched preset");
    } catch (const Error& err) {
      CHECK(err.kind() == ErrorKind::ModelConsistency);
    }

    std::stringstream bad("LEAFWISE-CIVILIZE 2\n");
    CHECK_THROWS_AS(civ::read_checkpoint(bad), Error);
  }
}
