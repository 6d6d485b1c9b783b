#include "leafwise/diffeo_group.hpp"

#include "leafwise/error.hpp"
#include "leafwise/parallel.hpp"
#include "leafwise/smooth.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>

namespace leafwise::diffeo {

namespace odeint = boost::numeric::odeint;

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Box ball_box(const Vec& center, double radius) {
  return Box(center.array() - radius, center.array() + radius);
}

}  // namespace

CDiffeo::CDiffeo(int k, Map forward, Map inverse, Box support, std::string label)
    : k_(k), forward_(std::move(forward)), inverse_(std::move(inverse)), support_(std::move(support)),
      label_(std::move(label)) {
  require(k_ >= 1, ErrorKind::Precondition, "diffeomorphism dimension must be positive");
  require(support_.dim() == k_, ErrorKind::Precondition, "support box dimension mismatch");
}

CDiffeo CDiffeo::identity(int k) {
  auto id = [](const Vec& x) { return x; };
  CDiffeo d(k, id, id, Box(Vec::Zero(k), Vec::Zero(k)), "id");
  d.identity_ = true;
  return d;
}

Mat CDiffeo::jacobian(const Vec& x, double step) const {
  Mat j(k_, k_);
  Vec p = x;
  for (int i = 0; i < k_; ++i) {
    p[i] = x[i] + step;
    const Vec up = forward_(p);
    p[i] = x[i] - step;
    const Vec down = forward_(p);
    p[i] = x[i];
    j.col(i) = (up - down) / (2.0 * step);
  }
  return j;
}

CDiffeo CDiffeo::inverse() const {
  CDiffeo d(k_, inverse_, forward_, support_, label_.empty() ? std::string{} : label_ + "^-1");
  d.identity_ = identity_;
  return d;
}

CDiffeo compose(const CDiffeo& a, const CDiffeo& b) {
  require(a.dim() == b.dim(), ErrorKind::Precondition, "composing diffeomorphisms of different dimension");
  if (a.is_identity()) return b;
  if (b.is_identity()) return a;
  return CDiffeo(
      a.dim(), [a, b](const Vec& x) { return a(b(x)); },
      [a, b](const Vec& x) { return b.apply_inverse(a.apply_inverse(x)); }, a.support().united(b.support()),
      "(" + a.label() + " " + b.label() + ")");
}

CDiffeo product(const std::vector<CDiffeo>& factors) {
  require(!factors.empty(), ErrorKind::Precondition, "empty product");
  std::vector<CDiffeo> live;
  for (const auto& f : factors) {
    require(f.dim() == factors.front().dim(), ErrorKind::Precondition, "product of mixed dimensions");
    if (!f.is_identity()) live.push_back(f);
  }
  if (live.empty()) return CDiffeo::identity(factors.front().dim());
  if (live.size() == 1) return live.front();
  Box support = live.front().support();
  std::string label;
  for (const auto& f : live) {
    support = support.united(f.support());
    label += (label.empty() ? "" : " ") + f.label();
  }
  auto fwd = [live](const Vec& x) {
    Vec y = x;
    for (auto it = live.rbegin(); it != live.rend(); ++it) y = (*it)(y);
    return y;
  };
  auto inv = [live](const Vec& x) {
    Vec y = x;
    for (const auto& f : live) y = f.apply_inverse(y);
    return y;
  };
  return CDiffeo(live.front().dim(), fwd, inv, support, "(" + label + ")");
}

CDiffeo conjugate(const CDiffeo& g, const CDiffeo& a) { return compose(g, compose(a, g.inverse())); }

CDiffeo commutator(const CDiffeo& a, const CDiffeo& b) {
  return product({a, b, a.inverse(), b.inverse()});
}

double bump(double s, double plateau) {
  if (s <= plateau) return 1.0;
  return 1.0 - smooth_step((s - plateau) / (1.0 - plateau));
}

double bump_derivative(double s, double plateau) {
  if (s <= plateau) return 0.0;
  return -smooth_step_derivative((s - plateau) / (1.0 - plateau)) / (1.0 - plateau);
}

namespace {

// Moves x along u with speed |d| bump(|x - c| / R) for |time|, in the sign of time.
Vec flow_along_line(const Vec& x, const Vec& center, double radius, const Vec& direction, double time,
                    const FlowOptions& opt) {
  if ((x - center).norm() >= radius || time == 0.0) return x;
  const double speed = direction.norm();
  const Vec u = direction / speed;
  const double sign = time > 0.0 ? 1.0 : -1.0;
  auto rhs = [&](const double& s, double& dsdt, double) {
    dsdt = sign * speed * bump((x + s * u - center).norm() / radius, opt.plateau);
  };
  double s = 0.0;
  try {
    auto stepper = odeint::make_controlled(opt.tolerance, opt.tolerance, odeint::runge_kutta_dopri5<double>());
    odeint::integrate_adaptive(stepper, rhs, s, 0.0, std::abs(time), std::min(0.05, std::abs(time)));
  } catch (const std::exception& e) {
    fail(ErrorKind::Generation, std::string("bump flow integration failed: ") + e.what());
  }
  require(std::isfinite(s), ErrorKind::Generation, "bump flow produced a non-finite value");
  return x + s * u;
}

}  // namespace

CDiffeo make_bump_flow(const Vec& center, double radius, const Vec& direction, double time,
                       const FlowOptions& opt) {
  const int k = static_cast<int>(center.size());
  require(radius > 0.0, ErrorKind::Precondition, "bump radius must be positive");
  require(direction.size() == k, ErrorKind::Precondition, "direction dimension mismatch");
  require(std::abs(time) <= opt.max_time, ErrorKind::Precondition, "flow time exceeds the configured bound");
  if (time == 0.0 || direction.norm() == 0.0) return CDiffeo::identity(k);
  auto fwd = [=](const Vec& x) { return flow_along_line(x, center, radius, direction, time, opt); };
  auto inv = [=](const Vec& x) { return flow_along_line(x, center, radius, direction, -time, opt); };
  return CDiffeo(k, fwd, inv, ball_box(center, radius), "flow");
}

CDiffeo make_displacement(const Vec& center, double radius, const Vec& direction, double amplitude,
                          double plateau) {
  const int k = static_cast<int>(center.size());
  require(radius > 0.0, ErrorKind::Precondition, "bump radius must be positive");
  const double lip = std::abs(amplitude) * direction.norm() * smooth_step_max_slope() / ((1.0 - plateau) * radius);
  require(lip < 1.0, ErrorKind::Precondition, "displacement is not a diffeomorphism (slope too large)");
  if (amplitude == 0.0 || direction.norm() == 0.0) return CDiffeo::identity(k);
  auto fwd = [=](const Vec& x) -> Vec {
    const double s = (x - center).norm() / radius;
    if (s >= 1.0) return x;
    return x + amplitude * bump(s, plateau) * direction;
  };
  auto inv = [=](const Vec& y) -> Vec {
    if ((y - center).norm() >= radius) return y;
    Vec x = y;
    for (int it = 0; it < 500; ++it) {
      const Vec next = y - amplitude * bump((x - center).norm() / radius, plateau) * direction;
      const double change = (next - x).norm();
      x = next;
      if (change <= 1e-16 * (1.0 + y.norm())) break;
    }
    return x;
  };
  return CDiffeo(k, fwd, inv, ball_box(center, radius), "disp");
}

namespace {

double displacement_slope(const CDiffeo& d, const Vec& x, double step) {
  const int k = d.dim();
  const Mat coarse = d.jacobian(x, step);
  const Mat fine = d.jacobian(x, 0.5 * step);
  const Mat j = (4.0 * fine - coarse) / 3.0 - Mat::Identity(k, k);
  require(j.allFinite(), ErrorKind::Estimation, "non-finite derivative probe");
  if (k == 1) return std::abs(j(0, 0));
  return Eigen::JacobiSVD<Mat>(j).singularValues()(0);
}

}  // namespace

VEpsEstimate v_eps_estimate(const CDiffeo& d, const VEpsOptions& opt) {
  VEpsEstimate est;
  est.argmax = Vec::Zero(d.dim());
  if (d.is_identity()) return est;
  const Box& s = d.support();
  const Box region = s.grown(opt.margin * s.extent().maxCoeff());
  const std::vector<Vec> pts = region.grid(opt.per_axis);
  std::vector<double> norms(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) { norms[i] = displacement_slope(d, pts[i], opt.step); });
  const std::size_t per_point = 4 * static_cast<std::size_t>(d.dim());
  est.evaluations = pts.size() * per_point;

  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  const auto seeds = std::min<std::size_t>(static_cast<std::size_t>(opt.refine_seeds), order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(seeds), order.end(),
                    [&](std::size_t a, std::size_t b) { return norms[a] > norms[b] || (norms[a] == norms[b] && a < b); });
  est.norm = norms[order[0]];
  est.argmax = pts[order[0]];
  const double spacing = region.extent().maxCoeff() / std::max(1, opt.per_axis - 1);
  // Pattern search from the best grid points.
  std::vector<std::pair<double, Vec>> refined(seeds);
  parallel_for(seeds, [&](std::size_t r) {
    Vec x = pts[order[r]];
    double best = norms[order[r]];
    double h = 0.5 * spacing;
    for (int it = 0; it < opt.refine_iterations && h > 1e-3 * spacing; ++it) {
      bool moved = false;
      for (int axis = 0; axis < d.dim() && !moved; ++axis) {
        for (double sgn : {1.0, -1.0}) {
          Vec y = x;
          y[axis] += sgn * h;
          const double v = displacement_slope(d, y, opt.step);
          if (v > best) {
            best = v;
            x = y;
            moved = true;
            break;
          }
        }
      }
      if (!moved) h *= 0.5;
    }
    refined[r] = {best, x};
  });
  for (const auto& [v, x] : refined) {
    if (v > est.norm) {
      est.norm = v;
      est.argmax = x;
    }
  }
  est.evaluations += seeds * static_cast<std::size_t>(opt.refine_iterations) * 2 * per_point;
  return est;
}

double v_eps_norm(const CDiffeo& d, const VEpsOptions& opt) { return v_eps_estimate(d, opt).norm; }

bool in_v_eps(double norm, double epsilon, double safety) { return norm < epsilon * (1.0 - safety); }

std::vector<Vec> probe_points(const Box& box, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vec u(box.dim());
    for (int j = 0; j < box.dim(); ++j) u[j] = unit(rng);
    out.push_back(box.at(u));
  }
  return out;
}

double max_discrepancy(const CDiffeo& lhs, const CDiffeo& rhs, const std::vector<Vec>& probes) {
  std::vector<double> err(probes.size());
  parallel_for(probes.size(), [&](std::size_t i) {
    err[i] = (lhs(probes[i]) - rhs(probes[i])).lpNorm<Eigen::Infinity>();
  });
  double worst = 0.0;
  for (double e : err) worst = std::max(worst, std::isfinite(e) ? e : INFINITY);
  return worst;
}

std::vector<Conjugate> tsuboi_factors(const CDiffeo& a, const CDiffeo& b, const CDiffeo& h) {
  const CDiffeo c = conjugate(h.inverse(), a);  // h^-1 a h
  return {{CDiffeo::identity(a.dim()), 1}, {c, -1}, {compose(b, c), 1}, {b, -1}};
}

CDiffeo conjugate_product(const std::vector<Conjugate>& factors, const CDiffeo& h) {
  std::vector<CDiffeo> terms;
  terms.reserve(factors.size());
  for (const auto& f : factors) terms.push_back(conjugate(f.conjugator, f.power > 0 ? h : h.inverse()));
  return product(terms);
}

bool displaces(const CDiffeo& h, const Box& u, int net_per_axis) {
  for (const Vec& x : u.grid(std::max(2, net_per_axis))) {
    if (u.contains(h(x))) return false;
  }
  return true;
}

namespace {

std::vector<Vec> tsuboi_probes(const Box& u, const Box& all, std::size_t count, std::uint64_t seed) {
  auto near = probe_points(u.grown(0.25 * u.extent().maxCoeff()), count / 2, seed);
  auto far = probe_points(all, count - count / 2, mix(seed, 1));
  near.insert(near.end(), far.begin(), far.end());
  return near;
}

std::string describe(const Conjugate& c, std::size_t index) {
  return "g" + std::to_string(index) + (c.power > 0 ? " h g" : " h^-1 g") + std::to_string(index) + "^-1";
}

}  // namespace

TsuboiReport tsuboi_verify(const CDiffeo& a, const CDiffeo& b, const CDiffeo& h, const Box& u,
                           std::size_t probes, std::uint64_t seed) {
  return tsuboi_product_verify({{a, b}}, h, u, probes, seed);
}

TsuboiReport tsuboi_product_verify(const std::vector<std::pair<CDiffeo, CDiffeo>>& pairs, const CDiffeo& h,
                                   const Box& u, std::size_t probes, std::uint64_t seed) {
  require(!pairs.empty(), ErrorKind::Precondition, "no commutators given");
  TsuboiReport rep;
  std::vector<CDiffeo> commutators;
  std::vector<Conjugate> factors;
  Box all = u.united(h.support());
  for (const auto& [a, b] : pairs) {
    for (const CDiffeo* g : {&a, &b}) {
      if (!g->is_identity()) {
        rep.supports_in_box = rep.supports_in_box && u.contains(g->support().lo, 1e-12) &&
                              u.contains(g->support().hi, 1e-12);
        all = all.united(g->support());
      }
    }
    commutators.push_back(commutator(a, b));
    for (auto& f : tsuboi_factors(a, b, h)) factors.push_back(std::move(f));
  }
  rep.displaced = displaces(h, u);
  for (std::size_t i = 0; i < factors.size(); ++i) rep.factors.push_back(describe(factors[i], i + 1));
  const CDiffeo lhs = product(commutators);
  const CDiffeo rhs = conjugate_product(factors, h);
  const auto pts = tsuboi_probes(u, all, probes, seed);
  rep.discrepancy = max_discrepancy(lhs, rhs, pts);
  rep.probes = pts.size();
  return rep;
}

TsuboiScenario random_tsuboi_scenario(int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  FlowOptions tight;
  tight.tolerance = 1e-13;
  auto flow_in_u = [&]() {
    Vec c(k);
    for (int i = 0; i < k; ++i) c[i] = -0.25 + 0.5 * unit(rng);
    const double r = 0.1 + 0.15 * unit(rng);
    Vec d(k);
    for (int i = 0; i < k; ++i) d[i] = normal(rng);
    d /= std::max(d.norm(), 1e-12);
    return make_bump_flow(c, r, d, -0.3 + 0.6 * unit(rng), tight);
  };
  CDiffeo a = flow_in_u();
  CDiffeo b = flow_in_u();
  FlowOptions wide = tight;
  wide.plateau = 0.5;
  CDiffeo h = make_bump_flow(Vec::Zero(k), 6.0, Vec::Unit(k, 0), 3.0, wide);
  return {std::move(a), std::move(b), std::move(h), Box::cube(k, -0.5, 0.5)};
}

CDiffeo exp_field(const BumpField& x, const FlowOptions& opt) {
  return make_bump_flow(x.center, x.radius, x.direction, 1.0, opt);
}

FragmentationReport fragmentation_verify(const CDiffeo& g, const std::vector<CDiffeo>& sigmas,
                                         const std::vector<BumpField>& fields, std::size_t probes,
                                         std::uint64_t seed, const FlowOptions& flow) {
  require(sigmas.size() == 6 && fields.size() == 6, ErrorKind::Precondition, "six witnesses of each kind required");
  std::vector<CDiffeo> terms;
  Box all = g.is_identity() ? Box::cube(g.dim(), -1.0, 1.0) : g.support();
  for (std::size_t i = 0; i < 6; ++i) {
    const CDiffeo e = exp_field(fields[i], flow);
    terms.push_back(commutator(sigmas[i], e));
    if (!sigmas[i].is_identity()) all = all.united(sigmas[i].support());
    if (!e.is_identity()) all = all.united(e.support());
  }
  const CDiffeo rhs = product(terms);
  const auto pts = probe_points(all.grown(0.1 * all.extent().maxCoeff()), probes, seed);
  return {max_discrepancy(g, rhs, pts), pts.size()};
}

double Compose72Report::pass_rate() const {
  return trials.empty() ? 1.0 : static_cast<double>(passed) / static_cast<double>(trials.size());
}

CDiffeo random_v_eps_element(double epsilon, const Compose72Options& opt, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  Vec u(opt.k);
  for (int i = 0; i < opt.k; ++i) u[i] = unit(rng);
  const Vec center = opt.centers.at(u);
  const double radius = opt.radius_min + (opt.radius_max - opt.radius_min) * unit(rng);
  Vec dir(opt.k);
  do {
    for (int i = 0; i < opt.k; ++i) dir[i] = normal(rng);
  } while (dir.norm() < 1e-3);
  dir.normalize();
  // |D flow_t - I| <= exp(L |t|) - 1 with L = sup |DX|.
  const double lip = smooth_step_max_slope() / radius;
  const double scale = 0.5 + 0.5 * unit(rng);
  const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
  const double time = sign * scale * std::log1p(0.9 * epsilon) / lip;
  return make_bump_flow(center, radius, dir, time);
}

Compose72Report compose_72_check(double epsilon, std::uint64_t seed, int trials, const Compose72Options& opt) {
  require(epsilon > 0.0, ErrorKind::Precondition, "epsilon must be positive");
  Compose72Report rep;
  rep.epsilon = epsilon;
  rep.seed = seed;
  VEpsOptions factor_norm = opt.norm;
  factor_norm.per_axis = std::max(8, opt.norm.per_axis * 2 / 3);
  for (int t = 0; t < trials; ++t) {
    Compose72Trial trial;
    std::vector<CDiffeo> factors;
    for (int i = 0; i < opt.factors; ++i) {
      const std::uint64_t s = mix(mix(seed, static_cast<std::uint64_t>(t)), static_cast<std::uint64_t>(i));
      CDiffeo f = random_v_eps_element(epsilon, opt, s);
      const double norm = v_eps_norm(f, factor_norm);
      require(in_v_eps(norm, epsilon, opt.norm.safety), ErrorKind::Estimation,
              "random factor failed its V_eps membership estimate");
      trial.worst_factor_norm = std::max(trial.worst_factor_norm, norm);
      factors.push_back(std::move(f));
    }
    const CDiffeo composite = product(factors);
    trial.composite_norm = v_eps_norm(composite, opt.norm);
    trial.in_v1 = in_v_eps(trial.composite_norm, 1.0, opt.norm.safety);
    rep.worst_norm = std::max(rep.worst_norm, trial.composite_norm);
    if (trial.in_v1) ++rep.passed;
    rep.trials.push_back(trial);
  }
  return rep;
}

}  // namespace leafwise::diffeo
