#include "leafwise/diffeo_paths.hpp"

#include "leafwise/error.hpp"
#include "leafwise/parallel.hpp"
#include "leafwise/smooth.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <utility>

namespace leafwise::diffeo {

namespace odeint = boost::numeric::odeint;

Vec DiffeoPath::velocity_at(double t, const Vec& y, double step) const {
  if (velocity) return velocity(t, y);
  const double lo = std::max(0.0, t - step);
  const double hi = std::min(1.0, t + step);
  const Vec z = at(t).apply_inverse(y);
  return (at(hi)(z) - at(lo)(z)) / (hi - lo);
}

DiffeoPath constant_path(int k) {
  DiffeoPath p;
  p.k = k;
  p.at = [k](double) { return CDiffeo::identity(k); };
  p.velocity = [k](double, const Vec&) { return Vec::Zero(k); };
  p.support = Box(Vec::Zero(k), Vec::Zero(k));
  p.flat_begin = 0.5;
  p.flat_end = 0.5;
  p.periodic = true;
  return p;
}

PairedPath with_time_form(DiffeoPath path) {
  const int k = path.k;
  return {std::move(path), [k](double, const Vec&) {
            Vec a = Vec::Zero(1 + k);
            a[0] = 1.0;
            return a;
          }};
}

Vec RotationChart::disk_coordinate(const Vec& y) const {
  Vec x(k - 1);
  x[0] = (std::hypot(y[0], y[1]) - core) / width;
  for (int i = 2; i < k; ++i) x[i - 1] = y[i] / width;
  return x;
}

Box RotationChart::box() const {
  Vec lo = Vec::Constant(k, -width);
  Vec hi = Vec::Constant(k, width);
  lo[0] = lo[1] = -(core + width);
  hi[0] = hi[1] = core + width;
  return {lo, hi};
}

namespace {

Vec rotate(const Vec& y, double angle) {
  Vec out = y;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  out[0] = c * y[0] - s * y[1];
  out[1] = s * y[0] + c * y[1];
  return out;
}

void check_disk_function(const DiskFunction& f, int k) {
  const int m = k - 1;
  const int per_axis = m == 1 ? 201 : (m == 2 ? 41 : 11);
  for (const Vec& x : Box::cube(m, -1.0, 1.0).grid(per_axis)) {
    const double r = x.norm();
    if (r > 1.0) continue;
    const double v = f(x);
    require(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorKind::Precondition, "f must take values in [0, 1]");
    if (r >= 0.98) require(v == 0.0, ErrorKind::Precondition, "f must vanish near the boundary of the disk");
  }
}

}  // namespace

DiffeoPath make_rotation_path_unchecked(const DiskFunction& f, const RotationChart& chart, double scale) {
  require(chart.k >= 2 && chart.width > 0.0 && chart.width < chart.core, ErrorKind::Precondition,
          "rotation chart needs k >= 2 and 0 < width < core");
  DiffeoPath p;
  p.k = chart.k;
  p.support = chart.box();
  p.periodic = true;
  auto angle = [f, chart, scale](const Vec& y) {
    const Vec x = chart.disk_coordinate(y);
    return x.norm() >= 1.0 ? 0.0 : scale * f(x);
  };
  const Box box = chart.box();
  const int k = chart.k;
  p.at = [angle, box, k](double t) {
    if (t == 0.0) return CDiffeo::identity(k);
    // Rotation preserves the disk coordinate, so the inverse rotates back by the same angle.
    auto fwd = [angle, t](const Vec& y) { return rotate(y, t * angle(y)); };
    auto inv = [angle, t](const Vec& y) { return rotate(y, -t * angle(y)); };
    return CDiffeo(k, fwd, inv, box, "h_f");
  };
  p.velocity = [angle](double, const Vec& y) {
    Vec v = Vec::Zero(y.size());
    const double w = angle(y);
    v[0] = -w * y[1];
    v[1] = w * y[0];
    return v;
  };
  return p;
}

DiffeoPath make_rotation_path(const DiskFunction& f, const RotationChart& chart, double scale) {
  require(chart.k >= 2, ErrorKind::Precondition, "rotation chart needs k >= 2");
  check_disk_function(f, chart.k);
  return make_rotation_path_unchecked(f, chart, scale);
}

DiskFunction disk_bump(double peak) {
  return [peak](const Vec& x) { return peak * bump(x.norm() / 0.9, 0.3); };
}

PairedPath adjust(const PairedPath& p, double flat) {
  require(flat > 0.0 && flat < 0.5, ErrorKind::Precondition, "flat fraction must lie in (0, 1/2)");
  auto rho = [flat](double t) { return smooth_step((t - flat) / (1.0 - 2.0 * flat)); };
  auto drho = [flat](double t) { return smooth_step_derivative((t - flat) / (1.0 - 2.0 * flat)) / (1.0 - 2.0 * flat); };
  PairedPath out;
  out.path = p.path;
  const DiffeoPath src = p.path;
  out.path.at = [src, rho](double t) { return src.at(rho(t)); };
  out.path.velocity = [src, rho, drho](double t, const Vec& y) -> Vec {
    const double d = drho(t);
    if (d == 0.0) return Vec::Zero(y.size());
    return d * src.velocity_at(rho(t), y);
  };
  out.path.flat_begin = std::max(flat, src.flat_begin);
  out.path.flat_end = std::max(flat, src.flat_end);
  out.path.periodic = false;
  const TimeField alpha = p.alpha;
  out.alpha = [alpha, rho](double t, const Vec& y) { return alpha(rho(t), y); };
  return out;
}

double horizontality_defect(const DiffeoPath& p, const std::vector<Vec>& probes, int times) {
  double worst = 0.0;
  const CDiffeo g0 = p.at(0.0);
  const CDiffeo g1 = p.at(1.0);
  for (int i = 0; i < times; ++i) {
    const double u = times == 1 ? 1.0 : static_cast<double>(i) / (times - 1);
    if (p.flat_begin > 0.0) {
      const CDiffeo g = p.at(u * p.flat_begin);
      for (const Vec& y : probes) worst = std::max(worst, (g(y) - g0(y)).lpNorm<Eigen::Infinity>());
    }
    if (p.flat_end > 0.0) {
      const CDiffeo g = p.at(1.0 - u * p.flat_end);
      for (const Vec& y : probes) worst = std::max(worst, (g(y) - g1(y)).lpNorm<Eigen::Infinity>());
    }
  }
  return worst;
}

PairedPath concatenate(const PairedPath& p1, const PairedPath& p2, const std::vector<Vec>& seam_probes) {
  require(p1.path.k == p2.path.k, ErrorKind::Precondition, "paths of different dimension");
  require(p1.path.adjusted() && p2.path.adjusted(), ErrorKind::Precondition, "concatenation needs adjusted paths");
  const int k = p1.path.k;
  std::vector<Vec> seam = seam_probes;
  if (seam.empty()) seam = probe_points(p1.path.support.united(p2.path.support), 64, 7);
  for (const Vec& y : seam) {
    const double gap = (p1.alpha(1.0, y) - p2.alpha(0.0, y)).lpNorm<Eigen::Infinity>();
    require(gap <= 1e-12, ErrorKind::Precondition, "1-forms do not match across the seam");
  }
  const DiffeoPath a = p1.path;
  const DiffeoPath b = p2.path;
  const CDiffeo end1 = a.at(1.0);
  PairedPath out;
  out.path.k = k;
  out.path.support = a.support.united(b.support);
  out.path.flat_begin = 0.5 * a.flat_begin;
  out.path.flat_end = 0.5 * b.flat_end;
  out.path.starts_at_identity = a.starts_at_identity;
  out.path.at = [a, b, end1](double t) {
    if (t <= 0.5) return a.at(2.0 * t);
    return compose(b.at(2.0 * t - 1.0), end1);
  };
  out.path.velocity = [a, b](double t, const Vec& y) -> Vec {
    if (t <= 0.5) return 2.0 * a.velocity_at(2.0 * t, y);
    return 2.0 * b.velocity_at(2.0 * t - 1.0, y);
  };
  const TimeField al1 = p1.alpha;
  const TimeField al2 = p2.alpha;
  out.alpha = [al1, al2](double t, const Vec& y) { return t <= 0.5 ? al1(2.0 * t, y) : al2(2.0 * t - 1.0, y); };
  return out;
}

std::vector<PairedPath> subdivide_path(const PairedPath& gamma, int q) {
  require(q >= 1, ErrorKind::Precondition, "q must be at least 1");
  if (q == 1) return {gamma};
  std::vector<PairedPath> out;
  const DiffeoPath g = gamma.path;
  const TimeField alpha = gamma.alpha;
  for (int i = 0; i < q; ++i) {
    const double start = static_cast<double>(i) / q;
    const CDiffeo back = g.at(start).inverse();
    PairedPath seg;
    seg.path.k = g.k;
    seg.path.support = g.support;
    seg.path.at = [g, back, i, q](double t) { return compose(g.at((i + t) / q), back); };
    seg.path.velocity = [g, i, q](double t, const Vec& y) -> Vec { return g.velocity_at((i + t) / q, y) / q; };
    seg.alpha = [alpha, i, q](double t, const Vec& y) { return alpha((i + t) / q, y); };
    out.push_back(std::move(seg));
  }
  return out;
}

double segment_norm(const std::vector<PairedPath>& segments, const VEpsOptions& opt) {
  double worst = 0.0;
  for (const auto& s : segments) worst = std::max(worst, v_eps_norm(s.path.at(1.0), opt));
  return worst;
}

double alpha_margin(const PairedPath& p, const std::vector<Vec>& probes, int times) {
  double best = INFINITY;
  for (int i = 0; i < times; ++i) {
    const double t = times == 1 ? 0.0 : static_cast<double>(i) / (times - 1);
    for (const Vec& y : probes) {
      const Vec a = p.alpha(t, y);
      const double v = a[0] + a.tail(a.size() - 1).dot(p.path.velocity_at(t, y));
      best = std::min(best, std::abs(v));
    }
  }
  return best;
}

SuspensionFoliation::SuspensionFoliation(PairedPath source, const SuspensionOptions& opt)
    : source_(std::move(source)), opt_(opt) {
  require(source_.path.periodic || source_.path.adjusted(), ErrorKind::Precondition,
          "suspension needs a periodic or adjusted path");
}

Vec SuspensionFoliation::trace(const Vec& y, double s0, double s1) const {
  require(0.0 <= s0 && s0 <= s1 && s1 <= 1.0, ErrorKind::Precondition, "trace interval outside [0, 1]");
  if (s0 == s1) return y;
  const int k = source_.path.k;
  std::vector<double> state(y.data(), y.data() + k);
  const DiffeoPath& path = source_.path;
  const double step = opt_.fd_step;
  auto rhs = [&path, k, step](const std::vector<double>& x, std::vector<double>& dxdt, double t) {
    const Vec v = path.velocity_at(t, Eigen::Map<const Vec>(x.data(), k), step);
    dxdt.assign(v.data(), v.data() + k);
  };
  try {
    auto stepper = odeint::make_controlled(opt_.tolerance, opt_.tolerance,
                                           odeint::runge_kutta_dopri5<std::vector<double>>());
    odeint::integrate_adaptive(stepper, rhs, state, s0, s1, 0.01 * (s1 - s0));
  } catch (const std::exception& e) {
    fail(ErrorKind::Tracing, std::string("leaf tracing failed: ") + e.what());
  }
  Vec out = Eigen::Map<Vec>(state.data(), k);
  require(out.allFinite(), ErrorKind::Tracing, "leaf tracing produced a non-finite point");
  return out;
}

SuspensionFoliation suspend(const PairedPath& p, const SuspensionOptions& opt) { return SuspensionFoliation(p, opt); }

HolonomyReport check_suspension(const SuspensionFoliation& s, std::size_t probes, std::uint64_t seed) {
  HolonomyReport rep;
  const Box& c = s.support();
  const int k = s.source().path.k;
  const Box inner = c.dim() == k ? c : Box::cube(k, -1.0, 1.0);
  const auto in = probe_points(inner, probes, seed);
  const Box outer = inner.grown(0.5 * std::max(1.0, inner.extent().maxCoeff()));
  std::vector<Vec> out;
  for (const Vec& y : probe_points(outer, 4 * probes, seed + 1)) {
    if (!inner.contains(y)) out.push_back(y);
    if (out.size() == probes) break;
  }
  const CDiffeo end = s.source().path.at(1.0);
  std::vector<double> err(in.size());
  std::vector<double> err_out(out.size());
  parallel_for(in.size(), [&](std::size_t i) {
    err[i] = (s.holonomy(in[i]) - end(in[i])).lpNorm<Eigen::Infinity>();
  });
  parallel_for(out.size(), [&](std::size_t i) {
    err_out[i] = (s.holonomy(out[i]) - out[i]).lpNorm<Eigen::Infinity>();
  });
  for (double e : err) rep.holonomy_error = std::max(rep.holonomy_error, e);
  for (double e : err_out) rep.outside_error = std::max(rep.outside_error, e);
  std::vector<Vec> alpha_probes(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(in.size(), 50)));
  rep.alpha_min = alpha_margin(s.source(), alpha_probes);
  rep.probes = in.size() + out.size();
  return rep;
}

}  // namespace leafwise::diffeo
