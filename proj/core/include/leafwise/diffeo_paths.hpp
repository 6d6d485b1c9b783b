#pragma once

#include "leafwise/diffeo_group.hpp"

#include <functional>
#include <vector>

namespace leafwise::diffeo {

using TimeField = std::function<Vec(double, const Vec&)>;

// t -> gamma(t) on [0, 1]. The path is constant on [0, flat_begin] and on
// [1 - flat_end, 1] (empty intervals when zero).
struct DiffeoPath {
  int k = 0;
  std::function<CDiffeo(double)> at;
  // (d/dt gamma(t)) o gamma(t)^-1; finite differences in t when empty.
  TimeField velocity;
  Box support;
  double flat_begin = 0.0;
  double flat_end = 0.0;
  bool periodic = false;
  bool starts_at_identity = true;

  [[nodiscard]] bool adjusted() const { return flat_begin > 0.0 && flat_end > 0.0; }
  [[nodiscard]] Vec velocity_at(double t, const Vec& y, double step = 1e-5) const;
};

DiffeoPath constant_path(int k);

// 1-form on S^1 x R^k evaluated as (alpha_t, alpha_y) at (t, y).
struct PairedPath {
  DiffeoPath path;
  TimeField alpha;
};

// Pairs a path with alpha = dt.
PairedPath with_time_form(DiffeoPath path);

// Tubular chart S^1 x D^{k-1} around the circle of radius `core` in the
// (y1, y2)-plane: theta = atan2(y2, y1), x = (|y12| - core, y3, ..) / width.
struct RotationChart {
  int k = 2;
  double core = 1.0;
  double width = 0.5;

  [[nodiscard]] Vec disk_coordinate(const Vec& y) const;
  [[nodiscard]] Box box() const;
};

using DiskFunction = std::function<double(const Vec&)>;

// h_f(t)(theta, x) = (theta + t f(x), x), theta in radians; identity off the chart.
// Raises Precondition when f leaves [0, 1] or does not vanish near the boundary.
DiffeoPath make_rotation_path(const DiskFunction& f, const RotationChart& chart, double scale = 1.0);
// Same without the range check; used for h_{-f} and rescaled copies.
DiffeoPath make_rotation_path_unchecked(const DiskFunction& f, const RotationChart& chart, double scale);

// Smooth bump on the disk with values in [0, peak], zero for |x| >= 0.9.
DiskFunction disk_bump(double peak);

// Reparametrizes by a smooth step flat on [0, flat] and [1 - flat, 1].
PairedPath adjust(const PairedPath& p, double flat = 0.1);

// Max deviation from gamma(0) (resp. gamma(1)) on the declared flat intervals.
double horizontality_defect(const DiffeoPath& p, const std::vector<Vec>& probes, int times = 5);

// gamma(t) = gamma1(2t) on [0, 1/2], gamma2(2t - 1) o gamma1(1) on [1/2, 1].
// Raises Precondition for non-adjusted input or alpha mismatch at the seam.
PairedPath concatenate(const PairedPath& p1, const PairedPath& p2, const std::vector<Vec>& seam_probes = {});

// gamma_i(t) = gamma((i + t) / q) o gamma(i / q)^-1.
std::vector<PairedPath> subdivide_path(const PairedPath& gamma, int q);

// Max over segments of the V_eps estimate of the segment endpoint.
double segment_norm(const std::vector<PairedPath>& segments, const VEpsOptions& opt = {});

// min |alpha(t, y)(1, V(t, y))| over the probe grid.
double alpha_margin(const PairedPath& p, const std::vector<Vec>& probes, int times = 9);

struct SuspensionOptions {
  double tolerance = 1e-12;
  double fd_step = 1e-5;
};

// Foliation of S^1 x R^k whose leaves are the curves s -> (s, gamma(s) y).
class SuspensionFoliation {
 public:
  SuspensionFoliation(PairedPath source, const SuspensionOptions& opt = {});

  // Leaf through (s0, y) followed to time s1 (0 <= s0 <= s1 <= 1).
  [[nodiscard]] Vec trace(const Vec& y, double s0 = 0.0, double s1 = 1.0) const;
  [[nodiscard]] Vec holonomy(const Vec& y) const { return trace(y, 0.0, 1.0); }
  [[nodiscard]] const Box& support() const noexcept { return source_.path.support; }
  [[nodiscard]] const PairedPath& source() const noexcept { return source_; }

 private:
  PairedPath source_;
  SuspensionOptions opt_;
};

SuspensionFoliation suspend(const PairedPath& p, const SuspensionOptions& opt = {});

struct HolonomyReport {
  double holonomy_error = 0.0;   // |trace(y) - gamma(1) y|
  double outside_error = 0.0;    // |trace(y) - y| for y outside the support
  double alpha_min = INFINITY;
  std::size_t probes = 0;
};

HolonomyReport check_suspension(const SuspensionFoliation& s, std::size_t probes = 200, std::uint64_t seed = 1);

}  // namespace leafwise::diffeo
