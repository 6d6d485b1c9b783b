#include "leafwise/smooth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace leafwise {

namespace {
double psi(double t) noexcept { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
double psi_prime(double t) noexcept { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }
}  // namespace

double smooth_step(double t) noexcept {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = psi(t);
  const double b = psi(1.0 - t);
  return a / (a + b);
}

double smooth_step_derivative(double t) noexcept {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double a = psi(t);
  const double b = psi(1.0 - t);
  const double s = a + b;
  return (psi_prime(t) * b + a * psi_prime(1.0 - t)) / (s * s);
}

double smooth_step_max_slope() {
  static const double slope = [] {
    double best = 0.0;
    constexpr int samples = 20000;
    for (int i = 1; i < samples; ++i) {
      best = std::max(best, smooth_step_derivative(static_cast<double>(i) / samples));
    }
    return best * (1.0 + 1e-6);
  }();
  return slope;
}

double Plateau::operator()(double r) const noexcept {
  double v = 1.0;
  if (std::isfinite(rise_begin)) v *= smooth_step((r - rise_begin) / (rise_end - rise_begin));
  if (std::isfinite(fall_end)) v *= 1.0 - smooth_step((r - fall_begin) / (fall_end - fall_begin));
  return v;
}

double Plateau::derivative(double r) const noexcept {
  double up = 1.0;
  double dup = 0.0;
  if (std::isfinite(rise_begin)) {
    const double w = rise_end - rise_begin;
    up = smooth_step((r - rise_begin) / w);
    dup = smooth_step_derivative((r - rise_begin) / w) / w;
  }
  double down = 1.0;
  double ddown = 0.0;
  if (std::isfinite(fall_end)) {
    const double w = fall_end - fall_begin;
    down = 1.0 - smooth_step((r - fall_begin) / w);
    ddown = -smooth_step_derivative((r - fall_begin) / w) / w;
  }
  return dup * down + up * ddown;
}

}  // namespace leafwise
