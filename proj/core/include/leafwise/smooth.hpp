#pragma once

namespace leafwise {

// C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t).
double smooth_step(double t) noexcept;
double smooth_step_derivative(double t) noexcept;
// sup |smooth_step'|, computed once numerically.
double smooth_step_max_slope();

// Smooth plateau: 0 below rise_begin, rises to 1 at rise_end, stays 1 until
// fall_begin, falls to 0 at fall_end. Infinite bounds disable a side.
struct Plateau {
  double rise_begin;
  double rise_end;
  double fall_begin;
  double fall_end;

  [[nodiscard]] double operator()(double r) const noexcept;
  [[nodiscard]] double derivative(double r) const noexcept;
};

}  // namespace leafwise
