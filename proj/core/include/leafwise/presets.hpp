#pragma once

#include "leafwise/geom_core.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace leafwise::presets {

geom::PlaneField constant_plane(const Mat& frame);
geom::PlaneField coordinate_plane(int n, int i, int j);
// tau(x) = span(e1, cos(t) e2 + sin(t) e3) with t = rate * x1.
geom::PlaneField rotating_plane(int n, double rate);

geom::TwoFormField constant_form(const Mat& matrix);
// dx_i ^ dx_j scaled.
geom::TwoFormField coordinate_form(int n, int i, int j, double scale = 1.0);
// dx1^dx2 + dx3^dx4 + ...
geom::TwoFormField standard_form(int n);
geom::TwoFormField zero_form(int n);
// |x|^2 times the standard form: degenerate at the origin only.
geom::TwoFormField pinched_form(int n);

// Named pairs: constant, rotating, zero, pinched. `param` is the rotation rate
// for "rotating" and ignored otherwise.
geom::PairedDistribution make_pair(std::string_view name, int n, double param = 0.05);
std::vector<std::string> pair_names();

}  // namespace leafwise::presets
