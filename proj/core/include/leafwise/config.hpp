#pragma once

#include "leafwise/triangulation.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace leafwise {

std::string_view version() noexcept;

namespace pipeline {

struct RunConfig {
  int n = 4;
  std::string preset = "constant";
  double preset_param = 0.05;
  std::uint64_t seed = 1;

  int audit_grid = 5;
  double audit_floor = 1e-12;

  double k_radius = 0.5;  // K = [-k_radius, k_radius]^n
  double domain_margin = 0.5;
  double epsilon_fraction = 0.1;
  int depth = 2;
  double genpos_floor = 1e-9;
  tri::SearchBudget budget{1, 5, 50, tri::Schedule::Linear};
  double star_factor = 1.5;
  double graph_factor = 2.0;

  int max_skeleton = 1;
  double civilize_radius = 0.25;
  double kappa = 1.5;
  double deviation_tol = 1e-9;

  double torus_a = 0.5;
  int torus_grid = 24;
  int torus_probes = 1000;
  double torus_defect_tol = 1e-12;
  double torus_margin_floor = 0.2;
  bool torus_family = false;  // also verify the parameterized family over D^(n-3)
  int family_grid = 10;

  std::vector<std::string> diffeo_checks{"tsuboi", "concat", "suspend"};
  int tsuboi_scenarios = 3;
  std::size_t diffeo_probes = 2000;
  double tsuboi_tol = 1e-9;
  double holonomy_tol = 1e-8;

  std::size_t support_probes = 1000;
  bool timings = false;

  std::string report_path;
  std::string plots_dir;
};

// Flat `key = value` lines; `#` starts a comment. Unknown keys raise Parse.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
void write_config(std::ostream& out, const RunConfig& cfg);

// Raises Precondition on non-positive tolerances or inconsistent budgets.
void validate(const RunConfig& cfg);

nlohmann::json to_json(const RunConfig& cfg);

}  // namespace pipeline
}  // namespace leafwise
