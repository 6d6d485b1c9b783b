#include "leafwise/config.hpp"

#include "leafwise/error.hpp"
#include "leafwise/presets.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace leafwise {

std::string_view version() noexcept { return LEAFWISE_VERSION_STRING; }

namespace pipeline {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  require(ec == std::errc{} && ptr == v.data() + v.size(), ErrorKind::Parse, "bad number for '" + key + "': " + v);
  return out;
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  require(ec == std::errc{} && ptr == v.data() + v.size(), ErrorKind::Parse, "bad integer for '" + key + "': " + v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorKind::Parse, "bad boolean for '" + key + "': " + v);
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

tri::Schedule to_schedule(const std::string& key, const std::string& v) {
  if (v == "linear") return tri::Schedule::Linear;
  if (v == "powers") return tri::Schedule::PowersOfTwo;
  fail(ErrorKind::Parse, "bad schedule for '" + key + "': " + v + " (linear or powers)");
}

std::string_view schedule_name(tri::Schedule s) { return s == tri::Schedule::Linear ? "linear" : "powers"; }

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"n", [](RunConfig& c, const auto& k, const auto& v) { c.n = to_int<int>(k, v); }},
      {"preset", [](RunConfig& c, const auto&, const auto& v) { c.preset = v; }},
      {"preset.param", [](RunConfig& c, const auto& k, const auto& v) { c.preset_param = to_double(k, v); }},
      {"seed", [](RunConfig& c, const auto& k, const auto& v) { c.seed = to_int<std::uint64_t>(k, v); }},
      {"audit.grid", [](RunConfig& c, const auto& k, const auto& v) { c.audit_grid = to_int<int>(k, v); }},
      {"audit.floor", [](RunConfig& c, const auto& k, const auto& v) { c.audit_floor = to_double(k, v); }},
      {"genpos.k_radius", [](RunConfig& c, const auto& k, const auto& v) { c.k_radius = to_double(k, v); }},
      {"genpos.domain_margin", [](RunConfig& c, const auto& k, const auto& v) { c.domain_margin = to_double(k, v); }},
      {"genpos.epsilon_fraction",
       [](RunConfig& c, const auto& k, const auto& v) { c.epsilon_fraction = to_double(k, v); }},
      {"genpos.depth", [](RunConfig& c, const auto& k, const auto& v) { c.depth = to_int<int>(k, v); }},
      {"genpos.floor", [](RunConfig& c, const auto& k, const auto& v) { c.genpos_floor = to_double(k, v); }},
      {"lattice.min_l", [](RunConfig& c, const auto& k, const auto& v) { c.budget.min_l = to_int<int>(k, v); }},
      {"lattice.max_l", [](RunConfig& c, const auto& k, const auto& v) { c.budget.max_l = to_int<int>(k, v); }},
      {"lattice.attempts", [](RunConfig& c, const auto& k, const auto& v) { c.budget.attempts = to_int<int>(k, v); }},
      {"lattice.schedule", [](RunConfig& c, const auto& k, const auto& v) { c.budget.schedule = to_schedule(k, v); }},
      {"lattice.star_factor", [](RunConfig& c, const auto& k, const auto& v) { c.star_factor = to_double(k, v); }},
      {"lattice.graph_factor", [](RunConfig& c, const auto& k, const auto& v) { c.graph_factor = to_double(k, v); }},
      {"civilize.max_skeleton", [](RunConfig& c, const auto& k, const auto& v) { c.max_skeleton = to_int<int>(k, v); }},
      {"civilize.radius", [](RunConfig& c, const auto& k, const auto& v) { c.civilize_radius = to_double(k, v); }},
      {"civilize.kappa", [](RunConfig& c, const auto& k, const auto& v) { c.kappa = to_double(k, v); }},
      {"civilize.deviation_tol", [](RunConfig& c, const auto& k, const auto& v) { c.deviation_tol = to_double(k, v); }},
      {"torus.a", [](RunConfig& c, const auto& k, const auto& v) { c.torus_a = to_double(k, v); }},
      {"torus.grid", [](RunConfig& c, const auto& k, const auto& v) { c.torus_grid = to_int<int>(k, v); }},
      {"torus.probes", [](RunConfig& c, const auto& k, const auto& v) { c.torus_probes = to_int<int>(k, v); }},
      {"torus.defect_tol", [](RunConfig& c, const auto& k, const auto& v) { c.torus_defect_tol = to_double(k, v); }},
      {"torus.margin_floor", [](RunConfig& c, const auto& k, const auto& v) { c.torus_margin_floor = to_double(k, v); }},
      {"torus.family", [](RunConfig& c, const auto& k, const auto& v) { c.torus_family = to_bool(k, v); }},
      {"torus.family_grid", [](RunConfig& c, const auto& k, const auto& v) { c.family_grid = to_int<int>(k, v); }},
      {"diffeo.checks", [](RunConfig& c, const auto&, const auto& v) { c.diffeo_checks = to_list(v); }},
      {"diffeo.tsuboi_scenarios",
       [](RunConfig& c, const auto& k, const auto& v) { c.tsuboi_scenarios = to_int<int>(k, v); }},
      {"diffeo.probes", [](RunConfig& c, const auto& k, const auto& v) { c.diffeo_probes = to_int<std::size_t>(k, v); }},
      {"diffeo.tsuboi_tol", [](RunConfig& c, const auto& k, const auto& v) { c.tsuboi_tol = to_double(k, v); }},
      {"diffeo.holonomy_tol", [](RunConfig& c, const auto& k, const auto& v) { c.holonomy_tol = to_double(k, v); }},
      {"support.probes", [](RunConfig& c, const auto& k, const auto& v) { c.support_probes = to_int<std::size_t>(k, v); }},
      {"report.timings", [](RunConfig& c, const auto& k, const auto& v) { c.timings = to_bool(k, v); }},
      {"output.report", [](RunConfig& c, const auto&, const auto& v) { c.report_path = v; }},
      {"output.plots", [](RunConfig& c, const auto&, const auto& v) { c.plots_dir = v; }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::Parse, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto it = setters().find(key);
    require(it != setters().end(), ErrorKind::Parse, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second(cfg, key, value);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open config " + path);
  return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  const nlohmann::json j = to_json(cfg);
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) {
      out << key << " = " << value.get<std::string>() << '\n';
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + v.get<std::string>();
      out << key << " = " << joined << '\n';
    } else {
      out << key << " = " << value.dump() << '\n';
    }
  }
}

void validate(const RunConfig& cfg) {
  auto positive = [](double v, const char* name) {
    require(v > 0.0, ErrorKind::Precondition, std::string(name) + " must be positive");
  };
  require(cfg.n >= 3, ErrorKind::Precondition, "n must be at least 3");
  const auto names = presets::pair_names();
  require(std::find(names.begin(), names.end(), cfg.preset) != names.end(), ErrorKind::Precondition,
          "unknown preset '" + cfg.preset + "'");
  require(cfg.audit_grid >= 2, ErrorKind::Precondition, "audit.grid must be at least 2");
  positive(cfg.audit_floor, "audit.floor");
  positive(cfg.k_radius, "genpos.k_radius");
  require(cfg.k_radius + cfg.domain_margin <= 2.0, ErrorKind::Precondition,
          "the triangulated domain must stay inside [-2, 2]^n");
  require(cfg.domain_margin >= 0.0, ErrorKind::Precondition, "genpos.domain_margin must be non-negative");
  positive(cfg.epsilon_fraction, "genpos.epsilon_fraction");
  positive(cfg.genpos_floor, "genpos.floor");
  require(cfg.depth >= 1, ErrorKind::Precondition, "genpos.depth must be at least 1");
  require(cfg.budget.min_l >= 1 && cfg.budget.max_l >= cfg.budget.min_l && cfg.budget.attempts >= 1,
          ErrorKind::Precondition, "inconsistent lattice budget");
  positive(cfg.star_factor, "lattice.star_factor");
  positive(cfg.graph_factor, "lattice.graph_factor");
  require(cfg.max_skeleton >= 0 && cfg.max_skeleton < cfg.n, ErrorKind::Precondition,
          "civilize.max_skeleton must lie in [0, n)");
  positive(cfg.civilize_radius, "civilize.radius");
  require(cfg.kappa > 1.0, ErrorKind::Precondition, "civilize.kappa must exceed 1");
  positive(cfg.deviation_tol, "civilize.deviation_tol");
  positive(cfg.torus_a, "torus.a");
  require(cfg.torus_grid >= 2 && cfg.torus_probes >= 1, ErrorKind::Precondition, "torus grid and probes too small");
  positive(cfg.torus_defect_tol, "torus.defect_tol");
  positive(cfg.torus_margin_floor, "torus.margin_floor");
  require(cfg.family_grid >= 2, ErrorKind::Precondition, "torus.family_grid must be at least 2");
  for (const auto& c : cfg.diffeo_checks) {
    require(c == "tsuboi" || c == "concat" || c == "suspend" || c == "veps", ErrorKind::Precondition,
            "unknown diffeo check '" + c + "'");
  }
  positive(cfg.tsuboi_tol, "diffeo.tsuboi_tol");
  positive(cfg.holonomy_tol, "diffeo.holonomy_tol");
  require(cfg.diffeo_probes >= 1 && cfg.support_probes >= 1, ErrorKind::Precondition, "probe counts must be positive");
}

nlohmann::json to_json(const RunConfig& c) {
  return {
      {"n", c.n},
      {"preset", c.preset},
      {"preset.param", c.preset_param},
      {"seed", c.seed},
      {"audit.grid", c.audit_grid},
      {"audit.floor", c.audit_floor},
      {"genpos.k_radius", c.k_radius},
      {"genpos.domain_margin", c.domain_margin},
      {"genpos.epsilon_fraction", c.epsilon_fraction},
      {"genpos.depth", c.depth},
      {"genpos.floor", c.genpos_floor},
      {"lattice.min_l", c.budget.min_l},
      {"lattice.max_l", c.budget.max_l},
      {"lattice.attempts", c.budget.attempts},
      {"lattice.schedule", schedule_name(c.budget.schedule)},
      {"lattice.star_factor", c.star_factor},
      {"lattice.graph_factor", c.graph_factor},
      {"civilize.max_skeleton", c.max_skeleton},
      {"civilize.radius", c.civilize_radius},
      {"civilize.kappa", c.kappa},
      {"civilize.deviation_tol", c.deviation_tol},
      {"torus.a", c.torus_a},
      {"torus.grid", c.torus_grid},
      {"torus.probes", c.torus_probes},
      {"torus.defect_tol", c.torus_defect_tol},
      {"torus.margin_floor", c.torus_margin_floor},
      {"torus.family", c.torus_family},
      {"torus.family_grid", c.family_grid},
      {"diffeo.checks", c.diffeo_checks},
      {"diffeo.tsuboi_scenarios", c.tsuboi_scenarios},
      {"diffeo.probes", c.diffeo_probes},
      {"diffeo.tsuboi_tol", c.tsuboi_tol},
      {"diffeo.holonomy_tol", c.holonomy_tol},
      {"support.probes", c.support_probes},
      {"report.timings", c.timings},
      {"output.report", c.report_path},
      {"output.plots", c.plots_dir},
  };
}

}  // namespace pipeline
}  // namespace leafwise
