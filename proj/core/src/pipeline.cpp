#include "leafwise/pipeline.hpp"

#include "leafwise/checkpoint.hpp"
#include "leafwise/civilization.hpp"
#include "leafwise/diffeo_paths.hpp"
#include "leafwise/error.hpp"
#include "leafwise/mesh_io.hpp"
#include "leafwise/presets.hpp"
#include "leafwise/smooth.hpp"
#include "leafwise/torus_example.hpp"
#include "leafwise/triangulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>

namespace leafwise::pipeline {

using nlohmann::json;

namespace {

// Infinite margins (vacuous checks) are reported as strings so reports stay
// valid JSON and compare bitwise.
json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json vec_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
  return out;
}

struct Context {
  const RunConfig& cfg;
  geom::PairedDistribution pair;
  Box k_box;
  std::optional<tri::SearchResult> search;
  std::optional<civ::SkeletonState> civilized;
};

struct StageResult {
  bool ok = true;
  json tolerances = json::object();
  json metrics = json::object();
  json witness;
};

using StageFn = std::function<StageResult(Context&)>;

StageResult audit_stage(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  StageResult r;
  r.tolerances["floor"] = cfg.audit_floor;
  const Box box = Box::cube(cfg.n, -2.0, 2.0);
  const int half_rank = ctx.pair.tau.rank() / 2;
  double min_margin = INFINITY;
  std::size_t points = 0;
  std::size_t failures = 0;
  for (const Vec& x : box.grid(cfg.audit_grid)) {
    const auto nd = geom::pair_nondegenerate(ctx.pair, x, half_rank, cfg.audit_floor);
    ++points;
    if (nd.margin < min_margin) min_margin = nd.margin;
    if (!nd.ok) {
      if (failures == 0) r.witness = {{"point", vec_json(x)}, {"margin", number(nd.margin)}};
      ++failures;
    }
  }
  r.ok = failures == 0;
  r.metrics = {{"points", points}, {"failures", failures}, {"min_margin", number(min_margin)}};
  return r;
}

json margin_histogram(const tri::GeneralPositionReport& rep) {
  std::map<int, std::size_t> bins;
  std::size_t vacuous = 0;
  for (const auto& v : rep.verdicts) {
    if (!std::isfinite(v.margin)) {
      ++vacuous;
      continue;
    }
    const int b = v.margin > 0.0 ? static_cast<int>(std::floor(std::log10(v.margin))) : -16;
    ++bins[std::max(-16, b)];
  }
  json out = json::array();
  for (const auto& [b, count] : bins) {
    out.push_back({{"log10_lo", b}, {"log10_hi", b + 1}, {"count", count}});
  }
  if (vacuous > 0) out.push_back({{"log10_lo", "inf"}, {"log10_hi", "inf"}, {"count", vacuous}});
  return out;
}

tri::SearchOptions search_options(const RunConfig& cfg) {
  tri::SearchOptions opt;
  opt.epsilon_fraction = cfg.epsilon_fraction;
  opt.budget = cfg.budget;
  opt.seed = cfg.seed;
  opt.depth = cfg.depth;
  opt.floor = cfg.genpos_floor;
  opt.domain_margin = cfg.domain_margin;
  return opt;
}

StageResult genpos_stage(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  StageResult r;
  r.tolerances = {{"floor", cfg.genpos_floor}, {"epsilon_fraction", cfg.epsilon_fraction}};
  ctx.search = tri::find_general_position(ctx.pair.tau, ctx.k_box, search_options(cfg));
  const auto& s = *ctx.search;
  json history = json::array();
  for (const auto& h : s.history) {
    history.push_back({{"l", h.l}, {"attempt", h.attempt}, {"seed", h.seed}, {"min_margin", number(h.min_margin)},
                       {"ok", h.ok}});
  }
  r.ok = s.success;
  r.metrics = {{"success", s.success},
               {"l", s.l},
               {"seed", s.seed},
               {"attempts_at_l", s.attempts_at_l},
               {"best_margin", number(s.best_margin)},
               {"history", history}};
  if (s.success) {
    r.metrics["min_margin"] = number(s.report.min_margin);
    r.metrics["cells_checked"] = s.report.cells_checked;
    r.metrics["faces_checked"] = s.report.faces_checked;
    r.metrics["margin_histogram"] = margin_histogram(s.report);
    const auto& j = s.jiggled->jiggling;
    r.metrics["jiggle"] = {{"epsilon", j.epsilon}, {"max_displacement", j.max_norm()}, {"resampled", j.resampled}};
    r.metrics["vertices"] = s.jiggled->complex.vertex_count();
    r.metrics["cells"] = s.jiggled->complex.cell_count();
  } else if (!s.report.failures.empty()) {
    const auto& w = s.report.failures.front();
    r.witness = {{"cell", w.cell}, {"face", w.face}, {"point", vec_json(w.point)}, {"margin", number(w.margin)}};
  }
  return r;
}

StageResult lattice_stage(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  StageResult r;
  r.tolerances = {{"star_factor", cfg.star_factor}, {"graph_factor", cfg.graph_factor}};
  tri::LatticeOptions opt;
  opt.star_factor = cfg.star_factor;
  opt.graph_factor = cfg.graph_factor;
  const auto rep = tri::check_lattice_conditions(ctx.search->jiggled->complex, ctx.pair.tau, ctx.k_box, opt);
  r.ok = rep.a_ok && rep.b_ok;
  r.metrics = {{"a_ok", rep.a_ok},
               {"b_ok", rep.b_ok},
               {"a_violations", rep.a_violations.size()},
               {"b_violations", rep.b_violations.size()},
               {"max_graph_norm", number(rep.max_graph_norm)},
               {"vertices_checked", rep.vertices_checked},
               {"cells_checked", rep.cells_checked}};
  if (!rep.a_ok) {
    const auto v = rep.a_violations.front();
    r.witness = {{"condition", "A"}, {"vertex", v},
                 {"point", vec_json(ctx.search->jiggled->complex.vertex(v))}};
  } else if (!rep.b_ok) {
    const auto& b = rep.b_violations.front();
    r.witness = {{"condition", "B"}, {"cell", b.cell}, {"x", vec_json(b.x)}, {"y", vec_json(b.y)},
                 {"norm", number(b.norm)}};
  }
  return r;
}

StageResult civilize_stage(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  StageResult r;
  r.tolerances = {{"deviation_tol", cfg.deviation_tol}, {"kappa", cfg.kappa}};
  const auto& complex = ctx.search->jiggled->complex;
  const Box region = Box::cube(cfg.n, -cfg.civilize_radius, cfg.civilize_radius);
  civ::SkeletonState state{-1, {}, {}, ctx.pair, cfg.kappa, 1.0 / ctx.search->l};
  json skeleta = json::array();
  bool embedded = true;
  for (int p = 0; p <= cfg.max_skeleton; ++p) {
    auto step = civ::civilize_skeleton(state, complex, region);
    skeleta.push_back({{"p", p},
                       {"simplices", step.step.simplices().size()},
                       {"delta", step.radii.delta},
                       {"eta", step.radii.eta},
                       {"halvings", step.radii.halvings},
                       {"embedding_ok", step.embedding.ok},
                       {"roundtrip_error", step.embedding.roundtrip_error},
                       {"samples", step.embedding.samples}});
    embedded = embedded && step.embedding.ok;
    state = step.next;
  }
  civ::CheckOptions opt;
  opt.deviation_tol = cfg.deviation_tol;
  const auto rep = civ::check_civilized(state, complex, region, opt);
  r.ok = embedded && rep.ok();
  r.metrics = {{"region", vec_json(region.hi)},
               {"skeleta", skeleta},
               {"c_ok", rep.c_ok},
               {"d_ok", rep.d_ok},
               {"e_ok", rep.e_ok},
               {"monotone", rep.monotone},
               {"max_exit_ratio", number(rep.max_exit_ratio)},
               {"max_deviation", number(rep.max_deviation)},
               {"e_violations", rep.e_violations},
               {"fibers_sampled", rep.fibers_sampled}};
  if (!rep.problems.empty()) r.witness = {{"problem", rep.problems.front()}};
  ctx.civilized = std::move(state);
  return r;
}

std::vector<int> torus_grids(const RunConfig& cfg, const std::vector<int>& grids) {
  if (!grids.empty()) return grids;
  std::vector<int> out;
  for (int g : {6, 12, cfg.torus_grid}) {
    if (g <= cfg.torus_grid && std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
  }
  return out;
}

StageResult torus_stage_with(const RunConfig& cfg, const std::vector<int>& grids) {
  StageResult r;
  r.tolerances = {{"defect_tol", cfg.torus_defect_tol}, {"margin_floor", cfg.torus_margin_floor},
                  {"boundary_tol", 1e-12}};
  torus::SolidTorusModel model;
  model.a = cfg.torus_a;
  json sweep = json::array();
  std::optional<torus::VerifyReport> last;
  for (int g : grids) {
    auto rep = torus::verify_example(model, g, cfg.torus_probes);
    sweep.push_back({{"grid", g}, {"defect_max", rep.defect_max}, {"margin_min", number(rep.margin_min)}});
    last = rep;
  }
  const auto& rep = *last;
  const double kernel_err = std::abs(rep.kernel_value - rep.alpha_on_kernel);
  r.ok = rep.passes(cfg.torus_defect_tol, cfg.torus_margin_floor) && kernel_err < 1e-12;
  r.metrics = {{"a", rep.a},
               {"grid", rep.grid},
               {"points", rep.points},
               {"defect_max", rep.defect_max},
               {"margin_min", number(rep.margin_min)},
               {"margin_argmin", vec_json(rep.margin_argmin)},
               {"boundary_alpha_check", rep.boundary_alpha_check},
               {"boundary_probes", rep.boundary_probes},
               {"kernel_value", rep.kernel_value},
               {"alpha_on_kernel", rep.alpha_on_kernel},
               {"continuity_max", number(rep.continuity_max)},
               {"cutoffs_ok", rep.cutoffs_ok},
               {"sweep", sweep}};
  if (cfg.torus_family) {
    torus::FamilyModel fam;
    fam.base = model;
    fam.param_dim = cfg.n - 3;
    const auto f = torus::verify_family(fam, cfg.family_grid);
    r.tolerances["reduction_tol"] = 1e-12;
    r.metrics["family"] = {{"param_dim", fam.param_dim},
                           {"grid", cfg.family_grid},
                           {"points", f.points},
                           {"margin_min", number(f.margin_min)},
                           {"defect_max", f.defect_max},
                           {"reduction_error", f.reduction_error}};
    r.ok = r.ok && f.margin_min > 0.0 && f.defect_max < cfg.torus_defect_tol && f.reduction_error < 1e-12;
  }
  return r;
}

StageResult torus_stage(Context& ctx) { return torus_stage_with(ctx.cfg, torus_grids(ctx.cfg, {})); }

StageResult diffeo_stage(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  StageResult r;
  r.tolerances = {{"tsuboi_tol", cfg.tsuboi_tol}, {"holonomy_tol", cfg.holonomy_tol}, {"endpoint_tol", 1e-12}};
  const int k = cfg.n - 2;
  for (const auto& check : cfg.diffeo_checks) {
    if (check == "tsuboi") {
      double worst = 0.0;
      bool pre = true;
      for (int i = 0; i < cfg.tsuboi_scenarios; ++i) {
        const auto sc = diffeo::random_tsuboi_scenario(k, tri::attempt_seed(cfg.seed, 1000, i));
        const auto rep = diffeo::tsuboi_verify(sc.a, sc.b, sc.h, sc.u, cfg.diffeo_probes, cfg.seed + i);
        worst = std::max(worst, rep.discrepancy);
        pre = pre && rep.preconditions_met();
      }
      const bool ok = pre && worst < cfg.tsuboi_tol;
      r.ok = r.ok && ok;
      r.metrics["tsuboi"] = {{"scenarios", cfg.tsuboi_scenarios}, {"preconditions_met", pre},
                             {"discrepancy", worst}, {"ok", ok}};
    } else if (check == "concat") {
      diffeo::RotationChart chart;
      chart.k = k;
      const auto f = diffeo::disk_bump(0.5);
      const auto p = diffeo::with_time_form(diffeo::make_rotation_path(f, chart));
      const auto twice = diffeo::make_rotation_path(f, chart, 2.0);
      const auto adj = diffeo::adjust(p);
      const auto joined = diffeo::concatenate(adj, adj);
      const auto probes = diffeo::probe_points(chart.box(), cfg.diffeo_probes, cfg.seed);
      const double law = diffeo::max_discrepancy(joined.path.at(1.0), diffeo::compose(adj.path.at(1.0), adj.path.at(1.0)), probes);
      const double analytic = diffeo::max_discrepancy(joined.path.at(1.0), twice.at(1.0), probes);
      const bool ok = law < 1e-12 && analytic < 1e-12;
      r.ok = r.ok && ok;
      r.metrics["concat"] = {{"endpoint_law", law}, {"analytic_endpoint", analytic}, {"ok", ok}};
    } else if (check == "suspend") {
      diffeo::RotationChart chart;
      chart.k = k;
      const auto p = diffeo::with_time_form(diffeo::make_rotation_path(diffeo::disk_bump(0.5), chart));
      const auto rep = diffeo::check_suspension(diffeo::suspend(p), std::min<std::size_t>(cfg.diffeo_probes, 100), cfg.seed);
      const bool ok = rep.holonomy_error < cfg.holonomy_tol && rep.outside_error == 0.0 && rep.alpha_min > 0.0;
      r.ok = r.ok && ok;
      r.metrics["suspend"] = {{"holonomy_error", rep.holonomy_error}, {"outside_error", rep.outside_error},
                              {"alpha_min", number(rep.alpha_min)}, {"ok", ok}};
    } else if (check == "veps") {
      const auto d = diffeo::make_displacement(Vec::Zero(k), 1.0, Vec::Unit(k, 0), 0.01);
      const double est = diffeo::v_eps_norm(d);
      const double exact = 0.01 * smooth_step_max_slope() / (1.0 + 1e-6);
      const bool ok = std::abs(est - exact) < 0.02 * exact;
      r.ok = r.ok && ok;
      r.metrics["veps"] = {{"estimate", est}, {"reference", exact}, {"ok", ok}};
    }
  }
  return r;
}

// Probes in the shell [-3, 3]^n minus (-2, 2)^n and in the neighbouring chart
// shifted by 4 e1: civilized output must equal the input there, and all tubes
// must stay in the open cube.
StageResult support_stage(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  StageResult r;
  r.tolerances = {{"outside_deviation", 0.0}};
  const Box inner = Box::cube(cfg.n, -2.0, 2.0);
  const Box outer = Box::cube(cfg.n, -3.0, 3.0);
  std::vector<Vec> shell;
  for (const Vec& y : diffeo::probe_points(outer, 8 * cfg.support_probes, cfg.seed + 17)) {
    if (!inner.contains_open(y)) shell.push_back(y);
    if (shell.size() == cfg.support_probes) break;
  }
  Vec shift = Vec::Zero(cfg.n);
  shift[0] = 4.0;
  std::vector<Vec> neighbour;
  for (const Vec& y : diffeo::probe_points(inner, cfg.support_probes, cfg.seed + 19)) neighbour.push_back(y + shift);

  const auto out = ctx.civilized ? ctx.civilized->pair : ctx.pair;
  auto deviation = [&](const std::vector<Vec>& pts) {
    double worst = 0.0;
    for (const Vec& y : pts) {
      const double dt = max_abs(out.tau.sample(y).frame() - ctx.pair.tau.sample(y).frame());
      const double dw = max_abs(out.omega.at(y) - ctx.pair.omega.at(y));
      worst = std::max({worst, dt, dw});
    }
    return worst;
  };
  const double shell_dev = deviation(shell);
  const double neighbour_dev = deviation(neighbour);
  // Civilized simplices have their vertices in the region, so every outer tube
  // lies in the region grown by kappa (delta + eta).
  double reach = 0.0;
  if (ctx.civilized) {
    for (std::size_t p = 0; p < ctx.civilized->deltas.size(); ++p) {
      reach = std::max(reach, ctx.civilized->kappa * (ctx.civilized->deltas[p] + ctx.civilized->etas[p]));
    }
  }
  const Box touched = Box::cube(cfg.n, -cfg.civilize_radius, cfg.civilize_radius).grown(reach);
  const bool tubes_inside = inner.contains_open(touched.lo) && inner.contains_open(touched.hi);
  r.ok = shell_dev == 0.0 && neighbour_dev == 0.0 && tubes_inside;
  r.metrics = {{"shell_probes", shell.size()},
               {"shell_deviation", shell_dev},
               {"neighbour_chart_probes", neighbour.size()},
               {"neighbour_chart_deviation", neighbour_dev},
               {"tube_reach", reach},
               {"tubes_inside", tubes_inside}};
  return r;
}

json stage_json(const std::string& name, const std::string& status, const StageResult* r, const std::string& message,
                double seconds, bool timings) {
  json s = {{"name", name}, {"status", status}};
  if (r) {
    s["tolerances"] = r->tolerances;
    s["metrics"] = r->metrics;
    if (!r->witness.is_null()) s["witness"] = r->witness;
  }
  if (!message.empty()) s["message"] = message;
  if (timings) s["seconds"] = seconds;
  return s;
}

json run_stages(const RunConfig& cfg, const std::vector<std::pair<std::string, StageFn>>& stages, const char* command) {
  validate(cfg);
  Context ctx{cfg, presets::make_pair(cfg.preset, cfg.n, cfg.preset_param), Box::cube(cfg.n, -cfg.k_radius, cfg.k_radius),
              std::nullopt, std::nullopt};
  json list = json::array();
  bool aborted = false;
  bool all_ok = true;
  for (const auto& [name, fn] : stages) {
    if (aborted) {
      list.push_back(stage_json(name, "skipped", nullptr, {}, 0.0, false));
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const StageResult r = fn(ctx);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      list.push_back(stage_json(name, r.ok ? "pass" : "fail", &r, {}, secs, cfg.timings));
      if (!r.ok) {
        aborted = true;
        all_ok = false;
      }
    } catch (const Error& e) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      list.push_back(stage_json(name, "error", nullptr, std::string(to_string(e.kind())) + ": " + e.what(), secs,
                                cfg.timings));
      aborted = true;
      all_ok = false;
    }
  }
  return {{"schema", 1},
          {"version", std::string(version())},
          {"command", command},
          {"config", to_json(cfg)},
          {"seeds", {{"base", cfg.seed}}},
          {"stages", list},
          {"verdict", all_ok ? "pass" : "fail"}};
}

}  // namespace

json run_pipeline(const RunConfig& cfg) {
  return run_stages(cfg,
                    {{"audit", audit_stage},
                     {"general_position", genpos_stage},
                     {"lattice", lattice_stage},
                     {"civilize", civilize_stage},
                     {"torus", torus_stage},
                     {"diffeo", diffeo_stage},
                     {"support", support_stage}},
                    "pipeline");
}

json run_genpos(const RunConfig& cfg, const std::string& mesh_out) {
  return run_stages(cfg,
                    {{"general_position",
                      [&mesh_out](Context& ctx) {
                        StageResult r = genpos_stage(ctx);
                        if (r.ok && !mesh_out.empty()) io::save_mesh(mesh_out, ctx.search->jiggled->complex);
                        return r;
                      }}},
                    "genpos");
}

json run_torus(const RunConfig& cfg, const std::vector<int>& grids) {
  const auto g = torus_grids(cfg, grids);
  return run_stages(cfg, {{"torus", [g](Context& ctx) { return torus_stage_with(ctx.cfg, g); }}}, "torus-verify");
}

namespace {

json civilize_summary(const civ::SkeletonState& state, const tri::SimplicialComplex& complex, const Box& region,
                      double deviation_tol) {
  civ::CheckOptions opt;
  opt.deviation_tol = deviation_tol;
  const auto rep = civ::check_civilized(state, complex, region, opt);
  return {{"j", state.j},
          {"deltas", state.deltas},
          {"etas", state.etas},
          {"ok", rep.ok()},
          {"c_ok", rep.c_ok},
          {"d_ok", rep.d_ok},
          {"e_ok", rep.e_ok},
          {"max_exit_ratio", number(rep.max_exit_ratio)},
          {"max_deviation", number(rep.max_deviation)}};
}

}  // namespace

json civilize_init(const RunConfig& cfg, const std::string& checkpoint, const std::string& mesh, int skeleton) {
  validate(cfg);
  require(skeleton >= 0 && skeleton < cfg.n, ErrorKind::Precondition, "skeleton index must lie in [0, n)");
  const auto pair = presets::make_pair(cfg.preset, cfg.n, cfg.preset_param);
  const Box k_box = Box::cube(cfg.n, -cfg.k_radius, cfg.k_radius);
  const auto search = tri::find_general_position(pair.tau, k_box, search_options(cfg));
  require(search.success, ErrorKind::GeneralPosition, "no general-position triangulation within the budget");
  const auto& complex = search.jiggled->complex;
  io::save_mesh(mesh, complex);
  const Box region = Box::cube(cfg.n, -cfg.civilize_radius, cfg.civilize_radius);
  civ::SkeletonState state{-1, {}, {}, pair, cfg.kappa, 1.0 / search.l};
  while (state.j < skeleton) state = civ::civilize_skeleton(state, complex, region).next;
  civ::save_checkpoint(checkpoint, civ::checkpoint_of(state, complex, cfg.preset, cfg.preset_param, mesh, region));
  json out = {{"schema", 1}, {"version", std::string(version())}, {"command", "civilize"},
              {"l", search.l}, {"seed", search.seed}};
  out["state"] = civilize_summary(state, complex, region, cfg.deviation_tol);
  return out;
}

json civilize_resume(const std::string& checkpoint, const std::string& out_path, int skeleton, double deviation_tol) {
  civ::Checkpoint c = civ::load_checkpoint(checkpoint);
  const auto complex = io::load_mesh(c.mesh_path);
  civ::SkeletonState state = civ::replay(c, complex);
  const int target = skeleton < 0 ? state.j + 1 : skeleton;
  require(target < complex.dim(), ErrorKind::Precondition, "skeleton index must lie below the top dimension");
  require(target >= state.j, ErrorKind::Precondition, "checkpoint is already past the requested skeleton");
  while (state.j < target) state = civ::civilize_skeleton(state, complex, c.region).next;
  civ::save_checkpoint(out_path.empty() ? checkpoint : out_path,
                       civ::checkpoint_of(state, complex, c.preset, c.preset_param, c.mesh_path, c.region));
  json out = {{"schema", 1}, {"version", std::string(version())}, {"command", "civilize"}};
  out["state"] = civilize_summary(state, complex, c.region, deviation_tol);
  return out;
}

bool passed(const json& report) { return report.value("verdict", "fail") == "pass"; }

void write_report(const std::string& path, const json& report) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write report " + path);
  out << report.dump(2) << '\n';
  require(out.good(), ErrorKind::Io, "failed writing report " + path);
}

json read_report(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open report " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("report is not valid JSON: ") + e.what());
  }
}

}  // namespace leafwise::pipeline
