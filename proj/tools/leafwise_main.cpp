#include "leafwise/config.hpp"
#include "leafwise/error.hpp"
#include "leafwise/pipeline.hpp"
#include "leafwise/plots.hpp"
#include "leafwise/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using leafwise::pipeline::RunConfig;
using nlohmann::json;

RunConfig config_from(const std::string& path) {
  return path.empty() ? RunConfig{} : leafwise::pipeline::load_config(path);
}

int emit(const json& report, const std::string& out) {
  if (out.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    leafwise::pipeline::write_report(out, report);
  }
  if (report.contains("verdict")) return leafwise::pipeline::passed(report) ? 0 : 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leafwise: triangulation, civilization and diffeomorphism-group checks for leafwise symplectic pairs"};
  app.set_version_flag("--version", std::string(leafwise::version()));
  app.require_subcommand(1);

  std::string config;
  std::string out;

  auto* genpos = app.add_subcommand("genpos", "Jiggle a Kuhn triangulation into general position");
  std::string mesh;
  std::optional<int> max_l;
  std::optional<std::uint64_t> seed;
  std::optional<double> eps_frac;
  std::vector<double> box;
  genpos->add_option("--config", config, "key = value run configuration")->check(CLI::ExistingFile);
  genpos->add_option("--l", max_l, "largest refinement level to try");
  genpos->add_option("--eps-frac", eps_frac, "jiggle radius times l");
  genpos->add_option("--seed", seed, "base seed");
  genpos->add_option("--box", box, "K = [a, b]^n, symmetric about the origin")->expected(2);
  genpos->add_option("--mesh", mesh, "write the accepted mesh here");
  genpos->add_option("--out,--report", out, "report path (stdout if omitted)");

  auto* civilize = app.add_subcommand("civilize", "Civilize skeleta, resuming from a checkpoint");
  bool init = false;
  std::string checkpoint;
  std::string report;
  int skeleton = -1;
  civilize->add_flag("--init", init, "run the search first; --out receives the new checkpoint");
  civilize->add_option("--config", config, "run configuration (with --init)")->check(CLI::ExistingFile);
  civilize->add_option("--checkpoint", checkpoint, "checkpoint to resume from");
  civilize->add_option("--skeleton", skeleton, "civilize up to this skeleton (default: the next one)");
  civilize->add_option("--mesh", mesh, "mesh file written by --init");
  civilize->add_option("--out", out, "checkpoint to write (default: overwrite --checkpoint)");
  civilize->add_option("--report", report, "report path (stdout if omitted)");

  auto* torus = app.add_subcommand("torus-verify", "Verify the filled solid-torus example");
  std::optional<double> a;
  std::vector<int> grids;
  bool family = false;
  torus->add_option("--config", config, "run configuration")->check(CLI::ExistingFile);
  torus->add_option("--a", a, "slope parameter a");
  torus->add_option("--grid", grids, "grid sizes (points per axis)");
  torus->add_flag("--family", family, "also verify the family over D^(n-3)");
  torus->add_option("--out,--report", out, "report path (stdout if omitted)");

  auto* diffeo = app.add_subcommand("diffeo", "Diffeomorphism-group checks from a scenario file");
  std::string command;
  std::string scenario;
  diffeo->add_option("command", command, "tsuboi | concat | suspend | veps | frag72")
      ->required()
      ->check(CLI::IsMember({"tsuboi", "concat", "suspend", "veps", "frag72"}));
  diffeo->add_option("--scenario", scenario, "scenario file")->required()->check(CLI::ExistingFile);
  diffeo->add_option("--out", out, "report path (stdout if omitted)");

  auto* pipeline = app.add_subcommand("pipeline", "Run all stages on one chart");
  pipeline->add_option("--config", config, "run configuration")->required()->check(CLI::ExistingFile);
  pipeline->add_option("--out", out, "report path (overrides output.report)");

  auto* plots = app.add_subcommand("emit-plots", "Write CSV plot data from a report");
  std::string report_path;
  std::string dir;
  plots->add_option("--report", report_path, "report JSON")->required()->check(CLI::ExistingFile);
  plots->add_option("--dir", dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*genpos) {
      RunConfig cfg = config_from(config);
      if (max_l) cfg.budget.max_l = *max_l;
      if (eps_frac) cfg.epsilon_fraction = *eps_frac;
      if (seed) cfg.seed = *seed;
      if (!box.empty()) {
        if (!(box[0] < box[1]) || box[0] != -box[1]) throw CLI::ValidationError("--box", "expected a < b with a = -b");
        cfg.k_radius = box[1];
      }
      return emit(leafwise::pipeline::run_genpos(cfg, mesh), out);
    }
    if (*civilize) {
      if (init) {
        if (mesh.empty()) throw CLI::RequiredError("--mesh");
        if (out.empty()) throw CLI::RequiredError("--out");
        return emit(leafwise::pipeline::civilize_init(config_from(config), out, mesh, std::max(skeleton, 0)), report);
      }
      if (checkpoint.empty()) throw CLI::RequiredError("--checkpoint");
      return emit(leafwise::pipeline::civilize_resume(checkpoint, out, skeleton), report);
    }
    if (*torus) {
      RunConfig cfg = config_from(config);
      if (a) cfg.torus_a = *a;
      if (family) cfg.torus_family = true;
      return emit(leafwise::pipeline::run_torus(cfg, grids), out);
    }
    if (*diffeo) {
      return emit(leafwise::diffeo::run_scenario(command, leafwise::diffeo::load_scenario(scenario)), out);
    }
    if (*pipeline) {
      const RunConfig cfg = leafwise::pipeline::load_config(config);
      const json report = leafwise::pipeline::run_pipeline(cfg);
      if (!cfg.plots_dir.empty()) leafwise::pipeline::emit_plot_data(report, cfg.plots_dir);
      return emit(report, out.empty() ? cfg.report_path : out);
    }
    if (*plots) {
      for (const auto& p : leafwise::pipeline::emit_plot_data(leafwise::pipeline::read_report(report_path), dir)) {
        std::cout << p << '\n';
      }
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const leafwise::Error& e) {
    std::cerr << "leafwise: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
