#pragma once

#include "leafwise/diffeo_paths.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace leafwise::diffeo {

// Text scenario for the diffeo subcommands. One directive per line:
//
//   dim K | seed S | probes N | epsilon E | trials T | q Q
//   tolerance T                                  (integrator tolerance for later bumps)
//   box NAME lo_1 .. lo_K hi_1 .. hi_K
//   bump NAME center c1,..,cK radius R direction d1,..,dK time T [plateau P]
//   displacement NAME center .. radius R direction .. amplitude A
//   rotation NAME peak P [core C] [width W]      (also defines the path NAME)
//   field NAME center .. radius R direction ..   (vector field for exp)
//   program NAME tok ..     postfix over names; ops: inv, o, comm, conj
//   tsuboi A B H U          (repeat with the same H, U for products)
//   fragment G S1 .. S6 X1 .. X6                 (X may be `zero`)
//   concat P1 P2 | suspend P | veps NAME ..
struct Scenario {
  int dim = 2;
  std::uint64_t seed = 1;
  std::size_t probes = 10000;
  double epsilon = 0.005;
  int trials = 20;
  int q = 4;
  double tolerance = 1e-10;

  std::map<std::string, CDiffeo> diffeos;
  std::map<std::string, Box> boxes;
  std::map<std::string, PairedPath> paths;
  std::map<std::string, BumpField> fields;

  struct TsuboiLine {
    std::string a, b, h, u;
  };
  std::vector<TsuboiLine> tsuboi;
  struct FragmentLine {
    std::string g;
    std::vector<std::string> sigmas;
    std::vector<std::string> fields;
  };
  std::optional<FragmentLine> fragment;
  std::vector<std::string> concat;
  std::optional<std::string> suspend;
  std::vector<std::string> veps;

  [[nodiscard]] const CDiffeo& diffeo(const std::string& name) const;
};

Scenario parse_scenario(std::istream& in);
Scenario load_scenario(const std::string& path);

// Runs one of tsuboi, concat, suspend, veps, frag72 and returns its JSON report.
nlohmann::json run_scenario(const std::string& command, const Scenario& s);

}  // namespace leafwise::diffeo
