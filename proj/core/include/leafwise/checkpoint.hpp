#pragma once

#include "leafwise/civilization.hpp"
#include "leafwise/field_io.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace leafwise::civ {

// Resumable civilization state: the input preset, the region, and the radii
// used for skeleta 0..j. The mesh is stored separately.
struct Checkpoint {
  std::string preset = "constant";
  double preset_param = 0.05;
  int n = 4;
  std::string mesh_path;
  Box region;
  double kappa = 1.5;
  double spacing = 1.0;
  int j = -1;
  std::vector<double> deltas;
  std::vector<double> etas;
  // Pair values at the fiber base points (simplex barycenters of skeleta 0..j).
  std::vector<io::FieldRecord> samples;
};

void write_checkpoint(std::ostream& out, const Checkpoint& c);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint checkpoint_of(const SkeletonState& s, const tri::SimplicialComplex& complex, const std::string& preset,
                         double preset_param, const std::string& mesh_path, const Box& region);

// Rebuilds the state by re-running skeleta 0..j with the recorded radii and
// checks it against the stored samples (ModelConsistency on mismatch).
SkeletonState replay(const Checkpoint& c, const tri::SimplicialComplex& complex);

}  // namespace leafwise::civ
