#pragma once

#include "leafwise/geom_core.hpp"
#include "leafwise/linalg.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace leafwise::tri {

struct LatticeSpec {
  int n = 4;
  int l = 1;  // lattice spacing 1/l
  Box box;
};

struct FaceIndex {
  int face_dim = 0;
  std::vector<int> faces;           // face_dim + 1 sorted vertex ids per face
  std::vector<std::size_t> offset;  // CSR into cofaces, size faces + 1
  std::vector<int> cofaces;         // top-cell ids containing each face

  [[nodiscard]] std::size_t size() const { return offset.empty() ? 0 : offset.size() - 1; }
  [[nodiscard]] std::span<const int> face(std::size_t f) const;
  [[nodiscard]] std::span<const int> cofaces_of(std::size_t f) const;
};

// Pure simplicial complex of top dimension n embedded in R^n. Vertex positions
// are owned per instance; the cell list is shared between displaced copies.
class SimplicialComplex {
 public:
  SimplicialComplex(int n, std::vector<double> coords, std::vector<int> cells,
                    std::optional<LatticeSpec> lattice = std::nullopt);

  [[nodiscard]] int dim() const noexcept { return n_; }
  [[nodiscard]] std::size_t vertex_count() const noexcept { return coords_.size() / static_cast<std::size_t>(n_); }
  [[nodiscard]] std::size_t cell_count() const noexcept;
  [[nodiscard]] Vec vertex(std::size_t v) const;
  [[nodiscard]] std::span<const double> coords() const noexcept { return coords_; }
  [[nodiscard]] std::span<const int> cell(std::size_t c) const;
  [[nodiscard]] std::span<const int> cells() const noexcept;
  [[nodiscard]] Mat cell_vertices(std::size_t c) const;  // n x (n+1)
  [[nodiscard]] double oriented_volume(std::size_t c) const;
  [[nodiscard]] Box cell_box(std::size_t c) const;
  [[nodiscard]] const std::optional<LatticeSpec>& lattice() const noexcept { return lattice_; }

  // Cells containing vertex v (built lazily, thread-safe).
  [[nodiscard]] std::span<const int> star(std::size_t v) const;
  // Distinct faces of dimension d with their cofaces, over all cells or over
  // the listed cells only.
  [[nodiscard]] FaceIndex face_index(int d) const;
  [[nodiscard]] FaceIndex face_index(int d, std::span<const std::size_t> cells) const;
  // Cells whose bounding box meets the region, ascending.
  [[nodiscard]] std::vector<std::size_t> cells_meeting(const Box& region) const;

  [[nodiscard]] bool shares_cells_with(const SimplicialComplex& other) const noexcept;
  [[nodiscard]] bool same_combinatorics(const SimplicialComplex& other) const;
  [[nodiscard]] SimplicialComplex with_coords(std::vector<double> coords) const;

 private:
  struct Topology;
  int n_;
  std::vector<double> coords_;
  std::shared_ptr<Topology> topo_;
  std::optional<LatticeSpec> lattice_;
};

// Freudenthal-Kuhn subdivision: every cube of the (1/l)Z^n lattice inside the
// box is cut into n! positively oriented simplices.
SimplicialComplex kuhn_triangulation(const LatticeSpec& spec);

struct Jiggling {
  double epsilon = 0.0;
  int n = 0;
  std::vector<double> displacement;  // vertex-major, n entries per vertex
  std::size_t resampled = 0;

  [[nodiscard]] double max_norm() const;
};

struct JiggleOptions {
  double guard = 0.3;  // epsilon must stay below guard / l
  int max_retries = 100;
};

struct JiggleResult {
  Jiggling jiggling;
  SimplicialComplex complex;
};

JiggleResult jiggle(const SimplicialComplex& complex, double epsilon, std::uint64_t seed,
                    const JiggleOptions& opt = {});

// Barycentric sample points of a simplex: union of the depth-1..d grids plus
// the barycenter, so deeper plans are supersets of shallower ones.
class SamplingPlan {
 public:
  SamplingPlan(int n, int depth);
  [[nodiscard]] int depth() const noexcept { return depth_; }
  [[nodiscard]] const Mat& weights() const noexcept { return weights_; }  // (n+1) x samples
  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.cols()); }

 private:
  int depth_;
  Mat weights_;
};

inline constexpr double kGeneralPositionFloor = 1e-9;

struct SimplexVerdict {
  std::size_t cell = 0;
  bool ok = true;
  double margin = 0.0;
  std::vector<int> witness_face;  // local vertex positions of the worst face
  Vec witness_point;
  std::size_t faces_checked = 0;
};

SimplexVerdict general_position_simplex(const Mat& vertices, const geom::PlaneField& tau,
                                        const SamplingPlan& plan, double floor = kGeneralPositionFloor);

struct Witness {
  std::size_t cell;
  std::vector<int> face;  // global vertex ids
  Vec point;
  double margin;
};

struct GeneralPositionReport {
  bool ok = true;
  double min_margin = INFINITY;
  double floor = kGeneralPositionFloor;
  std::size_t cells_checked = 0;
  std::size_t faces_checked = 0;
  std::vector<SimplexVerdict> verdicts;  // sorted by cell id
  std::vector<Witness> failures;
};

GeneralPositionReport check_general_position(const SimplicialComplex& complex, const geom::PlaneField& tau,
                                             const Box& region, const SamplingPlan& plan,
                                             double floor = kGeneralPositionFloor);

enum class Schedule { PowersOfTwo, Linear };

struct SearchBudget {
  int min_l = 1;
  int max_l = 4;
  int attempts = 50;
  Schedule schedule = Schedule::PowersOfTwo;
};

struct SearchAttempt {
  int l;
  int attempt;
  std::uint64_t seed;
  double min_margin;
  bool ok;
};

struct SearchResult {
  bool success = false;
  int l = 0;
  std::uint64_t seed = 0;
  int attempts_at_l = 0;
  double best_margin = 0.0;
  std::vector<SearchAttempt> history;
  std::optional<JiggleResult> jiggled;
  GeneralPositionReport report;
};

struct SearchOptions {
  double epsilon_fraction = 0.1;  // epsilon = fraction / l
  SearchBudget budget;
  std::uint64_t seed = 1;
  int depth = 2;
  double floor = kGeneralPositionFloor;
  double domain_margin = 1.0;  // triangulated box = K grown by this, snapped to the lattice
};

std::vector<int> refinement_levels(const SearchBudget& budget);
std::uint64_t attempt_seed(std::uint64_t base, int l, int attempt) noexcept;

SearchResult find_general_position(const geom::PlaneField& tau, const Box& K, const SearchOptions& opt);

struct GraphViolation {
  std::size_t cell;
  Vec x;
  Vec y;
  double norm;  // INFINITY when tau(y) is not a graph over tau(x)
};

struct LatticeReport {
  bool a_ok = true;
  bool b_ok = true;
  std::vector<std::size_t> a_violations;  // vertex ids
  std::vector<GraphViolation> b_violations;
  double max_graph_norm = 0.0;
  std::size_t vertices_checked = 0;
  std::size_t cells_checked = 0;
};

struct LatticeOptions {
  double star_factor = 1.5;   // (A) stars must stay inside K scaled by this
  double graph_factor = 2.0;  // (B) cells meeting K scaled by this are tested
};

LatticeReport check_lattice_conditions(const SimplicialComplex& complex, const geom::PlaneField& tau,
                                       const Box& K, const LatticeOptions& opt = {});

// Norm of L with tau(y) = graph(L : tau(x) -> tau(x)^perp); INFINITY if undefined.
double graph_norm(const Mat& tau_x, const Mat& tau_x_perp, const Mat& tau_y);

}  // namespace leafwise::tri
