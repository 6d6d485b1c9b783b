#pragma once

#include "leafwise/geom_core.hpp"
#include "leafwise/triangulation.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace leafwise::civ {

// An affine p-simplex: origin + edges * a with a in the standard simplex.
struct Simplex {
  std::vector<int> vertices;  // global vertex ids, ascending
  Vec origin;
  Mat edges;  // n x p

  [[nodiscard]] int dim() const noexcept { return static_cast<int>(edges.cols()); }
  [[nodiscard]] Vec point(const Vec& a) const { return origin + edges * a; }
  [[nodiscard]] Vec barycenter() const;
};

Simplex make_simplex(const tri::SimplicialComplex& complex, std::vector<int> vertices);

// p-simplices of the complex whose vertices all lie in `region`, sorted by vertex ids.
std::vector<Simplex> skeleton_simplices(const tri::SimplicialComplex& complex, const Box& region, int p);

enum class FiberKind { Disk, Line };

struct TubularFiber {
  Vec base;
  int simplex_dim = 0;
  FiberKind kind = FiberKind::Disk;
  Mat b_basis;  // tau(x) (Disk) or the line F_x (Line)
  Mat e_basis;  // (tau(x) + T sigma)^perp; empty for Line
  double delta = 0.0;
  double eta = 0.0;

  [[nodiscard]] int dim() const noexcept { return static_cast<int>(b_basis.cols() + e_basis.cols()); }
};

// Raises GeneralPosition when tau(x) + T sigma loses dimension.
TubularFiber tubular_fiber(const Vec& x, const Simplex& sigma, const geom::PlaneField& tau, double delta, double eta);

// Monotone profile f on [inner, outer] with f(inner) = 0 and f(outer) = outer.
struct RadialRetraction {
  double inner = 1.0;
  double outer = 1.5;

  [[nodiscard]] double operator()(double s) const noexcept;
  // f_t(s) = (1 - t) s + t f(s), with f = 0 below the inner radius.
  [[nodiscard]] double at_time(double s, double t) const noexcept;
};

// Fiber coordinates of a point relative to a simplex tube.
struct Location {
  Vec a;     // simplex parameters of the foot
  Vec foot;  // base point x on the affine hull
  Vec u;     // B coordinates
  Vec w;     // E coordinates
  Vec offset;  // y - foot
  double rho = INFINITY;  // normalized radius max(|u|/delta, |w|/eta)
  bool on_simplex = false;
  bool converged = false;
};

Location locate(const Simplex& sigma, const geom::PlaneField& tau, const Vec& y, double delta, double eta);

struct StepOptions {
  double kappa = 1.5;  // outer radii = kappa * inner radii
};

// The civilization step for a family of p-simplices with disjoint (or
// face-compatible) tubes, applied to an input pair.
class CivilizationStep {
 public:
  CivilizationStep(geom::PairedDistribution input, std::vector<Simplex> simplices, double delta, double eta,
                   const StepOptions& opt = {});

  [[nodiscard]] const geom::PairedDistribution& input() const noexcept;
  [[nodiscard]] const std::vector<Simplex>& simplices() const noexcept;
  [[nodiscard]] double delta() const noexcept;
  [[nodiscard]] double eta() const noexcept;
  [[nodiscard]] double kappa() const noexcept;

  // Point whose input value is used at y at homotopy time t (t = 1: the step).
  [[nodiscard]] Vec retract(const Vec& y, double t = 1.0) const;
  // Index of the simplex whose outer tube captures y, or -1.
  [[nodiscard]] int owner(const Vec& y) const;
  [[nodiscard]] Location locate_in(std::size_t simplex, const Vec& y) const;

  // Pair at homotopy time t; t = 0 returns the input pair object.
  [[nodiscard]] geom::PairedDistribution pair_at(double t) const;
  [[nodiscard]] geom::PairedDistribution output() const { return pair_at(1.0); }

 private:
  struct Data;
  std::shared_ptr<const Data> data_;
};

// Single-simplex form of the step.
geom::PairedDistribution civilize_simplex(const geom::PairedDistribution& input, const Simplex& sigma, double delta,
                                          double eta, const RadialRetraction& retraction);

struct SkeletonState {
  int j = -1;
  std::vector<double> deltas;
  std::vector<double> etas;
  geom::PairedDistribution pair;
  double kappa = 1.5;
  double spacing = 1.0;  // lattice spacing used to seed delta_0
};

struct RadiiChoice {
  double delta;
  double eta;
  int halvings;
};

struct EmbeddingReport {
  bool ok = true;
  double roundtrip_error = 0.0;
  std::size_t overlap_violations = 0;
  std::size_t samples = 0;
  std::string first_problem;
};

struct StepResult {
  CivilizationStep step;
  SkeletonState next;
  RadiiChoice radii;
  EmbeddingReport embedding;
};

// Proposes delta_p, eta_p from the previous constants, verifies the tube
// embedding by sampling, halves on failure (up to 8 times).
StepResult civilize_skeleton(const SkeletonState& state, const tri::SimplicialComplex& complex, const Box& region);
// Same with fixed radii (used when replaying checkpoints); no retries.
StepResult civilize_skeleton_with(const SkeletonState& state, const tri::SimplicialComplex& complex,
                                  const Box& region, double delta, double eta);

EmbeddingReport check_embedding(const std::vector<Simplex>& simplices, const geom::PlaneField& tau, double delta,
                                double eta, double kappa, const std::vector<std::vector<Simplex>>& lower,
                                const SkeletonState& state);

struct CivilizedReport {
  bool c_ok = true;
  bool d_ok = true;
  bool e_ok = true;
  bool monotone = true;
  double max_exit_ratio = 0.0;    // (C): must stay below 1
  double max_deviation = 0.0;     // (D)
  std::size_t e_violations = 0;   // (E)
  std::size_t fibers_sampled = 0;
  std::vector<std::string> problems;
  [[nodiscard]] bool ok() const { return c_ok && d_ok && e_ok && monotone; }
};

struct CheckOptions {
  double deviation_tol = 1e-9;
  int base_depth = 2;
  int directions = 8;
};

CivilizedReport check_civilized(const SkeletonState& state, const tri::SimplicialComplex& complex, const Box& region,
                                const CheckOptions& opt = {});

// Fiber-space exit ratio max |P_B w| / |P_E w| over w in W (columns).
double exit_ratio(const Mat& w, const TubularFiber& fiber);

// Deterministic fiber offsets (B u + E w) with normalized radius `rho`.
std::vector<Vec> fiber_offsets(const TubularFiber& fiber, double rho, int directions);

}  // namespace leafwise::civ
