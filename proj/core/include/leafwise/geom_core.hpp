#pragma once

#include "leafwise/linalg.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace leafwise::geom {

using Point = Vec;
using VectorField = std::function<Vec(const Point&)>;

// A k-plane at a base point, stored as an orthonormal n x k frame.
class PlaneFieldSample {
 public:
  // Orthonormalizes `frame` eagerly; dependent columns raise DegenerateInput.
  PlaneFieldSample(Point base, const Mat& frame);

  [[nodiscard]] const Point& base() const noexcept { return base_; }
  [[nodiscard]] const Mat& frame() const noexcept { return frame_; }
  [[nodiscard]] int dim() const noexcept { return static_cast<int>(frame_.rows()); }
  [[nodiscard]] int rank() const noexcept { return static_cast<int>(frame_.cols()); }
  [[nodiscard]] Mat projector() const { return leafwise::projector(frame_); }
  [[nodiscard]] Mat complement() const { return orthogonal_complement(frame_); }

 private:
  Point base_;
  Mat frame_;
};

enum class Smoothness { AnalyticPreset, GridInterpolated };

struct ContinuityReport {
  double worst_ratio = 0.0;  // max d_Gr / (L |dx|) over sampled pairs
  std::size_t pairs = 0;
  bool ok = true;
};

class PlaneField {
 public:
  using FrameFn = std::function<Mat(const Point&)>;

  PlaneField(int n, int k, FrameFn frame, Smoothness smoothness, double lipschitz,
             FrameFn complement = {}, bool constant = false);

  [[nodiscard]] int dim() const noexcept { return n_; }
  [[nodiscard]] int rank() const noexcept { return k_; }
  [[nodiscard]] Smoothness smoothness() const noexcept { return smoothness_; }
  [[nodiscard]] double lipschitz() const noexcept { return lipschitz_; }
  [[nodiscard]] bool is_constant() const noexcept { return constant_; }

  [[nodiscard]] PlaneFieldSample sample(const Point& x) const;
  // Orthonormal n x (n-k) basis of tau(x)^perp.
  [[nodiscard]] Mat complement(const Point& x) const;

  // Grassmann distance between samples at nearby random pairs must stay below
  // L |dx| (1 + slack).
  [[nodiscard]] ContinuityReport check_continuity(const Box& region, int pairs, std::uint64_t seed,
                                                  double step, double slack = 0.05) const;

 private:
  int n_;
  int k_;
  FrameFn frame_;
  FrameFn complement_;
  Smoothness smoothness_;
  double lipschitz_;
  bool constant_;
};

class TwoFormField {
 public:
  using MatrixFn = std::function<Mat(const Point&)>;
  TwoFormField(int n, MatrixFn matrix, bool constant = false);

  [[nodiscard]] int dim() const noexcept { return n_; }
  [[nodiscard]] bool is_constant() const noexcept { return constant_; }
  // Antisymmetric n x n matrix; asymmetry beyond 1e-14 raises Precondition.
  [[nodiscard]] Mat at(const Point& x) const;

 private:
  int n_;
  MatrixFn matrix_;
  bool constant_;
};

struct PairedDistribution {
  PlaneField tau;
  TwoFormField omega;
};

class LeafwiseForm {
 public:
  using Evaluator = std::function<double(const Point&, const Mat&)>;
  LeafwiseForm(int degree, Evaluator eval);

  [[nodiscard]] int degree() const noexcept { return degree_; }
  [[nodiscard]] double operator()(const Point& x, const Mat& vectors) const;
  // Max |eta(.., v_i, .., v_j, ..) + eta(.., v_j, .., v_i, ..)| over random trials.
  [[nodiscard]] double alternation_defect(const Point& x, const Mat& vectors, int trials,
                                          std::uint64_t seed) const;

 private:
  int degree_;
  Evaluator eval_;
};

class BivectorField {
 public:
  using MatrixFn = std::function<Mat(const Point&)>;
  BivectorField(int n, MatrixFn matrix);
  [[nodiscard]] int dim() const noexcept { return n_; }
  [[nodiscard]] Mat at(const Point& x) const;

 private:
  int n_;
  MatrixFn matrix_;
};

// A local foliation of R^n by q-dimensional leaves.
struct FoliatedChart {
  std::string name;
  int n = 3;
  int leaf_dim = 2;
  std::function<Mat(const Point&)> tangent;  // n x q, orthonormal
  std::function<Mat(const Point&)> normal;   // n x (n-q), orthonormal

  [[nodiscard]] Mat tangent_frame(const Point& x) const { return tangent(x); }
  [[nodiscard]] Mat normal_frame(const Point& x) const { return normal(x); }

  static FoliatedChart horizontal();  // leaves z = c
  static FoliatedChart tilted();      // leaves z = x + c
  static FoliatedChart curved();      // leaves z = sin x + c
};

struct Projection {
  Mat matrix;     // (n-k) x m: coordinates in tau^perp of the projected subspace frame
  double margin;  // smallest singular value
};

Projection project_along(const PlaneFieldSample& tau, const Mat& subspace);
// Variant taking a precomputed orthonormal basis of tau(x)^perp.
Projection project_along_complement(const Mat& tau_perp, const Mat& subspace);
// Smallest singular value of a 2 x 2 matrix in closed form.
double min_singular_value_2x2(double a, double b, double c, double d) noexcept;

struct Nondegeneracy {
  bool ok;
  double margin;
};

inline constexpr double kNondegeneracyFloor = 1e-12;

// |omega^m| restricted to tau(x), normalized so that dx1^dx2 on span(e1,e2) gives 1.
Nondegeneracy pair_nondegenerate(const PairedDistribution& pair, const Point& x, int half_rank = 1,
                                 double floor = kNondegeneracyFloor);
Nondegeneracy frame_nondegenerate(const Mat& frame, const Mat& omega, int half_rank = 1,
                                  double floor = kNondegeneracyFloor);

struct DerivativeOptions {
  double step = 1e-4;
  double tangency_tol = 1e-8;
};

// d_F eta (X_0, ..., X_p) at x by the invariant formula with finite differences.
double tangential_derivative(const LeafwiseForm& eta, const FoliatedChart& chart, const Point& x,
                             const std::vector<VectorField>& fields, const DerivativeOptions& opt = {});

struct ExtensionReport {
  double max_ambient_derivative = 0.0;  // max |d eta'| over the grid
  double max_leafwise_derivative = 0.0;
  bool leafwise_closed = true;
  std::size_t samples = 0;
};

struct ExtendedForm {
  std::function<double(const Point&, const Vec&)> eval;  // eta'(x; v)
  ExtensionReport report;
};

struct ExtensionOptions {
  Box grid_box = Box::cube(3, -1.0, 1.0);
  int grid_per_axis = 5;
  double step = 1e-4;
  double closed_tol = 1e-6;
};

// Extends a leafwise 1-form by requiring eta'(nu) = 0 on the orthogonal normal bundle.
ExtendedForm extend_by_normal_kernel(const LeafwiseForm& eta, const FoliatedChart& chart,
                                     const ExtensionOptions& opt = {});

struct BivectorSample {
  Mat pi;          // n x n antisymmetric
  Mat image;       // n x k orthonormal basis of Im(#pi)
  double image_distance;  // Grassmann distance between Im(#pi) and tau(x)
};

BivectorSample bivector_from_pair(const PairedDistribution& pair, const Point& x);
// Pointwise field built from bivector_from_pair.
BivectorField bivector_field(PairedDistribution pair);

}  // namespace leafwise::geom
