#pragma once

#include "leafwise/linalg.hpp"
#include "leafwise/smooth.hpp"

#include <Eigen/Dense>

#include <string>

namespace leafwise::torus {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Three cutoffs on [0, 1]: lambda_i equals 1 near i and the outer two have
// disjoint supports.
struct CutoffTriple {
  Plateau zero;
  Plateau half;
  Plateau one;

  static CutoffTriple defaults();
  // lambda0 reaching past lambda1's support start: integrability negative control.
  static CutoffTriple overlapping();

  [[nodiscard]] double lambda0(double r) const { return zero(r); }
  [[nodiscard]] double lambda_half(double r) const { return half(r); }
  [[nodiscard]] double lambda1(double r) const { return one(r); }
};

struct CutoffCheck {
  bool plateaus_ok = true;
  bool disjoint = true;
  bool in_range = true;
  bool never_all_zero = true;
  [[nodiscard]] bool ok() const { return plateaus_ok && disjoint && in_range && never_all_zero; }
};

CutoffCheck validate(const CutoffTriple& c, int samples = 2001);

// Sign of the lambda_{1/2} term of the 2-form: Oriented uses
// lambda_{1/2} dphi ^ dtheta, AsPrinted uses lambda_{1/2} dtheta ^ dphi.
enum class HalfTerm { Oriented, AsPrinted };

struct SolidTorusModel {
  double a = 0.5;
  CutoffTriple cutoffs = CutoffTriple::defaults();
  HalfTerm half_term = HalfTerm::Oriented;
};

// Points are given in the Cartesian chart (x, y, theta) of D^2 x S^1.
Vec3 to_cartesian(double r, double phi, double theta);

struct BetaSample {
  Vec3 polar;      // (dr, dphi, dtheta) components; dphi undefined at r = 0 (reported 0)
  Vec3 cartesian;  // (dx, dy, dtheta) components
  Eigen::Matrix<double, 3, 2> kernel;  // orthonormal basis of ker beta (Euclidean chart metric)
};

BetaSample beta_form(const SolidTorusModel& m, const Vec3& p);

// Coefficient of beta ^ d beta on dr ^ dphi ^ dtheta (polar) at radius r.
double integrability_coefficient(const SolidTorusModel& m, double r);
// Same on dx ^ dy ^ dtheta.
double integrability_defect_at(const SolidTorusModel& m, const Vec3& p);

// 2-form matrix on (r, phi, theta) for the inner (r <= 1/2) or outer piece.
Mat3 omega_polar(const SolidTorusModel& m, double r, bool inner);
// 2-form matrix in the Cartesian chart; raises ModelConsistency if the two
// pieces cannot agree at r = 1/2.
Mat3 omega_form(const SolidTorusModel& m, const Vec3& p);

// |omega(k1, k2)| for an orthonormal basis of ker beta.
double leafwise_margin(const SolidTorusModel& m, const Vec3& p);

// Boundary data on r = 1: X spans ker beta modulo the leaf tangent v of the
// boundary foliation (taken orthogonal to v, with dr(X) = 1), and the induced
// 1-form is omega(X, -).
struct InducedBoundaryForm {
  Vec3 x_field;
  Vec3 leaf_tangent;  // unit
  Vec3 alpha;         // omega(X, -) as a covector
  double value = 0.0; // alpha(leaf_tangent)
};

InducedBoundaryForm induced_boundary_form(const SolidTorusModel& m, double phi, double theta);

struct VerifyReport {
  double a = 0.0;
  int grid = 0;
  std::size_t points = 0;
  double defect_max = 0.0;
  double margin_min = INFINITY;
  Vec3 margin_argmin = Vec3::Zero();  // (r, phi, theta)
  double boundary_alpha_check = 0.0;  // max |omega(d_r, -) - alpha| on boundary probes
  std::size_t boundary_probes = 0;
  double kernel_value = 0.0;          // omega(d_r, a d_theta + d_phi) at r = 1
  double alpha_on_kernel = 0.0;       // alpha(a d_theta + d_phi)
  double continuity_max = 0.0;        // inner vs outer piece on their common band
  std::size_t beta_vanishing = 0;     // grid points where beta = 0 (margin recorded as 0)
  bool cutoffs_ok = true;

  [[nodiscard]] bool passes(double defect_tol = 1e-12, double margin_floor = 0.0) const;
};

VerifyReport verify_example(const SolidTorusModel& m, int grid, int boundary_probes = 1000);

struct FamilyModel {
  SolidTorusModel base;
  int param_dim = 1;         // n - 3
  double f_max = 0.5;        // f = f_max on |z| <= 0.3, 0 for |z| >= 0.5
  double f_inner = 0.3;
  double f_outer = 0.5;
  double g_inner = 0.5;      // g = 1 on |z| <= 0.5, 0 for |z| >= 0.8
  double g_outer = 0.8;
  bool literal_dtheta = false;  // first 2-form term r dr ^ dtheta instead of r dr ^ dphi

  [[nodiscard]] double f(const Vec& z) const;
  [[nodiscard]] double g(const Vec& z) const;
};

struct FamilySample {
  Vec one_form;  // size 3 + param_dim
  Mat two_form;  // (3 + param_dim)^2
  double margin = 0.0;
  double defect = 0.0;
  double f = 0.0;
  double g = 0.0;
};

// Point layout: (x, y, theta, z_1 .. z_m). Raises Precondition when g < 1 somewhere f > 0.
FamilySample family_forms(const FamilyModel& fam, const Vec& point);

struct FamilyReport {
  double margin_min = INFINITY;
  double defect_max = 0.0;
  double reduction_error = 0.0;  // g = 1 slices versus the single model with a = f
  std::size_t points = 0;
};

FamilyReport verify_family(const FamilyModel& fam, int grid);

}  // namespace leafwise::torus
