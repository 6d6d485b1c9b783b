#pragma once

#include "leafwise/linalg.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace leafwise::diffeo {

using Map = std::function<Vec(const Vec&)>;

// A compactly supported diffeomorphism of R^k given by evaluators for itself
// and its inverse. Both are the identity outside `support`.
class CDiffeo {
 public:
  CDiffeo(int k, Map forward, Map inverse, Box support, std::string label = {});
  static CDiffeo identity(int k);

  [[nodiscard]] int dim() const noexcept { return k_; }
  [[nodiscard]] Vec operator()(const Vec& x) const { return forward_(x); }
  [[nodiscard]] Vec apply_inverse(const Vec& x) const { return inverse_(x); }
  [[nodiscard]] const Box& support() const noexcept { return support_; }
  [[nodiscard]] const std::string& label() const noexcept { return label_; }
  [[nodiscard]] bool is_identity() const noexcept { return identity_; }

  // Central-difference Jacobian of the forward map.
  [[nodiscard]] Mat jacobian(const Vec& x, double step = 1e-5) const;

  [[nodiscard]] CDiffeo inverse() const;

 private:
  int k_;
  Map forward_;
  Map inverse_;
  Box support_;
  std::string label_;
  bool identity_ = false;
};

// a o b: apply b first.
CDiffeo compose(const CDiffeo& a, const CDiffeo& b);
// Left-to-right product f_1 o f_2 o ... o f_m.
CDiffeo product(const std::vector<CDiffeo>& factors);
// g a g^-1
CDiffeo conjugate(const CDiffeo& g, const CDiffeo& a);
// a b a^-1 b^-1
CDiffeo commutator(const CDiffeo& a, const CDiffeo& b);

// Radial bump profile: 1 on [0, plateau], 0 on [1, inf).
double bump(double s, double plateau = 0.0);
double bump_derivative(double s, double plateau = 0.0);

struct FlowOptions {
  double tolerance = 1e-10;
  double max_time = 100.0;
  double plateau = 0.0;
};

// Time-`time` flow of X(x) = bump(|x - center| / radius) * direction.
CDiffeo make_bump_flow(const Vec& center, double radius, const Vec& direction, double time,
                       const FlowOptions& opt = {});

// x + amplitude * bump(|x - center| / radius) * direction; needs
// amplitude * |direction| * max|bump'| / radius < 1.
CDiffeo make_displacement(const Vec& center, double radius, const Vec& direction, double amplitude,
                          double plateau = 0.0);

struct VEpsOptions {
  int per_axis = 24;
  double margin = 0.05;       // grid covers the support box grown by this fraction
  double step = 1e-4;         // finite-difference step (Richardson with step / 2)
  int refine_seeds = 4;
  int refine_iterations = 40;
  double safety = 0.05;
};

struct VEpsEstimate {
  double norm = 0.0;
  Vec argmax;
  std::size_t evaluations = 0;
};

// Estimate of sup_x |d(d - id)_x| (operator norm).
VEpsEstimate v_eps_estimate(const CDiffeo& d, const VEpsOptions& opt = {});
double v_eps_norm(const CDiffeo& d, const VEpsOptions& opt = {});
bool in_v_eps(double norm, double epsilon, double safety = 0.05);

// Deterministic probe points: uniform in `box` from a seeded generator.
std::vector<Vec> probe_points(const Box& box, std::size_t count, std::uint64_t seed);

double max_discrepancy(const CDiffeo& lhs, const CDiffeo& rhs, const std::vector<Vec>& probes);

struct Conjugate {
  CDiffeo conjugator;
  int power = 1;  // +1 for h, -1 for h^-1
};

struct TsuboiReport {
  bool supports_in_box = true;
  bool displaced = true;  // U and h(U) disjoint on the probe net
  bool preconditions_met() const { return supports_in_box && displaced; }
  double discrepancy = 0.0;
  std::size_t probes = 0;
  std::vector<std::string> factors;
};

// The four conjugates of h^{+-1} whose product equals [a, b].
std::vector<Conjugate> tsuboi_factors(const CDiffeo& a, const CDiffeo& b, const CDiffeo& h);
CDiffeo conjugate_product(const std::vector<Conjugate>& factors, const CDiffeo& h);

// Checks U and h(U) disjoint on the corners and a net of U.
bool displaces(const CDiffeo& h, const Box& u, int net_per_axis = 6);

TsuboiReport tsuboi_verify(const CDiffeo& a, const CDiffeo& b, const CDiffeo& h, const Box& u,
                           std::size_t probes = 10000, std::uint64_t seed = 1);

// Product of commutators [a_1, b_1] ... [a_r, b_r] against the product of 4r conjugates.
TsuboiReport tsuboi_product_verify(const std::vector<std::pair<CDiffeo, CDiffeo>>& pairs, const CDiffeo& h,
                                   const Box& u, std::size_t probes = 10000, std::uint64_t seed = 1);

// Random commutator data in U = [-1/2, 1/2]^k: a and b are bump flows on balls
// inside U, h translates U by 3 along e1.
struct TsuboiScenario {
  CDiffeo a;
  CDiffeo b;
  CDiffeo h;
  Box u;
};

TsuboiScenario random_tsuboi_scenario(int k, std::uint64_t seed);

struct BumpField {
  Vec center;
  double radius = 1.0;
  Vec direction;  // zero direction is the zero field
};

CDiffeo exp_field(const BumpField& x, const FlowOptions& opt = {});

struct FragmentationReport {
  double discrepancy = 0.0;
  std::size_t probes = 0;
};

FragmentationReport fragmentation_verify(const CDiffeo& g, const std::vector<CDiffeo>& sigmas,
                                         const std::vector<BumpField>& fields, std::size_t probes = 2000,
                                         std::uint64_t seed = 1, const FlowOptions& flow = {});

struct Compose72Options {
  int k = 2;
  int factors = 72;
  Box centers = Box::cube(2, -0.5, 0.5);
  double radius_min = 0.8;
  double radius_max = 1.2;
  VEpsOptions norm;
};

struct Compose72Trial {
  double worst_factor_norm = 0.0;
  double composite_norm = 0.0;
  bool in_v1 = false;
};

struct Compose72Report {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::vector<Compose72Trial> trials;
  double worst_norm = 0.0;
  std::size_t passed = 0;
  [[nodiscard]] double pass_rate() const;
  [[nodiscard]] bool all_in_v1() const { return passed == trials.size(); }
};

// Random V_eps element: a bump flow whose time satisfies exp(L t) - 1 <= 0.9 eps.
CDiffeo random_v_eps_element(double epsilon, const Compose72Options& opt, std::uint64_t seed);

Compose72Report compose_72_check(double epsilon, std::uint64_t seed, int trials, const Compose72Options& opt = {});

}  // namespace leafwise::diffeo
