#include "leafwise/civilization.hpp"

#include "leafwise/error.hpp"
#include "leafwise/parallel.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace leafwise::civ {

Vec Simplex::barycenter() const {
  const int p = dim();
  return p == 0 ? origin : Vec(origin + edges * Vec::Constant(p, 1.0 / (p + 1)));
}

Simplex make_simplex(const tri::SimplicialComplex& complex, std::vector<int> vertices) {
  require(!vertices.empty(), ErrorKind::Precondition, "simplex needs at least one vertex");
  std::sort(vertices.begin(), vertices.end());
  Simplex s;
  s.vertices = std::move(vertices);
  s.origin = complex.vertex(static_cast<std::size_t>(s.vertices[0]));
  const int p = static_cast<int>(s.vertices.size()) - 1;
  s.edges.resize(complex.dim(), p);
  for (int j = 0; j < p; ++j) s.edges.col(j) = complex.vertex(static_cast<std::size_t>(s.vertices[static_cast<std::size_t>(j + 1)])) - s.origin;
  return s;
}

std::vector<Simplex> skeleton_simplices(const tri::SimplicialComplex& complex, const Box& region, int p) {
  const auto cells = complex.cells_meeting(region);
  const tri::FaceIndex faces = complex.face_index(p, cells);
  std::vector<Simplex> out;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto ids = faces.face(f);
    bool inside = true;
    for (int v : ids) inside = inside && region.contains(complex.vertex(static_cast<std::size_t>(v)));
    if (inside) out.push_back(make_simplex(complex, {ids.begin(), ids.end()}));
  }
  return out;
}

TubularFiber tubular_fiber(const Vec& x, const Simplex& sigma, const geom::PlaneField& tau, double delta, double eta) {
  const int n = tau.dim();
  const int p = sigma.dim();
  TubularFiber f;
  f.base = x;
  f.simplex_dim = p;
  f.delta = delta;
  f.eta = eta;
  const Mat a = tau.sample(x).frame();
  const int k = static_cast<int>(a.cols());
  if (p == 0) {
    f.b_basis = a;
    f.e_basis = tau.complement(x);
    return f;
  }
  const auto t = orthonormalize(sigma.edges);
  require(t.independent, ErrorKind::DegenerateInput, "degenerate simplex");
  if (p + k <= n) {
    const Mat perp = tau.complement(x);
    const Mat proj = perp.transpose() * t.basis;
    const double margin = Eigen::JacobiSVD<Mat>(proj).singularValues()(p - 1);
    require(margin > 1e-9, ErrorKind::GeneralPosition, "tau(x) + T(sigma) loses dimension");
    Mat joined(n, k + p);
    joined << a, t.basis;
    f.b_basis = a;
    f.e_basis = orthogonal_complement(orthonormalize(joined).basis);
    return f;
  }
  require(p == n - 1, ErrorKind::Precondition, "tubular fibers are defined up to codimension one");
  // Line fiber: the complement of tau(x) ∩ T(sigma) inside tau(x).
  const Mat off = a - t.basis * (t.basis.transpose() * a);
  Eigen::JacobiSVD<Mat> svd(off, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  require(s(0) > 1e-9, ErrorKind::GeneralPosition, "tau(x) lies inside T(sigma)");
  require(k < 2 || s(1) < 1e-9 * std::max(1.0, s(0)) || k + p - n == 0, ErrorKind::GeneralPosition,
          "tau(x) + T(sigma) loses dimension");
  f.kind = FiberKind::Line;
  f.b_basis = a * svd.matrixV().col(0);
  f.e_basis = Mat(n, 0);
  return f;
}

double RadialRetraction::operator()(double s) const noexcept {
  if (s <= inner) return 0.0;
  if (s >= outer) return s;
  return outer * (s - inner) / (outer - inner);
}

double RadialRetraction::at_time(double s, double t) const noexcept { return (1.0 - t) * s + t * (*this)(s); }

namespace {

double normalized_radius(const Vec& u, const Vec& w, double delta, double eta) {
  double r = u.size() ? u.norm() / delta : 0.0;
  if (w.size()) r = std::max(r, w.norm() / eta);
  return r;
}

bool in_standard_simplex(const Vec& a, double tol) {
  if (a.size() == 0) return true;
  return a.minCoeff() >= -tol && a.sum() <= 1.0 + tol;
}

}  // namespace

Location locate(const Simplex& sigma, const geom::PlaneField& tau, const Vec& y, double delta, double eta) {
  const int n = tau.dim();
  const int p = sigma.dim();
  Location loc;
  if (p == 0) {
    const TubularFiber f = tubular_fiber(sigma.origin, sigma, tau, delta, eta);
    loc.a = Vec(0);
    loc.foot = sigma.origin;
    loc.offset = y - sigma.origin;
    loc.u = f.b_basis.transpose() * loc.offset;
    loc.w = f.e_basis.transpose() * loc.offset;
    loc.rho = normalized_radius(loc.u, loc.w, delta, eta);
    loc.on_simplex = true;
    loc.converged = true;
    return loc;
  }
  const Vec rhs = y - sigma.origin;
  Vec a = sigma.edges.colPivHouseholderQr().solve(rhs);
  constexpr int max_iter = 60;
  double change = INFINITY;
  for (int it = 0; it < max_iter; ++it) {
    const TubularFiber f = tubular_fiber(sigma.point(a), sigma, tau, delta, eta);
    Mat m(n, n);
    m << sigma.edges, f.b_basis, f.e_basis;
    const Vec next = m.partialPivLu().solve(rhs).head(p);
    change = (next - a).cwiseAbs().maxCoeff();
    a = next;
    if (tau.is_constant() || change <= 1e-15 * std::max(1.0, a.cwiseAbs().maxCoeff())) break;
  }
  loc.converged = tau.is_constant() || change <= 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff());
  loc.a = a;
  loc.foot = sigma.point(a);
  loc.offset = y - loc.foot;
  const TubularFiber f = tubular_fiber(loc.foot, sigma, tau, delta, eta);
  loc.u = f.b_basis.transpose() * loc.offset;
  loc.w = f.e_basis.transpose() * loc.offset;
  loc.rho = normalized_radius(loc.u, loc.w, delta, eta);
  loc.on_simplex = in_standard_simplex(a, 1e-12);
  return loc;
}

namespace {

// Spatial hash of outer-tube bounding boxes.
class TubeIndex {
 public:
  TubeIndex(const std::vector<Simplex>& simplices, double reach) : reach_(reach) {
    if (simplices.empty()) return;
    n_ = static_cast<int>(simplices[0].origin.size());
    cell_ = 0.0;
    std::vector<Box> boxes;
    for (const auto& s : simplices) {
      Vec lo = s.origin;
      Vec hi = s.origin;
      for (int j = 0; j < s.dim(); ++j) {
        const Vec v = s.origin + s.edges.col(j);
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
      }
      Box b(lo, hi);
      b = b.grown(reach_);
      shapes_.push_back({s.origin, s.dim() == 1 ? Vec(s.edges.col(0)) : Vec(), s.dim()});
      cell_ = std::max(cell_, b.extent().maxCoeff());
      boxes.push_back(b);
    }
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      std::vector<long> lo(static_cast<std::size_t>(n_));
      std::vector<long> hi(static_cast<std::size_t>(n_));
      for (int d = 0; d < n_; ++d) {
        lo[static_cast<std::size_t>(d)] = static_cast<long>(std::floor(boxes[i].lo[d] / cell_));
        hi[static_cast<std::size_t>(d)] = static_cast<long>(std::floor(boxes[i].hi[d] / cell_));
      }
      std::vector<long> cur = lo;
      while (true) {
        auto& bucket = buckets_[key(cur)];
        if (bucket.empty() || bucket.back() != static_cast<int>(i)) bucket.push_back(static_cast<int>(i));
        int d = 0;
        while (d < n_ && ++cur[static_cast<std::size_t>(d)] > hi[static_cast<std::size_t>(d)]) {
          cur[static_cast<std::size_t>(d)] = lo[static_cast<std::size_t>(d)];
          ++d;
        }
        if (d == n_) break;
      }
    }
    boxes_ = std::move(boxes);
  }

  [[nodiscard]] std::vector<int> candidates(const Vec& y) const {
    if (boxes_.empty()) return {};
    std::vector<long> c(static_cast<std::size_t>(n_));
    for (int d = 0; d < n_; ++d) c[static_cast<std::size_t>(d)] = static_cast<long>(std::floor(y[d] / cell_));
    const auto it = buckets_.find(key(c));
    if (it == buckets_.end()) return {};
    std::vector<int> out;
    for (int i : it->second) {
      const auto k = static_cast<std::size_t>(i);
      if (boxes_[k].contains(y) && within_reach(shapes_[k], y)) out.push_back(i);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  static std::uint64_t key(const std::vector<long>& c) {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (long v : c) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }

  // Points of an outer tube lie within reach of the simplex; exact distance
  // for vertices and edges, bounding box only above.
  struct Shape {
    Vec origin;
    Vec edge;
    int dim;
  };

  [[nodiscard]] bool within_reach(const Shape& sh, const Vec& y) const {
    if (sh.dim == 0) return (y - sh.origin).norm() <= reach_;
    if (sh.dim == 1) {
      const double len2 = sh.edge.squaredNorm();
      const double t = std::clamp((y - sh.origin).dot(sh.edge) / len2, 0.0, 1.0);
      return (y - sh.origin - t * sh.edge).norm() <= reach_;
    }
    return true;
  }

  std::vector<Shape> shapes_;
  int n_ = 0;
  double reach_;
  double cell_ = 1.0;
  std::vector<Box> boxes_;
  std::unordered_map<std::uint64_t, std::vector<int>> buckets_;
};

double snap_scale(const Vec& y) { return 1e-13 * std::max(1.0, y.cwiseAbs().maxCoeff()); }

}  // namespace

struct CivilizationStep::Data {
  std::uint64_t serial;
  geom::PairedDistribution input;
  std::vector<Simplex> simplices;
  double delta;
  double eta;
  RadialRetraction retraction;
  TubeIndex index;

  Data(geom::PairedDistribution in, std::vector<Simplex> s, double d, double e, double kappa)
      : serial(next_serial()),
        input(std::move(in)),
        simplices(std::move(s)),
        delta(d),
        eta(e),
        retraction{1.0, kappa},
        index(simplices, kappa * (d + e) * (1.0 + 1e-9)) {}

  std::pair<int, Location> find(const Vec& y) const {
    for (int i : index.candidates(y)) {
      Location loc = locate(simplices[static_cast<std::size_t>(i)], input.tau, y, delta, eta);
      if (loc.converged && loc.on_simplex && loc.rho <= retraction.outer) return {i, std::move(loc)};
    }
    return {-1, {}};
  }

  static std::uint64_t next_serial() {
    static std::atomic<std::uint64_t> counter{0};
    return ++counter;
  }

  // Frame, complement and form of a composed pair are sampled at the same
  // point in turn; remember the last retraction per step and thread.
  Vec retract_memo(const Vec& y, double t) const {
    struct Slot {
      std::uint64_t serial = 0;
      double t = 0.0;
      Vec y;
      Vec r;
    };
    thread_local std::array<Slot, 16> slots;
    Slot& slot = slots[serial % slots.size()];
    if (slot.serial == serial && slot.t == t && slot.y.size() == y.size() && slot.y == y) return slot.r;
    Vec r = retract(y, t);
    slot.serial = serial;
    slot.t = t;
    slot.y = y;
    slot.r = r;
    return r;
  }

  Vec retract(const Vec& y, double t) const {
    auto [idx, loc] = find(y);
    if (idx < 0) return y;
    if (loc.offset.cwiseAbs().maxCoeff() <= snap_scale(y)) return y;
    const double s = retraction.at_time(loc.rho, t);
    return loc.foot + (s / loc.rho) * loc.offset;
  }
};

CivilizationStep::CivilizationStep(geom::PairedDistribution input, std::vector<Simplex> simplices, double delta,
                                   double eta, const StepOptions& opt) {
  require(delta > 0.0 && eta > 0.0, ErrorKind::Precondition, "tube radii must be positive");
  require(opt.kappa > 1.0, ErrorKind::Precondition, "outer radius factor must exceed 1");
  data_ = std::make_shared<const Data>(std::move(input), std::move(simplices), delta, eta, opt.kappa);
}

const geom::PairedDistribution& CivilizationStep::input() const noexcept { return data_->input; }
const std::vector<Simplex>& CivilizationStep::simplices() const noexcept { return data_->simplices; }
double CivilizationStep::delta() const noexcept { return data_->delta; }
double CivilizationStep::eta() const noexcept { return data_->eta; }
double CivilizationStep::kappa() const noexcept { return data_->retraction.outer; }

Vec CivilizationStep::retract(const Vec& y, double t) const { return data_->retract(y, t); }

int CivilizationStep::owner(const Vec& y) const { return data_->find(y).first; }

Location CivilizationStep::locate_in(std::size_t simplex, const Vec& y) const {
  return locate(data_->simplices.at(simplex), data_->input.tau, y, data_->delta, data_->eta);
}

geom::PairedDistribution CivilizationStep::pair_at(double t) const {
  require(t >= 0.0 && t <= 1.0, ErrorKind::Precondition, "homotopy time must lie in [0, 1]");
  if (t == 0.0) return data_->input;
  const auto& in = data_->input;
  auto d = data_;
  const double slope = data_->retraction.outer / (data_->retraction.outer - 1.0) *
                       std::max(1.0, data_->delta / data_->eta);
  // A constant field is unchanged by any reparametrization of its base points.
  if (in.tau.is_constant() && in.omega.is_constant()) return in;
  geom::PlaneField tau(
      in.tau.dim(), in.tau.rank(),
      [d, t](const geom::Point& y) { return Mat(d->input.tau.sample(d->retract_memo(y, t)).frame()); },
      in.tau.smoothness(), in.tau.lipschitz() * slope,
      [d, t](const geom::Point& y) { return d->input.tau.complement(d->retract_memo(y, t)); }, in.tau.is_constant());
  geom::TwoFormField omega(
      in.omega.dim(), [d, t](const geom::Point& y) { return d->input.omega.at(d->retract_memo(y, t)); },
      in.omega.is_constant());
  return {std::move(tau), std::move(omega)};
}

geom::PairedDistribution civilize_simplex(const geom::PairedDistribution& input, const Simplex& sigma, double delta,
                                          double eta, const RadialRetraction& retraction) {
  require(retraction.inner > 0.0 && retraction.outer > retraction.inner, ErrorKind::Precondition,
          "retraction radii must satisfy 0 < r < rbar");
  return CivilizationStep(input, {sigma}, delta * retraction.inner, eta * retraction.inner,
                          {retraction.outer / retraction.inner})
      .output();
}

std::vector<Vec> fiber_offsets(const TubularFiber& fiber, double rho, int directions) {
  std::vector<Vec> out;
  std::mt19937_64 rng(0x5eedf1b3ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto nb = fiber.b_basis.cols();
  const auto ne = fiber.e_basis.cols();
  for (int i = 0; i < directions; ++i) {
    Vec u(nb);
    Vec w(ne);
    for (Eigen::Index j = 0; j < nb; ++j) u[j] = gauss(rng);
    for (Eigen::Index j = 0; j < ne; ++j) w[j] = gauss(rng);
    if (nb) u.normalize();
    if (ne) w.normalize();
    double su = 1.0;
    double sw = 1.0;
    if (ne && nb) {
      if (i % 3 == 1) su = unit(rng);
      if (i % 3 == 2) sw = unit(rng);
    }
    Vec off = Vec::Zero(fiber.base.size());
    if (nb) off += fiber.b_basis * (rho * fiber.delta * su * u);
    if (ne) off += fiber.e_basis * (rho * fiber.eta * sw * w);
    out.push_back(std::move(off));
  }
  return out;
}

namespace {

// Parameter points on a p-simplex: barycentric grid plus points crowding each vertex.
std::vector<Vec> base_parameters(int p, int depth) {
  std::vector<Vec> out;
  if (p == 0) {
    out.emplace_back(0);
    return out;
  }
  const tri::SamplingPlan plan(p, depth);
  for (Eigen::Index s = 0; s < plan.weights().cols(); ++s) out.emplace_back(plan.weights().col(s).tail(p));
  for (int v = 0; v <= p; ++v) {
    Vec corner = Vec::Zero(p);
    if (v > 0) corner[v - 1] = 1.0;
    const Vec center = Vec::Constant(p, 1.0 / (p + 1));
    for (double t : {1.0 / 256, 1.0 / 64, 1.0 / 16}) out.emplace_back(corner + t * (center - corner));
  }
  return out;
}

struct FaceLookup {
  std::map<std::vector<int>, std::pair<int, std::size_t>> index;  // vertices -> (dim, position)
};

FaceLookup build_lookup(const std::vector<std::vector<Simplex>>& lower) {
  FaceLookup f;
  for (std::size_t q = 0; q < lower.size(); ++q) {
    for (std::size_t i = 0; i < lower[q].size(); ++i) f.index[lower[q][i].vertices] = {static_cast<int>(q), i};
  }
  return f;
}

std::vector<int> shared_vertices(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool is_face_of(const std::vector<int>& small, const std::vector<int>& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

}  // namespace

EmbeddingReport check_embedding(const std::vector<Simplex>& simplices, const geom::PlaneField& tau, double delta,
                                double eta, double kappa, const std::vector<std::vector<Simplex>>& lower,
                                const SkeletonState& state) {
  EmbeddingReport rep;
  if (simplices.empty()) return rep;
  const TubeIndex index(simplices, kappa * (delta + eta) * (1.0 + 1e-9));
  const FaceLookup lookup = build_lookup(lower);
  struct Local {
    double roundtrip = 0.0;
    std::size_t overlaps = 0;
    std::size_t samples = 0;
    std::string problem;
  };
  std::vector<Local> local(simplices.size());
  parallel_for(simplices.size(), [&](std::size_t i) {
    const Simplex& s = simplices[i];
    Local& L = local[i];
    for (const Vec& a : base_parameters(s.dim(), 2)) {
      const Vec x = s.point(a);
      TubularFiber fib;
      try {
        fib = tubular_fiber(x, s, tau, delta, eta);
      } catch (const Error& e) {
        if (L.problem.empty()) L.problem = e.what();
        ++L.overlaps;
        continue;
      }
      for (double rho : {0.5, 1.0, kappa}) {
        for (const Vec& off : fiber_offsets(fib, rho, 8)) {
          const Vec y = x + off;
          ++L.samples;
          const Location loc = locate(s, tau, y, delta, eta);
          const double err = std::max((loc.foot - x).cwiseAbs().maxCoeff() / delta, std::abs(loc.rho - rho));
          L.roundtrip = std::max(L.roundtrip, err);
          if (!(err < 1e-7)) {
            if (L.problem.empty()) L.problem = "fiber coordinates not recovered";
          }
          for (int j : index.candidates(y)) {
            if (static_cast<std::size_t>(j) == i) continue;
            const Simplex& o = simplices[static_cast<std::size_t>(j)];
            const Location lo = locate(o, tau, y, delta, eta);
            if (!(lo.on_simplex && lo.rho <= kappa)) continue;
            const auto common = shared_vertices(s.vertices, o.vertices);
            bool fine = false;
            if (!common.empty()) {
              const auto it = lookup.index.find(common);
              if (it != lookup.index.end()) {
                const auto [q, pos] = it->second;
                const Simplex& face = lower[static_cast<std::size_t>(q)][pos];
                const double dq = state.deltas.at(static_cast<std::size_t>(q));
                const double eq = state.etas.at(static_cast<std::size_t>(q));
                auto inner = [&](const Vec& z) {
                  const Location fl = locate(face, tau, z, dq, eq);
                  return fl.on_simplex && fl.rho <= 1.0;
                };
                fine = inner(y) && inner(loc.foot) && inner(lo.foot);
              }
            }
            if (!fine) {
              ++L.overlaps;
              if (L.problem.empty()) L.problem = "outer tubes overlap outside the shared face tube";
            }
          }
        }
      }
    }
  });
  for (const auto& L : local) {
    rep.roundtrip_error = std::max(rep.roundtrip_error, L.roundtrip);
    rep.overlap_violations += L.overlaps;
    rep.samples += L.samples;
    if (rep.first_problem.empty() && !L.problem.empty()) rep.first_problem = L.problem;
  }
  rep.ok = rep.overlap_violations == 0 && rep.roundtrip_error < 1e-7;
  return rep;
}

namespace {

std::vector<std::vector<Simplex>> lower_skeleta(const tri::SimplicialComplex& complex, const Box& region, int upto) {
  std::vector<std::vector<Simplex>> out;
  for (int q = 0; q <= upto; ++q) out.push_back(skeleton_simplices(complex, region, q));
  return out;
}

// Largest exit ratio of (n-2)-faces through the fibers of `s` at its base points.
double worst_exit_ratio(const tri::SimplicialComplex& complex, const Simplex& s, const geom::PlaneField& tau,
                        double delta, double eta, int depth);

StepResult assemble_step(const SkeletonState& state, std::vector<Simplex> simplices, double delta, double eta,
                         int halvings, EmbeddingReport emb) {
  CivilizationStep step(state.pair, std::move(simplices), delta, eta, {state.kappa});
  SkeletonState next = state;
  next.j = state.j + 1;
  next.deltas.push_back(delta);
  next.etas.push_back(eta);
  next.pair = step.output();
  return {std::move(step), std::move(next), {delta, eta, halvings}, std::move(emb)};
}

}  // namespace

StepResult civilize_skeleton_with(const SkeletonState& state, const tri::SimplicialComplex& complex, const Box& region,
                                  double delta, double eta) {
  const int p = state.j + 1;
  require(p <= complex.dim() - 1, ErrorKind::Precondition, "skeleton index exceeds n - 1");
  auto simplices = skeleton_simplices(complex, region, p);
  auto lower = lower_skeleta(complex, region, p - 1);
  EmbeddingReport emb = check_embedding(simplices, state.pair.tau, delta, eta, state.kappa, lower, state);
  return assemble_step(state, std::move(simplices), delta, eta, 0, std::move(emb));
}

StepResult civilize_skeleton(const SkeletonState& state, const tri::SimplicialComplex& complex, const Box& region) {
  const int p = state.j + 1;
  require(p <= complex.dim() - 1, ErrorKind::Precondition, "skeleton index exceeds n - 1");
  auto simplices = skeleton_simplices(complex, region, p);
  auto lower = lower_skeleta(complex, region, p - 1);
  double delta;
  double eta;
  if (p == 0) {
    delta = state.spacing / 8.0;
    eta = delta / 8.0;
  } else {
    delta = state.deltas.back() / 4.0;
    eta = std::min(state.etas.back() / 4.0, delta / 8.0);
  }
  // Keep (n-2)-faces leaving each fiber through int(B) x dE.
  if (p <= complex.dim() - 3) {
    double worst = 0.0;
    for (const auto& s : simplices) worst = std::max(worst, worst_exit_ratio(complex, s, state.pair.tau, delta, eta, 1));
    if (worst > 0.0 && std::isfinite(worst)) eta = std::min(eta, 0.5 * delta / worst);
  }
  for (int halvings = 0; halvings <= 8; ++halvings) {
    EmbeddingReport emb = check_embedding(simplices, state.pair.tau, delta, eta, state.kappa, lower, state);
    if (emb.ok) return assemble_step(state, std::move(simplices), delta, eta, halvings, std::move(emb));
    delta /= 2.0;
    eta /= 2.0;
  }
  fail(ErrorKind::RadiiTooLarge, "no admissible tube radii for skeleton " + std::to_string(p));
}

double exit_ratio(const Mat& w, const TubularFiber& fiber) {
  if (w.cols() == 0) return 0.0;
  const Mat pb = fiber.b_basis.transpose() * w;
  const Mat pe = fiber.e_basis.transpose() * w;
  const Mat gb = pb.transpose() * pb;
  const Mat ge = pe.transpose() * pe;
  Eigen::SelfAdjointEigenSolver<Mat> ee(ge, Eigen::EigenvaluesOnly);
  if (ge.size() == 0 || ee.eigenvalues().minCoeff() <= 1e-24) return INFINITY;
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> g(gb, ge, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, g.eigenvalues().maxCoeff()));
}

namespace {

// (n-2)-simplices of the complex containing s.
std::vector<Simplex> codim2_cofaces(const tri::SimplicialComplex& complex, const Simplex& s) {
  const int n = complex.dim();
  std::set<std::vector<int>> seen;
  std::vector<Simplex> out;
  for (int c : complex.star(static_cast<std::size_t>(s.vertices[0]))) {
    const auto ids = complex.cell(static_cast<std::size_t>(c));
    std::vector<int> cell(ids.begin(), ids.end());
    std::sort(cell.begin(), cell.end());
    if (!is_face_of(s.vertices, cell)) continue;
    // Drop two vertices not in s.
    std::vector<int> extra;
    for (int v : cell) {
      if (!std::binary_search(s.vertices.begin(), s.vertices.end(), v)) extra.push_back(v);
    }
    for (std::size_t a = 0; a < extra.size(); ++a) {
      for (std::size_t b = a + 1; b < extra.size(); ++b) {
        std::vector<int> face;
        for (int v : cell) {
          if (v != extra[a] && v != extra[b]) face.push_back(v);
        }
        if (static_cast<int>(face.size()) == n - 1 && seen.insert(face).second) out.push_back(make_simplex(complex, face));
      }
    }
  }
  return out;
}

Mat intersect_subspaces(const Mat& qu, const Mat& qv) {
  const Mat resid = qu - qv * (qv.transpose() * qu);
  Eigen::JacobiSVD<Mat> svd(resid, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < qu.cols(); ++i) {
    const double sv = i < s.size() ? s(i) : 0.0;
    if (sv < 1e-9) keep.push_back(i);
  }
  Mat w(qu.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) w.col(static_cast<Eigen::Index>(c)) = qu * svd.matrixV().col(keep[c]);
  return w;
}

double worst_exit_ratio(const tri::SimplicialComplex& complex, const Simplex& s, const geom::PlaneField& tau,
                        double delta, double eta, int depth) {
  double worst = 0.0;
  const auto faces = codim2_cofaces(complex, s);
  for (const Vec& a : base_parameters(s.dim(), depth)) {
    const Vec x = s.point(a);
    const TubularFiber fib = tubular_fiber(x, s, tau, delta, eta);
    Mat fiber_space(fib.base.size(), fib.dim());
    fiber_space << fib.b_basis, fib.e_basis;
    for (const auto& face : faces) {
      const Mat ts = orthonormalize(face.edges).basis;
      worst = std::max(worst, exit_ratio(intersect_subspaces(ts, fiber_space), fib));
    }
  }
  return worst;
}

double pair_deviation(const geom::PairedDistribution& pair, const Vec& x, const Vec& y) {
  const double frame = grassmann_distance(pair.tau.sample(x).frame(), pair.tau.sample(y).frame());
  const double form = max_abs(pair.omega.at(x) - pair.omega.at(y));
  return std::max(frame, form);
}

}  // namespace

CivilizedReport check_civilized(const SkeletonState& state, const tri::SimplicialComplex& complex, const Box& region,
                                const CheckOptions& opt) {
  CivilizedReport rep;
  const int n = complex.dim();
  if (state.j < 0) return rep;
  require(static_cast<int>(state.deltas.size()) == state.j + 1 && static_cast<int>(state.etas.size()) == state.j + 1,
          ErrorKind::Precondition, "state constants do not match its skeleton index");
  for (std::size_t i = 0; i < state.deltas.size(); ++i) {
    if (!(state.deltas[i] > 0.0 && state.etas[i] > 0.0)) rep.monotone = false;
    if (i > 0 && !(state.deltas[i] < state.deltas[i - 1] && state.etas[i] < state.etas[i - 1])) rep.monotone = false;
  }
  if (!rep.monotone) rep.problems.emplace_back("constants are not strictly decreasing");

  const auto skeleta = lower_skeleta(complex, region, state.j);
  const FaceLookup lookup = build_lookup(skeleta);
  const auto& tau = state.pair.tau;

  // Flatten all simplices with their dimension for parallel processing.
  std::vector<std::pair<int, std::size_t>> all;
  for (std::size_t q = 0; q < skeleta.size(); ++q)
    for (std::size_t i = 0; i < skeleta[q].size(); ++i) all.emplace_back(static_cast<int>(q), i);

  std::vector<std::vector<TubeIndex>> indices;
  for (std::size_t q = 0; q < skeleta.size(); ++q) {
    std::vector<TubeIndex> one;
    one.emplace_back(skeleta[q], (state.deltas[q] + state.etas[q]) * (1.0 + 1e-9));
    indices.push_back(std::move(one));
  }

  struct Local {
    double exit = 0.0;
    double deviation = 0.0;
    std::size_t e_bad = 0;
    std::size_t fibers = 0;
    bool c_fail = false;
    std::string problem;
  };
  std::vector<Local> local(all.size());
  parallel_for(all.size(), [&](std::size_t idx) {
    const auto [q, i] = all[idx];
    const Simplex& s = skeleta[static_cast<std::size_t>(q)][i];
    const double d = state.deltas[static_cast<std::size_t>(q)];
    const double e = state.etas[static_cast<std::size_t>(q)];
    Local& L = local[idx];
    const bool line = q == n - 1;
    std::vector<Simplex> faces;
    if (!line && q <= n - 3) faces = codim2_cofaces(complex, s);
    for (const Vec& a : base_parameters(s.dim(), opt.base_depth)) {
      const Vec x = s.point(a);
      TubularFiber fib;
      try {
        fib = tubular_fiber(x, s, tau, d, e);
      } catch (const Error& err) {
        L.c_fail = true;
        if (L.problem.empty()) L.problem = std::string("(C) ") + err.what();
        continue;
      }
      ++L.fibers;
      if (!faces.empty()) {
        Mat fiber_space(n, fib.dim());
        fiber_space << fib.b_basis, fib.e_basis;
        for (const auto& face : faces) {
          const double r = exit_ratio(intersect_subspaces(orthonormalize(face.edges).basis, fiber_space), fib) * e / d;
          L.exit = std::max(L.exit, r);
        }
      }
      for (double rho : {0.5, 1.0}) {
        for (const Vec& off : fiber_offsets(fib, rho, opt.directions)) {
          const Vec y = x + off;
          L.deviation = std::max(L.deviation, pair_deviation(state.pair, x, y));
          // (E): inner tubes of simplices that are not faces of one another
          // meet only inside the tube of their common face.
          for (std::size_t q2 = 0; q2 < skeleta.size(); ++q2) {
            const double d2 = state.deltas[q2];
            const double e2 = state.etas[q2];
            for (int j : indices[q2][0].candidates(y)) {
              const Simplex& o = skeleta[q2][static_cast<std::size_t>(j)];
              if (is_face_of(o.vertices, s.vertices) || is_face_of(s.vertices, o.vertices)) continue;
              const Location lo = locate(o, tau, y, d2, e2);
              if (!(lo.on_simplex && lo.rho <= 1.0)) continue;
              const auto common = shared_vertices(s.vertices, o.vertices);
              bool fine = false;
              if (!common.empty()) {
                const auto it = lookup.index.find(common);
                if (it != lookup.index.end()) {
                  const auto [fq, pos] = it->second;
                  const Location fl = locate(skeleta[static_cast<std::size_t>(fq)][pos], tau, y,
                                             state.deltas[static_cast<std::size_t>(fq)],
                                             state.etas[static_cast<std::size_t>(fq)]);
                  fine = fl.on_simplex && fl.rho <= 1.0;
                }
              }
              if (!fine) {
                ++L.e_bad;
                if (L.problem.empty()) L.problem = "(E) tubes meet outside the common face tube";
              }
            }
          }
        }
      }
    }
  });
  for (const auto& L : local) {
    rep.max_exit_ratio = std::max(rep.max_exit_ratio, L.exit);
    rep.max_deviation = std::max(rep.max_deviation, L.deviation);
    rep.e_violations += L.e_bad;
    rep.fibers_sampled += L.fibers;
    rep.c_ok = rep.c_ok && !L.c_fail;
    if (!L.problem.empty() && rep.problems.size() < 16) rep.problems.push_back(L.problem);
  }
  if (!(rep.max_exit_ratio < 1.0)) {
    rep.c_ok = false;
    rep.problems.emplace_back("(C) an (n-2)-face leaves a fiber through dB");
  }
  rep.d_ok = rep.max_deviation < opt.deviation_tol;
  if (!rep.d_ok) rep.problems.emplace_back("(D) pair not constant on sampled fibers");
  rep.e_ok = rep.e_violations == 0;
  return rep;
}

}  // namespace leafwise::civ
