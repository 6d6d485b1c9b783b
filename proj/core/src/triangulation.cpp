#include "leafwise/triangulation.hpp"

#include "leafwise/error.hpp"
#include "leafwise/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <numeric>
#include <random>

namespace leafwise::tri {

struct SimplicialComplex::Topology {
  std::vector<int> cells;
  std::once_flag star_once;
  std::vector<std::size_t> star_offset;
  std::vector<int> star_cells;
};

std::span<const int> FaceIndex::face(std::size_t f) const {
  const auto w = static_cast<std::size_t>(face_dim + 1);
  return {faces.data() + f * w, w};
}

std::span<const int> FaceIndex::cofaces_of(std::size_t f) const {
  return {cofaces.data() + offset[f], offset[f + 1] - offset[f]};
}

SimplicialComplex::SimplicialComplex(int n, std::vector<double> coords, std::vector<int> cells,
                                     std::optional<LatticeSpec> lattice)
    : n_(n), coords_(std::move(coords)), topo_(std::make_shared<Topology>()), lattice_(std::move(lattice)) {
  require(n >= 1, ErrorKind::Precondition, "complex dimension must be positive");
  require(coords_.size() % static_cast<std::size_t>(n) == 0, ErrorKind::Precondition, "coordinate count not a multiple of n");
  require(cells.size() % static_cast<std::size_t>(n + 1) == 0, ErrorKind::Precondition, "cell list not a multiple of n+1");
  const auto nv = static_cast<int>(vertex_count());
  for (int v : cells) require(v >= 0 && v < nv, ErrorKind::Precondition, "cell references a missing vertex");
  topo_->cells = std::move(cells);
}

std::size_t SimplicialComplex::cell_count() const noexcept {
  return topo_->cells.size() / static_cast<std::size_t>(n_ + 1);
}

Vec SimplicialComplex::vertex(std::size_t v) const {
  return Eigen::Map<const Vec>(coords_.data() + v * static_cast<std::size_t>(n_), n_);
}

std::span<const int> SimplicialComplex::cell(std::size_t c) const {
  const auto w = static_cast<std::size_t>(n_ + 1);
  return {topo_->cells.data() + c * w, w};
}

std::span<const int> SimplicialComplex::cells() const noexcept { return topo_->cells; }

Mat SimplicialComplex::cell_vertices(std::size_t c) const {
  Mat m(n_, n_ + 1);
  const auto ids = cell(c);
  for (int j = 0; j <= n_; ++j) m.col(j) = vertex(static_cast<std::size_t>(ids[static_cast<std::size_t>(j)]));
  return m;
}

namespace {
double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double simplex_volume(const Mat& v) {
  const auto n = v.rows();
  Mat e(n, n);
  for (Eigen::Index j = 0; j < n; ++j) e.col(j) = v.col(j + 1) - v.col(0);
  return e.determinant() / factorial(static_cast<int>(n));
}
}  // namespace

double SimplicialComplex::oriented_volume(std::size_t c) const { return simplex_volume(cell_vertices(c)); }

Box SimplicialComplex::cell_box(std::size_t c) const {
  Vec lo = Vec::Constant(n_, INFINITY);
  Vec hi = Vec::Constant(n_, -INFINITY);
  for (int id : cell(c)) {
    const double* p = coords_.data() + static_cast<std::size_t>(id) * static_cast<std::size_t>(n_);
    for (int i = 0; i < n_; ++i) {
      lo[i] = std::min(lo[i], p[i]);
      hi[i] = std::max(hi[i], p[i]);
    }
  }
  return {std::move(lo), std::move(hi)};
}

std::span<const int> SimplicialComplex::star(std::size_t v) const {
  Topology& t = *topo_;
  std::call_once(t.star_once, [&] {
    const std::size_t nv = vertex_count();
    std::vector<std::size_t> count(nv + 1, 0);
    for (int id : t.cells) ++count[static_cast<std::size_t>(id) + 1];
    std::partial_sum(count.begin(), count.end(), count.begin());
    t.star_offset = count;
    t.star_cells.assign(t.cells.size(), 0);
    std::vector<std::size_t> cursor(count.begin(), count.end() - 1);
    const auto w = static_cast<std::size_t>(n_ + 1);
    for (std::size_t i = 0; i < t.cells.size(); ++i) {
      const auto vid = static_cast<std::size_t>(t.cells[i]);
      t.star_cells[cursor[vid]++] = static_cast<int>(i / w);
    }
  });
  return {t.star_cells.data() + t.star_offset[v], t.star_offset[v + 1] - t.star_offset[v]};
}

FaceIndex SimplicialComplex::face_index(int d) const {
  std::vector<std::size_t> all(cell_count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return face_index(d, all);
}

FaceIndex SimplicialComplex::face_index(int d, std::span<const std::size_t> cell_ids) const {
  require(d >= 0 && d <= n_, ErrorKind::Precondition, "face dimension out of range");
  const int w = d + 1;
  // Enumerate (d+1)-subsets of {0..n} once.
  std::vector<std::vector<int>> subsets;
  std::vector<int> pick(static_cast<std::size_t>(w));
  std::iota(pick.begin(), pick.end(), 0);
  while (true) {
    subsets.push_back(pick);
    int i = w - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == n_ + 1 - w + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < w; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  const std::size_t entries = cell_ids.size() * subsets.size();
  std::vector<int> keys(entries * static_cast<std::size_t>(w));
  std::vector<int> owner(entries);
  std::size_t e = 0;
  for (std::size_t c : cell_ids) {
    const auto ids = cell(c);
    for (const auto& s : subsets) {
      int* k = keys.data() + e * static_cast<std::size_t>(w);
      for (int j = 0; j < w; ++j) k[j] = ids[static_cast<std::size_t>(s[static_cast<std::size_t>(j)])];
      std::sort(k, k + w);
      owner[e] = static_cast<int>(c);
      ++e;
    }
  }
  std::vector<std::size_t> order(entries);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key = [&](std::size_t i) { return keys.data() + i * static_cast<std::size_t>(w); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const int* ka = key(a);
    const int* kb = key(b);
    for (int j = 0; j < w; ++j) {
      if (ka[j] != kb[j]) return ka[j] < kb[j];
    }
    return owner[a] < owner[b];
  });
  FaceIndex fi;
  fi.face_dim = d;
  fi.offset.push_back(0);
  for (std::size_t i = 0; i < entries; ++i) {
    const std::size_t cur = order[i];
    const bool fresh = i == 0 || !std::equal(key(cur), key(cur) + w, key(order[i - 1]));
    if (fresh) {
      if (i != 0) fi.offset.push_back(fi.cofaces.size());
      fi.faces.insert(fi.faces.end(), key(cur), key(cur) + w);
    }
    fi.cofaces.push_back(owner[cur]);
  }
  if (entries != 0) fi.offset.push_back(fi.cofaces.size());
  return fi;
}

std::vector<std::size_t> SimplicialComplex::cells_meeting(const Box& region) const {
  std::vector<std::size_t> out;
  const auto w = static_cast<std::size_t>(n_ + 1);
  const auto& cells = topo_->cells;
  for (std::size_t c = 0; c < cell_count(); ++c) {
    bool meets = true;
    for (int i = 0; i < n_ && meets; ++i) {
      double lo = INFINITY;
      double hi = -INFINITY;
      for (std::size_t j = 0; j < w; ++j) {
        const double x = coords_[static_cast<std::size_t>(cells[c * w + j]) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i)];
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      meets = !(hi < region.lo[i] || lo > region.hi[i]);
    }
    if (meets) out.push_back(c);
  }
  return out;
}

bool SimplicialComplex::shares_cells_with(const SimplicialComplex& other) const noexcept {
  return topo_ == other.topo_;
}

bool SimplicialComplex::same_combinatorics(const SimplicialComplex& other) const {
  return n_ == other.n_ && vertex_count() == other.vertex_count() &&
         (topo_ == other.topo_ || topo_->cells == other.topo_->cells);
}

SimplicialComplex SimplicialComplex::with_coords(std::vector<double> coords) const {
  require(coords.size() == coords_.size(), ErrorKind::Precondition, "coordinate count changed");
  SimplicialComplex copy = *this;
  copy.coords_ = std::move(coords);
  return copy;
}

SimplicialComplex kuhn_triangulation(const LatticeSpec& spec) {
  const int n = spec.n;
  const int l = spec.l;
  require(n >= 1 && l >= 1, ErrorKind::Precondition, "lattice needs n >= 1 and l >= 1");
  require(spec.box.dim() == n, ErrorKind::Precondition, "box dimension differs from n");
  std::vector<long> lo(static_cast<std::size_t>(n));
  std::vector<int> extent(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double a = spec.box.lo[i] * l;
    const double b = spec.box.hi[i] * l;
    require(std::abs(a - std::round(a)) < 1e-9 && std::abs(b - std::round(b)) < 1e-9, ErrorKind::Precondition,
            "box corners are not on the (1/l)Z^n lattice");
    lo[static_cast<std::size_t>(i)] = std::lround(a);
    extent[static_cast<std::size_t>(i)] = static_cast<int>(std::lround(b) - std::lround(a));
    require(extent[static_cast<std::size_t>(i)] >= 1, ErrorKind::Precondition, "box has no lattice cube along an axis");
  }
  std::vector<std::size_t> stride(static_cast<std::size_t>(n));
  std::size_t nv = 1;
  for (int i = 0; i < n; ++i) {
    stride[static_cast<std::size_t>(i)] = nv;
    nv *= static_cast<std::size_t>(extent[static_cast<std::size_t>(i)] + 1);
  }
  std::vector<double> coords(nv * static_cast<std::size_t>(n));
  {
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    for (std::size_t v = 0; v < nv; ++v) {
      for (int i = 0; i < n; ++i) {
        coords[v * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] =
            static_cast<double>(lo[static_cast<std::size_t>(i)] + idx[static_cast<std::size_t>(i)]) / l;
      }
      int d = 0;
      while (d < n && ++idx[static_cast<std::size_t>(d)] > extent[static_cast<std::size_t>(d)]) idx[static_cast<std::size_t>(d++)] = 0;
    }
  }
  // Permutations of the axes with their parity.
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::pair<std::vector<int>, bool>> perms;
  do {
    int inversions = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) inversions += perm[static_cast<std::size_t>(i)] > perm[static_cast<std::size_t>(j)];
    perms.emplace_back(perm, inversions % 2 == 1);
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::size_t cubes = 1;
  for (int e : extent) cubes *= static_cast<std::size_t>(e);
  std::vector<int> cells;
  cells.reserve(cubes * perms.size() * static_cast<std::size_t>(n + 1));
  std::vector<int> cidx(static_cast<std::size_t>(n), 0);
  for (std::size_t c = 0; c < cubes; ++c) {
    std::size_t base = 0;
    for (int i = 0; i < n; ++i) base += static_cast<std::size_t>(cidx[static_cast<std::size_t>(i)]) * stride[static_cast<std::size_t>(i)];
    for (const auto& [p, odd] : perms) {
      const std::size_t first = cells.size();
      std::size_t v = base;
      cells.push_back(static_cast<int>(v));
      for (int j = 0; j < n; ++j) {
        v += stride[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])];
        cells.push_back(static_cast<int>(v));
      }
      if (odd) std::swap(cells[first], cells[first + 1]);
    }
    int d = 0;
    while (d < n && ++cidx[static_cast<std::size_t>(d)] == extent[static_cast<std::size_t>(d)]) cidx[static_cast<std::size_t>(d++)] = 0;
  }
  return {n, std::move(coords), std::move(cells), spec};
}

double Jiggling::max_norm() const {
  double m = 0.0;
  if (n == 0) return 0.0;
  for (std::size_t v = 0; v * static_cast<std::size_t>(n) < displacement.size(); ++v) {
    m = std::max(m, Eigen::Map<const Vec>(displacement.data() + v * static_cast<std::size_t>(n), n).norm());
  }
  return m;
}

namespace {

void draw_displacement(std::mt19937_64& rng, int n, double eps, double* out) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (true) {
    Vec d(n);
    double len2 = 0.0;
    do {
      for (int i = 0; i < n; ++i) d[i] = gauss(rng);
      len2 = d.squaredNorm();
    } while (len2 == 0.0);
    const double r = eps * std::pow(unit(rng), 1.0 / n);
    d *= r / std::sqrt(len2);
    if (d.norm() < eps) {
      for (int i = 0; i < n; ++i) out[i] = d[i];
      return;
    }
  }
}

}  // namespace

JiggleResult jiggle(const SimplicialComplex& complex, double epsilon, std::uint64_t seed, const JiggleOptions& opt) {
  const int n = complex.dim();
  require(epsilon >= 0.0, ErrorKind::Precondition, "epsilon must be non-negative");
  if (complex.lattice()) {
    require(epsilon < opt.guard / complex.lattice()->l, ErrorKind::Precondition,
            "epsilon exceeds the collapse guard for this lattice");
  }
  const std::size_t nv = complex.vertex_count();
  Jiggling jig;
  jig.epsilon = epsilon;
  jig.n = n;
  jig.displacement.assign(nv * static_cast<std::size_t>(n), 0.0);
  if (epsilon == 0.0) return {jig, complex.with_coords({complex.coords().begin(), complex.coords().end()})};

  std::mt19937_64 rng(seed);
  for (std::size_t v = 0; v < nv; ++v) draw_displacement(rng, n, epsilon, jig.displacement.data() + v * static_cast<std::size_t>(n));

  std::vector<double> coords(complex.coords().begin(), complex.coords().end());
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] += jig.displacement[i];
  SimplicialComplex out = complex.with_coords(coords);

  const std::size_t nc = complex.cell_count();
  std::vector<char> sign(nc);
  parallel_for(nc, [&](std::size_t c) { sign[c] = complex.oriented_volume(c) > 0.0 ? 1 : 0; });
  auto good = [&](const SimplicialComplex& cx, std::size_t c) {
    const double vol = cx.oriented_volume(c);
    return sign[c] ? vol > 0.0 : vol < 0.0;
  };
  std::vector<char> bad(nc, 0);
  parallel_for(nc, [&](std::size_t c) { bad[c] = good(out, c) ? 0 : 1; });
  std::vector<int> suspects;
  for (std::size_t c = 0; c < nc; ++c) {
    if (!bad[c]) continue;
    for (int v : out.cell(c)) suspects.push_back(v);
  }
  std::sort(suspects.begin(), suspects.end());
  suspects.erase(std::unique(suspects.begin(), suspects.end()), suspects.end());

  for (int v : suspects) {
    const auto vs = static_cast<std::size_t>(v);
    auto star_ok = [&] {
      for (int c : out.star(vs)) {
        if (!good(out, static_cast<std::size_t>(c))) return false;
      }
      return true;
    };
    int tries = 0;
    while (!star_ok()) {
      if (++tries > opt.max_retries) {
        fail(ErrorKind::JiggleFailure, "vertex " + std::to_string(v) + " could not be placed without collapsing a simplex");
      }
      double* d = jig.displacement.data() + vs * static_cast<std::size_t>(n);
      draw_displacement(rng, n, epsilon, d);
      for (int i = 0; i < n; ++i) coords[vs * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] =
          complex.coords()[vs * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] + d[i];
      out = complex.with_coords(coords);
      ++jig.resampled;
    }
  }
  for (std::size_t c = 0; c < nc; ++c) {
    if (!good(out, c)) fail(ErrorKind::JiggleFailure, "simplex " + std::to_string(c) + " collapsed after resampling");
  }
  return {std::move(jig), std::move(out)};
}

SamplingPlan::SamplingPlan(int n, int depth) : depth_(depth) {
  require(n >= 1 && depth >= 1, ErrorKind::Precondition, "sampling plan needs n >= 1 and depth >= 1");
  std::vector<Vec> pts;
  auto add = [&](const Vec& w) {
    for (const auto& p : pts) {
      if ((p - w).cwiseAbs().maxCoeff() < 1e-14) return;
    }
    pts.push_back(w);
  };
  for (int d = 1; d <= depth; ++d) {
    std::vector<int> c(static_cast<std::size_t>(n + 1), 0);
    // Enumerate compositions of d into n+1 non-negative parts.
    std::function<void(int, int)> rec = [&](int pos, int left) {
      if (pos == n) {
        c[static_cast<std::size_t>(n)] = left;
        Vec w(n + 1);
        for (int i = 0; i <= n; ++i) w[i] = static_cast<double>(c[static_cast<std::size_t>(i)]) / d;
        add(w);
        return;
      }
      for (int v = left; v >= 0; --v) {
        c[static_cast<std::size_t>(pos)] = v;
        rec(pos + 1, left - v);
      }
    };
    rec(0, d);
  }
  add(Vec::Constant(n + 1, 1.0 / (n + 1)));
  weights_.resize(n + 1, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t j = 0; j < pts.size(); ++j) weights_.col(static_cast<Eigen::Index>(j)) = pts[j];
}

SimplexVerdict general_position_simplex(const Mat& vertices, const geom::PlaneField& tau, const SamplingPlan& plan,
                                        double floor) {
  const auto n = vertices.rows();
  const int k = tau.rank();
  const int fd = static_cast<int>(n) - k;  // face dimension
  SimplexVerdict v;
  v.margin = INFINITY;
  if (fd <= 0) return v;  // rank n: the condition on 0-faces is vacuous

  std::vector<std::vector<int>> faces;
  std::vector<int> pick(static_cast<std::size_t>(fd + 1));
  std::iota(pick.begin(), pick.end(), 0);
  while (true) {
    faces.push_back(pick);
    int i = fd;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == static_cast<int>(n) - fd + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j <= fd; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  std::vector<Mat> bases;
  bases.reserve(faces.size());
  for (const auto& f : faces) {
    Mat edges(n, fd);
    for (int j = 0; j < fd; ++j) edges.col(j) = vertices.col(f[static_cast<std::size_t>(j + 1)]) - vertices.col(f[0]);
    auto on = orthonormalize(edges);
    require(on.independent, ErrorKind::DegenerateInput, "degenerate simplex face");
    bases.push_back(std::move(on.basis));
  }
  v.faces_checked = faces.size();
  const Mat& w = plan.weights();
  const bool constant = tau.is_constant();
  Mat perp;
  if (constant) perp = tau.complement(vertices.col(0));
  for (Eigen::Index s = 0; s < w.cols(); ++s) {
    const Vec x = vertices * w.col(s);
    if (!constant) perp = tau.complement(x);
    for (std::size_t f = 0; f < faces.size(); ++f) {
      const Mat m = perp.transpose() * bases[f];
      double margin;
      if (m.rows() == 2 && m.cols() == 2) {
        margin = geom::min_singular_value_2x2(m(0, 0), m(0, 1), m(1, 0), m(1, 1));
      } else if (m.cols() == 1) {
        margin = m.norm();
      } else {
        margin = Eigen::JacobiSVD<Mat>(m).singularValues()(m.cols() - 1);
      }
      if (margin < v.margin) {
        v.margin = margin;
        v.witness_face = faces[f];
        v.witness_point = x;
      }
    }
    if (constant) break;  // margins do not depend on x
  }
  v.ok = v.margin > floor;
  return v;
}

GeneralPositionReport check_general_position(const SimplicialComplex& complex, const geom::PlaneField& tau,
                                             const Box& region, const SamplingPlan& plan, double floor) {
  GeneralPositionReport rep;
  rep.floor = floor;
  const auto cells = complex.cells_meeting(region);
  rep.verdicts.resize(cells.size());
  parallel_for(cells.size(), [&](std::size_t i) {
    rep.verdicts[i] = general_position_simplex(complex.cell_vertices(cells[i]), tau, plan, floor);
    rep.verdicts[i].cell = cells[i];
  });
  rep.cells_checked = cells.size();
  for (const auto& v : rep.verdicts) {
    rep.faces_checked += v.faces_checked;
    rep.min_margin = std::min(rep.min_margin, v.margin);
    if (!v.ok) {
      rep.ok = false;
      Witness w{v.cell, {}, v.witness_point, v.margin};
      const auto ids = complex.cell(v.cell);
      for (int local : v.witness_face) w.face.push_back(ids[static_cast<std::size_t>(local)]);
      rep.failures.push_back(std::move(w));
    }
  }
  return rep;
}

std::vector<int> refinement_levels(const SearchBudget& b) {
  require(b.min_l >= 1 && b.max_l >= b.min_l, ErrorKind::Precondition, "invalid refinement budget");
  std::vector<int> ls;
  for (int l = b.min_l; l <= b.max_l; l = b.schedule == Schedule::PowersOfTwo ? 2 * l : l + 1) ls.push_back(l);
  return ls;
}

std::uint64_t attempt_seed(std::uint64_t base, int l, int attempt) noexcept {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(l) * 1000003ULL + static_cast<std::uint64_t>(attempt) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {
Box snap_out(const Box& b, int l) {
  Vec lo = b.lo;
  Vec hi = b.hi;
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    lo[i] = std::floor(lo[i] * l + 1e-9) / l;
    hi[i] = std::ceil(hi[i] * l - 1e-9) / l;
  }
  return {lo, hi};
}
}  // namespace

SearchResult find_general_position(const geom::PlaneField& tau, const Box& K, const SearchOptions& opt) {
  require(opt.epsilon_fraction >= 0.0, ErrorKind::Precondition, "epsilon fraction must be non-negative");
  require(opt.budget.attempts >= 1, ErrorKind::Precondition, "at least one attempt per level is required");
  const int n = tau.dim();
  SearchResult res;
  res.best_margin = 0.0;
  const SamplingPlan plan(n, opt.depth);
  for (int l : refinement_levels(opt.budget)) {
    const SimplicialComplex base = kuhn_triangulation({n, l, snap_out(K.grown(opt.domain_margin), l)});
    for (int a = 0; a < opt.budget.attempts; ++a) {
      const std::uint64_t seed = attempt_seed(opt.seed, l, a);
      JiggleResult jr = jiggle(base, opt.epsilon_fraction / l, seed);
      GeneralPositionReport rep = check_general_position(jr.complex, tau, K, plan, opt.floor);
      res.history.push_back({l, a, seed, rep.min_margin, rep.ok});
      res.best_margin = std::max(res.best_margin, rep.min_margin);
      if (rep.ok) {
        res.success = true;
        res.l = l;
        res.seed = seed;
        res.attempts_at_l = a + 1;
        res.jiggled = std::move(jr);
        res.report = std::move(rep);
        return res;
      }
      res.report = std::move(rep);
    }
  }
  return res;
}

double graph_norm(const Mat& tau_x, const Mat& tau_x_perp, const Mat& tau_y) {
  const Mat p = tau_x.transpose() * tau_y;
  const Mat q = tau_x_perp.transpose() * tau_y;
  Eigen::JacobiSVD<Mat> sp(p);
  const auto& sv = sp.singularValues();
  if (sv.size() == 0 || sv(sv.size() - 1) < 1e-12) return INFINITY;
  const Mat l = q * p.inverse();
  if (l.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Mat>(l).singularValues()(0);
}

LatticeReport check_lattice_conditions(const SimplicialComplex& complex, const geom::PlaneField& tau, const Box& K,
                                       const LatticeOptions& opt) {
  LatticeReport rep;
  const Box star_bound = K.scaled(opt.star_factor);
  const std::size_t nv = complex.vertex_count();
  std::vector<char> a_bad(nv, 0);
  std::vector<char> a_checked(nv, 0);
  parallel_for(nv, [&](std::size_t v) {
    const auto star = complex.star(v);
    if (star.empty()) return;
    Box b = complex.cell_box(static_cast<std::size_t>(star[0]));
    for (int c : star) b = b.united(complex.cell_box(static_cast<std::size_t>(c)));
    if (!b.intersects(K)) return;
    a_checked[v] = 1;
    if (!star_bound.contains(b.lo, 1e-12) || !star_bound.contains(b.hi, 1e-12)) a_bad[v] = 1;
  });
  for (std::size_t v = 0; v < nv; ++v) {
    rep.vertices_checked += static_cast<std::size_t>(a_checked[v]);
    if (a_bad[v]) rep.a_violations.push_back(v);
  }
  rep.a_ok = rep.a_violations.empty();

  const auto cells = complex.cells_meeting(K.scaled(opt.graph_factor));
  rep.cells_checked = cells.size();
  if (tau.is_constant()) return rep;  // every tau(y) equals tau(x): all norms 0
  const int n = complex.dim();
  std::vector<std::vector<GraphViolation>> bad(cells.size());
  std::vector<double> worst(cells.size(), 0.0);
  parallel_for(cells.size(), [&](std::size_t i) {
    const Mat v = complex.cell_vertices(cells[i]);
    std::vector<Vec> pts;
    for (int j = 0; j <= n; ++j) pts.emplace_back(v.col(j));
    pts.emplace_back(v.rowwise().mean());
    std::vector<Mat> frames;
    std::vector<Mat> perps;
    for (const auto& p : pts) {
      frames.push_back(tau.sample(p).frame());
      perps.push_back(tau.complement(p));
    }
    for (std::size_t a = 0; a < pts.size(); ++a) {
      for (std::size_t b = 0; b < pts.size(); ++b) {
        if (a == b) continue;
        const double g = graph_norm(frames[a], perps[a], frames[b]);
        worst[i] = std::max(worst[i], g);
        if (!(g < 1.0)) bad[i].push_back({cells[i], pts[a], pts[b], g});
      }
    }
  });
  for (std::size_t i = 0; i < cells.size(); ++i) {
    rep.max_graph_norm = std::max(rep.max_graph_norm, worst[i]);
    for (auto& g : bad[i]) rep.b_violations.push_back(std::move(g));
  }
  rep.b_ok = rep.b_violations.empty();
  return rep;
}

}  // namespace leafwise::tri
