#include "leafwise/checkpoint.hpp"

#include "leafwise/error.hpp"
#include "leafwise/field_io.hpp"
#include "leafwise/presets.hpp"

#include <fstream>
#include <sstream>

namespace leafwise::civ {

namespace {

void write_row(std::ostream& out, const char* tag, const std::vector<double>& v) {
  out << tag << ' ' << v.size();
  for (double x : v) out << ' ' << io::exact(x);
  out << '\n';
}

void write_vec(std::ostream& out, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << io::exact(v[i]);
}

std::istringstream expect(std::istream& in, const std::string& tag) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string head;
    ss >> head;
    require(head == tag, ErrorKind::Parse, "checkpoint: expected " + tag + ", found '" + head + "'");
    return ss;
  }
  fail(ErrorKind::Parse, "checkpoint: missing " + tag);
}

template <class T>
T take(std::istringstream& ss, const std::string& what) {
  T v{};
  ss >> v;
  require(!ss.fail(), ErrorKind::Parse, "checkpoint: bad " + what);
  return v;
}

std::vector<double> read_row(std::istream& in, const std::string& tag) {
  auto ss = expect(in, tag);
  const auto count = take<std::size_t>(ss, tag + " count");
  std::vector<double> out(count);
  for (auto& x : out) x = take<double>(ss, tag);
  return out;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  out << "LEAFWISE-CIVILIZE 1\n";
  out << "PRESET " << c.preset << ' ' << io::exact(c.preset_param) << '\n';
  out << "DIM " << c.n << '\n';
  out << "MESH " << c.mesh_path << '\n';
  out << "REGION";
  write_vec(out, c.region.lo);
  write_vec(out, c.region.hi);
  out << '\n';
  out << "KAPPA " << io::exact(c.kappa) << '\n';
  out << "SPACING " << io::exact(c.spacing) << '\n';
  out << "J " << c.j << '\n';
  write_row(out, "DELTAS", c.deltas);
  write_row(out, "ETAS", c.etas);
  out << "SAMPLES " << c.samples.size() << '\n';
  const int k = c.samples.empty() ? 0 : static_cast<int>(c.samples.front().frame.cols());
  io::write_field_samples(out, c.n, k, c.samples);
}

Checkpoint read_checkpoint(std::istream& in) {
  Checkpoint c;
  {
    auto ss = expect(in, "LEAFWISE-CIVILIZE");
    require(take<int>(ss, "format version") == 1, ErrorKind::Parse, "checkpoint: unsupported version");
  }
  {
    auto ss = expect(in, "PRESET");
    c.preset = take<std::string>(ss, "preset");
    c.preset_param = take<double>(ss, "preset parameter");
  }
  {
    auto ss = expect(in, "DIM");
    c.n = take<int>(ss, "dimension");
  }
  {
    auto ss = expect(in, "MESH");
    c.mesh_path = take<std::string>(ss, "mesh path");
  }
  {
    auto ss = expect(in, "REGION");
    Vec lo(c.n);
    Vec hi(c.n);
    for (int i = 0; i < c.n; ++i) lo[i] = take<double>(ss, "region");
    for (int i = 0; i < c.n; ++i) hi[i] = take<double>(ss, "region");
    c.region = Box(lo, hi);
  }
  {
    auto ss = expect(in, "KAPPA");
    c.kappa = take<double>(ss, "kappa");
  }
  {
    auto ss = expect(in, "SPACING");
    c.spacing = take<double>(ss, "spacing");
  }
  {
    auto ss = expect(in, "J");
    c.j = take<int>(ss, "J");
  }
  c.deltas = read_row(in, "DELTAS");
  c.etas = read_row(in, "ETAS");
  require(c.deltas.size() == static_cast<std::size_t>(c.j + 1) && c.etas.size() == c.deltas.size(), ErrorKind::Parse,
          "checkpoint: radii count does not match J");
  {
    auto ss = expect(in, "SAMPLES");
    const auto count = take<std::size_t>(ss, "sample count");
    c.samples = io::read_field_samples(in);
    require(c.samples.size() == count, ErrorKind::Parse, "checkpoint: sample count mismatch");
  }
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write checkpoint " + path);
  write_checkpoint(out, c);
  require(out.good(), ErrorKind::Io, "failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open checkpoint " + path);
  return read_checkpoint(in);
}

namespace {

std::vector<Vec> fiber_bases(const tri::SimplicialComplex& complex, const Box& region, int j) {
  std::vector<Vec> out;
  for (int p = 0; p <= j; ++p) {
    for (const Simplex& s : skeleton_simplices(complex, region, p)) out.push_back(s.barycenter());
  }
  return out;
}

}  // namespace

Checkpoint checkpoint_of(const SkeletonState& s, const tri::SimplicialComplex& complex, const std::string& preset,
                         double preset_param, const std::string& mesh_path, const Box& region) {
  Checkpoint c;
  c.preset = preset;
  c.preset_param = preset_param;
  c.n = region.dim();
  c.mesh_path = mesh_path;
  c.region = region;
  c.kappa = s.kappa;
  c.spacing = s.spacing;
  c.j = s.j;
  c.deltas = s.deltas;
  c.etas = s.etas;
  for (const Vec& x : fiber_bases(complex, region, s.j)) c.samples.push_back(io::record_at(s.pair, x));
  return c;
}

SkeletonState replay(const Checkpoint& c, const tri::SimplicialComplex& complex) {
  require(complex.dim() == c.n, ErrorKind::Precondition, "checkpoint and mesh dimensions differ");
  SkeletonState state{-1, {}, {}, presets::make_pair(c.preset, c.n, c.preset_param), c.kappa, c.spacing};
  for (int p = 0; p <= c.j; ++p) {
    state = civilize_skeleton_with(state, complex, c.region, c.deltas[static_cast<std::size_t>(p)],
                                   c.etas[static_cast<std::size_t>(p)])
                .next;
  }
  for (const auto& rec : c.samples) {
    const auto now = io::record_at(state.pair, rec.x);
    const double frame_err = max_abs(projector(now.frame) - projector(rec.frame));
    const double form_err = max_abs(now.omega - rec.omega);
    require(frame_err <= 1e-12 && form_err <= 1e-12, ErrorKind::ModelConsistency,
            "checkpoint samples disagree with the replayed pair (wrong mesh or preset?)");
  }
  return state;
}

}  // namespace leafwise::civ
