#include "leafwise/mesh_io.hpp"

#include "leafwise/error.hpp"
#include "leafwise/field_io.hpp"

#include <fstream>
#include <sstream>

namespace leafwise::io {

namespace {
void expect(std::istream& in, const std::string& keyword) {
  std::string tok;
  if (!(in >> tok) || tok != keyword) fail(ErrorKind::Parse, "expected '" + keyword + "'");
}

template <class T>
T read_value(std::istream& in, const char* what) {
  T v{};
  if (!(in >> v)) fail(ErrorKind::Parse, std::string("could not read ") + what);
  return v;
}
}  // namespace

void write_mesh(std::ostream& out, const tri::SimplicialComplex& cx) {
  const int n = cx.dim();
  out << "DIM " << n << '\n' << "VERTS " << cx.vertex_count() << '\n';
  for (std::size_t v = 0; v < cx.vertex_count(); ++v) {
    for (int i = 0; i < n; ++i) out << (i ? " " : "") << exact(cx.coords()[v * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)]);
    out << '\n';
  }
  out << "CELLS " << cx.cell_count() << '\n';
  for (std::size_t c = 0; c < cx.cell_count(); ++c) {
    const auto ids = cx.cell(c);
    for (std::size_t j = 0; j < ids.size(); ++j) out << (j ? " " : "") << ids[j];
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "failed writing mesh");
}

tri::SimplicialComplex read_mesh(std::istream& in) {
  expect(in, "DIM");
  const int n = read_value<int>(in, "dimension");
  if (n < 1) fail(ErrorKind::Parse, "mesh dimension must be positive");
  expect(in, "VERTS");
  const auto m = read_value<std::size_t>(in, "vertex count");
  std::vector<double> coords(m * static_cast<std::size_t>(n));
  for (auto& c : coords) c = read_value<double>(in, "coordinate");
  expect(in, "CELLS");
  const auto cc = read_value<std::size_t>(in, "cell count");
  std::vector<int> cells(cc * static_cast<std::size_t>(n + 1));
  for (auto& id : cells) id = read_value<int>(in, "vertex index");
  try {
    return {n, std::move(coords), std::move(cells)};
  } catch (const Error& e) {
    fail(ErrorKind::Parse, e.what());
  }
}

void save_mesh(const std::string& path, const tri::SimplicialComplex& cx) {
  std::ofstream f(path);
  if (!f) fail(ErrorKind::Io, "cannot open " + path);
  write_mesh(f, cx);
}

tri::SimplicialComplex load_mesh(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::Io, "cannot open " + path);
  return read_mesh(f);
}

void write_jiggling(std::ostream& out, const tri::Jiggling& j) {
  const auto n = static_cast<std::size_t>(j.n);
  std::size_t rows = 0;
  for (std::size_t v = 0; n && v * n < j.displacement.size(); ++v) {
    for (std::size_t i = 0; i < n; ++i) {
      if (j.displacement[v * n + i] != 0.0) {
        ++rows;
        break;
      }
    }
  }
  out << "DIM " << j.n << '\n' << "EPSILON " << exact(j.epsilon) << '\n' << "ROWS " << rows << '\n';
  for (std::size_t v = 0; n && v * n < j.displacement.size(); ++v) {
    bool zero = true;
    for (std::size_t i = 0; i < n; ++i) zero = zero && j.displacement[v * n + i] == 0.0;
    if (zero) continue;
    out << v;
    for (std::size_t i = 0; i < n; ++i) out << ' ' << exact(j.displacement[v * n + i]);
    out << '\n';
  }
}

tri::Jiggling read_jiggling(std::istream& in, std::size_t vertex_count) {
  tri::Jiggling j;
  expect(in, "DIM");
  j.n = read_value<int>(in, "dimension");
  expect(in, "EPSILON");
  j.epsilon = read_value<double>(in, "epsilon");
  expect(in, "ROWS");
  const auto rows = read_value<std::size_t>(in, "row count");
  const auto n = static_cast<std::size_t>(j.n);
  j.displacement.assign(vertex_count * n, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto v = read_value<std::size_t>(in, "vertex index");
    if (v >= vertex_count) fail(ErrorKind::Parse, "jiggling row references a missing vertex");
    for (std::size_t i = 0; i < n; ++i) j.displacement[v * n + i] = read_value<double>(in, "displacement");
  }
  return j;
}

}  // namespace leafwise::io
