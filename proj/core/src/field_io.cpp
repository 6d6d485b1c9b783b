#include "leafwise/field_io.hpp"

#include "leafwise/error.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace leafwise::io {

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

FieldRecord record_at(const geom::PairedDistribution& pair, const Vec& x) {
  return {x, pair.tau.sample(x).frame(), pair.omega.at(x)};
}

void write_field_samples(std::ostream& out, int n, int k, const std::vector<FieldRecord>& records) {
  out << n << ' ' << k << '\n';
  for (const auto& r : records) {
    require(r.x.size() == n && r.frame.rows() == n && r.frame.cols() == k && r.omega.rows() == n &&
                r.omega.cols() == n,
            ErrorKind::Precondition, "field record has inconsistent shape");
    for (int i = 0; i < n; ++i) out << exact(r.x[i]) << ' ';
    out << '|';
    for (int c = 0; c < k; ++c)
      for (int i = 0; i < n; ++i) out << ' ' << exact(r.frame(i, c));
    out << " |";
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out << ' ' << exact(r.omega(i, j));
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "failed writing field samples");
}

namespace {
double parse_double(const std::string& tok) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::Parse, "not a number: '" + tok + "'");
  }
}
}  // namespace

std::vector<FieldRecord> read_field_samples(std::istream& in) {
  int n = 0;
  int k = 0;
  std::string header;
  if (!std::getline(in, header)) fail(ErrorKind::Parse, "missing field-sample header");
  {
    std::istringstream hs(header);
    if (!(hs >> n >> k) || n < 1 || k < 0 || k > n) fail(ErrorKind::Parse, "bad field-sample header");
  }
  std::vector<FieldRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<std::string> parts[3];
    int section = 0;
    std::string tok;
    while (ls >> tok) {
      if (tok == "|") {
        if (++section > 2) fail(ErrorKind::Parse, "too many separators in field row");
        continue;
      }
      parts[section].push_back(tok);
    }
    if (section != 2 || parts[0].size() != static_cast<std::size_t>(n) ||
        parts[1].size() != static_cast<std::size_t>(n * k) || parts[2].size() != static_cast<std::size_t>(n * n)) {
      fail(ErrorKind::Parse, "malformed field row: " + line);
    }
    FieldRecord r{Vec(n), Mat(n, k), Mat(n, n)};
    for (int i = 0; i < n; ++i) r.x[i] = parse_double(parts[0][static_cast<std::size_t>(i)]);
    for (int c = 0; c < k; ++c)
      for (int i = 0; i < n; ++i) r.frame(i, c) = parse_double(parts[1][static_cast<std::size_t>(c * n + i)]);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r.omega(i, j) = parse_double(parts[2][static_cast<std::size_t>(i * n + j)]);
    out.push_back(std::move(r));
  }
  return out;
}

void save_field_samples(const std::string& path, int n, int k, const std::vector<FieldRecord>& records) {
  std::ofstream f(path);
  if (!f) fail(ErrorKind::Io, "cannot open " + path);
  write_field_samples(f, n, k, records);
}

std::vector<FieldRecord> load_field_samples(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::Io, "cannot open " + path);
  return read_field_samples(f);
}

}  // namespace leafwise::io
