#pragma once

#include "leafwise/geom_core.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace leafwise::io {

struct FieldRecord {
  Vec x;
  Mat frame;  // n x k
  Mat omega;  // n x n
};

FieldRecord record_at(const geom::PairedDistribution& pair, const Vec& x);

// Text format: header "n k", then one row per sample
//   x_1 .. x_n | frame (k rows of n, row-major) | omega (row-major)
// written with 17 significant digits.
void write_field_samples(std::ostream& out, int n, int k, const std::vector<FieldRecord>& records);
std::vector<FieldRecord> read_field_samples(std::istream& in);

void save_field_samples(const std::string& path, int n, int k, const std::vector<FieldRecord>& records);
std::vector<FieldRecord> load_field_samples(const std::string& path);

// Formats a double so that parsing it back yields the same value.
std::string exact(double v);

}  // namespace leafwise::io
