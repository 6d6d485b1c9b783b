#pragma once

#include "leafwise/triangulation.hpp"

#include <iosfwd>
#include <string>

namespace leafwise::io {

// DIM n / VERTS m + m coordinate rows / CELLS c + c rows of n+1 vertex ids.
void write_mesh(std::ostream& out, const tri::SimplicialComplex& complex);
tri::SimplicialComplex read_mesh(std::istream& in);
void save_mesh(const std::string& path, const tri::SimplicialComplex& complex);
tri::SimplicialComplex load_mesh(const std::string& path);

// DIM n / EPSILON e / ROWS m + rows "vertex d_1 .. d_n" (non-zero rows only).
void write_jiggling(std::ostream& out, const tri::Jiggling& j);
tri::Jiggling read_jiggling(std::istream& in, std::size_t vertex_count);

}  // namespace leafwise::io
