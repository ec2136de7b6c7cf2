#pragma once

#include "ecarve/manifold.hpp"

#include <string>
#include <vector>

namespace ecarve {

// ASCII PLY with triangular faces. with_face_labels adds the debug
// per-face attribute (uchar outside, 1 on every boundary face).
void write_ply(const std::string& path, const SurfaceMesh& mesh,
               bool with_face_labels = false);
SurfaceMesh read_ply(const std::string& path);

// ASCII XYZ cloud: one `x y z` per line.
void write_xyz(const std::string& path, const std::vector<Point3>& cloud);
std::vector<Point3> read_xyz(const std::string& path);

}  // namespace ecarve
