#pragma once

#include "ecarve/manifold.hpp"

#include <vector>

namespace ecarve {

// Exact closest point on a triangle (interior / edge / vertex cases).
Point3 closest_point_on_triangle(const Point3& p, const Point3& a, const Point3& b,
                                 const Point3& c);
double point_triangle_distance(const Point3& p, const Point3& a, const Point3& b,
                               const Point3& c);

// AABB tree over mesh triangles for nearest-triangle distance queries; the
// accelerated result equals brute force over all triangles.
class MeshBvh {
public:
    explicit MeshBvh(const SurfaceMesh& mesh);
    double distance(const Point3& p) const;
    double distance_brute(const Point3& p) const;
    std::size_t triangle_count() const { return tris_.size(); }

private:
    struct Node {
        Point3 lo, hi;
        int left = -1, right = -1;  // children; leaf when left < 0
        int begin = 0, end = 0;     // triangle range for leaves
    };
    struct Tri {
        Point3 a, b, c, centroid;
    };
    std::vector<Tri> tris_;
    std::vector<Node> nodes_;

    int build(std::vector<int>& idx, int begin, int end);
    void query(int node, const Point3& p, double& best) const;
};

struct PointToMeshResult {
    double mean = 0.0;
    double median = 0.0;
};

// Mean and median distance from each cloud point to its nearest mesh
// triangle. Throws on an empty cloud or empty mesh.
PointToMeshResult point_to_mesh_error(const std::vector<Point3>& cloud,
                                      const SurfaceMesh& mesh, bool parallel);

}  // namespace ecarve
