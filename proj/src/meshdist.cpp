#include "ecarve/meshdist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ecarve {

Point3 closest_point_on_triangle(const Point3& p, const Point3& a, const Point3& b,
                                 const Point3& c) {
    const Point3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    const Point3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double v = d1 / (d1 - d3);
        return a + v * ab;
    }

    const Point3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double w = d2 / (d2 - d6);
        return a + w * ac;
    }

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + w * (c - b);
    }

    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    return a + v * ab + w * ac;
}

double point_triangle_distance(const Point3& p, const Point3& a, const Point3& b,
                               const Point3& c) {
    return (p - closest_point_on_triangle(p, a, b, c)).norm();
}

namespace {

double point_aabb_sqdist(const Point3& p, const Point3& lo, const Point3& hi) {
    double d = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double v = p[k] < lo[k] ? lo[k] - p[k] : (p[k] > hi[k] ? p[k] - hi[k] : 0.0);
        d += v * v;
    }
    return d;
}

}  // namespace

MeshBvh::MeshBvh(const SurfaceMesh& mesh) {
    if (mesh.triangles.empty()) throw std::invalid_argument("MeshBvh: empty mesh");
    tris_.reserve(mesh.triangles.size());
    for (const auto& f : mesh.triangles) {
        Tri t;
        t.a = mesh.vertices[f[0]];
        t.b = mesh.vertices[f[1]];
        t.c = mesh.vertices[f[2]];
        t.centroid = (t.a + t.b + t.c) / 3.0;
        tris_.push_back(t);
    }
    std::vector<int> idx(tris_.size());
    std::iota(idx.begin(), idx.end(), 0);
    nodes_.reserve(2 * tris_.size());
    build(idx, 0, int(tris_.size()));
    // Reorder triangles to the leaf layout recorded in idx.
    std::vector<Tri> ordered(tris_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) ordered[i] = tris_[idx[i]];
    tris_ = std::move(ordered);
}

int MeshBvh::build(std::vector<int>& idx, int begin, int end) {
    Node node;
    node.lo = Point3::Constant(std::numeric_limits<double>::infinity());
    node.hi = -node.lo;
    for (int i = begin; i < end; ++i) {
        const Tri& t = tris_[idx[i]];
        for (const Point3* q : {&t.a, &t.b, &t.c}) {
            node.lo = node.lo.cwiseMin(*q);
            node.hi = node.hi.cwiseMax(*q);
        }
    }
    const int me = int(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= 4) {
        nodes_[me].begin = begin;
        nodes_[me].end = end;
        return me;
    }
    Point3 clo = Point3::Constant(std::numeric_limits<double>::infinity()), chi = -clo;
    for (int i = begin; i < end; ++i) {
        clo = clo.cwiseMin(tris_[idx[i]].centroid);
        chi = chi.cwiseMax(tris_[idx[i]].centroid);
    }
    int axis = 0;
    (chi - clo).maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(idx.begin() + begin, idx.begin() + mid, idx.begin() + end,
                     [&](int a, int b) { return tris_[a].centroid[axis] < tris_[b].centroid[axis]; });
    const int l = build(idx, begin, mid);
    const int r = build(idx, mid, end);
    nodes_[me].left = l;
    nodes_[me].right = r;
    return me;
}

void MeshBvh::query(int ni, const Point3& p, double& best) const {
    const Node& node = nodes_[ni];
    if (point_aabb_sqdist(p, node.lo, node.hi) >= best * best) return;
    if (node.left < 0) {
        for (int i = node.begin; i < node.end; ++i) {
            const Tri& t = tris_[i];
            best = std::min(best, point_triangle_distance(p, t.a, t.b, t.c));
        }
        return;
    }
    const double dl = point_aabb_sqdist(p, nodes_[node.left].lo, nodes_[node.left].hi);
    const double dr = point_aabb_sqdist(p, nodes_[node.right].lo, nodes_[node.right].hi);
    if (dl <= dr) {
        query(node.left, p, best);
        query(node.right, p, best);
    } else {
        query(node.right, p, best);
        query(node.left, p, best);
    }
}

double MeshBvh::distance(const Point3& p) const {
    double best = std::numeric_limits<double>::infinity();
    query(0, p, best);
    return best;
}

double MeshBvh::distance_brute(const Point3& p) const {
    double best = std::numeric_limits<double>::infinity();
    for (const Tri& t : tris_) best = std::min(best, point_triangle_distance(p, t.a, t.b, t.c));
    return best;
}

PointToMeshResult point_to_mesh_error(const std::vector<Point3>& cloud,
                                      const SurfaceMesh& mesh, bool parallel) {
    if (cloud.empty()) throw std::invalid_argument("point_to_mesh_error: empty cloud");
    if (mesh.triangles.empty()) throw std::invalid_argument("point_to_mesh_error: empty mesh");
    const MeshBvh bvh(mesh);
    std::vector<double> d(cloud.size());
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < std::int64_t(cloud.size()); ++i)
            d[i] = bvh.distance(cloud[i]);
    } else {
        for (std::size_t i = 0; i < cloud.size(); ++i) d[i] = bvh.distance(cloud[i]);
    }
    PointToMeshResult out;
    double sum = 0.0;
    for (double x : d) sum += x;
    out.mean = sum / double(d.size());
    std::vector<double> sorted = d;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    out.median = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return out;
}

}  // namespace ecarve
