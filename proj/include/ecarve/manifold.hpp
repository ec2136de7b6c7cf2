#pragma once

#include "ecarve/carver.hpp"
#include "ecarve/delaunay.hpp"

#include <span>
#include <vector>

namespace ecarve {

struct SurfaceFacet {
    TetraId cell;  // the outside cell
    int facet;     // its facet toward a non-outside (or infinite) cell
};

struct SurfaceMesh {
    std::vector<Point3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;  // normals toward the outside set

    bool empty() const { return triangles.empty(); }
};

// A 3D point to incorporate at a keyframe, with the camera centers that shoot
// viewing rays at it once inserted.
struct KeyframePoint {
    Point3 position;
    std::vector<Point3> ray_centers;
};

struct KeyframeTimings {
    double insertion_s = 0.0;
    double rays_ich_s = 0.0;
    double grow_shrink_s = 0.0;
};

// Maintains the outside set O over the triangulation so that its boundary
// stays a closed 2-manifold after every operation: every surface vertex
// regular, every surface edge on exactly 2 surface triangles, no outside
// cell without a traversing ray, no infinite outside cell.
class Manifold {
public:
    Manifold(Triangulation& tri, Carver& carver);

    bool is_outside(TetraId t) const { return tri_.tet(t).outside; }
    std::size_t outside_count() const { return outside_count_; }
    std::vector<SurfaceFacet> surface_facets() const;

    // True iff the edges opposite to v across its incident surface triangles
    // form exactly one closed cycle visiting no edge twice. Vacuously true
    // when v has no incident surface triangle.
    bool is_regular_vertex(VertexId v) const;

    // Tentative label flips, committed only if every vertex of t keeps a
    // regular (or empty) link.
    bool try_add(TetraId t);
    bool try_remove(TetraId t);

    // Weight-ordered region growing from the given seeds; neighbors of every
    // accepted cell are enqueued. Only carvable cells (alive, finite, with at
    // least one traversing ray) are ever added.
    void grow(std::span<const TetraId> seeds);

    enum class BootstrapStatus { Ok, EmptyManifold };
    // Inserts all points, shoots all rays, then grows from the weight-maximal
    // carvable cell.
    BootstrapStatus bootstrap(std::span<const KeyframePoint> points, bool parallel_rays = false,
                              KeyframeTimings* timings = nullptr);

    enum class InsertStatus { Inserted, Dropped, Duplicate };
    struct InsertOutcome {
        InsertStatus status = InsertStatus::Dropped;
        VertexId vertex = kInfiniteVertex;
    };
    // Delaunay insertion guarded by shrinking: the would-be conflict region D
    // is freed from O by removing cells of E = D + up to three adjacency
    // rings in ascending weight order; if D still meets O the state is
    // restored exactly and the point is dropped.
    InsertOutcome insert_with_shrink(const Point3& p);

    // One keyframe: insert points (with shrinking), shoot the new rays, grow
    // with every carvable inside cell sharing a facet, edge or vertex with
    // the current surface.
    void keyframe_update(std::span<const KeyframePoint> points, bool parallel_rays = false,
                         KeyframeTimings* timings = nullptr);

    SurfaceMesh extract_surface() const;

    // Throws std::logic_error on the first violated invariant.
    void check_invariants() const;

private:
    Triangulation& tri_;
    Carver& carver_;
    std::size_t outside_count_ = 0;

    bool carvable(TetraId t) const;
    bool vertex_link_ok(VertexId v) const;
    // Collects the link edges of v on the current surface; false when a link
    // edge repeats (more than two triangles on a surface edge).
    bool collect_link(VertexId v, std::vector<std::pair<VertexId, VertexId>>& edges) const;
    std::vector<TetraId> surface_contact_seeds() const;
    void set_outside(TetraId t, bool value);
    double shrink_seconds_ = 0.0;
};

}  // namespace ecarve
