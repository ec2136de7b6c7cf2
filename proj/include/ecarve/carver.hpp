#pragma once

#include "ecarve/delaunay.hpp"

#include <span>
#include <utility>
#include <vector>

namespace ecarve {

// Inverse-cone weight increments: w1 for traversed cells, w2 for their facet
// neighbors (once per ray), w3 per distinct first-ring neighbor for
// second-ring cells, capped at w2 per ray and cell.
struct IchWeights {
    double w1 = 1.0;
    double w2 = 0.8;
    double w3 = 0.2;

    bool valid() const { return w1 >= 0.0 && w2 >= 0.0 && w3 >= 0.0 && w3 <= w2; }
};

struct ViewingRay {
    RayId id = 0;
    Point3 camera_center = Point3::Zero();
    VertexId target = kInfiniteVertex;
    std::vector<TetraId> traversed;  // cached, ordered along the segment
    // Center outside the convex hull at the last walk: such rays can gain
    // cells whenever an insertion grows the hull.
    bool hull_clipped = false;
};

// Traversal rule (shared with the brute-force test oracle): a finite cell is
// traversed iff the closed segment from the camera center to the target
// vertex intersects the closed tetrahedron in a sub-segment of positive
// length. Grazing contacts (single points through vertices, edges or facet
// borders) do not count; this is the perturbation rule for degenerate
// crossings. Cells are ordered by their exact entry parameter along the
// segment (ties by cell id). Infinite cells are never traversed.
std::vector<TetraId> walk_ray(const Triangulation& tri, const Point3& center,
                              VertexId target, bool* center_outside_hull = nullptr);

// Batch walk, optionally OpenMP-parallel over rays (read-only on tri;
// results are identical to the serial path).
struct WalkResult {
    std::vector<TetraId> cells;
    bool center_outside_hull = false;
};
std::vector<WalkResult> walk_rays(const Triangulation& tri,
                                  std::span<const std::pair<Point3, VertexId>> rays,
                                  bool parallel);

// Owns the ray set and keeps per-cell weights and ray_refs consistent with
// it across incremental point insertions. Single writer, like the
// triangulation it operates on.
class Carver {
public:
    Carver(Triangulation& tri, IchWeights w);

    const IchWeights& weights() const { return weights_; }
    std::size_t ray_count() const { return rays_.size(); }
    const ViewingRay& ray(RayId id) const { return rays_[id]; }

    // Walks the segment, applies the ICH increments and registers the ray.
    RayId add_ray(const Point3& center, VertexId target);
    // Walks a batch (optionally in parallel), then applies in ray order.
    std::vector<RayId> add_rays(std::span<const std::pair<Point3, VertexId>> rays,
                                bool parallel);

    // Union of the traversal sets of the given rays.
    std::vector<TetraId> mark_free_space(std::span<const RayId> ids) const;

    // Delaunay insertion with weight maintenance: rays whose contributions
    // touch the conflict region or its two-ring are subtracted, the point is
    // inserted, and those rays are re-walked and re-applied.
    InsertResult insert_with_retrace(const Point3& p);
    InsertResult insert_with_retrace(const Point3& p, const ConflictRegion& region);

    // Rays that would need re-walking for this conflict region.
    std::vector<RayId> affected_rays(const std::vector<TetraId>& region) const;

    // Reference path for the conservation checks: zero all weights/ray_refs
    // and re-derive them from the stored rays on the current triangulation.
    void recompute_from_scratch();

    // Cumulative ray work (walks and weight applications, including
    // retraces), for per-keyframe cost accounting.
    struct WorkStats {
        double seconds = 0.0;
        std::size_t walks = 0;
    };
    const WorkStats& work_stats() const { return work_; }

private:
    Triangulation& tri_;
    IchWeights weights_;
    std::vector<ViewingRay> rays_;
    WorkStats work_;

    // Scratch for the increment loops: per-cell state marks and second-ring
    // multiplicities, reused across rays.
    std::vector<std::uint32_t> mark_;
    std::uint32_t epoch_ = 0;
    std::vector<int> ring2_count_;
    std::vector<TetraId> ring1_scratch_, ring2_scratch_;

    void apply_ray(ViewingRay& r, double sign);
};

// Exposed for unit tests: one ray's increments on an explicit traversal set.
void apply_ich(Triangulation& tri, const std::vector<TetraId>& traversed,
               const IchWeights& w, double sign, RayId id, bool touch_ray_refs);

}  // namespace ecarve
