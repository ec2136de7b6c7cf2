#pragma once

#include "ecarve/geometry.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace ecarve {

using VertexId = std::uint32_t;
using TetraId = std::uint32_t;
using RayId = std::uint32_t;

inline constexpr VertexId kInfiniteVertex = 0;
inline constexpr TetraId kNoTetra = 0xffffffffu;

// Duplicate gate: points closer than this to an existing vertex are rejected.
inline constexpr double kDuplicateDistance = 1e-9;

struct Tetra {
    std::array<VertexId, 4> v{};
    std::array<TetraId, 4> n{kNoTetra, kNoTetra, kNoTetra, kNoTetra};  // n[i] opposite v[i]
    double weight = 0.0;
    bool outside = false;
    bool alive = true;
    std::vector<RayId> ray_refs;  // ids of rays traversing this cell, sorted

    bool has_vertex(VertexId x) const {
        return v[0] == x || v[1] == x || v[2] == x || v[3] == x;
    }
    int index_of(VertexId x) const {
        for (int i = 0; i < 4; ++i)
            if (v[i] == x) return i;
        return -1;
    }
    int index_of_neighbor(TetraId t) const {
        for (int i = 0; i < 4; ++i)
            if (n[i] == t) return i;
        return -1;
    }
};

// Dry-run insertion result: the set of cells whose (perturbed) circumsphere
// contains p. Computing it does not modify the triangulation.
struct ConflictRegion {
    std::vector<TetraId> cells;
    VertexId duplicate_of = kInfiniteVertex;  // != infinite when p duplicates a vertex
    bool pre_simplex = false;                 // triangulation not yet 3-dimensional
    std::uint64_t version = 0;                // structure version it was computed on

    bool duplicate() const { return duplicate_of != kInfiniteVertex; }
};

struct InsertResult {
    bool inserted = false;
    VertexId vertex = kInfiniteVertex;
    VertexId duplicate_of = kInfiniteVertex;
    std::vector<TetraId> destroyed;
    std::vector<TetraId> created;
    std::vector<RayId> destroyed_ray_refs;  // union over destroyed cells, sorted
};

// Incremental 3D Delaunay triangulation (Bowyer-Watson) over an infinite
// vertex. Finite cells are kept positively oriented (orient3d(v0,v1,v2,v3)>0).
// Degenerate predicate results are resolved by symbolic perturbation in
// vertex-id order: the largest id is perturbed most, and a point being
// located/inserted counts as larger than every existing id. Vertices are
// never removed and ids are never reused.
class Triangulation {
public:
    Triangulation();

    bool dimension3() const { return dim3_; }
    std::size_t vertex_count() const { return points_.size() - 1; }  // finite only
    std::size_t cell_storage_size() const { return tets_.size(); }
    std::size_t alive_cell_count() const { return alive_count_; }

    const Point3& point(VertexId v) const { return points_[v]; }
    bool valid_vertex(VertexId v) const { return v >= 1 && v < points_.size(); }

    const Tetra& tet(TetraId t) const { return tets_[t]; }
    Tetra& tet_mut(TetraId t) { return tets_[t]; }
    bool is_infinite(TetraId t) const { return tets_[t].has_vertex(kInfiniteVertex); }

    std::vector<TetraId> alive_cells() const;
    std::vector<TetraId> finite_alive_cells() const;

    // Facet corner index table: facet i (opposite vertex i) as an oriented
    // triple; for a positively oriented cell, orient3d(facet(i), v[i]) > 0.
    static const std::array<std::array<int, 3>, 4>& facet_corners();
    std::array<VertexId, 3> facet_vertices(TetraId t, int i) const;
    Point3 barycenter(TetraId t) const;

    // Walks to a cell whose closed region contains p, or to an infinite cell
    // whose hull facet faces p when p lies outside the convex hull.
    TetraId locate(const Point3& p) const;
    // Stateless variant, safe to call from concurrent readers.
    TetraId locate_pure(const Point3& p, TetraId hint, std::uint64_t seed) const;

    ConflictRegion conflict_region(const Point3& p) const;
    InsertResult insert_point(const Point3& p);
    InsertResult insert_point(const Point3& p, const ConflictRegion& region);

    // Perturbed conflict test: would cell t be destroyed by inserting p?
    bool in_conflict(TetraId t, const Point3& p) const;
    // Same predicate with an existing vertex as the query (used by the
    // empty-circumsphere checks): +1 inside (conflict), -1 outside.
    int side_of_sphere(TetraId t, VertexId q) const;

    std::vector<TetraId> incident_cells(VertexId v) const;
    TetraId incident_cell_hint(VertexId v) const { return incident_[v]; }

    std::uint64_t structure_version() const { return version_; }

    // Throws std::logic_error on any broken structural invariant.
    void check_structure() const;

    // Text dump: VERTICES (id x y z) and TETRAS
    // (id v0 v1 v2 v3 n0 n1 n2 n3 weight label). Cell ids are compacted.
    void write_dump(std::ostream& out) const;
    static Triangulation read_dump(std::istream& in);

private:
    std::vector<Point3> points_;   // [0] reserved for the infinite vertex
    std::vector<Tetra> tets_;
    mutable std::vector<TetraId> incident_;  // per vertex: an alive incident cell (hint)
    std::size_t alive_count_ = 0;
    bool dim3_ = false;
    std::uint64_t version_ = 0;

    mutable TetraId locate_hint_ = kNoTetra;
    mutable std::uint64_t walk_rng_ = 0x9e3779b97f4a7c15ull;

    mutable std::vector<std::uint32_t> mark_;
    mutable std::uint32_t mark_epoch_ = 0;

    std::uint32_t next_mark() const;
    bool marked(TetraId t, std::uint32_t epoch) const {
        return t < mark_.size() && mark_[t] == epoch;
    }
    void set_mark(TetraId t, std::uint32_t epoch) const { mark_[t] = epoch; }

    VertexId allocate_vertex(const Point3& p);
    TetraId allocate_tet();
    void try_build_initial_simplex();
    void build_initial_simplex(const std::array<VertexId, 4>& quad);
    void insert_vertex_incremental(VertexId v, InsertResult& out);
    void commit_region(VertexId v, const std::vector<TetraId>& region, InsertResult& out);
    bool conflict_query(TetraId t, const Point3& q, std::uint64_t qkey) const;
    TetraId exhaustive_locate(const Point3& p) const;
    VertexId duplicate_in_cells(const Point3& p, const std::vector<TetraId>& cells) const;
};

}  // namespace ecarve
