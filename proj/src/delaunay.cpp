#include "ecarve/delaunay.hpp"
#include "ecarve/predicates.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ecarve {

namespace {

constexpr std::uint64_t kQueryKey = std::numeric_limits<std::uint64_t>::max();

// Perturbed in-sphere: sign of the insphere determinant for a positively
// oriented (p0,p1,p2,p3), resolving the cospherical case by symbolic
// perturbation in key order (largest key = most perturbed). Follows the
// classic scheme: walk keys downward; if the query is reached first it is
// outside, otherwise the first non-coplanar orientation with the query
// substituted for the reached point decides.
int side_of_sphere_perturbed(const Point3* p[4], const std::uint64_t key[4],
                             const Point3& q, std::uint64_t qkey) {
    const int s = insphere_det(*p[0], *p[1], *p[2], *p[3], q);
    if (s != 0) return s;

    int order[5] = {0, 1, 2, 3, 4};  // 4 = query
    auto key_of = [&](int i) { return i == 4 ? qkey : key[i]; };
    std::sort(order, order + 5, [&](int a, int b) { return key_of(a) > key_of(b); });

    for (int idx = 0; idx < 5; ++idx) {
        const int which = order[idx];
        if (which == 4) return -1;
        int o = 0;
        switch (which) {
            case 3: o = orient3d(*p[0], *p[1], *p[2], q); break;
            case 2: o = orient3d(*p[0], *p[1], q, *p[3]); break;
            case 1: o = orient3d(*p[0], q, *p[2], *p[3]); break;
            case 0: o = orient3d(q, *p[1], *p[2], *p[3]); break;
        }
        if (o != 0) return o;
    }
    throw std::logic_error("side_of_sphere_perturbed: exhausted perturbation order");
}

// Projects coplanar 3D points to the coordinate plane where the triangle
// (a,b,c) has nonzero exact 2D orientation.
struct PlanarProjection {
    int drop_axis = 2;
    Point2 pa, pb, pc;
    int local = 0;  // orient2d(pa,pb,pc), nonzero

    static Point2 proj(const Point3& p, int drop) {
        switch (drop) {
            case 0: return {p.y(), p.z()};
            case 1: return {p.z(), p.x()};
            default: return {p.x(), p.y()};
        }
    }
};

PlanarProjection make_projection(const Point3& a, const Point3& b, const Point3& c) {
    const Eigen::Vector3d n = (b - a).cross(c - a);
    int axes[3] = {0, 1, 2};
    std::sort(axes, axes + 3,
              [&](int i, int j) { return std::abs(n[i]) > std::abs(n[j]); });
    for (int k = 0; k < 3; ++k) {
        PlanarProjection pp;
        pp.drop_axis = axes[k];
        pp.pa = PlanarProjection::proj(a, pp.drop_axis);
        pp.pb = PlanarProjection::proj(b, pp.drop_axis);
        pp.pc = PlanarProjection::proj(c, pp.drop_axis);
        pp.local = orient2d(pp.pa, pp.pb, pp.pc);
        if (pp.local != 0) return pp;
    }
    throw std::logic_error("make_projection: degenerate (collinear) hull facet");
}

// Perturbed bounded-circle test for a query coplanar with (a,b,c):
// +1 inside the circumcircle, -1 outside. Same perturbation order as the
// 3D test, one dimension down.
int side_of_circle_perturbed(const Point3& a, const Point3& b, const Point3& c,
                             const std::uint64_t key[3], const Point3& q,
                             std::uint64_t qkey) {
    const PlanarProjection pp = make_projection(a, b, c);
    const Point2 pq = PlanarProjection::proj(q, pp.drop_axis);

    const int s = incircle2d(pp.pa, pp.pb, pp.pc, pq) * pp.local;
    if (s != 0) return s;

    int order[4] = {0, 1, 2, 3};  // 3 = query
    auto key_of = [&](int i) { return i == 3 ? qkey : key[i]; };
    std::sort(order, order + 4, [&](int x, int y) { return key_of(x) > key_of(y); });

    for (int idx = 0; idx < 4; ++idx) {
        const int which = order[idx];
        if (which == 3) return -1;
        int o = 0;
        switch (which) {
            case 2: o = orient2d(pp.pa, pp.pb, pq); break;
            case 1: o = orient2d(pp.pa, pq, pp.pc); break;
            case 0: o = orient2d(pq, pp.pb, pp.pc); break;
        }
        if (o != 0) return o * pp.local;
    }
    throw std::logic_error("side_of_circle_perturbed: exhausted perturbation order");
}

}  // namespace

Triangulation::Triangulation() {
    points_.emplace_back(Point3::Zero());  // slot for the infinite vertex
    incident_.push_back(kNoTetra);
}

const std::array<std::array<int, 3>, 4>& Triangulation::facet_corners() {
    // orient3d(facet(i), v[i]) > 0 for positively oriented (v0,v1,v2,v3).
    static const std::array<std::array<int, 3>, 4> table = {
        {{1, 3, 2}, {0, 2, 3}, {0, 3, 1}, {0, 1, 2}}};
    return table;
}

std::array<VertexId, 3> Triangulation::facet_vertices(TetraId t, int i) const {
    const auto& fc = facet_corners()[i];
    const Tetra& c = tets_[t];
    return {c.v[fc[0]], c.v[fc[1]], c.v[fc[2]]};
}

Point3 Triangulation::barycenter(TetraId t) const {
    const Tetra& c = tets_[t];
    return (points_[c.v[0]] + points_[c.v[1]] + points_[c.v[2]] + points_[c.v[3]]) / 4.0;
}

std::vector<TetraId> Triangulation::alive_cells() const {
    std::vector<TetraId> out;
    out.reserve(alive_count_);
    for (TetraId t = 0; t < tets_.size(); ++t)
        if (tets_[t].alive) out.push_back(t);
    return out;
}

std::vector<TetraId> Triangulation::finite_alive_cells() const {
    std::vector<TetraId> out;
    out.reserve(alive_count_);
    for (TetraId t = 0; t < tets_.size(); ++t)
        if (tets_[t].alive && !is_infinite(t)) out.push_back(t);
    return out;
}

std::uint32_t Triangulation::next_mark() const {
    mark_.resize(tets_.size(), 0);
    return ++mark_epoch_;
}

VertexId Triangulation::allocate_vertex(const Point3& p) {
    points_.push_back(p);
    incident_.push_back(kNoTetra);
    return static_cast<VertexId>(points_.size() - 1);
}

TetraId Triangulation::allocate_tet() {
    tets_.emplace_back();
    ++alive_count_;
    return static_cast<TetraId>(tets_.size() - 1);
}

// ---------------------------------------------------------------------------
// initial simplex

namespace {

bool collinear3(const Point3& a, const Point3& b, const Point3& c) {
    const Point2 axy{a.x(), a.y()}, bxy{b.x(), b.y()}, cxy{c.x(), c.y()};
    const Point2 ayz{a.y(), a.z()}, byz{b.y(), b.z()}, cyz{c.y(), c.z()};
    const Point2 azx{a.z(), a.x()}, bzx{b.z(), b.x()}, czx{c.z(), c.x()};
    return orient2d(axy, bxy, cxy) == 0 && orient2d(ayz, byz, cyz) == 0 &&
           orient2d(azx, bzx, czx) == 0;
}

}  // namespace

void Triangulation::try_build_initial_simplex() {
    // Greedy spanning quadruple in id order: distinct, non-collinear,
    // non-coplanar. Rescans whenever a slot advances; runs only pre-dim3.
    std::array<VertexId, 4> quad{};
    int have = 0;
    for (VertexId v = 1; v < points_.size() && have < 4; ++v) {
        const Point3& p = points_[v];
        bool ok = false;
        switch (have) {
            case 0: ok = true; break;
            case 1: ok = (p - points_[quad[0]]).norm() >= kDuplicateDistance; break;
            case 2: ok = !collinear3(points_[quad[0]], points_[quad[1]], p); break;
            case 3:
                ok = orient3d(points_[quad[0]], points_[quad[1]], points_[quad[2]], p) != 0;
                break;
        }
        if (ok) quad[have++] = v;
    }
    if (have < 4) return;
    build_initial_simplex(quad);
}

void Triangulation::build_initial_simplex(const std::array<VertexId, 4>& quad) {
    std::array<VertexId, 4> q = quad;
    if (orient3d(points_[q[0]], points_[q[1]], points_[q[2]], points_[q[3]]) < 0)
        std::swap(q[1], q[2]);

    const TetraId inner = allocate_tet();
    tets_[inner].v = q;

    // One infinite cell per facet of the inner tetra.
    std::array<TetraId, 4> outer{};
    for (int i = 0; i < 4; ++i) {
        const TetraId t = allocate_tet();
        outer[i] = t;
        const auto f = facet_vertices(inner, i);
        tets_[t].v = {f[0], f[1], f[2], kInfiniteVertex};
    }

    // Wire all 5 cells via facet keys.
    std::map<std::array<VertexId, 3>, std::pair<TetraId, int>> open;
    auto wire = [&](TetraId t) {
        for (int i = 0; i < 4; ++i) {
            auto f = facet_vertices(t, i);
            std::array<VertexId, 3> k = {f[0], f[1], f[2]};
            std::sort(k.begin(), k.end());
            auto it = open.find(k);
            if (it == open.end()) {
                open[k] = {t, i};
            } else {
                tets_[t].n[i] = it->second.first;
                tets_[it->second.first].n[it->second.second] = t;
                open.erase(it);
            }
        }
    };
    wire(inner);
    for (TetraId t : outer) wire(t);
    if (!open.empty()) throw std::logic_error("initial simplex: unpaired facet");

    for (int i = 0; i < 4; ++i) incident_[q[i]] = inner;
    incident_[kInfiniteVertex] = outer[0];
    locate_hint_ = inner;
    dim3_ = true;
    ++version_;

    // Insert every other already-allocated vertex through the normal path.
    InsertResult scratch;
    for (VertexId v = 1; v < points_.size(); ++v) {
        if (v == q[0] || v == q[1] || v == q[2] || v == q[3]) continue;
        insert_vertex_incremental(v, scratch);
    }
}

// ---------------------------------------------------------------------------
// conflict predicate

bool Triangulation::conflict_query(TetraId t, const Point3& q, std::uint64_t qkey) const {
    const Tetra& c = tets_[t];
    const int inf = c.index_of(kInfiniteVertex);
    if (inf < 0) {
        const Point3* p[4] = {&points_[c.v[0]], &points_[c.v[1]], &points_[c.v[2]],
                              &points_[c.v[3]]};
        const std::uint64_t key[4] = {c.v[0], c.v[1], c.v[2], c.v[3]};
        return side_of_sphere_perturbed(p, key, q, qkey) > 0;
    }
    // Infinite cell: q conflicts when it lies strictly on the far side of the
    // hull facet (as seen from the finite neighbor), or is coplanar with it
    // and inside its circumcircle.
    const auto f = facet_vertices(t, inf);
    const TetraId fin = c.n[inf];
    const Tetra& fc = tets_[fin];
    const int j = fc.index_of_neighbor(t);
    const Point3& w = points_[fc.v[j]];

    const Point3& a = points_[f[0]];
    const Point3& b = points_[f[1]];
    const Point3& cc = points_[f[2]];
    const int sq = orient3d(a, b, cc, q);
    if (sq != 0) {
        const int sw = orient3d(a, b, cc, w);
        return sq * sw < 0;
    }
    const std::uint64_t key[3] = {f[0], f[1], f[2]};
    return side_of_circle_perturbed(a, b, cc, key, q, qkey) > 0;
}

bool Triangulation::in_conflict(TetraId t, const Point3& p) const {
    return conflict_query(t, p, kQueryKey);
}

int Triangulation::side_of_sphere(TetraId t, VertexId q) const {
    return conflict_query(t, points_[q], q) ? 1 : -1;
}

// ---------------------------------------------------------------------------
// locate

TetraId Triangulation::exhaustive_locate(const Point3& p) const {
    for (TetraId t = 0; t < tets_.size(); ++t) {
        if (!tets_[t].alive || is_infinite(t)) continue;
        bool inside = true;
        for (int i = 0; i < 4 && inside; ++i) {
            const auto f = facet_vertices(t, i);
            if (orient3d(points_[f[0]], points_[f[1]], points_[f[2]], p) < 0) inside = false;
        }
        if (inside) return t;
    }
    // Outside the hull: any infinite cell whose hull facet strictly faces p.
    for (TetraId t = 0; t < tets_.size(); ++t) {
        if (!tets_[t].alive || !is_infinite(t)) continue;
        const Tetra& c = tets_[t];
        const int inf = c.index_of(kInfiniteVertex);
        const auto f = facet_vertices(t, inf);
        const TetraId fin = c.n[inf];
        const int j = tets_[fin].index_of_neighbor(t);
        const Point3& w = points_[tets_[fin].v[j]];
        const int sp = orient3d(points_[f[0]], points_[f[1]], points_[f[2]], p);
        const int sw = orient3d(points_[f[0]], points_[f[1]], points_[f[2]], w);
        if (sp != 0 && sp * sw < 0) return t;
    }
    throw std::logic_error("exhaustive_locate: no containing cell");
}

TetraId Triangulation::locate(const Point3& p) const {
    walk_rng_ = walk_rng_ * 6364136223846793005ull + 1442695040888963407ull;
    const TetraId res = locate_pure(p, locate_hint_, walk_rng_);
    locate_hint_ = res;
    return res;
}

TetraId Triangulation::locate_pure(const Point3& p, TetraId hint, std::uint64_t seed) const {
    if (!dim3_) throw std::logic_error("locate: triangulation not 3-dimensional");
    TetraId cur = hint;
    if (cur == kNoTetra || cur >= tets_.size() || !tets_[cur].alive || is_infinite(cur)) {
        cur = kNoTetra;
        for (TetraId t = 0; t < tets_.size(); ++t)
            if (tets_[t].alive && !is_infinite(t)) {
                cur = t;
                break;
            }
        if (cur == kNoTetra) throw std::logic_error("locate: no finite cells");
    }

    TetraId prev = kNoTetra;
    const std::size_t max_steps = 64 + 8 * tets_.size();
    for (std::size_t step = 0; step < max_steps; ++step) {
        if (is_infinite(cur)) return cur;
        // Remembering stochastic walk: randomized facet order, never step
        // back through the entry facet.
        seed = seed * 6364136223846793005ull + 1442695040888963407ull;
        const int offset = static_cast<int>(seed >> 62);
        bool moved = false;
        for (int k = 0; k < 4; ++k) {
            const int i = (k + offset) & 3;
            if (tets_[cur].n[i] == prev) continue;
            const auto f = facet_vertices(cur, i);
            if (orient3d(points_[f[0]], points_[f[1]], points_[f[2]], p) < 0) {
                prev = cur;
                cur = tets_[cur].n[i];
                moved = true;
                break;
            }
        }
        if (!moved) return cur;
    }
    return exhaustive_locate(p);
}

// ---------------------------------------------------------------------------
// conflict region

VertexId Triangulation::duplicate_in_cells(const Point3& p,
                                           const std::vector<TetraId>& cells) const {
    for (TetraId t : cells)
        for (VertexId v : tets_[t].v)
            if (v != kInfiniteVertex && (points_[v] - p).norm() < kDuplicateDistance)
                return v;
    return kInfiniteVertex;
}

ConflictRegion Triangulation::conflict_region(const Point3& p) const {
    ConflictRegion out;
    out.version = version_;
    if (!dim3_) {
        out.pre_simplex = true;
        for (VertexId v = 1; v < points_.size(); ++v)
            if ((points_[v] - p).norm() < kDuplicateDistance) {
                out.duplicate_of = v;
                break;
            }
        return out;
    }

    TetraId seed = locate(p);
    out.duplicate_of = duplicate_in_cells(p, {seed});
    if (out.duplicate()) return out;

    if (!in_conflict(seed, p)) {
        // Rare: the located infinite cell may not itself conflict (p on the
        // hull's supporting plane). Search outward for a conflicting seed.
        const std::uint32_t epoch = next_mark();
        std::vector<TetraId> queue{seed};
        set_mark(seed, epoch);
        std::size_t qi = 0;
        TetraId found = kNoTetra;
        while (qi < queue.size() && found == kNoTetra) {
            const TetraId t = queue[qi++];
            for (TetraId u : tets_[t].n) {
                if (u == kNoTetra || marked(u, epoch) || !tets_[u].alive) continue;
                set_mark(u, epoch);
                if (in_conflict(u, p)) {
                    found = u;
                    break;
                }
                queue.push_back(u);
            }
        }
        if (found == kNoTetra)
            throw std::logic_error("conflict_region: no conflicting cell for new point");
        seed = found;
    }

    const std::uint32_t epoch = next_mark();
    out.cells.push_back(seed);
    set_mark(seed, epoch);
    std::size_t qi = 0;
    while (qi < out.cells.size()) {
        const TetraId t = out.cells[qi++];
        for (TetraId u : tets_[t].n) {
            if (marked(u, epoch)) continue;
            set_mark(u, epoch);
            if (in_conflict(u, p)) out.cells.push_back(u);
        }
    }
    out.duplicate_of = duplicate_in_cells(p, out.cells);
    return out;
}

// ---------------------------------------------------------------------------
// insertion

InsertResult Triangulation::insert_point(const Point3& p) {
    return insert_point(p, conflict_region(p));
}

InsertResult Triangulation::insert_point(const Point3& p, const ConflictRegion& region) {
    if (region.version != version_)
        throw std::logic_error("insert_point: stale conflict region");
    InsertResult res;
    if (region.duplicate()) {
        res.duplicate_of = region.duplicate_of;
        return res;
    }
    if (!p.allFinite()) throw std::invalid_argument("insert_point: non-finite point");

    if (region.pre_simplex) {
        res.vertex = allocate_vertex(p);
        res.inserted = true;
        try_build_initial_simplex();
        if (dim3_) {
            // The whole structure is fresh; report every alive cell created.
            res.created = alive_cells();
            ++version_;
        }
        return res;
    }

    const VertexId v = allocate_vertex(p);
    res.vertex = v;
    commit_region(v, region.cells, res);
    res.inserted = true;
    return res;
}

void Triangulation::insert_vertex_incremental(VertexId v, InsertResult& out) {
    const ConflictRegion region = conflict_region(points_[v]);
    if (region.duplicate())
        throw std::logic_error("insert_vertex_incremental: duplicate pending vertex");
    commit_region(v, region.cells, out);
}

void Triangulation::commit_region(VertexId v, const std::vector<TetraId>& region,
                                  InsertResult& out) {
    const std::uint32_t epoch = next_mark();
    for (TetraId t : region) set_mark(t, epoch);

    struct Boundary {
        TetraId inside;   // conflict cell
        int facet;        // its facet index toward the outside
        TetraId outside;  // surviving neighbor
    };
    std::vector<Boundary> boundary;
    for (TetraId t : region) {
        for (int i = 0; i < 4; ++i) {
            const TetraId u = tets_[t].n[i];
            if (!marked(u, epoch)) boundary.push_back({t, i, u});
        }
    }
    if (boundary.empty()) throw std::logic_error("commit_region: empty cavity boundary");

    // Destroy the cavity.
    for (TetraId t : region) {
        Tetra& c = tets_[t];
        c.alive = false;
        --alive_count_;
        for (RayId r : c.ray_refs) out.destroyed_ray_refs.push_back(r);
        out.destroyed.push_back(t);
    }
    std::sort(out.destroyed_ray_refs.begin(), out.destroyed_ray_refs.end());
    out.destroyed_ray_refs.erase(
        std::unique(out.destroyed_ray_refs.begin(), out.destroyed_ray_refs.end()),
        out.destroyed_ray_refs.end());

    // Star the cavity from v: one new cell per boundary facet.
    const Point3& p = points_[v];
    std::map<std::array<VertexId, 3>, std::pair<TetraId, int>> open;
    for (const Boundary& bf : boundary) {
        auto f = facet_vertices(bf.inside, bf.facet);
        const TetraId nt = allocate_tet();
        Tetra& c = tets_[nt];
        const bool finite =
            f[0] != kInfiniteVertex && f[1] != kInfiniteVertex && f[2] != kInfiniteVertex;
        if (finite &&
            orient3d(points_[f[0]], points_[f[1]], points_[f[2]], p) < 0)
            std::swap(f[1], f[2]);
        c.v = {f[0], f[1], f[2], v};

        // Facet opposite v is the boundary facet: wire to the survivor.
        c.n[3] = bf.outside;
        const int j = tets_[bf.outside].index_of_neighbor(bf.inside);
        if (j < 0) throw std::logic_error("commit_region: broken boundary adjacency");
        tets_[bf.outside].n[j] = nt;

        // Remaining facets pair with sibling new cells.
        for (int i = 0; i < 3; ++i) {
            auto fv = facet_vertices(nt, i);
            std::array<VertexId, 3> k = {fv[0], fv[1], fv[2]};
            std::sort(k.begin(), k.end());
            auto it = open.find(k);
            if (it == open.end()) {
                open[k] = {nt, i};
            } else {
                tets_[nt].n[i] = it->second.first;
                tets_[it->second.first].n[it->second.second] = nt;
                open.erase(it);
            }
        }
        out.created.push_back(nt);
    }
    if (!open.empty()) throw std::logic_error("commit_region: unpaired cavity facet");

    for (TetraId nt : out.created)
        for (VertexId w : tets_[nt].v) incident_[w] = nt;
    locate_hint_ = out.created.front();
    ++version_;
}

// ---------------------------------------------------------------------------
// incident cells

std::vector<TetraId> Triangulation::incident_cells(VertexId v) const {
    std::vector<TetraId> out;
    TetraId start = incident_[v];
    if (start == kNoTetra || start >= tets_.size() || !tets_[start].alive ||
        !tets_[start].has_vertex(v)) {
        start = kNoTetra;
        for (TetraId t = 0; t < tets_.size(); ++t)
            if (tets_[t].alive && tets_[t].has_vertex(v)) {
                start = t;
                break;
            }
        if (start == kNoTetra) return out;
        incident_[v] = start;
    }
    const std::uint32_t epoch = next_mark();
    out.push_back(start);
    set_mark(start, epoch);
    std::size_t qi = 0;
    while (qi < out.size()) {
        const TetraId t = out[qi++];
        for (TetraId u : tets_[t].n) {
            if (u == kNoTetra || marked(u, epoch)) continue;
            if (!tets_[u].alive || !tets_[u].has_vertex(v)) continue;
            set_mark(u, epoch);
            out.push_back(u);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// structure check

void Triangulation::check_structure() const {
    if (!dim3_) return;
    std::map<std::array<VertexId, 3>, int> facet_count;
    for (TetraId t = 0; t < tets_.size(); ++t) {
        const Tetra& c = tets_[t];
        if (!c.alive) continue;
        for (int i = 0; i < 4; ++i) {
            for (int j = i + 1; j < 4; ++j)
                if (c.v[i] == c.v[j]) throw std::logic_error("repeated vertex in cell");
            if (c.v[i] >= points_.size()) throw std::logic_error("vertex id out of range");
            const TetraId u = c.n[i];
            if (u == kNoTetra || u >= tets_.size() || !tets_[u].alive)
                throw std::logic_error("dead or missing neighbor");
            // Reciprocity through the shared facet.
            const int j = tets_[u].index_of_neighbor(t);
            if (j < 0) throw std::logic_error("neighbor reciprocity violated");
            auto f = facet_vertices(t, i);
            std::array<VertexId, 3> k1 = {f[0], f[1], f[2]};
            std::sort(k1.begin(), k1.end());
            auto g = facet_vertices(u, j);
            std::array<VertexId, 3> k2 = {g[0], g[1], g[2]};
            std::sort(k2.begin(), k2.end());
            if (k1 != k2) throw std::logic_error("shared facet mismatch");
            ++facet_count[k1];
        }
        if (!is_infinite(t)) {
            if (orient3d(points_[c.v[0]], points_[c.v[1]], points_[c.v[2]],
                         points_[c.v[3]]) <= 0)
                throw std::logic_error("finite cell not positively oriented");
        }
    }
    for (const auto& [k, cnt] : facet_count)
        if (cnt != 2) throw std::logic_error("facet not shared by exactly 2 cells");
    for (VertexId v = 0; v < points_.size(); ++v) {
        const TetraId h = incident_[v];
        if (h == kNoTetra) continue;
        if (h >= tets_.size() || !tets_[h].alive || !tets_[h].has_vertex(v))
            throw std::logic_error("stale incident-cell hint");
    }
}

// ---------------------------------------------------------------------------
// dump I/O

void Triangulation::write_dump(std::ostream& out) const {
    out << "VERTICES " << vertex_count() << "\n";
    char buf[160];
    for (VertexId v = 1; v < points_.size(); ++v) {
        std::snprintf(buf, sizeof buf, "%u %.17g %.17g %.17g\n", v, points_[v].x(),
                      points_[v].y(), points_[v].z());
        out << buf;
    }
    // Compacted alive-cell ids, ascending.
    std::vector<TetraId> remap(tets_.size(), kNoTetra);
    TetraId next = 0;
    for (TetraId t = 0; t < tets_.size(); ++t)
        if (tets_[t].alive) remap[t] = next++;
    out << "TETRAS " << next << "\n";
    for (TetraId t = 0; t < tets_.size(); ++t) {
        const Tetra& c = tets_[t];
        if (!c.alive) continue;
        out << remap[t];
        for (VertexId v : c.v) out << ' ' << v;
        for (TetraId u : c.n) out << ' ' << remap[u];
        std::snprintf(buf, sizeof buf, " %.17g %s\n", c.weight,
                      c.outside ? "outside" : "inside");
        out << buf;
    }
}

Triangulation Triangulation::read_dump(std::istream& in) {
    Triangulation tri;
    std::string tag;
    std::size_t nv = 0, nt = 0;
    if (!(in >> tag >> nv) || tag != "VERTICES")
        throw std::runtime_error("dump: expected VERTICES header");
    tri.points_.resize(nv + 1, Point3::Zero());
    tri.incident_.assign(nv + 1, kNoTetra);
    for (std::size_t i = 0; i < nv; ++i) {
        VertexId id;
        double x, y, z;
        if (!(in >> id >> x >> y >> z) || id == 0 || id > nv)
            throw std::runtime_error("dump: bad vertex line");
        tri.points_[id] = Point3(x, y, z);
    }
    if (!(in >> tag >> nt) || tag != "TETRAS")
        throw std::runtime_error("dump: expected TETRAS header");
    tri.tets_.resize(nt);
    tri.alive_count_ = nt;
    for (std::size_t i = 0; i < nt; ++i) {
        TetraId id;
        if (!(in >> id) || id >= nt) throw std::runtime_error("dump: bad tetra id");
        Tetra& c = tri.tets_[id];
        std::string label;
        for (VertexId& v : c.v)
            if (!(in >> v) || v > nv) throw std::runtime_error("dump: bad tetra vertex");
        for (TetraId& u : c.n)
            if (!(in >> u) || u >= nt) throw std::runtime_error("dump: bad tetra neighbor");
        if (!(in >> c.weight >> label)) throw std::runtime_error("dump: bad tetra line");
        if (label != "inside" && label != "outside")
            throw std::runtime_error("dump: bad label '" + label + "'");
        c.outside = (label == "outside");
        for (VertexId v : c.v) tri.incident_[v] = id;
    }
    tri.dim3_ = nt > 0;
    return tri;
}

}  // namespace ecarve
