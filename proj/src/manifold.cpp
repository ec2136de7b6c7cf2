#include "ecarve/manifold.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <queue>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace ecarve {

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct GrowEntry {
    double weight;
    TetraId cell;
};
struct GrowLess {
    bool operator()(const GrowEntry& a, const GrowEntry& b) const {
        if (a.weight != b.weight) return a.weight < b.weight;
        return a.cell > b.cell;  // pop smaller ids first on ties
    }
};

}  // namespace

Manifold::Manifold(Triangulation& tri, Carver& carver) : tri_(tri), carver_(carver) {}

bool Manifold::carvable(TetraId t) const {
    const Tetra& c = tri_.tet(t);
    return c.alive && !tri_.is_infinite(t) && !c.ray_refs.empty();
}

void Manifold::set_outside(TetraId t, bool value) {
    Tetra& c = tri_.tet_mut(t);
    if (c.outside == value) return;
    c.outside = value;
    outside_count_ += value ? 1 : -1;
}

std::vector<SurfaceFacet> Manifold::surface_facets() const {
    std::vector<SurfaceFacet> out;
    for (TetraId t = 0; t < tri_.cell_storage_size(); ++t) {
        const Tetra& c = tri_.tet(t);
        if (!c.alive || !c.outside) continue;
        for (int i = 0; i < 4; ++i)
            if (!tri_.tet(c.n[i]).outside) out.push_back({t, i});
    }
    return out;
}

bool Manifold::collect_link(VertexId v,
                            std::vector<std::pair<VertexId, VertexId>>& edges) const {
    edges.clear();
    for (TetraId t : tri_.incident_cells(v)) {
        const Tetra& c = tri_.tet(t);
        if (!c.outside) continue;
        const int vi = c.index_of(v);
        for (int i = 0; i < 4; ++i) {
            if (i == vi) continue;  // that facet does not contain v
            if (tri_.tet(c.n[i]).outside) continue;
            const auto f = tri_.facet_vertices(t, i);
            VertexId a = kInfiniteVertex, b = kInfiniteVertex;
            for (VertexId w : f)
                if (w != v) (a == kInfiniteVertex ? a : b) = w;
            if (a > b) std::swap(a, b);
            edges.emplace_back(a, b);
        }
    }
    std::sort(edges.begin(), edges.end());
    return std::adjacent_find(edges.begin(), edges.end()) == edges.end();
}

bool Manifold::is_regular_vertex(VertexId v) const {
    std::vector<std::pair<VertexId, VertexId>> edges;
    if (!collect_link(v, edges)) return false;
    if (edges.empty()) return true;  // not on the surface
    if (edges.size() < 3) return false;

    // Regular iff the link edges form one closed cycle: every link vertex of
    // degree 2, connected, with as many edges as vertices.
    std::unordered_map<VertexId, std::array<VertexId, 2>> adj;
    for (const auto& [a, b] : edges) {
        for (VertexId w : {a, b}) {
            auto [it, fresh] = adj.emplace(w, std::array<VertexId, 2>{kInfiniteVertex,
                                                                      kInfiniteVertex});
            auto& slots = it->second;
            (void)fresh;
            if (slots[0] == kInfiniteVertex)
                slots[0] = (w == a) ? b : a;
            else if (slots[1] == kInfiniteVertex)
                slots[1] = (w == a) ? b : a;
            else
                return false;  // degree > 2
        }
    }
    if (adj.size() != edges.size()) return false;
    for (const auto& [w, slots] : adj)
        if (slots[1] == kInfiniteVertex) return false;  // degree 1

    // Walk the cycle from an arbitrary start.
    const VertexId start = edges.front().first;
    VertexId prev = start;
    VertexId cur = adj[start][0];
    std::size_t steps = 1;
    while (cur != start) {
        const auto& slots = adj[cur];
        const VertexId next = (slots[0] == prev) ? slots[1] : slots[0];
        prev = cur;
        cur = next;
        if (++steps > edges.size()) return false;
    }
    return steps == edges.size();
}

bool Manifold::vertex_link_ok(VertexId v) const { return is_regular_vertex(v); }

bool Manifold::try_add(TetraId t) {
    if (!carvable(t) || tri_.tet(t).outside) return false;
    set_outside(t, true);
    for (VertexId v : tri_.tet(t).v) {
        if (!vertex_link_ok(v)) {
            set_outside(t, false);
            return false;
        }
    }
    return true;
}

bool Manifold::try_remove(TetraId t) {
    if (!tri_.tet(t).outside) return false;
    set_outside(t, false);
    for (VertexId v : tri_.tet(t).v) {
        if (!vertex_link_ok(v)) {
            set_outside(t, true);
            return false;
        }
    }
    return true;
}

void Manifold::grow(std::span<const TetraId> seeds) {
    std::priority_queue<GrowEntry, std::vector<GrowEntry>, GrowLess> queue;
    for (TetraId t : seeds)
        if (carvable(t) && !tri_.tet(t).outside) queue.push({tri_.tet(t).weight, t});

    while (!queue.empty()) {
        const GrowEntry e = queue.top();
        queue.pop();
        const Tetra& c = tri_.tet(e.cell);
        if (!c.alive || c.outside) continue;
        if (c.weight != e.weight) {  // stale key: re-queue at the current weight
            queue.push({c.weight, e.cell});
            continue;
        }
        if (!try_add(e.cell)) continue;
        for (TetraId u : c.n) {
            const Tetra& nb = tri_.tet(u);
            if (!nb.outside && carvable(u)) queue.push({nb.weight, u});
        }
    }
}

Manifold::BootstrapStatus Manifold::bootstrap(std::span<const KeyframePoint> points,
                                              bool parallel_rays, KeyframeTimings* timings) {
    const double t0 = now_s();
    const double ray0 = carver_.work_stats().seconds;
    std::vector<std::pair<Point3, VertexId>> rays;
    for (const KeyframePoint& kp : points) {
        const InsertResult res = carver_.insert_with_retrace(kp.position);
        if (!res.inserted) continue;
        for (const Point3& c : kp.ray_centers) rays.emplace_back(c, res.vertex);
    }
    const double t1 = now_s();
    carver_.add_rays(rays, parallel_rays);
    const double t2 = now_s();

    TetraId best = kNoTetra;
    double best_w = -1.0;
    for (TetraId t = 0; t < tri_.cell_storage_size(); ++t) {
        if (!carvable(t)) continue;
        const double w = tri_.tet(t).weight;
        if (w > best_w || (w == best_w && (best == kNoTetra || t < best))) {
            best_w = w;
            best = t;
        }
    }
    BootstrapStatus status = BootstrapStatus::Ok;
    if (best == kNoTetra) {
        status = BootstrapStatus::EmptyManifold;
    } else {
        const TetraId seeds[1] = {best};
        grow(seeds);
    }
    if (timings) {
        const double ray_work = carver_.work_stats().seconds - ray0;
        timings->rays_ich_s += ray_work;
        timings->insertion_s += (t1 - t0) - (ray_work - (t2 - t1));
        timings->grow_shrink_s += now_s() - t2;
    }
    return status;
}

Manifold::InsertOutcome Manifold::insert_with_shrink(const Point3& p) {
    InsertOutcome out;
    const ConflictRegion region = tri_.conflict_region(p);
    if (region.duplicate()) {
        out.status = InsertStatus::Duplicate;
        out.vertex = region.duplicate_of;
        return out;
    }
    if (region.pre_simplex) {
        const InsertResult res = carver_.insert_with_retrace(p, region);
        out.status = InsertStatus::Inserted;
        out.vertex = res.vertex;
        return out;
    }

    auto conflict_outside_count = [&] {
        std::size_t n = 0;
        for (TetraId t : region.cells)
            if (tri_.tet(t).outside) ++n;
        return n;
    };

    std::vector<TetraId> removed_log;
    if (conflict_outside_count() > 0) {
        const double shrink0 = now_s();
        // E starts as D plus one adjacency ring and expands up to two more
        // rings when shrinking stalls.
        std::unordered_set<TetraId> e_set(region.cells.begin(), region.cells.end());
        std::vector<TetraId> members(region.cells.begin(), region.cells.end());
        std::vector<TetraId> frontier = members;

        auto expand_ring = [&] {
            std::vector<TetraId> next;
            for (TetraId t : frontier)
                for (TetraId u : tri_.tet(t).n) {
                    if (tri_.is_infinite(u) || !tri_.tet(u).alive) continue;
                    if (e_set.insert(u).second) {
                        next.push_back(u);
                        members.push_back(u);
                    }
                }
            frontier = std::move(next);
        };

        expand_ring();
        for (int round = 0; round <= 2; ++round) {
            // Weight-ascending shrink passes over E until a fixpoint.
            bool progress = true;
            while (progress && conflict_outside_count() > 0) {
                progress = false;
                std::vector<TetraId> cand;
                for (TetraId t : members)
                    if (tri_.tet(t).outside) cand.push_back(t);
                std::sort(cand.begin(), cand.end(), [&](TetraId a, TetraId b) {
                    const double wa = tri_.tet(a).weight, wb = tri_.tet(b).weight;
                    if (wa != wb) return wa < wb;
                    return a < b;
                });
                for (TetraId t : cand) {
                    if (try_remove(t)) {
                        removed_log.push_back(t);
                        progress = true;
                    }
                }
            }
            if (conflict_outside_count() == 0 || round == 2) break;
            expand_ring();
        }
        shrink_seconds_ += now_s() - shrink0;
    }

    if (conflict_outside_count() > 0) {
        // Restore the exact previous outside set and drop the point.
        for (auto it = removed_log.rbegin(); it != removed_log.rend(); ++it)
            set_outside(*it, true);
        out.status = InsertStatus::Dropped;
        return out;
    }

    const InsertResult res = carver_.insert_with_retrace(p, region);
    out.status = InsertStatus::Inserted;
    out.vertex = res.vertex;
    return out;
}

std::vector<TetraId> Manifold::surface_contact_seeds() const {
    // Carvable inside cells sharing a facet, edge or vertex with the surface:
    // the union of the stars of all surface vertices covers all three.
    std::unordered_set<VertexId> surf_vertices;
    for (const SurfaceFacet& sf : surface_facets())
        for (VertexId v : tri_.facet_vertices(sf.cell, sf.facet))
            if (v != kInfiniteVertex) surf_vertices.insert(v);

    std::vector<VertexId> ordered(surf_vertices.begin(), surf_vertices.end());
    std::sort(ordered.begin(), ordered.end());

    std::vector<TetraId> seeds;
    std::unordered_set<TetraId> seen;
    for (VertexId v : ordered)
        for (TetraId t : tri_.incident_cells(v))
            if (!tri_.tet(t).outside && carvable(t) && seen.insert(t).second)
                seeds.push_back(t);
    return seeds;
}

void Manifold::keyframe_update(std::span<const KeyframePoint> points, bool parallel_rays,
                               KeyframeTimings* timings) {
    const double t0 = now_s();
    const double ray0 = carver_.work_stats().seconds;
    const double shrink0 = shrink_seconds_;
    std::vector<std::pair<Point3, VertexId>> rays;
    for (const KeyframePoint& kp : points) {
        const InsertOutcome o = insert_with_shrink(kp.position);
        if (o.status == InsertStatus::Inserted)
            for (const Point3& c : kp.ray_centers) rays.emplace_back(c, o.vertex);
    }
    const double t1 = now_s();
    carver_.add_rays(rays, parallel_rays);
    const double t2 = now_s();

    std::vector<TetraId> seeds = surface_contact_seeds();
    if (outside_count_ == 0) {
        // Nothing on the surface to grow from (empty or fully shrunk state):
        // reseed like the bootstrap with the weight-maximal carvable cell.
        TetraId best = kNoTetra;
        double best_w = -1.0;
        for (TetraId t = 0; t < tri_.cell_storage_size(); ++t) {
            if (!carvable(t) || tri_.tet(t).outside) continue;
            const double w = tri_.tet(t).weight;
            if (w > best_w) {
                best_w = w;
                best = t;
            }
        }
        if (best != kNoTetra) seeds.push_back(best);
    }
    grow(seeds);
    const double t3 = now_s();

    if (timings) {
        // Ray work (walks + weight increments, including retraces inside
        // insertions) is charged to the rays bucket; shrinking to grow/shrink.
        const double ray_work = carver_.work_stats().seconds - ray0;
        const double shrink_work = shrink_seconds_ - shrink0;
        const double retrace_inside_insert = ray_work - (t2 - t1);
        timings->insertion_s += (t1 - t0) - retrace_inside_insert - shrink_work;
        timings->rays_ich_s += ray_work;
        timings->grow_shrink_s += (t3 - t2) + shrink_work;
    }
}

SurfaceMesh Manifold::extract_surface() const {
    SurfaceMesh mesh;
    std::unordered_map<VertexId, std::uint32_t> remap;
    for (const SurfaceFacet& sf : surface_facets()) {
        const auto f = tri_.facet_vertices(sf.cell, sf.facet);
        std::array<std::uint32_t, 3> tri_idx{};
        // facet_vertices orients the right-hand normal away from the owning
        // cell; reverse so normals point toward the outside set.
        const VertexId ordered[3] = {f[0], f[2], f[1]};
        for (int k = 0; k < 3; ++k) {
            const VertexId v = ordered[k];
            auto [it, fresh] = remap.emplace(v, static_cast<std::uint32_t>(mesh.vertices.size()));
            if (fresh) mesh.vertices.push_back(tri_.point(v));
            tri_idx[k] = it->second;
        }
        mesh.triangles.push_back(tri_idx);
    }
    return mesh;
}

void Manifold::check_invariants() const {
    std::size_t counted = 0;
    for (TetraId t = 0; t < tri_.cell_storage_size(); ++t) {
        const Tetra& c = tri_.tet(t);
        if (!c.alive) {
            if (c.outside) throw std::logic_error("dead cell labeled outside");
            continue;
        }
        if (!c.outside) continue;
        ++counted;
        if (tri_.is_infinite(t)) throw std::logic_error("infinite cell labeled outside");
        if (c.ray_refs.empty()) throw std::logic_error("outside cell without ray refs");
    }
    if (counted != outside_count_) throw std::logic_error("outside count out of sync");

    // Per-edge triangle count and per-vertex regularity over the surface.
    std::unordered_set<VertexId> surf_vertices;
    std::map<std::pair<VertexId, VertexId>, int> edge_count;
    for (const SurfaceFacet& sf : surface_facets()) {
        const auto f = tri_.facet_vertices(sf.cell, sf.facet);
        for (int a = 0; a < 3; ++a) {
            surf_vertices.insert(f[a]);
            for (int b = a + 1; b < 3; ++b) {
                auto key = std::minmax(f[a], f[b]);
                ++edge_count[{key.first, key.second}];
            }
        }
    }
    for (const auto& [edge, cnt] : edge_count)
        if (cnt != 2) throw std::logic_error("surface edge without exactly 2 triangles");
    for (VertexId v : surf_vertices)
        if (!is_regular_vertex(v)) throw std::logic_error("irregular surface vertex");
}

}  // namespace ecarve
