#include "ecarve/carver.hpp"
#include "ecarve/predicates.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace ecarve {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Signed orient3d value with exact sign and a rigorous value interval.
struct GVal {
    double lo = 0.0, hi = 0.0;
    int sign = 0;
};

GVal gval(const Point3& fa, const Point3& fb, const Point3& fc, const Point3& q) {
    const FilteredValue f = orient3d_filtered(fa, fb, fc, q);
    GVal g;
    g.lo = f.value - f.error;
    g.hi = f.value + f.error;
    g.sign = f.certain_sign();
    if (g.sign == -2) g.sign = expansion_sign(orient3d_expansion(fa, fb, fc, q));
    return g;
}

struct Interval {
    double lo = -kInf, hi = kInf;
};

Interval imul(const Interval& a, const Interval& b) {
    const double c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
    Interval r;
    r.lo = std::min(std::min(c[0], c[1]), std::min(c[2], c[3]));
    r.hi = std::max(std::max(c[0], c[1]), std::max(c[2], c[3]));
    // one-ulp slack for the products themselves
    r.lo -= std::abs(r.lo) * 1e-15;
    r.hi += std::abs(r.hi) * 1e-15;
    return r;
}

// Entry/exit parameter of the segment against one facet plane, as the exact
// root of the affine function g(s) = (1-s) g(C) + s g(T):
// s* = g(C) / (g(C) - g(T)), normalized so the denominator is positive.
struct Frac {
    Interval num, den;  // den > 0
    Point3 fa, fb, fc, c, t;
    bool flip = false;  // num = -g(C), den = g(T)-g(C); else num = g(C), den = g(C)-g(T)

    Expansion num_exact() const {
        Expansion e = orient3d_expansion(fa, fb, fc, c);
        if (flip)
            for (double& x : e) x = -x;
        return e;
    }
    Expansion den_exact() const {
        const Expansion gc = orient3d_expansion(fa, fb, fc, c);
        const Expansion gt = orient3d_expansion(fa, fb, fc, t);
        return flip ? expansion_sub(gt, gc) : expansion_sub(gc, gt);
    }
};

// Segment parameter in [0,1]: 0, 1, or a proper fraction.
struct Param {
    enum Kind { Zero, Root, One } kind = Zero;
    Frac frac;  // valid when kind == Root
};

int cmp(const Param& a, const Param& b) {
    if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
    if (a.kind != Param::Root) return 0;
    // a.num/a.den vs b.num/b.den with positive denominators.
    const Interval pa = imul(a.frac.num, b.frac.den);
    const Interval pb = imul(b.frac.num, a.frac.den);
    if (pa.hi < pb.lo) return -1;
    if (pb.hi < pa.lo) return 1;
    const Expansion lhs = expansion_mul(a.frac.num_exact(), b.frac.den_exact());
    const Expansion rhs = expansion_mul(b.frac.num_exact(), a.frac.den_exact());
    return expansion_sign(expansion_sub(lhs, rhs));
}

struct CellClip {
    enum Status { Empty, Touch, Span } status = Empty;
    Param entry;  // valid for Span
};

bool segment_hits_aabb(const Point3& a, const Point3& b, const Point3& lo, const Point3& hi) {
    double t0 = 0.0, t1 = 1.0;
    for (int k = 0; k < 3; ++k) {
        const double d = b[k] - a[k];
        if (std::abs(d) < 1e-300) {
            if (a[k] < lo[k] || a[k] > hi[k]) return false;
            continue;
        }
        double s0 = (lo[k] - a[k]) / d;
        double s1 = (hi[k] - a[k]) / d;
        if (s0 > s1) std::swap(s0, s1);
        t0 = std::max(t0, s0);
        t1 = std::min(t1, s1);
        if (t0 > t1) return false;
    }
    return true;
}

// Clips the closed segment C->T against the closed (finite) cell and
// classifies the intersection: empty, a single point, or a positive-length
// sub-segment (with its exact entry parameter).
CellClip clip_cell(const Triangulation& tri, TetraId t, const Point3& c, const Point3& pt) {
    CellClip out;
    Param lo;  // max of lower bounds, starts at Zero
    Param hi;  // min of upper bounds, starts at One
    hi.kind = Param::One;

    for (int i = 0; i < 4; ++i) {
        const auto f = tri.facet_vertices(t, i);
        const Point3& fa = tri.point(f[0]);
        const Point3& fb = tri.point(f[1]);
        const Point3& fc = tri.point(f[2]);
        const GVal gc = gval(fa, fb, fc, c);
        const GVal gt = gval(fa, fb, fc, pt);

        if (gc.sign >= 0 && gt.sign >= 0) continue;  // no constraint on [0,1]
        if (gc.sign < 0 && gt.sign < 0) return out;  // disjoint

        if (gc.sign < 0) {
            // entering: feasible for s >= s*
            Param p;
            if (gt.sign == 0) {
                p.kind = Param::One;
            } else {
                p.kind = Param::Root;
                p.frac = {Interval{-gc.hi, -gc.lo},
                          Interval{gt.lo - gc.hi, gt.hi - gc.lo},
                          fa, fb, fc, c, pt, true};
            }
            if (cmp(p, lo) > 0) lo = p;
        } else {
            // exiting: feasible for s <= s*
            Param p;
            if (gc.sign == 0) {
                p.kind = Param::Zero;
            } else {
                p.kind = Param::Root;
                p.frac = {Interval{gc.lo, gc.hi},
                          Interval{gc.lo - gt.hi, gc.hi - gt.lo},
                          fa, fb, fc, c, pt, false};
            }
            if (cmp(p, hi) < 0) hi = p;
        }
    }

    const int c01 = cmp(lo, hi);
    if (c01 > 0) return out;
    out.status = (c01 == 0) ? CellClip::Touch : CellClip::Span;
    out.entry = lo;
    return out;
}

}  // namespace

std::vector<TetraId> walk_ray(const Triangulation& tri, const Point3& center,
                              VertexId target, bool* center_outside_hull) {
    if (!tri.valid_vertex(target)) throw std::invalid_argument("walk_ray: unknown target vertex");
    if (center_outside_hull) *center_outside_hull = false;
    const Point3 t = tri.point(target);
    if ((center - t).norm() < kDuplicateDistance) return {};
    if (!tri.dimension3()) return {};

    const TetraId start = tri.locate_pure(center, kNoTetra, 0x2545f4914f6cdd1dull);
    if (center_outside_hull) *center_outside_hull = tri.is_infinite(start);

    std::unordered_set<TetraId> visited;
    std::vector<TetraId> stack;
    if (tri.is_infinite(start)) {
        // The camera sits outside the hull: seed the finite search with the
        // hull cells found by flooding the infinite shell.
        std::unordered_set<TetraId> shell;
        std::vector<TetraId> sstack{start};
        shell.insert(start);
        while (!sstack.empty()) {
            const TetraId s = sstack.back();
            sstack.pop_back();
            const Tetra& cell = tri.tet(s);
            const int inf = cell.index_of(kInfiniteVertex);
            for (int i = 0; i < 4; ++i) {
                const TetraId u = cell.n[i];
                if (i == inf) {
                    if (visited.insert(u).second) stack.push_back(u);
                } else if (shell.insert(u).second) {
                    sstack.push_back(u);
                }
            }
        }
    } else {
        stack.push_back(start);
        visited.insert(start);
    }

    std::vector<std::pair<TetraId, Param>> spans;
    while (!stack.empty()) {
        const TetraId cur = stack.back();
        stack.pop_back();
        const CellClip clip = clip_cell(tri, cur, center, t);
        if (clip.status == CellClip::Empty) continue;
        if (clip.status == CellClip::Span) spans.emplace_back(cur, clip.entry);
        for (TetraId u : tri.tet(cur).n) {
            if (tri.is_infinite(u)) continue;
            if (visited.insert(u).second) stack.push_back(u);
        }
    }

    std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) {
        const int c = cmp(a.second, b.second);
        if (c != 0) return c < 0;
        return a.first < b.first;
    });
    std::vector<TetraId> out;
    out.reserve(spans.size());
    for (const auto& [cell, param] : spans) out.push_back(cell);
    return out;
}

std::vector<WalkResult> walk_rays(const Triangulation& tri,
                                  std::span<const std::pair<Point3, VertexId>> rays,
                                  bool parallel) {
    std::vector<WalkResult> out(rays.size());
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 8)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(rays.size()); ++i)
            out[i].cells = walk_ray(tri, rays[i].first, rays[i].second,
                                    &out[i].center_outside_hull);
    } else {
        for (std::size_t i = 0; i < rays.size(); ++i)
            out[i].cells = walk_ray(tri, rays[i].first, rays[i].second,
                                    &out[i].center_outside_hull);
    }
    return out;
}

// ---------------------------------------------------------------------------
// ICH increments

void apply_ich(Triangulation& tri, const std::vector<TetraId>& traversed,
               const IchWeights& w, double sign, RayId id, bool touch_ray_refs) {
    std::unordered_set<TetraId> trav(traversed.begin(), traversed.end());

    std::vector<TetraId> ring1;
    std::unordered_set<TetraId> ring1_set;
    for (TetraId t : traversed) {
        Tetra& cell = tri.tet_mut(t);
        cell.weight += sign * w.w1;
        if (touch_ray_refs) {
            auto& refs = cell.ray_refs;
            if (sign > 0) {
                refs.insert(std::lower_bound(refs.begin(), refs.end(), id), id);
            } else {
                const auto it = std::lower_bound(refs.begin(), refs.end(), id);
                if (it != refs.end() && *it == id) refs.erase(it);
            }
        }
        for (TetraId u : cell.n) {
            if (trav.count(u) || ring1_set.count(u)) continue;
            ring1_set.insert(u);
            ring1.push_back(u);
        }
    }

    std::vector<TetraId> ring2;
    std::unordered_map<TetraId, int> ring2_count;
    for (TetraId t : ring1) {
        tri.tet_mut(t).weight += sign * w.w2;
        for (TetraId u : tri.tet(t).n) {
            if (trav.count(u) || ring1_set.count(u)) continue;
            auto [it, fresh] = ring2_count.emplace(u, 0);
            if (fresh) ring2.push_back(u);
            ++it->second;
        }
    }
    for (TetraId t : ring2) {
        const double inc = std::min(w.w3 * ring2_count[t], w.w2);
        tri.tet_mut(t).weight += sign * inc;
    }
}

// ---------------------------------------------------------------------------
// Carver

Carver::Carver(Triangulation& tri, IchWeights w) : tri_(tri), weights_(w) {
    if (!w.valid()) throw std::invalid_argument("Carver: invalid ICH weights");
}

void Carver::apply_ray(ViewingRay& r, double sign) {
    // Same increments as apply_ich(), with epoch-marked scratch instead of
    // hash sets; this is the hot path of incremental retracing.
    mark_.resize(std::max(mark_.size(), tri_.cell_storage_size() + 1), 0);
    ring2_count_.resize(mark_.size(), 0);
    const std::uint32_t base = ++epoch_ << 2;
    constexpr std::uint32_t kTrav = 1, kRing1 = 2, kRing2 = 3;
    auto state = [&](TetraId t) -> std::uint32_t {
        return (mark_[t] & ~3u) == base ? (mark_[t] & 3u) : 0u;
    };

    for (TetraId t : r.traversed) mark_[t] = base | kTrav;

    ring1_scratch_.clear();
    for (TetraId t : r.traversed) {
        Tetra& cell = tri_.tet_mut(t);
        cell.weight += sign * weights_.w1;
        auto& refs = cell.ray_refs;
        if (sign > 0) {
            refs.insert(std::lower_bound(refs.begin(), refs.end(), r.id), r.id);
        } else {
            const auto it = std::lower_bound(refs.begin(), refs.end(), r.id);
            if (it != refs.end() && *it == r.id) refs.erase(it);
        }
        for (TetraId u : cell.n) {
            if (state(u) != 0) continue;
            mark_[u] = base | kRing1;
            ring1_scratch_.push_back(u);
        }
    }

    ring2_scratch_.clear();
    for (TetraId t : ring1_scratch_) {
        tri_.tet_mut(t).weight += sign * weights_.w2;
        for (TetraId u : tri_.tet(t).n) {
            const std::uint32_t s = state(u);
            if (s == kTrav || s == kRing1) continue;
            if (s != kRing2) {
                mark_[u] = base | kRing2;
                ring2_count_[u] = 0;
                ring2_scratch_.push_back(u);
            }
            ++ring2_count_[u];
        }
    }
    for (TetraId t : ring2_scratch_)
        tri_.tet_mut(t).weight += sign * std::min(weights_.w3 * ring2_count_[t], weights_.w2);
}

RayId Carver::add_ray(const Point3& center, VertexId target) {
    const double t0 = now_s();
    ViewingRay r;
    r.id = static_cast<RayId>(rays_.size());
    r.camera_center = center;
    r.target = target;
    r.traversed = walk_ray(tri_, center, target, &r.hull_clipped);
    rays_.push_back(std::move(r));
    apply_ray(rays_.back(), +1.0);
    ++work_.walks;
    work_.seconds += now_s() - t0;
    return rays_.back().id;
}

std::vector<RayId> Carver::add_rays(std::span<const std::pair<Point3, VertexId>> rays,
                                    bool parallel) {
    const double t0 = now_s();
    auto walked = walk_rays(tri_, rays, parallel);
    std::vector<RayId> ids;
    ids.reserve(rays.size());
    for (std::size_t i = 0; i < rays.size(); ++i) {
        ViewingRay r;
        r.id = static_cast<RayId>(rays_.size());
        r.camera_center = rays[i].first;
        r.target = rays[i].second;
        r.traversed = std::move(walked[i].cells);
        r.hull_clipped = walked[i].center_outside_hull;
        rays_.push_back(std::move(r));
        apply_ray(rays_.back(), +1.0);
        ids.push_back(rays_.back().id);
    }
    work_.walks += rays.size();
    work_.seconds += now_s() - t0;
    return ids;
}

std::vector<TetraId> Carver::mark_free_space(std::span<const RayId> ids) const {
    std::vector<TetraId> out;
    std::unordered_set<TetraId> seen;
    for (RayId id : ids)
        for (TetraId t : rays_[id].traversed)
            if (seen.insert(t).second) out.push_back(t);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<RayId> Carver::affected_rays(const std::vector<TetraId>& region) const {
    // Rays traversing the region or its two facet-adjacency rings: exactly
    // the rays whose traversal or ring increments can touch cells whose
    // adjacency changes with the insertion.
    std::unordered_set<TetraId> zone(region.begin(), region.end());
    std::vector<TetraId> frontier(region.begin(), region.end());
    for (int ring = 0; ring < 2; ++ring) {
        std::vector<TetraId> next;
        for (TetraId t : frontier)
            for (TetraId u : tri_.tet(t).n)
                if (u != kNoTetra && zone.insert(u).second) next.push_back(u);
        frontier = std::move(next);
    }
    std::vector<RayId> out;
    std::unordered_set<RayId> seen;
    for (TetraId t : zone) {
        if (!tri_.tet(t).alive) continue;
        for (RayId r : tri_.tet(t).ray_refs)
            if (seen.insert(r).second) out.push_back(r);
    }
    std::sort(out.begin(), out.end());
    return out;
}

InsertResult Carver::insert_with_retrace(const Point3& p) {
    return insert_with_retrace(p, tri_.conflict_region(p));
}

InsertResult Carver::insert_with_retrace(const Point3& p, const ConflictRegion& region) {
    if (region.duplicate() || region.pre_simplex) return tri_.insert_point(p, region);

    const std::vector<RayId> affected = affected_rays(region.cells);
    // Only rays that actually traverse a destroyed cell need a fresh walk:
    // for the rest the cavity volume was never on their segment, so the
    // cached traversal stays valid and only the ring increments move.
    std::unordered_set<RayId> need_walk;
    for (TetraId t : region.cells)
        for (RayId id : tri_.tet(t).ray_refs) need_walk.insert(id);
    {
        const double t0 = now_s();
        for (RayId id : affected) apply_ray(rays_[id], -1.0);
        work_.seconds += now_s() - t0;
    }

    bool hull_grew = false;
    for (TetraId t : region.cells)
        if (tri_.is_infinite(t)) hull_grew = true;

    InsertResult res = tri_.insert_point(p, region);

    // Hull-growing insertions can put new cells on the path of rays that had
    // no traversed cell there (their refs cannot flag them). Re-walk every
    // hull-clipped ray whose segment meets the new cells' bounding box.
    if (hull_grew) {
        Point3 lo = Point3::Constant(kInf), hi = Point3::Constant(-kInf);
        for (TetraId t : res.created) {
            if (tri_.is_infinite(t)) continue;
            for (VertexId v : tri_.tet(t).v) {
                lo = lo.cwiseMin(tri_.point(v));
                hi = hi.cwiseMax(tri_.point(v));
            }
        }
        const double margin = 1e-9 * (1.0 + (hi - lo).norm());
        lo.array() -= margin;
        hi.array() += margin;

        std::unordered_set<RayId> already(affected.begin(), affected.end());
        const double t0 = now_s();
        for (ViewingRay& r : rays_) {
            if (!r.hull_clipped || already.count(r.id)) continue;
            if (!segment_hits_aabb(r.camera_center, tri_.point(r.target), lo, hi)) continue;
            // The subtraction is exact post-insert: a not-otherwise-affected
            // ray has no adjacency change within its old traversal's 2-ring.
            apply_ray(r, -1.0);
            r.traversed = walk_ray(tri_, r.camera_center, r.target, &r.hull_clipped);
            apply_ray(r, +1.0);
            ++work_.walks;
        }
        work_.seconds += now_s() - t0;
    }

    {
        const double t0 = now_s();
        for (RayId id : affected) {
            if (need_walk.count(id)) {
                rays_[id].traversed = walk_ray(tri_, rays_[id].camera_center, rays_[id].target,
                                               &rays_[id].hull_clipped);
                ++work_.walks;
            }
            apply_ray(rays_[id], +1.0);
        }
        work_.seconds += now_s() - t0;
    }
    return res;
}

void Carver::recompute_from_scratch() {
    for (TetraId t = 0; t < tri_.cell_storage_size(); ++t) {
        Tetra& cell = tri_.tet_mut(t);
        cell.weight = 0.0;
        cell.ray_refs.clear();
    }
    for (ViewingRay& r : rays_) {
        r.traversed = walk_ray(tri_, r.camera_center, r.target, &r.hull_clipped);
        apply_ray(r, +1.0);
    }
}

}  // namespace ecarve
