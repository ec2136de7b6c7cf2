#include "ecarve/klt.hpp"

#include <cmath>

namespace ecarve {

Pyramid::Pyramid(const GrayImage& img, int levels) {
    imgs_.push_back(img);
    for (int l = 1; l < levels; ++l) {
        const GrayImage& prev = imgs_.back();
        if (prev.width < 8 || prev.height < 8) break;
        imgs_.push_back(downsample_half(prev));
    }
}

namespace {

KltResult track_point(const Pyramid& prev, const Pyramid& cur, const Point2& pt,
                      const KltParams& p) {
    KltResult out;
    const int half = p.window / 2;
    const int top = std::min(prev.levels(), cur.levels()) - 1;

    Point2 g = pt / double(1 << top);  // current estimate at the working level
    for (int level = top; level >= 0; --level) {
        const GrayImage& ip = prev.level(level);
        const GrayImage& ic = cur.level(level);
        const Point2 base = pt / double(1 << level);

        if (!ip.in_bounds(base.x(), base.y())) return out;

        // Template window and gradient matrix from the previous image.
        double ixx = 0.0, ixy = 0.0, iyy = 0.0;
        std::vector<double> tmpl(std::size_t(p.window) * p.window);
        std::vector<double> gxv(tmpl.size()), gyv(tmpl.size());
        std::size_t k = 0;
        for (int wy = -half; wy <= half; ++wy) {
            for (int wx = -half; wx <= half; ++wx, ++k) {
                const double sx = base.x() + wx, sy = base.y() + wy;
                tmpl[k] = ip.sample(sx, sy);
                const double gx = 0.5 * (ip.sample(sx + 1, sy) - ip.sample(sx - 1, sy));
                const double gy = 0.5 * (ip.sample(sx, sy + 1) - ip.sample(sx, sy - 1));
                gxv[k] = gx;
                gyv[k] = gy;
                ixx += gx * gx;
                ixy += gx * gy;
                iyy += gy * gy;
            }
        }
        const double area = double(p.window) * p.window;
        const double tr = ixx + iyy, det = ixx * iyy - ixy * ixy;
        const double min_eig = 0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4.0 * det)));
        if (min_eig / area < p.min_eigen) return out;

        for (int it = 0; it < p.max_iters; ++it) {
            if (!ic.in_bounds(g.x(), g.y())) return out;
            double bx = 0.0, by = 0.0;
            k = 0;
            for (int wy = -half; wy <= half; ++wy)
                for (int wx = -half; wx <= half; ++wx, ++k) {
                    const double di = ic.sample(g.x() + wx, g.y() + wy) - tmpl[k];
                    bx += di * gxv[k];
                    by += di * gyv[k];
                }
            // Solve G d = -b.
            const double dx = -(iyy * bx - ixy * by) / det;
            const double dy = -(-ixy * bx + ixx * by) / det;
            if (!std::isfinite(dx) || !std::isfinite(dy)) return out;
            if (std::hypot(dx, dy) > 2.0 * p.window) return out;  // diverged
            g.x() += dx;
            g.y() += dy;
            if (std::hypot(dx, dy) < p.epsilon) break;
        }
        if (level > 0) g *= 2.0;
    }

    if (!cur.level(0).in_bounds(g.x(), g.y())) return out;
    out.position = g;
    out.status = KltStatus::Tracked;
    return out;
}

}  // namespace

std::vector<KltResult> klt_step(const Pyramid& prev, const Pyramid& cur,
                                const std::vector<Point2>& pts, const KltParams& p,
                                bool parallel) {
    std::vector<KltResult> out(pts.size());
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 32)
        for (std::int64_t i = 0; i < std::int64_t(pts.size()); ++i)
            out[i] = track_point(prev, cur, pts[i], p);
    } else {
        for (std::size_t i = 0; i < pts.size(); ++i) out[i] = track_point(prev, cur, pts[i], p);
    }
    return out;
}

std::vector<KltResult> klt_step(const GrayImage& prev, const GrayImage& cur,
                                const std::vector<Point2>& pts, const KltParams& p,
                                bool parallel) {
    if (prev.width != cur.width || prev.height != cur.height)
        throw std::invalid_argument("klt_step: image sizes differ");
    const Pyramid pp(prev, p.levels), pc(cur, p.levels);
    return klt_step(pp, pc, pts, p, parallel);
}

}  // namespace ecarve
