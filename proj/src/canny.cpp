#include "ecarve/canny.hpp"

#include <cmath>
#include <stdexcept>

namespace ecarve {

std::vector<EdgeChain> canny_edges(const GrayImage& img, double low, double high) {
    if (img.width < 3 || img.height < 3)
        throw std::invalid_argument("canny_edges: image smaller than 3x3");
    if (!(low > 0.0) || !(high > low))
        throw std::invalid_argument("canny_edges: need 0 < low < high");

    const int w = img.width, h = img.height;
    const GrayImage sm = gaussian_blur(img, 1.4);

    std::vector<float> gx(std::size_t(w) * h, 0.f), gy(std::size_t(w) * h, 0.f),
        mag(std::size_t(w) * h, 0.f);
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const double sx = (sm.px(x + 1, y - 1) + 2.0 * sm.px(x + 1, y) + sm.px(x + 1, y + 1)) -
                              (sm.px(x - 1, y - 1) + 2.0 * sm.px(x - 1, y) + sm.px(x - 1, y + 1));
            const double sy = (sm.px(x - 1, y + 1) + 2.0 * sm.px(x, y + 1) + sm.px(x + 1, y + 1)) -
                              (sm.px(x - 1, y - 1) + 2.0 * sm.px(x, y - 1) + sm.px(x + 1, y - 1));
            const std::size_t i = std::size_t(y) * w + x;
            gx[i] = float(sx / 4.0);  // normalized Sobel
            gy[i] = float(sy / 4.0);
            mag[i] = float(std::hypot(gx[i], gy[i]));
        }
    }

    // Non-maximum suppression along the rounded gradient direction. On exact
    // plateaus the asymmetric tie rule (> backward, >= forward) keeps one
    // pixel per ridge.
    std::vector<unsigned char> keep(std::size_t(w) * h, 0);
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const std::size_t i = std::size_t(y) * w + x;
            const float m = mag[i];
            if (m < low) continue;
            const float ax = gx[i] / m, ay = gy[i] / m;
            const int dx = ax > 0.4142f ? 1 : (ax < -0.4142f ? -1 : 0);
            const int dy = ay > 0.4142f ? 1 : (ay < -0.4142f ? -1 : 0);
            const float fwd = mag[std::size_t(y + dy) * w + (x + dx)];
            const float back = mag[std::size_t(y - dy) * w + (x - dx)];
            if (m > back && m >= fwd) keep[i] = (m >= high) ? 2 : 1;
        }
    }

    // Hysteresis: flood from strong pixels through weak ones (8-connected).
    std::vector<unsigned char> on(std::size_t(w) * h, 0);
    std::vector<std::array<int, 2>> stack;
    for (int y = 1; y < h - 1; ++y)
        for (int x = 1; x < w - 1; ++x)
            if (keep[std::size_t(y) * w + x] == 2 && !on[std::size_t(y) * w + x]) {
                on[std::size_t(y) * w + x] = 1;
                stack.push_back({x, y});
                while (!stack.empty()) {
                    const auto [cx, cy] = stack.back();
                    stack.pop_back();
                    for (int oy = -1; oy <= 1; ++oy)
                        for (int ox = -1; ox <= 1; ++ox) {
                            const int nx = cx + ox, ny = cy + oy;
                            if (nx < 1 || ny < 1 || nx >= w - 1 || ny >= h - 1) continue;
                            const std::size_t ni = std::size_t(ny) * w + nx;
                            if (keep[ni] && !on[ni]) {
                                on[ni] = 1;
                                stack.push_back({nx, ny});
                            }
                        }
                }
            }

    // Degree in the surviving-pixel graph; junction pixels (>2 neighbors)
    // are removed so chains stay simple.
    auto neighbors = [&](int x, int y, auto&& fn) {
        for (int oy = -1; oy <= 1; ++oy)
            for (int ox = -1; ox <= 1; ++ox) {
                if (ox == 0 && oy == 0) continue;
                const int nx = x + ox, ny = y + oy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                if (on[std::size_t(ny) * w + nx]) fn(nx, ny);
            }
    };
    std::vector<unsigned char> degree(std::size_t(w) * h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (on[std::size_t(y) * w + x]) {
                int d = 0;
                neighbors(x, y, [&](int, int) { ++d; });
                degree[std::size_t(y) * w + x] = (unsigned char)std::min(d, 255);
            }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = std::size_t(y) * w + x;
            if (on[i] && degree[i] > 2) on[i] = 0;
        }

    // Link into chains: walk from degree-1 endpoints first, then leftover
    // cycles. Neighbor degrees are re-derived on the pruned mask implicitly
    // by the visited flags.
    std::vector<unsigned char> used(std::size_t(w) * h, 0);
    std::vector<EdgeChain> chains;
    auto walk_from = [&](int sx, int sy) {
        EdgeChain chain;
        int cx = sx, cy = sy;
        used[std::size_t(cy) * w + cx] = 1;
        chain.pixels.push_back({cx, cy});
        for (;;) {
            int nx = -1, ny = -1;
            neighbors(cx, cy, [&](int qx, int qy) {
                if (nx < 0 && !used[std::size_t(qy) * w + qx]) {
                    nx = qx;
                    ny = qy;
                }
            });
            if (nx < 0) break;
            used[std::size_t(ny) * w + nx] = 1;
            chain.pixels.push_back({nx, ny});
            cx = nx;
            cy = ny;
        }
        if (chain.pixels.size() >= 2) chains.push_back(std::move(chain));
    };

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = std::size_t(y) * w + x;
            if (!on[i] || used[i]) continue;
            int d = 0;
            neighbors(x, y, [&](int qx, int qy) {
                if (on[std::size_t(qy) * w + qx]) ++d;
            });
            if (d == 1) walk_from(x, y);
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = std::size_t(y) * w + x;
            if (on[i] && !used[i]) walk_from(x, y);  // closed loops
        }
    return chains;
}

std::vector<Point2> downsample_edges(const std::vector<EdgeChain>& chains, int t_edges) {
    if (t_edges < 1) throw std::invalid_argument("downsample_edges: t_edges must be >= 1");
    std::vector<Point2> out;
    for (const EdgeChain& chain : chains)
        for (std::size_t i = 0; i < chain.pixels.size(); i += t_edges)
            out.emplace_back(chain.pixels[i][0], chain.pixels[i][1]);
    return out;
}

}  // namespace ecarve
