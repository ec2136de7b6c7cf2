#pragma once

#include "ecarve/image.hpp"

#include <vector>

namespace ecarve {

struct KltParams {
    int levels = 3;          // pyramid levels
    int window = 15;         // square window side, odd
    int max_iters = 30;      // per level
    double epsilon = 0.01;   // convergence threshold on the update, px
    double min_eigen = 1e-4; // gate on the smaller eigenvalue of G / window area
};

enum class KltStatus { Tracked, Lost };

struct KltResult {
    Point2 position = Point2::Zero();
    KltStatus status = KltStatus::Lost;
};

class Pyramid {
public:
    Pyramid() = default;
    Pyramid(const GrayImage& img, int levels);
    int levels() const { return int(imgs_.size()); }
    const GrayImage& level(int i) const { return imgs_[i]; }

private:
    std::vector<GrayImage> imgs_;
};

// Pyramidal Lucas-Kanade, translation model. A point is lost when it leaves
// the image, the window's gradient matrix is near-singular, or the iteration
// diverges.
std::vector<KltResult> klt_step(const Pyramid& prev, const Pyramid& cur,
                                const std::vector<Point2>& pts, const KltParams& p,
                                bool parallel);

// Convenience overload building both pyramids.
std::vector<KltResult> klt_step(const GrayImage& prev, const GrayImage& cur,
                                const std::vector<Point2>& pts, const KltParams& p,
                                bool parallel = false);

}  // namespace ecarve
