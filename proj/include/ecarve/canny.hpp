#pragma once

#include "ecarve/image.hpp"

#include <array>
#include <vector>

namespace ecarve {

// An 8-connected chain of edge pixels, at least 2 long.
struct EdgeChain {
    std::vector<std::array<int, 2>> pixels;  // (x, y)
};

// Canny edge chains: Gaussian smoothing (sigma 1.4), Sobel gradients,
// non-maximum suppression along the gradient, low/high hysteresis, then
// linking of surviving pixels into chains. Chains are split at junction
// pixels (more than 2 edge neighbors); isolated pixels are dropped.
// Thresholds apply to the gradient magnitude of [0,1] intensities.
std::vector<EdgeChain> canny_edges(const GrayImage& img, double low, double high);

// Every t_edges-th pixel of each chain, starting at index 0.
std::vector<Point2> downsample_edges(const std::vector<EdgeChain>& chains, int t_edges);

}  // namespace ecarve
