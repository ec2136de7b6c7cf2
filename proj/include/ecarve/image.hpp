#pragma once

#include "ecarve/geometry.hpp"

#include <string>
#include <vector>

namespace ecarve {

// Row-major grayscale image with intensities in [0,1].
// Pixel (0,0) is the top-left pixel center; u grows right, v grows down.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    static GrayImage zeros(int w, int h) { return {w, h, std::vector<float>(w * h, 0.f)}; }

    float& px(int x, int y) { return data[std::size_t(y) * width + x]; }
    float px(int x, int y) const { return data[std::size_t(y) * width + x]; }

    // Clamped integer access.
    float at(int x, int y) const {
        x = x < 0 ? 0 : (x >= width ? width - 1 : x);
        y = y < 0 ? 0 : (y >= height ? height - 1 : y);
        return px(x, y);
    }
    // Clamped bilinear sampling.
    double sample(double x, double y) const;

    bool in_bounds(double x, double y) const {
        return x >= 0.0 && y >= 0.0 && x <= width - 1.0 && y <= height - 1.0;
    }
};

GrayImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const GrayImage& img);

GrayImage gaussian_blur(const GrayImage& img, double sigma);
GrayImage downsample_half(const GrayImage& img);  // binomial smooth + 2x decimation

}  // namespace ecarve
