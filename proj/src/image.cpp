#include "ecarve/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ecarve {

double GrayImage::sample(double x, double y) const {
    x = std::clamp(x, 0.0, double(width - 1));
    y = std::clamp(y, 0.0, double(height - 1));
    const int x0 = std::min(int(x), width - 2 >= 0 ? width - 2 : 0);
    const int y0 = std::min(int(y), height - 2 >= 0 ? height - 2 : 0);
    const double a = x - x0, b = y - y0;
    if (width == 1 || height == 1) return at(int(x + 0.5), int(y + 0.5));
    return (1 - a) * (1 - b) * px(x0, y0) + a * (1 - b) * px(x0 + 1, y0) +
           (1 - a) * b * px(x0, y0 + 1) + a * b * px(x0 + 1, y0 + 1);
}

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open PGM: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw std::runtime_error("unsupported PGM magic '" + magic + "' in " + path);
    auto next_int = [&in, &path]() {
        // skip whitespace and '#' comments
        for (;;) {
            int c = in.peek();
            if (c == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
        long v;
        if (!(in >> v)) throw std::runtime_error("bad PGM header in " + path);
        return v;
    };
    const long w = next_int(), h = next_int(), maxval = next_int();
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
        throw std::runtime_error("unsupported PGM dimensions in " + path);
    in.get();  // single whitespace after maxval
    GrayImage img = GrayImage::zeros(int(w), int(h));
    std::vector<unsigned char> raw(std::size_t(w) * h);
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
    if (!in) throw std::runtime_error("truncated PGM data in " + path);
    for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = float(raw[i]) / float(maxval);
    return img;
}

void write_pgm(const std::string& path, const GrayImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write PGM: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.data.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const float v = std::clamp(img.data[i], 0.f, 1.f);
        raw[i] = static_cast<unsigned char>(std::lround(v * 255.f));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& k : kernel) k /= sum;

    GrayImage tmp = GrayImage::zeros(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * img.at(x + i, y);
            tmp.px(x, y) = float(acc);
        }
    GrayImage out = GrayImage::zeros(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp.at(x, y + i);
            out.px(x, y) = float(acc);
        }
    return out;
}

GrayImage downsample_half(const GrayImage& img) {
    // 5-tap binomial smoothing, then decimation at even indices.
    static const double k[5] = {1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0, 1 / 16.0};
    GrayImage tmp = GrayImage::zeros(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i) acc += k[i + 2] * img.at(x + i, y);
            tmp.px(x, y) = float(acc);
        }
    GrayImage sm = GrayImage::zeros(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i) acc += k[i + 2] * tmp.at(x, y + i);
            sm.px(x, y) = float(acc);
        }
    const int w2 = std::max(1, (img.width + 1) / 2);
    const int h2 = std::max(1, (img.height + 1) / 2);
    GrayImage out = GrayImage::zeros(w2, h2);
    for (int y = 0; y < h2; ++y)
        for (int x = 0; x < w2; ++x) out.px(x, y) = sm.at(2 * x, 2 * y);
    return out;
}

}  // namespace ecarve
