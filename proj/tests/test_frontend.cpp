#include "ecarve/canny.hpp"
#include "ecarve/klt.hpp"
#include "ecarve/tracks.hpp"

#include <doctest.h>

#include <random>

using namespace ecarve;

namespace {

GrayImage noise_texture(int w, int h, unsigned seed, float amplitude, float base) {
    // Smooth random texture: white noise blurred twice.
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> u(-1.f, 1.f);
    GrayImage img = GrayImage::zeros(w, h);
    for (float& v : img.data) v = u(rng);
    img = gaussian_blur(img, 1.2);
    float lo = 1e9f, hi = -1e9f;
    for (float v : img.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (float& v : img.data) v = base + amplitude * (v - lo) / std::max(1e-6f, hi - lo);
    return img;
}

GrayImage shift_periodic(const GrayImage& img, int dx, int dy) {
    GrayImage out = GrayImage::zeros(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const int sx = ((x - dx) % img.width + img.width) % img.width;
            const int sy = ((y - dy) % img.height + img.height) % img.height;
            out.px(x, y) = img.px(sx, sy);
        }
    return out;
}

}  // namespace

TEST_CASE("canny: constant image has no edges") {
    GrayImage img = GrayImage::zeros(64, 48);
    for (float& v : img.data) v = 0.5f;
    CHECK(canny_edges(img, 0.04, 0.10).empty());
}

TEST_CASE("canny: a vertical step yields one chain along the step column") {
    GrayImage img = GrayImage::zeros(64, 48);
    const int step_col = 30;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) img.px(x, y) = x < step_col ? 0.1f : 0.9f;

    const auto chains = canny_edges(img, 0.04, 0.10);
    REQUIRE(chains.size() == 1);
    // Spans the image height (Sobel support shaves one row at each border).
    int ymin = 1000, ymax = -1;
    for (const auto& px : chains[0].pixels) {
        ymin = std::min(ymin, px[1]);
        ymax = std::max(ymax, px[1]);
        CHECK(std::abs(px[0] - step_col) <= 1);
    }
    CHECK(ymin <= 2);
    CHECK(ymax >= img.height - 3);
    CHECK((int)chains[0].pixels.size() >= img.height - 4);
}

TEST_CASE("downsample_edges: arithmetic and identity") {
    EdgeChain chain;
    for (int i = 0; i < 40; ++i) chain.pixels.push_back({i, 0});
    CHECK(downsample_edges({chain}, 10).size() == 4);
    CHECK(downsample_edges({chain}, 1).size() == 40);

    EdgeChain small;
    small.pixels = {{0, 0}, {1, 1}};
    const auto pts = downsample_edges({small}, 10);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0] == Point2(0, 0));
}

TEST_CASE("downsample rate halving roughly doubles the point count") {
    // Scene-like image with long contours: filled rectangles and a disk.
    GrayImage img = GrayImage::zeros(256, 192);
    for (float& v : img.data) v = 0.15f;
    for (int y = 30; y < 160; ++y)
        for (int x = 20; x < 90; ++x) img.px(x, y) = 0.55f;
    for (int y = 50; y < 120; ++y)
        for (int x = 120; x < 230; ++x) img.px(x, y) = 0.85f;
    for (int y = 0; y < 192; ++y)
        for (int x = 0; x < 256; ++x)
            if (std::hypot(x - 180.0, y - 150.0) < 28.0) img.px(x, y) = 0.35f;
    const auto chains = canny_edges(img, 0.03, 0.08);
    std::size_t total = 0;
    for (const auto& c : chains) total += c.pixels.size();
    REQUIRE(total > 200);
    const auto n10 = downsample_edges(chains, 10).size();
    const auto n5 = downsample_edges(chains, 5).size();
    CHECK(double(n5) > 1.6 * double(n10));
    CHECK(double(n5) < 2.4 * double(n10));
    // Point count tracks (total chain pixels) / t_edges within 20%.
    CHECK(double(n10) > 0.8 * total / 10.0);
    CHECK(double(n10) < 1.2 * total / 10.0 + double(chains.size()));
}

TEST_CASE("klt: identity frame tracks with zero displacement") {
    const GrayImage img = noise_texture(96, 72, 11, 0.8f, 0.1f);
    std::vector<Point2> pts;
    for (int i = 0; i < 30; ++i) pts.emplace_back(20 + (i % 6) * 10, 20 + (i / 6) * 8);
    const auto res = klt_step(img, img, pts, KltParams{}, false);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        REQUIRE(res[i].status == KltStatus::Tracked);
        CHECK((res[i].position - pts[i]).norm() < 1e-3);
    }
}

TEST_CASE("klt: integer translation recovered within 0.1 px for interior points") {
    const GrayImage img = noise_texture(128, 96, 13, 0.8f, 0.1f);
    const GrayImage moved = shift_periodic(img, 3, 0);
    std::vector<Point2> pts;
    for (int y = 25; y <= 70; y += 9)
        for (int x = 25; x <= 100; x += 9) pts.emplace_back(x, y);
    const auto res = klt_step(img, moved, pts, KltParams{}, false);
    int tracked = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (res[i].status != KltStatus::Tracked) continue;
        ++tracked;
        CHECK(std::abs(res[i].position.x() - (pts[i].x() + 3.0)) < 0.1);
        CHECK(std::abs(res[i].position.y() - pts[i].y()) < 0.1);
    }
    CHECK(tracked >= int(pts.size()) - 2);
}

TEST_CASE("klt: flat window is reported lost, parallel equals serial") {
    GrayImage flat = GrayImage::zeros(64, 64);
    for (float& v : flat.data) v = 0.4f;
    const auto res = klt_step(flat, flat, {Point2(32, 32)}, KltParams{}, false);
    CHECK(res[0].status == KltStatus::Lost);

    const GrayImage img = noise_texture(96, 72, 17, 0.8f, 0.1f);
    const GrayImage moved = shift_periodic(img, 2, 1);
    std::vector<Point2> pts;
    for (int i = 0; i < 40; ++i) pts.emplace_back(18 + (i % 8) * 8, 18 + (i / 8) * 8);
    const auto serial = klt_step(img, moved, pts, KltParams{}, false);
    const auto parallel = klt_step(img, moved, pts, KltParams{}, true);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(serial[i].status == parallel[i].status);
        CHECK(serial[i].position == parallel[i].position);
    }
}

TEST_CASE("filter_match: displacement and epipolar gates") {
    Camera a, b;
    a.intrinsics = b.intrinsics = {100.0, 100.0, 64.0, 48.0};
    b.pose.t = Eigen::Vector3d(-1.0, 0, 0);  // sideways baseline
    const Mat3 F = fundamental_matrix(a, b);
    FrontendParams p;

    const Point3 x(0.5, 0.2, 5.0);
    const Point2 xa = project(a, x), xb = project(b, x);
    REQUIRE((xb - xa).norm() > 12.0);  // enough displacement to pass d_min

    CHECK(filter_match(xa, xb, F, p) == MatchFilter::Keep);
    CHECK(filter_match(xa, xa + Point2(3.0, 0.0), F, p) == MatchFilter::DropLowParallax);

    // Outlier displaced 30 px along the epipolar line normal.
    const Eigen::Vector3d line = F.transpose() * xa.homogeneous();
    const Point2 n = Point2(line.x(), line.y()).normalized();
    CHECK(filter_match(xa, xb + 30.0 * n, F, p) == MatchFilter::DropEpipolar);
}

TEST_CASE("close_tracks: boundary at l_min") {
    FrontendParams p;
    p.l_min = 5;
    std::vector<Track> tracks(2);
    for (int i = 0; i < 4; ++i) tracks[0].measurements.push_back({i, Point2(i, 0)});
    for (int i = 0; i < 5; ++i) tracks[1].measurements.push_back({i, Point2(i, 0)});
    const auto [accepted, rejected] = close_tracks(tracks, p);
    REQUIRE(accepted.size() == 1);
    REQUIRE(rejected.size() == 1);
    CHECK(accepted[0].measurements.size() == 5);
    CHECK(rejected[0].measurements.size() == 4);
}

TEST_CASE("feature_distribution: concentration, uniformity, empty input") {
    FeatureGrid one = feature_distribution({Point2(1, 1), Point2(2, 2)}, 100, 60);
    CHECK_FALSE(one.empty);
    CHECK(one.cell[0][0] == doctest::Approx(100.0));

    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> ux(0, 100), uy(0, 60);
    std::vector<Point2> pts;
    for (int i = 0; i < 15000; ++i) pts.emplace_back(ux(rng), uy(rng));
    const FeatureGrid uni = feature_distribution(pts, 100, 60);
    double sum = 0.0;
    for (const auto& row : uni.cell)
        for (double c : row) {
            CHECK(std::abs(c - 100.0 / 15.0) < 1.0);
            sum += c;
        }
    CHECK(sum == doctest::Approx(100.0).epsilon(1e-9));

    CHECK(feature_distribution({}, 10, 10).empty);
}

TEST_CASE("tracks file round trip") {
    std::vector<Track> tracks(2);
    tracks[0].id = 3;
    tracks[0].measurements = {{0, Point2(1.25, 2.5)}, {1, Point2(3.5, 4.75)}};
    tracks[1].id = 1;
    tracks[1].measurements = {{2, Point2(-1.0, 0.125)}, {3, Point2(0.0, 9.0)}};
    const std::string path = "test_tracks_tmp.txt";
    write_tracks_file(path, tracks);
    const auto got = read_tracks_file(path);
    REQUIRE(got.size() == 2);
    CHECK(got[0].id == 1);
    CHECK(got[1].id == 3);
    CHECK(got[1].measurements[0].position == Point2(1.25, 2.5));
    std::remove(path.c_str());
}

TEST_CASE("tracker: textured plane under sideways motion, filters hold pairwise") {
    // Camera slides along +x viewing a textured plane at z = 5.
    const int W = 96, H = 72, frames = 8;
    const GrayImage tex = noise_texture(640, 480, 23, 0.8f, 0.1f);
    const double fpx = 120.0, cx = W / 2.0, cy = H / 2.0, plane_z = 5.0, step = 0.12;

    std::vector<Camera> cams(frames);
    std::vector<GrayImage> imgs;
    for (int t = 0; t < frames; ++t) {
        cams[t].intrinsics = {fpx, fpx, cx, cy};
        cams[t].pose.t = Eigen::Vector3d(-step * t, 0, 0);  // center at (step*t, 0, 0)
        GrayImage img = GrayImage::zeros(W, H);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                // Back-project pixel to the plane, sample the world texture.
                const double wx = (x - cx) / fpx * plane_z + step * t;
                const double wy = (y - cy) / fpx * plane_z;
                img.px(x, y) = float(tex.sample(wx * 60.0 + 320.0, wy * 60.0 + 240.0));
            }
        imgs.push_back(std::move(img));
    }

    FrontendParams p;
    p.t_k = 4;
    p.l_min = 4;
    p.t_edges = 4;
    p.d_min = 1.0;  // the sideways flow here is a few px per frame
    p.canny_low = 0.02;
    p.canny_high = 0.05;

    Tracker tracker(p, cams);
    for (int t = 0; t < frames; ++t) tracker.process_frame(imgs[t], t);
    tracker.finish();
    const auto accepted = tracker.take_accepted();
    REQUIRE(accepted.size() > 5);

    for (const Track& t : accepted) {
        CHECK(int(t.measurements.size()) >= p.l_min);
        for (std::size_t i = 1; i < t.measurements.size(); ++i) {
            CHECK(t.measurements[i].frame == t.measurements[i - 1].frame + 1);
            const Mat3 F = fundamental_matrix(cams[t.measurements[i - 1].frame],
                                              cams[t.measurements[i].frame]);
            CHECK(filter_match(t.measurements[i - 1].position, t.measurements[i].position, F,
                               p) == MatchFilter::Keep);
        }
    }
    CHECK(tracker.stats().extracted > 0);
    CHECK(tracker.stats().tracked > 0);
}
