#include "ecarve/estimator.hpp"

#include <doctest.h>

#include <random>

using namespace ecarve;

namespace {

Camera look_at_origin(const Point3& center) {
    // z axis toward the origin, x axis horizontal.
    const Eigen::Vector3d z = (-center).normalized();
    Eigen::Vector3d up(0, -1, 0);
    if (std::abs(z.dot(up)) > 0.95) up = Eigen::Vector3d(1, 0, 0);
    const Eigen::Vector3d x = up.cross(z).normalized();
    const Eigen::Vector3d y = z.cross(x);
    Camera cam;
    cam.intrinsics = {500.0, 500.0, 320.0, 240.0};
    cam.pose.R.row(0) = x;
    cam.pose.R.row(1) = y;
    cam.pose.R.row(2) = z;
    cam.pose.t = -cam.pose.R * center;
    return cam;
}

// Ring of cameras looking at the origin with the given angular spread.
std::vector<Camera> camera_ring(int n, double radius, double spread_rad) {
    std::vector<Camera> cams;
    for (int i = 0; i < n; ++i) {
        const double ang = spread_rad * (n == 1 ? 0.0 : double(i) / (n - 1));
        cams.push_back(look_at_origin(
            {radius * std::sin(ang), 0.3 * std::sin(2.3 * ang), -radius * std::cos(ang)}));
    }
    return cams;
}

}  // namespace

TEST_CASE("two-view triangulation: exact recovery from noise-free projections") {
    std::mt19937_64 rng(211);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    const auto cams = camera_ring(2, 4.0, 0.8);
    for (int i = 0; i < 100; ++i) {
        const Point3 x(u(rng), u(rng), u(rng));
        const Point3 got =
            triangulate_two_view(cams[0], project(cams[0], x), cams[1], project(cams[1], x));
        CHECK((got - x).norm() < 1e-6);
    }
}

TEST_CASE("two-view triangulation: degenerate cases") {
    const auto cams = camera_ring(2, 4.0, 0.8);
    // Zero baseline.
    CHECK_THROWS_AS(triangulate_two_view(cams[0], {320, 240}, cams[0], {321, 240}),
                    GeometryError);
    // A point on the baseline (in front of both verging cameras) projects
    // onto both epipoles.
    const Point3 on_baseline =
        cams[0].center() + 0.6 * (cams[1].center() - cams[0].center());
    REQUIRE(cams[0].to_camera(on_baseline).z() > 0);
    REQUIRE(cams[1].to_camera(on_baseline).z() > 0);
    const Point2 xa = project(cams[0], on_baseline);
    const Point2 xb = project(cams[1], on_baseline);
    CHECK_THROWS_AS(triangulate_two_view(cams[0], xa, cams[1], xb), GeometryError);
}

TEST_CASE("two-view triangulation beats naive DLT under noise at 45 deg parallax") {
    std::mt19937_64 rng(223);
    std::normal_distribution<double> noise(0.0, 0.5);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    // Unequal viewing distances (where the algebraic DLT weighting is
    // biased); the two rays still subtend 45 degrees at the points.
    const Camera near = look_at_origin({0, 0, -2});
    const Camera far =
        look_at_origin({8 * std::sin(M_PI / 4), 0.3, -8 * std::cos(M_PI / 4)});
    int hs_wins = 0, total = 0;
    double parallax_sum = 0.0;
    while (total < 1000) {
        const Point3 x(u(rng), u(rng), u(rng));
        const Point2 xa = project(near, x) + Point2(noise(rng), noise(rng));
        const Point2 xb = project(far, x) + Point2(noise(rng), noise(rng));
        Point3 hs, dlt;
        try {
            hs = triangulate_two_view(near, xa, far, xb);
            dlt = triangulate_dlt(near, xa, far, xb);
        } catch (const GeometryError&) {
            continue;
        }
        ++total;
        parallax_sum += std::acos(std::abs(
            (near.center() - x).normalized().dot((far.center() - x).normalized())));
        if ((hs - x).norm() < (dlt - x).norm()) ++hs_wins;
    }
    CHECK(parallax_sum / total == doctest::Approx(M_PI / 4).epsilon(0.05));
    CHECK(hs_wins >= total * 60 / 100);
}

TEST_CASE("gauss-newton: converges on noise-free tracks from a perturbed seed") {
    std::mt19937_64 rng(227);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    const auto cams = camera_ring(8, 4.0, 0.9);
    EstimatorParams p;
    for (int i = 0; i < 50; ++i) {
        const Point3 x(u(rng), u(rng), u(rng));
        std::vector<Point2> obs;
        for (const Camera& c : cams) obs.push_back(project(c, x));
        const Point3 x0 = x + 0.01 * 4.0 * Point3(u(rng), u(rng), u(rng)).normalized();
        const RefineResult res = refine_gauss_newton(cams, obs, x0, p);
        REQUIRE(res.ok);
        CHECK((res.position - x).norm() < 1e-6);
        CHECK(res.mean_reproj_error < 1e-6);
    }
}

TEST_CASE("gauss-newton: an optimal start is a fixed point") {
    std::mt19937_64 rng(229);
    std::normal_distribution<double> noise(0.0, 0.5);
    const auto cams = camera_ring(6, 4.0, 0.9);
    EstimatorParams p;
    const Point3 x(0.1, -0.2, 0.15);
    std::vector<Point2> obs;
    for (const Camera& c : cams)
        obs.push_back(project(c, x) + Point2(noise(rng), noise(rng)));
    const RefineResult first = refine_gauss_newton(cams, obs, x, p);
    REQUIRE(first.ok);
    const RefineResult again = refine_gauss_newton(cams, obs, first.position, p);
    CHECK((again.position - first.position).norm() < 1e-9);
}

TEST_CASE("gauss-newton: total squared error at most the dense grid minimum") {
    std::mt19937_64 rng(233);
    std::normal_distribution<double> noise(0.0, 0.5);
    const auto cams = camera_ring(6, 4.0, 0.9);
    EstimatorParams p;
    const Point3 x(0.05, -0.1, 0.2);
    std::vector<Point2> obs;
    for (const Camera& c : cams)
        obs.push_back(project(c, x) + Point2(noise(rng), noise(rng)));

    auto total_sq = [&](const Point3& q) {
        double s = 0.0;
        for (std::size_t i = 0; i < cams.size(); ++i)
            s += (project(cams[i], q) - obs[i]).squaredNorm();
        return s;
    };

    const RefineResult res = refine_gauss_newton(cams, obs, x, p);
    REQUIRE(res.ok);

    // Independent brute-force oracle: dense grid around the true point.
    double grid_min = std::numeric_limits<double>::infinity();
    for (double dx = -0.25; dx <= 0.25; dx += 0.01)
        for (double dy = -0.25; dy <= 0.25; dy += 0.01)
            for (double dz = -0.25; dz <= 0.25; dz += 0.01)
                grid_min = std::min(grid_min, total_sq(x + Point3(dx, dy, dz)));

    CHECK(total_sq(res.position) <= grid_min + 1e-6);
}

TEST_CASE("analytic jacobian matches central finite differences") {
    std::mt19937_64 rng(239);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    const auto cams = camera_ring(10, 4.0, 1.2);
    const double h = 1e-6;
    for (int trial = 0; trial < 100; ++trial) {
        const Camera& cam = cams[trial % cams.size()];
        const Point3 x(u(rng), u(rng), u(rng));
        const auto j = projection_jacobian(cam, x);
        for (int k = 0; k < 3; ++k) {
            Point3 xp = x, xm = x;
            xp[k] += h;
            xm[k] -= h;
            const Point2 fd = (project(cam, xp) - project(cam, xm)) / (2.0 * h);
            for (int r = 0; r < 2; ++r) {
                const double denom = std::max(std::abs(fd[r]), 1.0);
                CHECK(std::abs(j(r, k) - fd[r]) / denom < 1e-4);
            }
        }
    }
}

TEST_CASE("accept_point thresholds") {
    EstimatorParams p;
    EstimatedPoint e;
    e.mean_reproj_error = 1.9;
    CHECK(accept_point(e, p));
    e.mean_reproj_error = 2.1;
    CHECK_FALSE(accept_point(e, p));
}

TEST_CASE("a 30 px outlier among 6 good measurements is dropped") {
    std::mt19937_64 rng(241);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    const auto cams = camera_ring(7, 4.0, 1.0);
    EstimatorParams ep;
    int dropped = 0;
    const int trials = 100;
    for (int i = 0; i < trials; ++i) {
        const Point3 x(u(rng), u(rng), u(rng));
        Track t;
        t.id = i;
        for (int k = 0; k < 7; ++k) t.measurements.push_back({k, project(cams[k], x)});
        const int bad = 1 + int(rng() % 5);  // keep first/last clean for the seed
        const double ang = u(rng) * M_PI * 5.0;
        t.measurements[bad].position += 30.0 * Point2(std::cos(ang), std::sin(ang));
        const auto est = estimate_tracks({t}, cams, ep, false);
        if (!est[0].accepted) ++dropped;
    }
    CHECK(dropped >= 95);
}

TEST_CASE("estimation is order-independent bit for bit") {
    std::mt19937_64 rng(251);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    std::normal_distribution<double> noise(0.0, 0.3);
    const auto cams = camera_ring(9, 4.0, 1.1);
    EstimatorParams p;

    std::vector<Track> tracks;
    for (int i = 0; i < 40; ++i) {
        Track t;
        t.id = i;
        const Point3 x(u(rng), u(rng), u(rng));
        for (int k = 0; k < 9; ++k)
            t.measurements.push_back({k, project(cams[k], x) + Point2(noise(rng), noise(rng))});
        tracks.push_back(std::move(t));
    }
    const auto direct = estimate_tracks(tracks, cams, p, false);

    std::vector<Track> shuffled = tracks;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto permuted = estimate_tracks(shuffled, cams, p, true);

    for (const auto& e : permuted) {
        const auto& ref = direct[e.id];
        CHECK(ref.position.x() == e.position.x());
        CHECK(ref.position.y() == e.position.y());
        CHECK(ref.position.z() == e.position.z());
        CHECK(ref.mean_reproj_error == e.mean_reproj_error);
        CHECK(ref.accepted == e.accepted);
    }
}

TEST_CASE("points file round trip") {
    std::vector<EstimatedPoint> pts(2);
    pts[0].id = 7;
    pts[0].position = Point3(1.5, -2.25, 3.125);
    pts[0].supporting_frames = {0, 1, 4};
    pts[0].mean_reproj_error = 0.5;
    pts[0].accepted = true;
    pts[1].id = 9;
    pts[1].accepted = false;  // not written
    const std::string path = "test_points_tmp.txt";
    write_points_file(path, pts);
    const auto got = read_points_file(path);
    REQUIRE(got.size() == 1);
    CHECK(got[0].id == 7);
    CHECK(got[0].position == Point3(1.5, -2.25, 3.125));
    CHECK(got[0].supporting_frames == std::vector<int>{0, 4});
    std::remove(path.c_str());
}
