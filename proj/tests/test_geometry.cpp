#include "ecarve/geometry.hpp"

#include <doctest.h>

#include <random>

using namespace ecarve;

namespace {

Mat3 random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q.toRotationMatrix();
}

Camera random_camera(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Camera cam;
    cam.intrinsics = {400.0 + 100.0 * u(rng), 400.0 + 100.0 * u(rng), 320.0 + 10.0 * u(rng),
                      240.0 + 10.0 * u(rng)};
    cam.pose.R = random_rotation(rng);
    cam.pose.t = Eigen::Vector3d(u(rng), u(rng), u(rng));
    return cam;
}

// A camera pair with overlapping frusta, plus a sampler of common points.
struct TwoView {
    Camera a, b;
    std::vector<Point3> points;
};

TwoView random_two_view(std::mt19937_64& rng, int n_points) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        TwoView tv;
        tv.a = random_camera(rng);
        tv.b = random_camera(rng);
        if ((tv.a.center() - tv.b.center()).norm() < 1e-3) continue;
        for (int k = 0; k < 20000 && (int)tv.points.size() < n_points; ++k) {
            const Point3 x(4.0 * u(rng), 4.0 * u(rng), 4.0 * u(rng));
            if (tv.a.to_camera(x).z() > 0.5 && tv.b.to_camera(x).z() > 0.5)
                tv.points.push_back(x);
        }
        if ((int)tv.points.size() == n_points) return tv;
    }
    FAIL("no camera pair with overlapping frusta");
    return {};
}

}  // namespace

TEST_CASE("project: optical axis point maps to principal point") {
    Camera cam;
    cam.intrinsics = {100.0, 100.0, 320.0, 240.0};
    const Point2 px = project(cam, {0.0, 0.0, 5.0});
    CHECK(px.x() == doctest::Approx(320.0).epsilon(1e-12));
    CHECK(px.y() == doctest::Approx(240.0).epsilon(1e-12));

    const Point2 px2 = project(cam, {1.0, 0.0, 5.0});
    CHECK(px2.x() == doctest::Approx(340.0).epsilon(1e-12));
    CHECK(px2.y() == doctest::Approx(240.0).epsilon(1e-12));
}

TEST_CASE("project: behind-camera error") {
    Camera cam;
    CHECK_THROWS_AS(project(cam, {0.0, 0.0, -1.0}), GeometryError);
    CHECK_THROWS_AS(project(cam, {0.0, 0.0, 0.0}), GeometryError);
}

TEST_CASE("project matches homogeneous 3x4 matrix oracle") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const Camera cam = random_camera(rng);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Point3 x(u(rng), u(rng), u(rng));
        if (cam.to_camera(x).z() < 0.1) continue;
        const Eigen::Vector3d h = cam.matrix() * x.homogeneous();
        const Point2 expect(h.x() / h.z(), h.y() / h.z());
        const Point2 got = project(cam, x);
        CHECK((got - expect).norm() < 1e-10);
    }
}

TEST_CASE("project o back-projection at known depth is identity") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 100; ++i) {
        const Camera cam = random_camera(rng);
        std::uniform_real_distribution<double> u(-100.0, 100.0);
        const Point2 px(320.0 + u(rng), 240.0 + u(rng));
        const double depth = 2.0 + std::abs(u(rng)) / 20.0;
        const Point3 dir((px.x() - cam.intrinsics.cx) / cam.intrinsics.fx,
                         (px.y() - cam.intrinsics.cy) / cam.intrinsics.fy, 1.0);
        const Point3 x = cam.pose.R.transpose() * (dir * depth - cam.pose.t);
        CHECK((project(cam, x) - px).norm() < 1e-9);
    }
}

TEST_CASE("skew: definition and zero") {
    Mat3 expect;
    expect << 0, 0, 0, 0, 0, -1, 0, 1, 0;
    CHECK((skew({1, 0, 0}) - expect).cwiseAbs().maxCoeff() == 0.0);
    CHECK(skew({0, 0, 0}).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("skew(v)*w equals cross product") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        const Eigen::Vector3d v(u(rng), u(rng), u(rng)), w(u(rng), u(rng), u(rng));
        CHECK((skew(v) * w - v.cross(w)).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((skew(v) + skew(v).transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("fundamental matrix: pure translation equals skew of baseline") {
    Camera prev, cur;
    cur.pose.t = Eigen::Vector3d(1, 0, 0);
    const Mat3 F = fundamental_matrix(prev, cur);
    Mat3 S = skew({1, 0, 0});
    S /= S.norm();
    // Equal up to sign.
    const double d1 = (F - S).cwiseAbs().maxCoeff();
    const double d2 = (F + S).cwiseAbs().maxCoeff();
    CHECK(std::min(d1, d2) < 1e-12);
}

TEST_CASE("fundamental matrix: epipolar identity x_prev^T F x_cur = 0") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        const TwoView tv = random_two_view(rng, 50);
        const Mat3 F = fundamental_matrix(tv.a, tv.b);
        for (const Point3& x : tv.points) {
            const Point2 xa = project(tv.a, x), xb = project(tv.b, x);
            const double resid = xa.homogeneous().dot(F * xb.homogeneous());
            CHECK(std::abs(resid) < 1e-8);
        }
    }
}

TEST_CASE("fundamental matrix: swapping cameras transposes up to scale") {
    std::mt19937_64 rng(13);
    const Camera a = random_camera(rng);
    const Camera b = random_camera(rng);
    const Mat3 F = fundamental_matrix(a, b);
    const Mat3 G = fundamental_matrix(b, a);
    const double d1 = (F.transpose() - G).cwiseAbs().maxCoeff();
    const double d2 = (F.transpose() + G).cwiseAbs().maxCoeff();
    CHECK(std::min(d1, d2) < 1e-9);
}

TEST_CASE("fundamental matrix: rank 2 and zero-baseline error") {
    std::mt19937_64 rng(17);
    const Camera a = random_camera(rng);
    Camera b = random_camera(rng);
    const Mat3 F = fundamental_matrix(a, b);
    const Eigen::JacobiSVD<Mat3> svd(F);
    CHECK(svd.singularValues()(2) < 1e-8 * svd.singularValues()(0));

    b.pose = a.pose;
    CHECK_THROWS_AS(fundamental_matrix(a, b), GeometryError);
}

TEST_CASE("epipolar distance: true correspondences are on the line") {
    std::mt19937_64 rng(19);
    for (int rep = 0; rep < 5; ++rep) {
        const TwoView tv = random_two_view(rng, 20);
        const Mat3 F = fundamental_matrix(tv.a, tv.b);
        for (const Point3& x : tv.points)
            CHECK(epipolar_distance(F, project(tv.a, x), project(tv.b, x)) < 1e-6);
    }
}

TEST_CASE("epipolar distance: axis-aligned line") {
    // F chosen so the line F^T [0,0,1]^T is x = 0, i.e. l = (1,0,0).
    Mat3 F = Mat3::Zero();
    F(2, 0) = 1.0;
    CHECK(epipolar_distance(F, {0, 0}, {5, 7}) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("epipolar distance: displacement along the line normal") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    for (int i = 0; i < 100; ++i) {
        const TwoView tv = random_two_view(rng, 1);
        const Mat3 F = fundamental_matrix(tv.a, tv.b);
        const Point3 x = tv.points[0];
        const Point2 xa = project(tv.a, x), xb = project(tv.b, x);
        const Eigen::Vector3d line = F.transpose() * xa.homogeneous();
        const double nrm = std::hypot(line.x(), line.y());
        if (nrm < 1e-12) continue;
        const Point2 normal(line.x() / nrm, line.y() / nrm);
        const double delta = u(rng);
        const double got = epipolar_distance(F, xa, xb + delta * normal);
        CHECK(std::abs(got - std::abs(delta)) < 1e-6);
    }
}

TEST_CASE("pose file round trip") {
    std::mt19937_64 rng(29);
    std::vector<Pose> poses;
    for (int i = 0; i < 5; ++i) {
        Pose p;
        p.R = random_rotation(rng);
        p.t = Eigen::Vector3d(i, -i, 0.5 * i);
        poses.push_back(p);
    }
    const std::string path = "test_poses_tmp.txt";
    write_pose_file(path, poses);
    const auto got = read_pose_file(path);
    REQUIRE(got.size() == poses.size());
    for (std::size_t i = 0; i < poses.size(); ++i) {
        CHECK((got[i].R - poses[i].R).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((got[i].t - poses[i].t).cwiseAbs().maxCoeff() < 1e-15);
    }
    std::remove(path.c_str());
}
