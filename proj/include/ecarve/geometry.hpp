#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace ecarve {

using Point2 = Eigen::Vector2d;
using Point3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

// Thrown when a geometric precondition fails (behind-camera projection,
// zero-baseline fundamental matrix, degenerate epipolar line, ...).
class GeometryError : public std::runtime_error {
public:
    explicit GeometryError(const std::string& what) : std::runtime_error(what) {}
};

struct Intrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;

    Mat3 matrix() const;
    bool valid() const { return fx > 0.0 && fy > 0.0; }
};

// Rigid world-to-camera transform: x_cam = R * x_world + t.
struct Pose {
    Mat3 R = Mat3::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::Zero();

    static Pose identity() { return Pose{}; }
    // R orthonormal with det +1, both within tol.
    bool valid(double tol = 1e-9) const;
};

struct Camera {
    Intrinsics intrinsics;
    Pose pose;

    Point3 center() const { return -pose.R.transpose() * pose.t; }
    Mat34 matrix() const;  // K [R|t]
    Point3 to_camera(const Point3& x) const { return pose.R * x + pose.t; }
};

// Dehomogenized pinhole projection. Throws GeometryError if the point's
// depth in the camera frame is <= kMinDepth.
inline constexpr double kMinDepth = 1e-12;
Point2 project(const Camera& cam, const Point3& x);

// Cross-product matrix: skew(v) * w == v.cross(w).
Mat3 skew(const Eigen::Vector3d& v);

// Fundamental matrix in the convention x_prev^T * F * x_cur = 0 for
// homogeneous pixel correspondences (x_prev in cam_prev, x_cur in cam_cur).
// The result is normalized to unit Frobenius norm with a deterministic sign
// so epipolar distances are scale-independent. Throws GeometryError when the
// baseline is below 1e-9.
//
// With this convention the epipolar line of x_prev in the current image is
// F^T * x_prev; epipolar_distance() accounts for that.
Mat3 fundamental_matrix(const Camera& cam_prev, const Camera& cam_cur);

// Perpendicular distance in pixels from x_cur to the epipolar line of
// x_prev in the current image (line F^T * [x_prev;1], normalized so that
// a^2 + b^2 = 1). Throws GeometryError if the line is degenerate.
double epipolar_distance(const Mat3& F, const Point2& x_prev, const Point2& x_cur);

// Pose file: one line per frame, 12 numbers, row-major [R|t] (world->camera).
std::vector<Pose> read_pose_file(const std::string& path);
void write_pose_file(const std::string& path, const std::vector<Pose>& poses);

}  // namespace ecarve
