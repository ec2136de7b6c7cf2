#include "ecarve/geometry.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ecarve {

Mat3 Intrinsics::matrix() const {
    Mat3 K = Mat3::Identity();
    K(0, 0) = fx;
    K(1, 1) = fy;
    K(0, 2) = cx;
    K(1, 2) = cy;
    return K;
}

bool Pose::valid(double tol) const {
    const Mat3 rtr = R.transpose() * R;
    if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
    return std::abs(R.determinant() - 1.0) <= tol;
}

Mat34 Camera::matrix() const {
    Mat34 rt;
    rt.leftCols<3>() = pose.R;
    rt.col(3) = pose.t;
    return intrinsics.matrix() * rt;
}

Point2 project(const Camera& cam, const Point3& x) {
    const Point3 pc = cam.to_camera(x);
    if (pc.z() <= kMinDepth)
        throw GeometryError("project: point behind camera (depth " + std::to_string(pc.z()) + ")");
    return {cam.intrinsics.fx * pc.x() / pc.z() + cam.intrinsics.cx,
            cam.intrinsics.fy * pc.y() / pc.z() + cam.intrinsics.cy};
}

Mat3 skew(const Eigen::Vector3d& v) {
    Mat3 m;
    m << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
        -v.y(), v.x(), 0.0;
    return m;
}

Mat3 fundamental_matrix(const Camera& cam_prev, const Camera& cam_cur) {
    // Relative pose of the current camera with the world frame fixed in the
    // previous one: x_cur = R_rel * x_prev_frame + t_rel.
    const Mat3 r_rel = cam_cur.pose.R * cam_prev.pose.R.transpose();
    const Eigen::Vector3d t_rel = cam_cur.pose.t - r_rel * cam_prev.pose.t;
    if (t_rel.norm() < 1e-9)
        throw GeometryError("fundamental_matrix: degenerate geometry (baseline < 1e-9)");

    const Mat3 k_prev_inv = cam_prev.intrinsics.matrix().inverse();
    const Mat3 k_cur_inv = cam_cur.intrinsics.matrix().inverse();

    // Standard two-view form gives x_cur^T * (K_cur^-T [t]x R K_prev^-1) * x_prev = 0;
    // transposing yields the x_prev-on-the-left convention used throughout.
    Mat3 f = (k_cur_inv.transpose() * skew(t_rel) * r_rel * k_prev_inv).transpose();

    f /= f.norm();
    // Deterministic sign: largest |entry| made positive.
    Eigen::Index r, c;
    f.cwiseAbs().maxCoeff(&r, &c);
    if (f(r, c) < 0.0) f = -f;
    return f;
}

double epipolar_distance(const Mat3& F, const Point2& x_prev, const Point2& x_cur) {
    if (F.cwiseAbs().maxCoeff() == 0.0)
        throw GeometryError("epipolar_distance: zero fundamental matrix");
    const Eigen::Vector3d line = F.transpose() * x_prev.homogeneous();
    const double nrm = std::hypot(line.x(), line.y());
    if (nrm < 1e-300)
        throw GeometryError("epipolar_distance: degenerate epipolar line");
    return std::abs(line.dot(x_cur.homogeneous())) / nrm;
}

std::vector<Pose> read_pose_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pose file: " + path);
    std::vector<Pose> poses;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        double v[12];
        for (double& x : v)
            if (!(ss >> x)) throw std::runtime_error("pose file: bad line '" + line + "'");
        Pose p;
        p.R << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
        p.t << v[3], v[7], v[11];
        if (!p.valid(1e-6))
            throw std::runtime_error("pose file: rotation not orthonormal in '" + line + "'");
        poses.push_back(p);
    }
    return poses;
}

void write_pose_file(const std::string& path, const std::vector<Pose>& poses) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write pose file: " + path);
    char buf[64];
    for (const Pose& p : poses) {
        double v[12] = {p.R(0, 0), p.R(0, 1), p.R(0, 2), p.t.x(),
                        p.R(1, 0), p.R(1, 1), p.R(1, 2), p.t.y(),
                        p.R(2, 0), p.R(2, 1), p.R(2, 2), p.t.z()};
        for (int i = 0; i < 12; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", v[i]);
            out << buf << (i == 11 ? '\n' : ' ');
        }
    }
}

}  // namespace ecarve
