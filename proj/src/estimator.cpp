#include "ecarve/estimator.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace ecarve {

namespace {

Eigen::Vector4d dlt_homogeneous(const Mat34& pa, const Eigen::Vector3d& xa, const Mat34& pb,
                                const Eigen::Vector3d& xb) {
    Eigen::Matrix4d design;
    design.row(0) = xa.x() * pa.row(2) - xa.z() * pa.row(0);
    design.row(1) = xa.y() * pa.row(2) - xa.z() * pa.row(1);
    design.row(2) = xb.x() * pb.row(2) - xb.z() * pb.row(0);
    design.row(3) = xb.y() * pb.row(2) - xb.z() * pb.row(1);
    const Eigen::JacobiSVD<Eigen::Matrix4d> svd(design, Eigen::ComputeFullV);
    return svd.matrixV().col(3);
}

Point3 dehomogenize(const Eigen::Vector4d& h) {
    if (std::abs(h.w()) < 1e-300)
        throw GeometryError("triangulation: point at infinity");
    return h.head<3>() / h.w();
}

// Real roots of a polynomial given by coefficients c[0] + c[1] t + ... via
// the companion matrix.
std::vector<double> real_roots(std::vector<double> c) {
    while (!c.empty() && std::abs(c.back()) < 1e-14) c.pop_back();
    std::vector<double> roots;
    if (c.size() <= 1) return roots;
    const int n = int(c.size()) - 1;
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[i] / c[n];
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    const Eigen::EigenSolver<Eigen::MatrixXd> es(comp);
    for (int i = 0; i < n; ++i) {
        const auto ev = es.eigenvalues()(i);
        if (std::abs(ev.imag()) < 1e-8 * (1.0 + std::abs(ev.real())))
            roots.push_back(ev.real());
    }
    return roots;
}

void check_parallax(const Camera& cam_a, const Eigen::Vector3d& xa_h, const Camera& cam_b,
                    const Eigen::Vector3d& xb_h) {
    const Eigen::Vector3d da =
        (cam_a.pose.R.transpose() * cam_a.intrinsics.matrix().inverse() * xa_h).normalized();
    const Eigen::Vector3d db =
        (cam_b.pose.R.transpose() * cam_b.intrinsics.matrix().inverse() * xb_h).normalized();
    const double cosang = std::clamp(std::abs(da.dot(db)), 0.0, 1.0);
    if (std::acos(cosang) < 1e-6)
        throw GeometryError("triangulate_two_view: low parallax (rays nearly parallel)");
}

}  // namespace

Point3 triangulate_dlt(const Camera& cam_a, const Point2& x_a, const Camera& cam_b,
                       const Point2& x_b) {
    return dehomogenize(dlt_homogeneous(cam_a.matrix(), x_a.homogeneous(), cam_b.matrix(),
                                        x_b.homogeneous()));
}

Point3 triangulate_two_view(const Camera& cam_a, const Point2& x_a, const Camera& cam_b,
                            const Point2& x_b) {
    if ((cam_a.center() - cam_b.center()).norm() < 1e-9)
        throw GeometryError("triangulate_two_view: degenerate (zero baseline)");

    // Fundamental matrix in the x_b^T F x_a = 0 convention.
    const Mat3 F0 = fundamental_matrix(cam_a, cam_b).transpose();

    // Translate both measurements to the origin.
    Mat3 Ta = Mat3::Identity(), Tb = Mat3::Identity();
    Ta(0, 2) = -x_a.x();
    Ta(1, 2) = -x_a.y();
    Tb(0, 2) = -x_b.x();
    Tb(1, 2) = -x_b.y();
    Mat3 F = Tb.inverse().transpose() * F0 * Ta.inverse();

    // Epipoles: F e = 0 and e'^T F = 0, scaled so e1^2 + e2^2 = 1.
    const Eigen::JacobiSVD<Mat3> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d e = svd.matrixV().col(2);
    Eigen::Vector3d ep = svd.matrixU().col(2);
    const double ne = std::hypot(e.x(), e.y());
    const double nep = std::hypot(ep.x(), ep.y());
    if (ne < 1e-12 || nep < 1e-12)
        throw GeometryError("triangulate_two_view: low parallax (point on the baseline)");
    e /= ne;
    ep /= nep;

    Mat3 R = Mat3::Identity(), Rp = Mat3::Identity();
    R << e.x(), e.y(), 0, -e.y(), e.x(), 0, 0, 0, 1;
    Rp << ep.x(), ep.y(), 0, -ep.y(), ep.x(), 0, 0, 0, 1;
    F = Rp * F * R.transpose();

    const double f = e.z(), fp = ep.z();
    const double a = F(1, 1), b = F(1, 2), c = F(2, 1), d = F(2, 2);

    // g(t) = t((at+b)^2 + fp^2 (ct+d)^2)^2 - (ad-bc)(1+f^2 t^2)^2 (at+b)(ct+d)
    // expanded into polynomial coefficients.
    auto poly_mul = [](const std::vector<double>& u, const std::vector<double>& v) {
        std::vector<double> w(u.size() + v.size() - 1, 0.0);
        for (std::size_t i = 0; i < u.size(); ++i)
            for (std::size_t j = 0; j < v.size(); ++j) w[i + j] += u[i] * v[j];
        return w;
    };
    const std::vector<double> atb = {b, a};                 // at + b
    const std::vector<double> ctd = {d, c};                 // ct + d
    const std::vector<double> one_f2t2 = {1.0, 0.0, f * f}; // 1 + f^2 t^2
    std::vector<double> q = poly_mul(atb, atb);
    {
        const std::vector<double> r2 = poly_mul(ctd, ctd);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] += fp * fp * r2[i];
    }
    std::vector<double> g = poly_mul(poly_mul(q, q), {0.0, 1.0});  // t * q(t)^2
    {
        const double k = a * d - b * c;
        const std::vector<double> rhs =
            poly_mul(poly_mul(one_f2t2, one_f2t2), poly_mul(atb, ctd));
        g.resize(std::max(g.size(), rhs.size()), 0.0);
        for (std::size_t i = 0; i < rhs.size(); ++i) g[i] -= k * rhs[i];
    }

    auto cost = [&](double t) {
        const double num2 = (c * t + d) * (c * t + d);
        const double den2 = (a * t + b) * (a * t + b) + fp * fp * num2;
        return t * t / (1.0 + f * f * t * t) + (den2 > 0 ? num2 / den2 : 0.0);
    };

    double best_t = 0.0;
    double best_cost = cost(0.0);
    for (double t : real_roots(g)) {
        const double s = cost(t);
        if (s < best_cost) {
            best_cost = s;
            best_t = t;
        }
    }
    // Asymptotic candidate t -> inf.
    const double inf_cost =
        1.0 / (f * f) + (c * c) / (a * a + fp * fp * c * c);
    const bool use_inf = f != 0.0 && inf_cost < best_cost;

    Eigen::Vector3d l, lp;
    if (use_inf) {
        l = Eigen::Vector3d(f, 0.0, -1.0);
        lp = Eigen::Vector3d(-fp * c, a, c);
    } else {
        const double t = best_t;
        l = Eigen::Vector3d(t * f, 1.0, -t);
        lp = Eigen::Vector3d(-fp * (c * t + d), a * t + b, c * t + d);
    }
    auto closest_to_origin = [](const Eigen::Vector3d& line) {
        return Eigen::Vector3d(-line.x() * line.z(), -line.y() * line.z(),
                               line.x() * line.x() + line.y() * line.y());
    };
    Eigen::Vector3d xa_h = Ta.inverse() * R.transpose() * closest_to_origin(l);
    Eigen::Vector3d xb_h = Tb.inverse() * Rp.transpose() * closest_to_origin(lp);

    check_parallax(cam_a, xa_h, cam_b, xb_h);
    return dehomogenize(dlt_homogeneous(cam_a.matrix(), xa_h, cam_b.matrix(), xb_h));
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Camera& cam, const Point3& x) {
    const Point3 p = cam.to_camera(x);
    const double iz = 1.0 / p.z();
    Eigen::Matrix<double, 2, 3> j;
    j.row(0) = cam.intrinsics.fx * iz * (cam.pose.R.row(0) - p.x() * iz * cam.pose.R.row(2));
    j.row(1) = cam.intrinsics.fy * iz * (cam.pose.R.row(1) - p.y() * iz * cam.pose.R.row(2));
    return j;
}

namespace {

// Total squared reprojection error; infinity when x is at or behind a camera.
double total_squared_error(std::span<const Camera> cams, std::span<const Point2> obs,
                           const Point3& x) {
    double total = 0.0;
    for (std::size_t i = 0; i < cams.size(); ++i) {
        const Point3 p = cams[i].to_camera(x);
        if (p.z() <= kMinDepth) return std::numeric_limits<double>::infinity();
        const Point2 proj(cams[i].intrinsics.fx * p.x() / p.z() + cams[i].intrinsics.cx,
                          cams[i].intrinsics.fy * p.y() / p.z() + cams[i].intrinsics.cy);
        total += (proj - obs[i]).squaredNorm();
    }
    return total;
}

}  // namespace

RefineResult refine_gauss_newton(std::span<const Camera> cams, std::span<const Point2> obs,
                                 const Point3& x0, const EstimatorParams& p) {
    RefineResult out;
    if (cams.size() < 2 || cams.size() != obs.size()) return out;

    Point3 x = x0;
    double err = total_squared_error(cams, obs, x);
    if (!std::isfinite(err)) return out;  // x0 behind a camera

    for (int it = 0; it < p.n_gn; ++it) {
        out.iterations = it + 1;
        Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
        Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
        for (std::size_t i = 0; i < cams.size(); ++i) {
            const Eigen::Matrix<double, 2, 3> j = projection_jacobian(cams[i], x);
            const Point2 r = project(cams[i], x) - obs[i];
            jtj += j.transpose() * j;
            jtr += j.transpose() * r;
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(jtj);
        const double emin = es.eigenvalues()(0), emax = es.eigenvalues()(2);
        if (!(emin > 0.0) || emax / emin > 1e12) return out;  // non-estimable

        Eigen::Vector3d step = -jtj.ldlt().solve(jtr);
        bool accepted = false;
        for (int halving = 0; halving <= 10; ++halving) {
            const double trial = total_squared_error(cams, obs, x + step);
            if (trial <= err) {
                x += step;
                err = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        if (step.norm() < 1e-10) break;
    }

    out.position = x;
    double sum = 0.0;
    for (std::size_t i = 0; i < cams.size(); ++i)
        sum += (project(cams[i], x) - obs[i]).norm();
    out.mean_reproj_error = sum / double(cams.size());
    out.ok = true;
    return out;
}

namespace {

EstimatedPoint estimate_one(const Track& track, const std::vector<Camera>& cameras,
                            const EstimatorParams& p) {
    EstimatedPoint out;
    out.id = track.id;
    for (const TrackMeasurement& m : track.measurements) out.supporting_frames.push_back(m.frame);
    if (track.measurements.size() < 2) return out;

    std::vector<Camera> cams;
    std::vector<Point2> obs;
    cams.reserve(track.measurements.size());
    for (const TrackMeasurement& m : track.measurements) {
        cams.push_back(cameras.at(m.frame));
        obs.push_back(m.position);
    }

    Point3 seed;
    try {
        seed = triangulate_two_view(cams.front(), obs.front(), cams.back(), obs.back());
    } catch (const GeometryError&) {
        return out;  // degenerate or low-parallax seed
    }

    const RefineResult res = refine_gauss_newton(cams, obs, seed, p);
    if (!res.ok) return out;
    out.position = res.position;
    out.mean_reproj_error = res.mean_reproj_error;
    out.accepted = accept_point(out, p);
    return out;
}

}  // namespace

std::vector<EstimatedPoint> estimate_tracks(const std::vector<Track>& tracks,
                                            const std::vector<Camera>& cameras,
                                            const EstimatorParams& p, bool parallel) {
    std::vector<EstimatedPoint> out(tracks.size());
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 16)
        for (std::int64_t i = 0; i < std::int64_t(tracks.size()); ++i)
            out[i] = estimate_one(tracks[i], cameras, p);
    } else {
        for (std::size_t i = 0; i < tracks.size(); ++i)
            out[i] = estimate_one(tracks[i], cameras, p);
    }
    return out;
}

void write_points_file(const std::string& path, const std::vector<EstimatedPoint>& points) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write points file: " + path);
    char buf[192];
    for (const EstimatedPoint& e : points) {
        if (!e.accepted) continue;
        std::snprintf(buf, sizeof buf, "%u %.17g %.17g %.17g %d %d %.17g\n", e.id,
                      e.position.x(), e.position.y(), e.position.z(),
                      e.supporting_frames.front(), e.supporting_frames.back(),
                      e.mean_reproj_error);
        out << buf;
    }
}

std::vector<EstimatedPoint> read_points_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open points file: " + path);
    std::vector<EstimatedPoint> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        EstimatedPoint e;
        double x, y, z;
        int first, last;
        if (!(ss >> e.id >> x >> y >> z >> first >> last >> e.mean_reproj_error))
            throw std::runtime_error("points file: bad line '" + line + "'");
        e.position = Point3(x, y, z);
        e.supporting_frames = {first, last};
        e.accepted = true;
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace ecarve
