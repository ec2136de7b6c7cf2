#pragma once

#include "ecarve/geometry.hpp"
#include "ecarve/tracks.hpp"

#include <span>
#include <string>
#include <vector>

namespace ecarve {

struct EstimatorParams {
    int n_gn = 50;       // Gauss-Newton iteration cap
    double eps_gn = 2.0; // acceptance threshold on the mean reprojection error, px
};

// Optimal two-view triangulation: the measurement pair is corrected to
// satisfy the epipolar constraint exactly (minimal summed squared pixel
// correction, polynomial method), then the corrected rays are intersected
// by the homogeneous DLT. Throws GeometryError for a zero baseline or when
// the corrected rays are nearly parallel (angle < 1e-6 rad).
Point3 triangulate_two_view(const Camera& cam_a, const Point2& x_a, const Camera& cam_b,
                            const Point2& x_b);

// Plain DLT without the correction step (reference/baseline method).
Point3 triangulate_dlt(const Camera& cam_a, const Point2& x_a, const Camera& cam_b,
                       const Point2& x_b);

struct RefineResult {
    Point3 position = Point3::Zero();
    double mean_reproj_error = std::numeric_limits<double>::infinity();
    bool ok = false;  // false: singular normal equations or invalid start
    int iterations = 0;
};

// Gauss-Newton on the stacked dehomogenized reprojection residual with
// step-halving damping (at most 10 halvings per iteration) and early exit on
// an update below 1e-10. Accepted steps never increase the total squared
// error.
RefineResult refine_gauss_newton(std::span<const Camera> cams, std::span<const Point2> obs,
                                 const Point3& x0, const EstimatorParams& p);

// Analytic 2x3 Jacobian of the dehomogenized projection at x.
Eigen::Matrix<double, 2, 3> projection_jacobian(const Camera& cam, const Point3& x);

struct EstimatedPoint {
    std::uint32_t id = 0;
    Point3 position = Point3::Zero();
    double mean_reproj_error = std::numeric_limits<double>::infinity();
    std::vector<int> supporting_frames;
    bool accepted = false;
};

inline bool accept_point(const EstimatedPoint& e, const EstimatorParams& p) {
    return e.mean_reproj_error <= p.eps_gn;
}

// Independent per-track estimation (Hartley-Sturm seed on the first/last
// measurements, Gauss-Newton over the whole track, mean-error gate); results
// are gathered by input order so the output is identical for the serial and
// OpenMP paths.
std::vector<EstimatedPoint> estimate_tracks(const std::vector<Track>& tracks,
                                            const std::vector<Camera>& cameras,
                                            const EstimatorParams& p, bool parallel);

// Points file: `point_id x y z first_frame last_frame mean_error`, accepted
// points only.
void write_points_file(const std::string& path, const std::vector<EstimatedPoint>& points);
std::vector<EstimatedPoint> read_points_file(const std::string& path);

}  // namespace ecarve
