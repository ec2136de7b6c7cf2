#pragma once

#include "ecarve/geometry.hpp"
#include "ecarve/image.hpp"
#include "ecarve/tracks.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ecarve {

// Axis-aligned box primitive, in scene units.
struct Box {
    Point3 lo = Point3::Zero();
    Point3 hi = Point3::Ones();

    bool contains(const Point3& p, double margin = 0.0) const {
        return (p.array() >= lo.array() - margin).all() &&
               (p.array() <= hi.array() + margin).all();
    }
};

// First-hit parameter of the segment a->b against the box, in (0,1);
// negative when there is no hit.
double segment_box_hit(const Point3& a, const Point3& b, const Box& box);

struct SceneDescription {
    std::string name = "custom";
    std::vector<Box> boxes;
    std::vector<Pose> path;  // world->camera per frame
    Intrinsics intrinsics{400.0, 400.0, 320.0, 240.0};
    int width = 640;
    int height = 480;
    double gt_density = 6.0;         // ground-truth samples per unit length
    double edge_point_step = 0.25;   // oracle Edge-Point spacing along box edges
    double face_point_density = 1.0; // oracle texture points per unit area
};

// Built-in desk-scale stand-ins: "corridor", "room", "plaza".
SceneDescription builtin_scene(const std::string& name);
SceneDescription load_scene_file(const std::string& path);
void write_scene_file(const std::string& path, const SceneDescription& desc);

struct SceneOracle {
    SceneDescription desc;
    std::vector<Camera> cameras;       // one per frame
    std::vector<Point3> gt_cloud;      // on primitive surfaces, camera-visible
    std::vector<Point3> edge_samples;  // oracle Edge-Points on box edges
    std::vector<Point3> face_samples;  // oracle texture points on faces

    double diameter() const;  // scene bounding-box diagonal
    bool visible(int frame, const Point3& x) const;
};

// Deterministic given the seed. Throws std::invalid_argument when a camera
// center lies inside a primitive or the description is degenerate.
SceneOracle generate_scene(const SceneDescription& desc, std::uint64_t seed);

// Flat-shaded render with per-face albedo steps and a low-amplitude
// world-anchored texture (trackable but below the Canny thresholds).
GrayImage render_view(const SceneOracle& scene, int frame);

struct OracleTracksParams {
    double noise_sigma = 0.0;
    std::uint64_t seed = 1;
    FrontendParams frontend;
    bool apply_filters = true;  // false: raw projected tracks (for parity tests)
};

// Projects the oracle sample points through the camera path, mirroring the
// image frontend: birth on keyframes when visible, per-frame measurements
// with Gaussian pixel noise, termination on occlusion or image exit, the
// displacement/epipolar gates (a gated track is discarded entirely), and the
// track-length gate.
std::vector<Track> oracle_tracks(const SceneOracle& scene, const OracleTracksParams& p);

}  // namespace ecarve
