#pragma once

#include "ecarve/carver.hpp"
#include "ecarve/estimator.hpp"
#include "ecarve/manifold.hpp"
#include "ecarve/meshdist.hpp"
#include "ecarve/scene.hpp"

#include <string>
#include <vector>

namespace ecarve {

struct RunConfig {
    enum class Mode { OracleTracks, Images };
    Mode mode = Mode::OracleTracks;
    std::string tracks_path;
    std::string images_dir;
    std::string poses_path;
    std::string cloud_path;  // optional ground-truth cloud for the report
    std::string out_dir;     // empty: no files written
    Intrinsics intrinsics{400.0, 400.0, 320.0, 240.0};
    int width = 640;
    int height = 480;
    FrontendParams frontend;
    EstimatorParams estimator;
    IchWeights ich;
    int t_init = 2;                  // bootstrap at this keyframe index
    bool rays_all_keyframes = false; // else first/last supporting keyframe
    double alpha_deg = 10.0;         // critical-artifact angle
    std::uint64_t seed = 1;
    bool parallel = true;
    bool keyframe_meshes = true;
    bool check_invariants = false;   // run the manifold invariant suite per keyframe

    // Text key=value config; unknown keys are rejected.
    static RunConfig load(const std::string& path);
    void save(const std::string& path) const;
    void validate() const;  // throws std::invalid_argument
};

// Connected pockets of ray-traversed cells excluded from the outside set
// that subtend more than alpha at some camera center.
int count_critical_artifacts(const Triangulation& tri, const Manifold& m,
                             const std::vector<Point3>& camera_centers, double alpha_rad);

struct StageCounts {
    std::size_t extracted = 0;  // tracks spawned (or read)
    std::size_t tracked = 0;    // tracks with at least 2 measurements
    std::size_t filtered = 0;   // tracks surviving the filter/length gates
    std::size_t estimated = 0;  // tracks with a valid two-view seed + refinement
    std::size_t accepted = 0;   // points passing the mean-error gate
};

struct EvalReport {
    double mean_p2m = 0.0;
    double median_p2m = 0.0;
    int artifact_count = 0;
    int keyframes = 0;
    StageCounts counts;
    std::vector<KeyframeTimings> keyframe_timings;
    bool empty_input = false;

    void write(const std::string& dir) const;  // report.txt and timings.csv
};

struct PipelineInputs {
    std::vector<Track> tracks;
    std::vector<Camera> cameras;
    std::vector<Point3> eval_cloud;  // may be empty
};

struct PipelineResult {
    SurfaceMesh final_mesh;
    EvalReport report;
    std::vector<SurfaceMesh> keyframe_meshes;  // kept only when requested
};

PipelineResult run_pipeline(const RunConfig& cfg);
PipelineResult run_pipeline(const RunConfig& cfg, PipelineInputs inputs);

}  // namespace ecarve
