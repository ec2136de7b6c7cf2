#include "ecarve/pipeline.hpp"
#include "ecarve/surface_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

namespace ecarve {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// RunConfig

namespace {

std::string mode_name(RunConfig::Mode m) {
    return m == RunConfig::Mode::OracleTracks ? "tracks" : "images";
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config: " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r\n");
            const auto e = s.find_last_not_of(" \t\r\n");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        auto as_double = [&] { return std::stod(val); };
        auto as_int = [&] { return std::stoi(val); };
        auto as_bool = [&] {
            if (val == "true" || val == "1") return true;
            if (val == "false" || val == "0") return false;
            throw std::invalid_argument("config: bad boolean '" + val + "'");
        };

        if (key == "mode") {
            if (val == "tracks")
                cfg.mode = Mode::OracleTracks;
            else if (val == "images")
                cfg.mode = Mode::Images;
            else
                throw std::invalid_argument("config: unknown mode '" + val + "'");
        } else if (key == "tracks") {
            cfg.tracks_path = val;
        } else if (key == "images") {
            cfg.images_dir = val;
        } else if (key == "poses") {
            cfg.poses_path = val;
        } else if (key == "cloud") {
            cfg.cloud_path = val;
        } else if (key == "out") {
            cfg.out_dir = val;
        } else if (key == "fx") {
            cfg.intrinsics.fx = as_double();
        } else if (key == "fy") {
            cfg.intrinsics.fy = as_double();
        } else if (key == "cx") {
            cfg.intrinsics.cx = as_double();
        } else if (key == "cy") {
            cfg.intrinsics.cy = as_double();
        } else if (key == "width") {
            cfg.width = as_int();
        } else if (key == "height") {
            cfg.height = as_int();
        } else if (key == "t_k") {
            cfg.frontend.t_k = as_int();
            cfg.frontend.l_min = std::max(cfg.frontend.l_min, cfg.frontend.t_k);
        } else if (key == "t_edges") {
            cfg.frontend.t_edges = as_int();
        } else if (key == "canny_low") {
            cfg.frontend.canny_low = as_double();
        } else if (key == "canny_high") {
            cfg.frontend.canny_high = as_double();
        } else if (key == "d_min") {
            cfg.frontend.d_min = as_double();
        } else if (key == "eps_e") {
            cfg.frontend.eps_e = as_double();
        } else if (key == "l_min") {
            cfg.frontend.l_min = as_int();
        } else if (key == "n_gn") {
            cfg.estimator.n_gn = as_int();
        } else if (key == "eps_gn") {
            cfg.estimator.eps_gn = as_double();
        } else if (key == "w1") {
            cfg.ich.w1 = as_double();
        } else if (key == "w2") {
            cfg.ich.w2 = as_double();
        } else if (key == "w3") {
            cfg.ich.w3 = as_double();
        } else if (key == "t_init") {
            cfg.t_init = as_int();
        } else if (key == "rays") {
            if (val == "endpoints")
                cfg.rays_all_keyframes = false;
            else if (val == "all")
                cfg.rays_all_keyframes = true;
            else
                throw std::invalid_argument("config: rays must be endpoints|all");
        } else if (key == "alpha_deg") {
            cfg.alpha_deg = as_double();
        } else if (key == "seed") {
            cfg.seed = std::stoull(val);
        } else if (key == "parallel") {
            cfg.parallel = as_bool();
        } else if (key == "keyframe_meshes") {
            cfg.keyframe_meshes = as_bool();
        } else if (key == "check_invariants") {
            cfg.check_invariants = as_bool();
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    return cfg;
}

void RunConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config: " + path);
    char buf[256];
    out << "mode=" << mode_name(mode) << "\n";
    if (!tracks_path.empty()) out << "tracks=" << tracks_path << "\n";
    if (!images_dir.empty()) out << "images=" << images_dir << "\n";
    if (!poses_path.empty()) out << "poses=" << poses_path << "\n";
    if (!cloud_path.empty()) out << "cloud=" << cloud_path << "\n";
    if (!out_dir.empty()) out << "out=" << out_dir << "\n";
    std::snprintf(buf, sizeof buf, "fx=%.17g\nfy=%.17g\ncx=%.17g\ncy=%.17g\n", intrinsics.fx,
                  intrinsics.fy, intrinsics.cx, intrinsics.cy);
    out << buf;
    out << "width=" << width << "\nheight=" << height << "\n";
    out << "t_k=" << frontend.t_k << "\nt_edges=" << frontend.t_edges << "\n";
    std::snprintf(buf, sizeof buf, "canny_low=%.17g\ncanny_high=%.17g\nd_min=%.17g\neps_e=%.17g\n",
                  frontend.canny_low, frontend.canny_high, frontend.d_min, frontend.eps_e);
    out << buf;
    out << "l_min=" << frontend.l_min << "\nn_gn=" << estimator.n_gn << "\n";
    std::snprintf(buf, sizeof buf, "eps_gn=%.17g\nw1=%.17g\nw2=%.17g\nw3=%.17g\n",
                  estimator.eps_gn, ich.w1, ich.w2, ich.w3);
    out << buf;
    out << "t_init=" << t_init << "\nrays=" << (rays_all_keyframes ? "all" : "endpoints")
        << "\n";
    std::snprintf(buf, sizeof buf, "alpha_deg=%.17g\nseed=%llu\n", alpha_deg,
                  (unsigned long long)seed);
    out << buf;
    out << "parallel=" << (parallel ? "true" : "false") << "\n";
    out << "keyframe_meshes=" << (keyframe_meshes ? "true" : "false") << "\n";
    out << "check_invariants=" << (check_invariants ? "true" : "false") << "\n";
}

void RunConfig::validate() const {
    if (!intrinsics.valid()) throw std::invalid_argument("config: invalid intrinsics");
    if (!frontend.valid()) throw std::invalid_argument("config: invalid frontend parameters");
    if (!ich.valid()) throw std::invalid_argument("config: invalid ICH weights (need w3 <= w2)");
    if (estimator.n_gn < 1 || estimator.eps_gn <= 0.0)
        throw std::invalid_argument("config: invalid estimator parameters");
    if (t_init < 1) throw std::invalid_argument("config: t_init must be >= 1");
    if (alpha_deg <= 0.0 || alpha_deg >= 180.0)
        throw std::invalid_argument("config: alpha_deg must be in (0, 180)");
    if (mode == Mode::OracleTracks && tracks_path.empty())
        throw std::invalid_argument("config: tracks mode needs a tracks file");
    if (mode == Mode::Images && images_dir.empty())
        throw std::invalid_argument("config: images mode needs an image directory");
    if (poses_path.empty()) throw std::invalid_argument("config: poses file required");
}

// ---------------------------------------------------------------------------
// critical artifacts

int count_critical_artifacts(const Triangulation& tri, const Manifold& m,
                             const std::vector<Point3>& camera_centers, double alpha_rad) {
    if (!(alpha_rad > 0.0 && alpha_rad < M_PI))
        throw std::invalid_argument("count_critical_artifacts: alpha out of range");
    const double cos_alpha = std::cos(alpha_rad);

    std::vector<TetraId> pocket;
    for (TetraId t = 0; t < tri.cell_storage_size(); ++t) {
        const Tetra& c = tri.tet(t);
        if (c.alive && !c.outside && !c.ray_refs.empty() && !tri.is_infinite(t))
            pocket.push_back(t);
    }
    std::unordered_set<TetraId> pocket_set(pocket.begin(), pocket.end());
    std::unordered_set<TetraId> visited;

    int count = 0;
    for (TetraId seed : pocket) {
        if (visited.count(seed)) continue;
        // Flood one component.
        std::vector<TetraId> comp{seed};
        visited.insert(seed);
        for (std::size_t qi = 0; qi < comp.size(); ++qi)
            for (TetraId u : tri.tet(comp[qi]).n)
                if (pocket_set.count(u) && visited.insert(u).second) comp.push_back(u);

        // Critical iff some cell edge subtends more than alpha at a camera.
        std::set<std::pair<VertexId, VertexId>> edges;
        for (TetraId t : comp) {
            const Tetra& c = tri.tet(t);
            for (int i = 0; i < 4; ++i)
                for (int j = i + 1; j < 4; ++j)
                    edges.insert(std::minmax(c.v[i], c.v[j]));
        }
        bool critical = false;
        for (const auto& [va, vb] : edges) {
            const Point3& a = tri.point(va);
            const Point3& b = tri.point(vb);
            for (const Point3& c : camera_centers) {
                const Eigen::Vector3d da = a - c, db = b - c;
                const double na = da.norm(), nb = db.norm();
                if (na < 1e-12 || nb < 1e-12) continue;
                if (da.dot(db) / (na * nb) < cos_alpha) {
                    critical = true;
                    break;
                }
            }
            if (critical) break;
        }
        if (critical) ++count;
    }
    return count;
}

// ---------------------------------------------------------------------------
// report

void EvalReport::write(const std::string& dir) const {
    char buf[256];
    {
        std::ofstream out(fs::path(dir) / "report.txt");
        if (!out) throw std::runtime_error("cannot write report in " + dir);
        std::snprintf(buf, sizeof buf, "mean_p2m=%.17g\nmedian_p2m=%.17g\n", mean_p2m,
                      median_p2m);
        out << buf;
        out << "artifact_count=" << artifact_count << "\n";
        out << "keyframes=" << keyframes << "\n";
        out << "points_extracted=" << counts.extracted << "\n";
        out << "points_tracked=" << counts.tracked << "\n";
        out << "points_filtered=" << counts.filtered << "\n";
        out << "points_estimated=" << counts.estimated << "\n";
        out << "points_accepted=" << counts.accepted << "\n";
        out << "empty_input=" << (empty_input ? "true" : "false") << "\n";
    }
    {
        std::ofstream out(fs::path(dir) / "timings.csv");
        out << "keyframe,insertion_s,rays_ich_s,grow_shrink_s\n";
        for (std::size_t i = 0; i < keyframe_timings.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f\n", i,
                          keyframe_timings[i].insertion_s, keyframe_timings[i].rays_ich_s,
                          keyframe_timings[i].grow_shrink_s);
            out << buf;
        }
    }
}

// ---------------------------------------------------------------------------
// pipeline

namespace {

std::vector<Track> load_tracks_for(const RunConfig& cfg, StageCounts& counts) {
    if (cfg.mode == RunConfig::Mode::OracleTracks) {
        std::vector<Track> tracks = read_tracks_file(cfg.tracks_path);
        counts.extracted = tracks.size();
        return tracks;
    }
    // Images mode: run the frontend over the PGM sequence.
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(cfg.images_dir))
        if (entry.path().extension() == ".pgm") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) return {};

    const std::vector<Pose> poses = read_pose_file(cfg.poses_path);
    if (poses.size() < files.size())
        throw std::invalid_argument("fewer poses than images");
    std::vector<Camera> cams;
    for (const Pose& p : poses) cams.push_back({cfg.intrinsics, p});

    Tracker tracker(cfg.frontend, cams, cfg.parallel);
    for (std::size_t i = 0; i < files.size(); ++i)
        tracker.process_frame(read_pgm(files[i].string()), int(i));
    tracker.finish();
    std::vector<Track> tracks = tracker.take_accepted();
    counts.extracted = tracker.stats().extracted;
    return tracks;
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& cfg) {
    cfg.validate();
    PipelineInputs in;
    StageCounts counts;
    in.tracks = load_tracks_for(cfg, counts);
    const std::vector<Pose> poses = read_pose_file(cfg.poses_path);
    for (const Pose& p : poses) in.cameras.push_back({cfg.intrinsics, p});
    if (!cfg.cloud_path.empty()) in.eval_cloud = read_xyz(cfg.cloud_path);
    PipelineResult res = run_pipeline(cfg, std::move(in));
    res.report.counts.extracted = std::max(res.report.counts.extracted, counts.extracted);
    return res;
}

PipelineResult run_pipeline(const RunConfig& cfg, PipelineInputs inputs) {
    PipelineResult result;
    EvalReport& report = result.report;
    report.counts.extracted = inputs.tracks.size();

    const bool write_files = !cfg.out_dir.empty();
    if (write_files) fs::create_directories(cfg.out_dir);

    if (inputs.tracks.empty()) {
        report.empty_input = true;
        std::cerr << "warning: no input tracks; writing an empty result\n";
        if (write_files) {
            write_ply((fs::path(cfg.out_dir) / "mesh_final.ply").string(), result.final_mesh);
            report.write(cfg.out_dir);
        }
        return result;
    }

    // Batch tracks by the keyframe at which they complete.
    const int t_k = cfg.frontend.t_k;
    int last_frame = 0;
    for (const Track& t : inputs.tracks) {
        if (int(t.measurements.size()) >= 2) ++report.counts.tracked;
        last_frame = std::max(last_frame, t.measurements.back().frame);
    }
    report.counts.filtered = report.counts.tracked;  // inputs already passed the gates
    const int last_keyframe = (last_frame + t_k - 1) / t_k;
    std::map<int, std::vector<const Track*>> batches;
    for (const Track& t : inputs.tracks) {
        if (int(t.measurements.size()) < 2) continue;
        const int kf = (t.measurements.back().frame + t_k - 1) / t_k;
        batches[kf].push_back(&t);
    }

    Triangulation tri;
    Carver carver(tri, cfg.ich);
    Manifold manifold(tri, carver);

    auto make_keyframe_points = [&](const std::vector<const Track*>& batch) {
        std::vector<Track> tracks;
        tracks.reserve(batch.size());
        for (const Track* t : batch) tracks.push_back(*t);
        const auto estimates = estimate_tracks(tracks, inputs.cameras, cfg.estimator,
                                               cfg.parallel);
        std::vector<KeyframePoint> pts;
        for (const EstimatedPoint& e : estimates) {
            if (std::isfinite(e.mean_reproj_error)) ++report.counts.estimated;
            if (!e.accepted) continue;
            ++report.counts.accepted;
            KeyframePoint kp;
            kp.position = e.position;
            std::vector<int> kf_frames;
            for (int f : e.supporting_frames)
                if (f % t_k == 0) kf_frames.push_back(f);
            if (kf_frames.empty())
                kf_frames = {e.supporting_frames.front(), e.supporting_frames.back()};
            if (!cfg.rays_all_keyframes && kf_frames.size() > 2)
                kf_frames = {kf_frames.front(), kf_frames.back()};
            std::sort(kf_frames.begin(), kf_frames.end());
            kf_frames.erase(std::unique(kf_frames.begin(), kf_frames.end()), kf_frames.end());
            for (int f : kf_frames)
                kp.ray_centers.push_back(inputs.cameras.at(f).center());
            pts.push_back(std::move(kp));
        }
        return pts;
    };

    // Bootstrap with everything completed up to t_init, then incremental
    // keyframe updates.
    const int boot_kf = std::min(cfg.t_init, last_keyframe);
    std::vector<KeyframePoint> boot_points;
    for (int kf = 0; kf <= boot_kf; ++kf) {
        const auto it = batches.find(kf);
        if (it == batches.end()) continue;
        auto pts = make_keyframe_points(it->second);
        boot_points.insert(boot_points.end(), pts.begin(), pts.end());
    }
    {
        KeyframeTimings t;
        manifold.bootstrap(boot_points, cfg.parallel, &t);
        report.keyframe_timings.push_back(t);
        ++report.keyframes;
        if (cfg.check_invariants) {
            tri.check_structure();
            manifold.check_invariants();
        }
        if (cfg.keyframe_meshes) {
            const SurfaceMesh mesh = manifold.extract_surface();
            if (write_files) {
                char name[64];
                std::snprintf(name, sizeof name, "mesh_kf_%03d.ply", boot_kf);
                write_ply((fs::path(cfg.out_dir) / name).string(), mesh);
            }
            result.keyframe_meshes.push_back(mesh);
        }
    }

    for (int kf = boot_kf + 1; kf <= last_keyframe; ++kf) {
        std::vector<KeyframePoint> pts;
        const auto it = batches.find(kf);
        if (it != batches.end()) pts = make_keyframe_points(it->second);
        KeyframeTimings t;
        manifold.keyframe_update(pts, cfg.parallel, &t);
        report.keyframe_timings.push_back(t);
        ++report.keyframes;
        if (cfg.check_invariants) {
            tri.check_structure();
            manifold.check_invariants();
        }
        if (cfg.keyframe_meshes) {
            const SurfaceMesh mesh = manifold.extract_surface();
            if (write_files) {
                char name[64];
                std::snprintf(name, sizeof name, "mesh_kf_%03d.ply", kf);
                write_ply((fs::path(cfg.out_dir) / name).string(), mesh);
            }
            result.keyframe_meshes.push_back(mesh);
        }
    }

    result.final_mesh = manifold.extract_surface();

    if (!inputs.eval_cloud.empty() && !result.final_mesh.triangles.empty()) {
        const PointToMeshResult p2m =
            point_to_mesh_error(inputs.eval_cloud, result.final_mesh, cfg.parallel);
        report.mean_p2m = p2m.mean;
        report.median_p2m = p2m.median;
    }
    {
        std::vector<Point3> centers;
        for (const Camera& c : inputs.cameras) centers.push_back(c.center());
        report.artifact_count = count_critical_artifacts(
            tri, manifold, centers, cfg.alpha_deg * M_PI / 180.0);
    }

    if (write_files) {
        write_ply((fs::path(cfg.out_dir) / "mesh_final.ply").string(), result.final_mesh);
        std::ofstream dump(fs::path(cfg.out_dir) / "state.dump");
        tri.write_dump(dump);
        report.write(cfg.out_dir);
    }
    return result;
}

}  // namespace ecarve
