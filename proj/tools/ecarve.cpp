#include "ecarve/pipeline.hpp"
#include "ecarve/surface_io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace ecarve;

namespace {

int cmd_simulate(const std::string& scene_spec, std::uint64_t seed, const std::string& out,
                 bool render, double noise_sigma, double density_scale) {
    SceneDescription desc;
    if (fs::exists(scene_spec))
        desc = load_scene_file(scene_spec);
    else
        desc = builtin_scene(scene_spec);
    desc.edge_point_step /= density_scale;
    desc.face_point_density *= density_scale;

    const SceneOracle scene = generate_scene(desc, seed);
    fs::create_directories(out);

    std::vector<Pose> poses;
    for (const Camera& c : scene.cameras) poses.push_back(c.pose);
    write_pose_file((fs::path(out) / "poses.txt").string(), poses);
    write_xyz((fs::path(out) / "cloud.xyz").string(), scene.gt_cloud);
    write_scene_file((fs::path(out) / "scene.txt").string(), desc);

    OracleTracksParams tp;
    tp.noise_sigma = noise_sigma;
    tp.seed = seed;
    const auto tracks = oracle_tracks(scene, tp);
    write_tracks_file((fs::path(out) / "tracks.txt").string(), tracks);

    RunConfig cfg;
    cfg.mode = RunConfig::Mode::OracleTracks;
    cfg.intrinsics = desc.intrinsics;
    cfg.width = desc.width;
    cfg.height = desc.height;
    cfg.tracks_path = (fs::path(out) / "tracks.txt").string();
    cfg.poses_path = (fs::path(out) / "poses.txt").string();
    cfg.cloud_path = (fs::path(out) / "cloud.xyz").string();
    cfg.out_dir = (fs::path(out) / "recon").string();
    cfg.seed = seed;
    cfg.save((fs::path(out) / "config.cfg").string());

    if (render) {
        const fs::path imgdir = fs::path(out) / "images";
        fs::create_directories(imgdir);
        for (std::size_t f = 0; f < scene.cameras.size(); ++f) {
            char name[32];
            std::snprintf(name, sizeof name, "frame_%05zu.pgm", f);
            write_pgm((imgdir / name).string(), render_view(scene, int(f)));
        }
    }
    std::cout << "scene '" << desc.name << "': " << scene.cameras.size() << " frames, "
              << tracks.size() << " tracks, " << scene.gt_cloud.size()
              << " ground-truth points -> " << out << "\n";
    return 0;
}

int cmd_reconstruct(const std::string& config_path, const std::string& tracks,
                    const std::string& images, const std::string& poses,
                    const std::string& out) {
    RunConfig cfg = RunConfig::load(config_path);
    if (!tracks.empty()) {
        cfg.tracks_path = tracks;
        cfg.mode = RunConfig::Mode::OracleTracks;
    }
    if (!images.empty()) {
        cfg.images_dir = images;
        cfg.mode = RunConfig::Mode::Images;
    }
    if (!poses.empty()) cfg.poses_path = poses;
    if (!out.empty()) cfg.out_dir = out;
    cfg.validate();

    const PipelineResult res = run_pipeline(cfg);
    std::cout << "keyframes=" << res.report.keyframes
              << " accepted_points=" << res.report.counts.accepted
              << " triangles=" << res.final_mesh.triangles.size()
              << " artifacts=" << res.report.artifact_count << "\n";
    if (!res.report.empty_input)
        std::cout << "mean_p2m=" << res.report.mean_p2m
                  << " median_p2m=" << res.report.median_p2m << "\n";
    return 0;
}

int cmd_evaluate(const std::string& mesh_path, const std::string& cloud_path) {
    const SurfaceMesh mesh = read_ply(mesh_path);
    const std::vector<Point3> cloud = read_xyz(cloud_path);
    const PointToMeshResult r = point_to_mesh_error(cloud, mesh, true);
    std::cout << "mean=" << r.mean << " median=" << r.median << " points=" << cloud.size()
              << " triangles=" << mesh.triangles.size() << "\n";
    return 0;
}

int cmd_export(const std::string& state_path, const std::string& ply_path, bool labels) {
    std::ifstream in(state_path);
    if (!in) throw std::runtime_error("cannot open state dump: " + state_path);
    Triangulation tri = Triangulation::read_dump(in);

    // The boundary facets of the stored outside labels, outward-oriented.
    SurfaceMesh mesh;
    std::unordered_map<VertexId, std::uint32_t> remap;
    for (TetraId t = 0; t < tri.cell_storage_size(); ++t) {
        const Tetra& c = tri.tet(t);
        if (!c.alive || !c.outside) continue;
        for (int i = 0; i < 4; ++i) {
            if (tri.tet(c.n[i]).outside) continue;
            const auto f = tri.facet_vertices(t, i);
            const VertexId ordered[3] = {f[0], f[2], f[1]};
            std::array<std::uint32_t, 3> idx{};
            for (int k = 0; k < 3; ++k) {
                auto [it, fresh] =
                    remap.emplace(ordered[k], std::uint32_t(mesh.vertices.size()));
                if (fresh) mesh.vertices.push_back(tri.point(ordered[k]));
                idx[k] = it->second;
            }
            mesh.triangles.push_back(idx);
        }
    }
    write_ply(ply_path, mesh, labels);
    std::cout << "exported " << mesh.triangles.size() << " triangles to " << ply_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"incremental edge-point space carving"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "generate a synthetic scene corpus");
    std::string sim_scene = "corridor", sim_out = "scene_out";
    std::uint64_t sim_seed = 1;
    bool sim_render = false;
    double sim_noise = 0.3, sim_density = 1.0;
    sim->add_option("--scene", sim_scene, "builtin name (corridor|room|plaza) or scene file");
    sim->add_option("--seed", sim_seed, "random seed");
    sim->add_option("--out", sim_out, "output directory")->required();
    sim->add_flag("--render", sim_render, "also render PGM frames");
    sim->add_option("--noise", sim_noise, "track pixel noise sigma");
    sim->add_option("--density", sim_density, "edge-point density multiplier");

    auto* rec = app.add_subcommand("reconstruct", "run the reconstruction pipeline");
    std::string rec_config, rec_tracks, rec_images, rec_poses, rec_out;
    rec->add_option("--config", rec_config, "key=value config file")->required();
    rec->add_option("--tracks", rec_tracks, "tracks file (overrides config)");
    rec->add_option("--images", rec_images, "PGM image directory (overrides config)");
    rec->add_option("--poses", rec_poses, "pose file (overrides config)");
    rec->add_option("--out", rec_out, "output directory (overrides config)");

    auto* eva = app.add_subcommand("evaluate", "point-to-mesh distance of a cloud");
    std::string eva_mesh, eva_cloud;
    eva->add_option("--mesh", eva_mesh, "PLY mesh")->required();
    eva->add_option("--cloud", eva_cloud, "XYZ cloud")->required();

    auto* exp = app.add_subcommand("export", "extract the boundary surface of a state dump");
    std::string exp_state, exp_ply;
    bool exp_labels = false;
    exp->add_option("--state", exp_state, "triangulation state dump")->required();
    exp->add_option("--ply", exp_ply, "output PLY")->required();
    exp->add_flag("--face-labels", exp_labels, "write the per-face debug attribute");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(sim_scene, sim_seed, sim_out, sim_render, sim_noise, sim_density);
        if (rec->parsed())
            return cmd_reconstruct(rec_config, rec_tracks, rec_images, rec_poses, rec_out);
        if (eva->parsed()) return cmd_evaluate(eva_mesh, eva_cloud);
        if (exp->parsed()) return cmd_export(exp_state, exp_ply, exp_labels);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
