#include "ecarve/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ecarve {

double segment_box_hit(const Point3& a, const Point3& b, const Box& box) {
    double t0 = 0.0, t1 = 1.0;
    for (int k = 0; k < 3; ++k) {
        const double d = b[k] - a[k];
        if (std::abs(d) < 1e-300) {
            if (a[k] < box.lo[k] || a[k] > box.hi[k]) return -1.0;
            continue;
        }
        double s0 = (box.lo[k] - a[k]) / d;
        double s1 = (box.hi[k] - a[k]) / d;
        if (s0 > s1) std::swap(s0, s1);
        t0 = std::max(t0, s0);
        t1 = std::min(t1, s1);
        if (t0 > t1) return -1.0;
    }
    if (t1 - t0 < 1e-12) return -1.0;  // tangential graze
    return t0 > 0.0 && t0 < 1.0 ? t0 : -1.0;
}

namespace {

Pose pose_looking(const Point3& center, const Eigen::Vector3d& forward,
                  const Eigen::Vector3d& down_hint = {0, 1, 0}) {
    const Eigen::Vector3d z = forward.normalized();
    Eigen::Vector3d y = (down_hint - down_hint.dot(z) * z);
    if (y.norm() < 1e-9) y = Eigen::Vector3d(0, 0, 1) - z.z() * z;
    y.normalize();
    const Eigen::Vector3d x = y.cross(z);
    Pose p;
    p.R.row(0) = x;
    p.R.row(1) = y;
    p.R.row(2) = z;
    p.t = -p.R * center;
    return p;
}

}  // namespace

SceneDescription builtin_scene(const std::string& name) {
    SceneDescription d;
    d.name = name;
    if (name == "corridor") {
        // Two parallel walls and a floor; straight forward path with a slight
        // lateral sway (forward monocular motion, the paper's hard case).
        d.boxes.push_back({{-3.2, -1.5, -2.0}, {-3.0, 1.5, 42.0}});
        d.boxes.push_back({{3.0, -1.5, -2.0}, {3.2, 1.5, 42.0}});
        d.boxes.push_back({{-3.2, 1.5, -2.0}, {3.2, 1.7, 42.0}});
        const int frames = 120;
        for (int t = 0; t < frames; ++t) {
            const double z = 0.25 * t;
            const Point3 c(0.15 * std::sin(0.2 * t), 0.0, z);
            d.path.push_back(pose_looking(c, {0.05 * std::cos(0.2 * t), 0.0, 1.0}));
        }
    } else if (name == "room") {
        // Closed box room, interior orbit looking outward.
        d.boxes.push_back({{-4.0, 1.5, -4.0}, {4.0, 1.7, 4.0}});    // floor
        d.boxes.push_back({{-4.0, -2.2, -4.0}, {4.0, -2.0, 4.0}});  // ceiling
        d.boxes.push_back({{-4.0, -2.0, -4.0}, {-3.8, 1.5, 4.0}});  // walls
        d.boxes.push_back({{3.8, -2.0, -4.0}, {4.0, 1.5, 4.0}});
        d.boxes.push_back({{-3.8, -2.0, -4.0}, {3.8, 1.5, -3.8}});
        d.boxes.push_back({{-3.8, -2.0, 3.8}, {3.8, 1.5, 4.0}});
        const int frames = 160;
        for (int t = 0; t < frames; ++t) {
            const double ang = 2.0 * M_PI * t / frames;
            const Point3 c(1.5 * std::cos(ang), -0.2, 1.5 * std::sin(ang));
            const Eigen::Vector3d outward(std::cos(ang + 0.35), 0.05, std::sin(ang + 0.35));
            d.path.push_back(pose_looking(c, outward));
        }
    } else if (name == "plaza") {
        // Open ground with scattered blocks; curved forward path.
        d.boxes.push_back({{-12.0, 1.5, -12.0}, {12.0, 1.7, 12.0}});  // ground
        d.boxes.push_back({{-4.5, -0.5, -3.0}, {-2.5, 1.5, -1.0}});
        d.boxes.push_back({{2.0, -1.0, 1.0}, {4.0, 1.5, 3.0}});
        d.boxes.push_back({{-1.5, 0.0, 4.5}, {0.5, 1.5, 6.0}});
        d.boxes.push_back({{4.5, -0.2, -6.0}, {6.5, 1.5, -4.0}});
        d.boxes.push_back({{-7.0, 0.3, 2.0}, {-5.0, 1.5, 4.0}});
        const int frames = 140;
        for (int t = 0; t < frames; ++t) {
            const double z = -8.0 + 16.0 * t / (frames - 1);
            const Point3 c(2.0 * std::sin(0.22 * z), 0.4, z);
            const Eigen::Vector3d fwd(2.0 * 0.22 * std::cos(0.22 * z), 0.0, 1.0);
            d.path.push_back(pose_looking(c, fwd));
        }
    } else {
        throw std::invalid_argument("unknown builtin scene: " + name);
    }
    return d;
}

void write_scene_file(const std::string& path, const SceneDescription& d) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scene file: " + path);
    out << "name " << d.name << "\n";
    char buf[256];
    std::snprintf(buf, sizeof buf, "intrinsics %.17g %.17g %.17g %.17g\n", d.intrinsics.fx,
                  d.intrinsics.fy, d.intrinsics.cx, d.intrinsics.cy);
    out << buf << "size " << d.width << " " << d.height << "\n";
    std::snprintf(buf, sizeof buf, "gt_density %.17g\nedge_step %.17g\nface_density %.17g\n",
                  d.gt_density, d.edge_point_step, d.face_point_density);
    out << buf;
    for (const Box& b : d.boxes) {
        std::snprintf(buf, sizeof buf, "box %.17g %.17g %.17g %.17g %.17g %.17g\n", b.lo.x(),
                      b.lo.y(), b.lo.z(), b.hi.x(), b.hi.y(), b.hi.z());
        out << buf;
    }
    for (const Pose& p : d.path) {
        std::snprintf(buf, sizeof buf,
                      "pose %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g "
                      "%.17g\n",
                      p.R(0, 0), p.R(0, 1), p.R(0, 2), p.t.x(), p.R(1, 0), p.R(1, 1), p.R(1, 2),
                      p.t.y(), p.R(2, 0), p.R(2, 1), p.R(2, 2), p.t.z());
        out << buf;
    }
}

SceneDescription load_scene_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scene file: " + path);
    SceneDescription d;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "name") {
            ss >> d.name;
        } else if (key == "intrinsics") {
            if (!(ss >> d.intrinsics.fx >> d.intrinsics.fy >> d.intrinsics.cx >> d.intrinsics.cy))
                throw std::runtime_error("scene file: bad intrinsics");
        } else if (key == "size") {
            if (!(ss >> d.width >> d.height)) throw std::runtime_error("scene file: bad size");
        } else if (key == "gt_density") {
            ss >> d.gt_density;
        } else if (key == "edge_step") {
            ss >> d.edge_point_step;
        } else if (key == "face_density") {
            ss >> d.face_point_density;
        } else if (key == "box") {
            Box b;
            if (!(ss >> b.lo.x() >> b.lo.y() >> b.lo.z() >> b.hi.x() >> b.hi.y() >> b.hi.z()))
                throw std::runtime_error("scene file: bad box");
            d.boxes.push_back(b);
        } else if (key == "pose") {
            double v[12];
            for (double& x : v)
                if (!(ss >> x)) throw std::runtime_error("scene file: bad pose");
            Pose p;
            p.R << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
            p.t << v[3], v[7], v[11];
            d.path.push_back(p);
        } else {
            throw std::runtime_error("scene file: unknown key '" + key + "'");
        }
    }
    return d;
}

double SceneOracle::diameter() const {
    Point3 lo = Point3::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
    for (const Box& b : desc.boxes) {
        lo = lo.cwiseMin(b.lo);
        hi = hi.cwiseMax(b.hi);
    }
    for (const Camera& c : cameras) {
        lo = lo.cwiseMin(c.center());
        hi = hi.cwiseMax(c.center());
    }
    return (hi - lo).norm();
}

bool SceneOracle::visible(int frame, const Point3& x) const {
    const Camera& cam = cameras[frame];
    const Point3 pc = cam.to_camera(x);
    if (pc.z() < 0.1) return false;
    const double u = cam.intrinsics.fx * pc.x() / pc.z() + cam.intrinsics.cx;
    const double v = cam.intrinsics.fy * pc.y() / pc.z() + cam.intrinsics.cy;
    if (u < 0.0 || v < 0.0 || u > desc.width - 1.0 || v > desc.height - 1.0) return false;
    const Point3 c = cam.center();
    for (const Box& b : desc.boxes) {
        const double t = segment_box_hit(c, x, b);
        if (t >= 0.0 && t < 1.0 - 1e-6) return false;
    }
    return true;
}

SceneOracle generate_scene(const SceneDescription& desc, std::uint64_t seed) {
    if (desc.boxes.empty()) throw std::invalid_argument("scene: needs at least one primitive");
    if (desc.path.size() < 2) throw std::invalid_argument("scene: needs at least two poses");
    SceneOracle scene;
    scene.desc = desc;
    for (const Pose& p : desc.path) {
        Camera cam;
        cam.intrinsics = desc.intrinsics;
        cam.pose = p;
        scene.cameras.push_back(cam);
        for (const Box& b : desc.boxes)
            if (b.contains(cam.center()))
                throw std::invalid_argument("scene: camera center inside matter");
    }

    // Ground-truth cloud: face grids, kept when visible from a strided
    // subset of cameras.
    const int cam_stride = std::max<std::size_t>(1, scene.cameras.size() / 24);
    auto keep_visible = [&](const Point3& p) {
        for (std::size_t f = 0; f < scene.cameras.size(); f += cam_stride)
            if (scene.visible(int(f), p)) return true;
        return false;
    };
    for (const Box& b : desc.boxes) {
        for (int axis = 0; axis < 3; ++axis) {
            const int u_axis = (axis + 1) % 3, v_axis = (axis + 2) % 3;
            for (int side = 0; side < 2; ++side) {
                const double plane = side ? b.hi[axis] : b.lo[axis];
                const double ulen = b.hi[u_axis] - b.lo[u_axis];
                const double vlen = b.hi[v_axis] - b.lo[v_axis];
                const int nu = std::max(1, int(std::lround(ulen * desc.gt_density)));
                const int nv = std::max(1, int(std::lround(vlen * desc.gt_density)));
                for (int iu = 0; iu < nu; ++iu)
                    for (int iv = 0; iv < nv; ++iv) {
                        Point3 p;
                        p[axis] = plane;
                        p[u_axis] = b.lo[u_axis] + (iu + 0.5) * ulen / nu;
                        p[v_axis] = b.lo[v_axis] + (iv + 0.5) * vlen / nv;
                        if (keep_visible(p)) scene.gt_cloud.push_back(p);
                    }
            }
        }
    }

    // Oracle Edge-Points along box edges, plus sparser face texture points.
    // A deterministic sub-step jitter avoids tying the sampling grid to the
    // ground-truth grid.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.25, 0.25);
    for (const Box& b : desc.boxes) {
        for (int axis = 0; axis < 3; ++axis) {
            const int u_axis = (axis + 1) % 3, v_axis = (axis + 2) % 3;
            for (int su = 0; su < 2; ++su)
                for (int sv = 0; sv < 2; ++sv) {
                    const double len = b.hi[axis] - b.lo[axis];
                    const int n = std::max(2, int(std::lround(len / desc.edge_point_step)));
                    for (int i = 0; i <= n; ++i) {
                        Point3 p;
                        p[axis] = b.lo[axis] +
                                  std::clamp((i + jitter(rng)) / n, 0.0, 1.0) * len;
                        p[u_axis] = su ? b.hi[u_axis] : b.lo[u_axis];
                        p[v_axis] = sv ? b.hi[v_axis] : b.lo[v_axis];
                        scene.edge_samples.push_back(p);
                    }
                }
        }
        for (int axis = 0; axis < 3; ++axis) {
            const int u_axis = (axis + 1) % 3, v_axis = (axis + 2) % 3;
            for (int side = 0; side < 2; ++side) {
                const double plane = side ? b.hi[axis] : b.lo[axis];
                const double ulen = b.hi[u_axis] - b.lo[u_axis];
                const double vlen = b.hi[v_axis] - b.lo[v_axis];
                const int nu = std::max(1, int(std::lround(ulen * desc.face_point_density)));
                const int nv = std::max(1, int(std::lround(vlen * desc.face_point_density)));
                for (int iu = 0; iu < nu; ++iu)
                    for (int iv = 0; iv < nv; ++iv) {
                        Point3 p;
                        p[axis] = plane;
                        p[u_axis] = b.lo[u_axis] +
                                    std::clamp(iu + 0.5 + jitter(rng), 0.0, double(nu)) * ulen / nu;
                        p[v_axis] = b.lo[v_axis] +
                                    std::clamp(iv + 0.5 + jitter(rng), 0.0, double(nv)) * vlen / nv;
                        scene.face_samples.push_back(p);
                    }
            }
        }
    }
    return scene;
}

namespace {

double face_albedo(std::size_t box_idx, int face_idx) {
    return 0.25 + 0.6 * double((box_idx * 6 + face_idx) * 7 % 12) / 11.0;
}

double face_texture(const Point3& w) {
    return (std::sin(40.0 * w.x() + 0.9) + std::sin(40.0 * w.y() + 1.7) +
            std::sin(40.0 * w.z() + 0.3)) /
           3.0;
}

}  // namespace

GrayImage render_view(const SceneOracle& scene, int frame) {
    const Camera& cam = scene.cameras.at(frame);
    const Point3 c = cam.center();
    const Mat3 kinv = cam.intrinsics.matrix().inverse();
    const Mat3 rt = cam.pose.R.transpose();
    GrayImage img = GrayImage::zeros(scene.desc.width, scene.desc.height);
    const double far = 1000.0;

    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
            const Eigen::Vector3d dir = rt * (kinv * Eigen::Vector3d(u, v, 1.0));
            const Point3 end = c + far * dir;
            double best_t = 2.0;
            int best_box = -1, best_face = -1;
            for (std::size_t bi = 0; bi < scene.desc.boxes.size(); ++bi) {
                const Box& b = scene.desc.boxes[bi];
                const double t = segment_box_hit(c, end, b);
                if (t < 0.0 || t >= best_t) continue;
                best_t = t;
                best_box = int(bi);
                // Identify the binding face at the entry point.
                const Point3 hit = c + t * (end - c);
                int face = 0;
                double err = std::numeric_limits<double>::infinity();
                for (int axis = 0; axis < 3; ++axis)
                    for (int side = 0; side < 2; ++side) {
                        const double plane = side ? b.hi[axis] : b.lo[axis];
                        const double e = std::abs(hit[axis] - plane);
                        if (e < err) {
                            err = e;
                            face = axis * 2 + side;
                        }
                    }
                best_face = face;
            }
            if (best_box < 0) {
                img.px(u, v) = 0.08f;  // sky
            } else {
                const Point3 hit = c + best_t * (end - c);
                const double shade =
                    face_albedo(best_box, best_face) + 0.05 * face_texture(hit);
                img.px(u, v) = float(std::clamp(shade, 0.0, 1.0));
            }
        }
    }
    return img;
}

std::vector<Track> oracle_tracks(const SceneOracle& scene, const OracleTracksParams& p) {
    if (!p.frontend.valid()) throw std::invalid_argument("oracle_tracks: invalid parameters");
    const int frames = int(scene.cameras.size());
    std::mt19937_64 rng(p.seed);
    std::normal_distribution<double> noise(0.0, p.noise_sigma);

    // Consecutive-frame fundamental matrices, computed lazily.
    std::vector<Mat3> fmats(std::max(0, frames - 1));
    std::vector<char> have_f(fmats.size(), 0);
    auto fmat = [&](int prev) -> const Mat3& {
        if (!have_f[prev]) {
            fmats[prev] = fundamental_matrix(scene.cameras[prev], scene.cameras[prev + 1]);
            have_f[prev] = 1;
        }
        return fmats[prev];
    };

    std::vector<Point3> samples = scene.edge_samples;
    samples.insert(samples.end(), scene.face_samples.begin(), scene.face_samples.end());

    std::vector<Track> out;
    std::uint32_t next_id = 0;
    for (const Point3& x : samples) {
        int frame = 0;
        while (frame < frames) {
            // Birth only on a keyframe with the point visible.
            if (frame % p.frontend.t_k != 0 || !scene.visible(frame, x)) {
                ++frame;
                continue;
            }
            Track t;
            t.id = next_id;
            t.measurements.push_back(
                {frame, project(scene.cameras[frame], x) +
                            Point2(p.noise_sigma > 0 ? noise(rng) : 0.0,
                                   p.noise_sigma > 0 ? noise(rng) : 0.0)});
            bool filtered = false;
            int f = frame + 1;
            for (; f < frames; ++f) {
                if (!scene.visible(f, x)) break;  // lost (occlusion or exit)
                const Point2 meas = project(scene.cameras[f], x) +
                                    Point2(p.noise_sigma > 0 ? noise(rng) : 0.0,
                                           p.noise_sigma > 0 ? noise(rng) : 0.0);
                if (p.apply_filters) {
                    const MatchFilter verdict = filter_match(
                        t.measurements.back().position, meas, fmat(f - 1), p.frontend);
                    if (verdict != MatchFilter::Keep) {
                        filtered = true;
                        break;
                    }
                }
                t.measurements.push_back({f, meas});
            }
            const int resume = f + 1;
            if (!filtered &&
                (!p.apply_filters || int(t.measurements.size()) >= p.frontend.l_min)) {
                t.state = TrackState::Closed;
                ++next_id;
                out.push_back(std::move(t));
            }
            frame = resume;
        }
    }
    return out;
}

}  // namespace ecarve
