#include "ecarve/surface_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ecarve {

void write_ply(const std::string& path, const SurfaceMesh& mesh, bool with_face_labels) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write PLY: " + path);
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << mesh.vertices.size() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    out << "element face " << mesh.triangles.size() << "\n";
    out << "property list uchar int vertex_indices\n";
    if (with_face_labels) out << "property uchar outside\n";
    out << "end_header\n";
    char buf[128];
    for (const Point3& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", v.x(), v.y(), v.z());
        out << buf;
    }
    for (const auto& f : mesh.triangles) {
        out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2];
        if (with_face_labels) out << " 1";
        out << '\n';
    }
}

SurfaceMesh read_ply(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open PLY: " + path);
    std::string line;
    std::size_t n_vertices = 0, n_faces = 0;
    int vertex_props = 0;
    bool in_vertex_element = false;
    if (!std::getline(in, line) || line != "ply")
        throw std::runtime_error("not a PLY file: " + path);
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "end_header") break;
        if (tok == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt != "ascii") throw std::runtime_error("only ASCII PLY supported: " + path);
        } else if (tok == "element") {
            std::string what;
            std::size_t n;
            ss >> what >> n;
            in_vertex_element = (what == "vertex");
            if (what == "vertex") n_vertices = n;
            if (what == "face") n_faces = n;
        } else if (tok == "property" && in_vertex_element) {
            ++vertex_props;
        }
    }
    if (vertex_props < 3) throw std::runtime_error("PLY vertex needs x y z: " + path);

    SurfaceMesh mesh;
    mesh.vertices.reserve(n_vertices);
    for (std::size_t i = 0; i < n_vertices; ++i) {
        if (!std::getline(in, line)) throw std::runtime_error("truncated PLY vertices");
        std::istringstream ss(line);
        double x, y, z;
        if (!(ss >> x >> y >> z)) throw std::runtime_error("bad PLY vertex line: " + line);
        mesh.vertices.emplace_back(x, y, z);
    }
    mesh.triangles.reserve(n_faces);
    for (std::size_t i = 0; i < n_faces; ++i) {
        if (!std::getline(in, line)) throw std::runtime_error("truncated PLY faces");
        std::istringstream ss(line);
        int cnt;
        if (!(ss >> cnt) || cnt != 3)
            throw std::runtime_error("only triangular PLY faces supported: " + line);
        std::array<std::uint32_t, 3> f{};
        for (auto& idx : f) {
            long v;
            if (!(ss >> v) || v < 0 || std::size_t(v) >= mesh.vertices.size())
                throw std::runtime_error("bad PLY face index: " + line);
            idx = std::uint32_t(v);
        }
        mesh.triangles.push_back(f);
    }
    return mesh;
}

void write_xyz(const std::string& path, const std::vector<Point3>& cloud) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write cloud: " + path);
    char buf[128];
    for (const Point3& p : cloud) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
        out << buf;
    }
}

std::vector<Point3> read_xyz(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open cloud: " + path);
    std::vector<Point3> cloud;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        double x, y, z;
        if (!(ss >> x >> y >> z)) throw std::runtime_error("bad cloud line: " + line);
        cloud.emplace_back(x, y, z);
    }
    return cloud;
}

}  // namespace ecarve
