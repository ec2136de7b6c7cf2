#include "ecarve/tracks.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ecarve {

MatchFilter filter_match(const Point2& x_prev, const Point2& x_cur, const Mat3& F,
                         const FrontendParams& p) {
    if ((x_cur - x_prev).norm() < p.d_min) return MatchFilter::DropLowParallax;
    if (epipolar_distance(F, x_prev, x_cur) > p.eps_e) return MatchFilter::DropEpipolar;
    return MatchFilter::Keep;
}

std::pair<std::vector<Track>, std::vector<Track>> close_tracks(std::vector<Track> tracks,
                                                               const FrontendParams& p) {
    std::vector<Track> accepted, rejected;
    for (Track& t : tracks) {
        t.state = TrackState::Closed;
        if (int(t.measurements.size()) >= p.l_min)
            accepted.push_back(std::move(t));
        else
            rejected.push_back(std::move(t));
    }
    return {std::move(accepted), std::move(rejected)};
}

FeatureGrid feature_distribution(const std::vector<Point2>& points, int width, int height) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("feature_distribution: empty image");
    FeatureGrid grid;
    if (points.empty()) return grid;
    grid.empty = false;
    for (const Point2& p : points) {
        int col = int(p.x() * 5.0 / width);
        int row = int(p.y() * 3.0 / height);
        col = std::clamp(col, 0, 4);
        row = std::clamp(row, 0, 2);
        grid.cell[row][col] += 1.0;
    }
    for (auto& row : grid.cell)
        for (double& c : row) c *= 100.0 / double(points.size());
    return grid;
}

Tracker::Tracker(FrontendParams params, std::vector<Camera> cameras, bool parallel)
    : params_(std::move(params)), cameras_(std::move(cameras)), parallel_(parallel) {
    if (!params_.valid()) throw std::invalid_argument("Tracker: invalid frontend parameters");
}

void Tracker::process_frame(const GrayImage& img, int frame_index) {
    Pyramid pyramid(img, params_.klt.levels);

    if (prev_frame_ >= 0 && !active_.empty()) {
        if (frame_index != prev_frame_ + 1)
            throw std::invalid_argument("Tracker: non-consecutive frame index");
        std::vector<Point2> pts;
        pts.reserve(active_.size());
        for (const Track& t : active_) pts.push_back(t.measurements.back().position);

        const auto results = klt_step(prev_pyramid_, pyramid, pts, params_.klt, parallel_);
        const Mat3 F = fundamental_matrix(cameras_.at(prev_frame_), cameras_.at(frame_index));

        std::vector<Track> still_active;
        still_active.reserve(active_.size());
        for (std::size_t i = 0; i < active_.size(); ++i) {
            Track& t = active_[i];
            if (results[i].status == KltStatus::Lost) {
                pending_.push_back(std::move(t));
                continue;
            }
            const MatchFilter f =
                filter_match(pts[i], results[i].position, F, params_);
            if (f != MatchFilter::Keep) {
                // A failed gate discards the whole track.
                t.state = TrackState::Filtered;
                ++stats_.filtered;
                continue;
            }
            t.measurements.push_back({frame_index, results[i].position});
            ++stats_.tracked;
            still_active.push_back(std::move(t));
        }
        active_ = std::move(still_active);
    }

    if (frame_index % params_.t_k == 0) {
        const auto chains = canny_edges(img, params_.canny_low, params_.canny_high);
        const auto pts = downsample_edges(chains, params_.t_edges);
        stats_.extracted += pts.size();
        for (const Point2& p : pts) {
            Track t;
            t.id = next_id_++;
            t.measurements.push_back({frame_index, p});
            active_.push_back(std::move(t));
        }
    }

    prev_pyramid_ = std::move(pyramid);
    prev_frame_ = frame_index;
}

void Tracker::finish() {
    for (Track& t : active_) pending_.push_back(std::move(t));
    active_.clear();
}

std::vector<Track> Tracker::take_accepted() {
    auto [accepted, rejected] = close_tracks(std::move(pending_), params_);
    pending_.clear();
    stats_.accepted += accepted.size();
    return std::move(accepted);
}

void write_tracks_file(const std::string& path, const std::vector<Track>& tracks) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write tracks file: " + path);
    std::vector<const Track*> order;
    order.reserve(tracks.size());
    for (const Track& t : tracks) order.push_back(&t);
    std::sort(order.begin(), order.end(),
              [](const Track* a, const Track* b) { return a->id < b->id; });
    char buf[128];
    for (const Track* t : order)
        for (const TrackMeasurement& m : t->measurements) {
            std::snprintf(buf, sizeof buf, "%u %d %.17g %.17g\n", t->id, m.frame,
                          m.position.x(), m.position.y());
            out << buf;
        }
}

std::vector<Track> read_tracks_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open tracks file: " + path);
    std::map<std::uint32_t, Track> by_id;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::uint32_t id;
        int frame;
        double u, v;
        if (!(ss >> id >> frame >> u >> v))
            throw std::runtime_error("tracks file: bad line '" + line + "'");
        Track& t = by_id[id];
        t.id = id;
        if (!t.measurements.empty() && t.measurements.back().frame >= frame)
            throw std::runtime_error("tracks file: frames not increasing for track " +
                                     std::to_string(id));
        t.measurements.push_back({frame, Point2(u, v)});
    }
    std::vector<Track> out;
    out.reserve(by_id.size());
    for (auto& [id, t] : by_id) {
        t.state = TrackState::Closed;
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace ecarve
