#pragma once

#include "ecarve/canny.hpp"
#include "ecarve/geometry.hpp"
#include "ecarve/klt.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ecarve {

struct FrontendParams {
    int t_k = 5;              // keyframe period, frames
    int t_edges = 10;         // edge downsampling step, px
    double canny_low = 0.04;  // gradient thresholds on [0,1] intensities
    double canny_high = 0.10;
    double d_min = 5.0;       // minimum consecutive displacement, px
    double eps_e = 20.0;      // epipolar tolerance, px
    int l_min = 5;            // minimum track length (defaults to t_k)
    KltParams klt;

    bool valid() const {
        return t_k >= 1 && t_edges >= 1 && canny_low > 0.0 && canny_high > canny_low &&
               d_min >= 0.0 && eps_e >= 0.0 && l_min >= 1;
    }
};

struct TrackMeasurement {
    int frame = 0;
    Point2 position = Point2::Zero();
};

enum class TrackState { Active, Filtered, Closed };

struct Track {
    std::uint32_t id = 0;
    TrackState state = TrackState::Active;
    std::vector<TrackMeasurement> measurements;
};

enum class MatchFilter { Keep, DropLowParallax, DropEpipolar };

// Consecutive-measurement gates: displacement below d_min drops the match as
// low-parallax; an epipolar distance above eps_e drops it as a mismatch.
// The paper prints the epipolar inequality the other way around while its
// prose drops correspondences that violate the constraint; the prose wins.
MatchFilter filter_match(const Point2& x_prev, const Point2& x_cur, const Mat3& F,
                         const FrontendParams& p);

// Length gate over closed tracks: accepted iff at least l_min measurements.
std::pair<std::vector<Track>, std::vector<Track>> close_tracks(std::vector<Track> tracks,
                                                               const FrontendParams& p);

struct FeatureGrid {
    double cell[3][5] = {};  // percentages, summing to 100
    bool empty = true;
};
FeatureGrid feature_distribution(const std::vector<Point2>& points, int width, int height);

// Frame-by-frame Edge-Point tracker: extracts new points on keyframes,
// tracks every frame, applies the match filters, and retires tracks that are
// lost or filtered. A filtered track is discarded entirely; a lost track is
// closed and length-gated.
class Tracker {
public:
    Tracker(FrontendParams params, std::vector<Camera> cameras, bool parallel = false);

    void process_frame(const GrayImage& img, int frame_index);
    void finish();  // close all remaining active tracks

    // Closed-and-accepted tracks not yet taken; rejected ones are dropped.
    std::vector<Track> take_accepted();

    struct Stats {
        std::size_t extracted = 0;  // Edge-Points spawned on keyframes
        std::size_t tracked = 0;    // measurements appended by the tracker
        std::size_t filtered = 0;   // tracks killed by a match filter
        std::size_t accepted = 0;   // tracks surviving the length gate
    };
    const Stats& stats() const { return stats_; }
    std::size_t active_count() const { return active_.size(); }

private:
    FrontendParams params_;
    std::vector<Camera> cameras_;
    bool parallel_;
    std::uint32_t next_id_ = 0;
    std::vector<Track> active_;
    std::vector<Track> pending_;  // closed, awaiting the length gate
    Pyramid prev_pyramid_;
    int prev_frame_ = -1;
    Stats stats_;
};

// Tracks file: one line per measurement, `track_id frame_index u v`, sorted
// by (track_id, frame_index).
void write_tracks_file(const std::string& path, const std::vector<Track>& tracks);
std::vector<Track> read_tracks_file(const std::string& path);

}  // namespace ecarve
