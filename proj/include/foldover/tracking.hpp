#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "foldover/segmentation.hpp"

namespace foldover {

struct TrackPoint {
    int frame_index = 0;
    double x = 0.0;
    double y = 0.0;
};

// Trajectory of one object. Frame indices are strictly increasing; gaps can
// appear when a miss tolerance above zero lets a track survive dropped frames.
struct Track {
    int id = 0;
    std::vector<TrackPoint> points;

    std::size_t length() const { return points.size(); }
    const TrackPoint& front() const { return points.front(); }
    const TrackPoint& back() const { return points.back(); }
};

struct TrackingParams {
    double gate = 20.0;     // max centroid displacement per step, pixels
    int miss_tolerance = 0; // consecutive missed frames allowed before a track ends
};

// Last known position of a live track, used as the matching anchor.
struct ActivePosition {
    int track_id = 0;
    double x = 0.0;
    double y = 0.0;
};

struct MatchResult {
    std::vector<std::pair<int, int>> matches; // (active index, detection index)
    std::vector<int> unmatched_active;
    std::vector<int> unmatched_detections;
};

// Greedy nearest-neighbour assignment within the gate. Candidate pairs are
// taken in ascending (distance, track id, detection index) order and accepted
// when both sides are still unclaimed, so the result is deterministic.
MatchResult match_step(const std::vector<ActivePosition>& active,
                       const std::vector<Detection>& detections,
                       double gate);

// Runs match_step frame by frame. New tracks are opened for unmatched
// detections (ids assigned in creation order starting at 1); a track closes
// once its consecutive misses exceed the tolerance.
std::vector<Track> build_tracks(const std::vector<std::vector<Detection>>& frames,
                                const TrackingParams& params);

// Keeps tracks with at least min_len points, preserving order.
std::vector<Track> filter_min_length(const std::vector<Track>& tracks, std::size_t min_len);

// One-to-one pairing between two track sets (e.g. reference vs recovered),
// greedily by mean centroid distance over shared frames.
struct TrackPairing {
    int a_index = 0;
    int b_index = 0;
    double mean_dist = 0.0;
    int shared_frames = 0;
};

std::vector<TrackPairing> correspond_tracks(const std::vector<Track>& a,
                                            const std::vector<Track>& b);

void write_tracks_csv(const std::vector<Track>& tracks, const std::filesystem::path& path);
std::vector<Track> read_tracks_csv(const std::filesystem::path& path);

} // namespace foldover
