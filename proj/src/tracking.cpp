#include "foldover/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>

#include "foldover/errors.hpp"

namespace foldover {

MatchResult match_step(const std::vector<ActivePosition>& active,
                       const std::vector<Detection>& detections,
                       double gate) {
    // (distance, track id, detection index, active index)
    std::vector<std::tuple<double, int, int, int>> candidates;
    for (std::size_t a = 0; a < active.size(); ++a) {
        for (std::size_t d = 0; d < detections.size(); ++d) {
            const double dx = detections[d].cx - active[a].x;
            const double dy = detections[d].cy - active[a].y;
            const double dist = std::sqrt(dx * dx + dy * dy);
            if (dist <= gate)
                candidates.emplace_back(dist, active[a].track_id, static_cast<int>(d),
                                        static_cast<int>(a));
        }
    }
    std::sort(candidates.begin(), candidates.end());

    MatchResult res;
    std::vector<char> active_claimed(active.size(), 0);
    std::vector<char> det_claimed(detections.size(), 0);
    for (const auto& [dist, tid, d, a] : candidates) {
        (void)dist;
        (void)tid;
        if (active_claimed[a] || det_claimed[d]) continue;
        active_claimed[a] = 1;
        det_claimed[d] = 1;
        res.matches.emplace_back(a, d);
    }
    for (std::size_t a = 0; a < active.size(); ++a)
        if (!active_claimed[a]) res.unmatched_active.push_back(static_cast<int>(a));
    for (std::size_t d = 0; d < detections.size(); ++d)
        if (!det_claimed[d]) res.unmatched_detections.push_back(static_cast<int>(d));
    return res;
}

std::vector<Track> build_tracks(const std::vector<std::vector<Detection>>& frames,
                                const TrackingParams& params) {
    struct Live {
        Track track;
        double last_x = 0.0, last_y = 0.0;
        int misses = 0;
    };
    std::vector<Live> live;
    std::vector<Track> done;
    int next_id = 1;

    for (std::size_t f = 0; f < frames.size(); ++f) {
        const auto& dets = frames[f];
        std::vector<ActivePosition> anchors;
        anchors.reserve(live.size());
        for (const Live& l : live) anchors.push_back({l.track.id, l.last_x, l.last_y});

        const MatchResult res = match_step(anchors, dets, params.gate);

        for (const auto& [a, d] : res.matches) {
            Live& l = live[a];
            l.track.points.push_back({static_cast<int>(f), dets[d].cx, dets[d].cy});
            l.last_x = dets[d].cx;
            l.last_y = dets[d].cy;
            l.misses = 0;
        }
        for (int a : res.unmatched_active) ++live[a].misses;

        std::vector<Live> survivors;
        survivors.reserve(live.size());
        for (Live& l : live) {
            if (l.misses > params.miss_tolerance)
                done.push_back(std::move(l.track));
            else
                survivors.push_back(std::move(l));
        }
        live = std::move(survivors);

        for (int d : res.unmatched_detections) {
            Live l;
            l.track.id = next_id++;
            l.track.points.push_back({static_cast<int>(f), dets[d].cx, dets[d].cy});
            l.last_x = dets[d].cx;
            l.last_y = dets[d].cy;
            live.push_back(std::move(l));
        }
    }
    for (Live& l : live) done.push_back(std::move(l.track));
    std::sort(done.begin(), done.end(),
              [](const Track& a, const Track& b) { return a.id < b.id; });
    return done;
}

std::vector<Track> filter_min_length(const std::vector<Track>& tracks, std::size_t min_len) {
    std::vector<Track> out;
    for (const Track& t : tracks)
        if (t.length() >= min_len) out.push_back(t);
    return out;
}

std::vector<TrackPairing> correspond_tracks(const std::vector<Track>& a,
                                            const std::vector<Track>& b) {
    // (mean distance, a index, b index, shared frames)
    std::vector<std::tuple<double, int, int, int>> candidates;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            double sum = 0.0;
            int shared = 0;
            std::size_t pi = 0, pj = 0;
            while (pi < a[i].points.size() && pj < b[j].points.size()) {
                const int fa = a[i].points[pi].frame_index;
                const int fb = b[j].points[pj].frame_index;
                if (fa < fb) {
                    ++pi;
                } else if (fb < fa) {
                    ++pj;
                } else {
                    const double dx = a[i].points[pi].x - b[j].points[pj].x;
                    const double dy = a[i].points[pi].y - b[j].points[pj].y;
                    sum += std::sqrt(dx * dx + dy * dy);
                    ++shared;
                    ++pi;
                    ++pj;
                }
            }
            if (shared > 0)
                candidates.emplace_back(sum / shared, static_cast<int>(i),
                                        static_cast<int>(j), shared);
        }
    }
    std::sort(candidates.begin(), candidates.end());

    std::vector<char> a_claimed(a.size(), 0), b_claimed(b.size(), 0);
    std::vector<TrackPairing> pairings;
    for (const auto& [dist, i, j, shared] : candidates) {
        if (a_claimed[i] || b_claimed[j]) continue;
        a_claimed[i] = 1;
        b_claimed[j] = 1;
        pairings.push_back({i, j, dist, shared});
    }
    std::sort(pairings.begin(), pairings.end(),
              [](const TrackPairing& x, const TrackPairing& y) { return x.a_index < y.a_index; });
    return pairings;
}

void write_tracks_csv(const std::vector<Track>& tracks, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailureError("cannot open for writing: " + path.string());
    out << "track_id,frame_index,x,y\n";
    char buf[128];
    for (const Track& t : tracks) {
        for (const TrackPoint& p : t.points) {
            std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,%.6f\n", t.id, p.frame_index, p.x, p.y);
            out << buf;
        }
    }
    if (!out) throw IoFailureError("write failed: " + path.string());
}

std::vector<Track> read_tracks_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailureError("cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty tracks csv: " + path.string());

    std::vector<Track> tracks;
    std::vector<int> id_to_index;
    auto track_for = [&](int id) -> Track& {
        if (id >= 0 && id < static_cast<int>(id_to_index.size()) && id_to_index[id] >= 0)
            return tracks[id_to_index[id]];
        if (id >= static_cast<int>(id_to_index.size()))
            id_to_index.resize(id + 1, -1);
        id_to_index[id] = static_cast<int>(tracks.size());
        tracks.emplace_back();
        tracks.back().id = id;
        return tracks.back();
    };

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        TrackPoint p;
        int id = 0;
        if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &id, &p.frame_index, &p.x, &p.y) != 4)
            throw IoError("bad tracks csv row at line " + std::to_string(line_no) + " in " +
                          path.string());
        if (id < 0) throw IoError("negative track id in " + path.string());
        Track& t = track_for(id);
        if (!t.points.empty() && p.frame_index <= t.points.back().frame_index)
            throw IoError("non-increasing frame index for track " + std::to_string(id) + " in " +
                          path.string());
        t.points.push_back(p);
    }
    return tracks;
}

} // namespace foldover
