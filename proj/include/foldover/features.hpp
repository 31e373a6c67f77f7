#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "foldover/foldover.hpp"
#include "foldover/tracking.hpp"

namespace foldover {

// Motion quantities of one track, in pixels and frames.
struct KinematicSummary {
    double fps_x = 0.0;      // rotated-support X extent per frame
    double fps_y = 0.0;      // rotated-support Y extent per frame
    double dist_a = 0.0;     // total path length over consecutive centroids
    double disp_b = 0.0;     // net first-to-last displacement
    double avg_path_m = 0.0; // length of the smoothed (cubic-fit) path
    double vcl = 0.0;        // dist_a / track length
    double vsl = 0.0;        // disp_b / track length
    double vap = 0.0;        // avg_path_m / track length
    double lin = 0.0;        // vsl / vcl (0 when vcl = 0)
    double str = 0.0;        // vsl / vap (0 when vap = 0)
    double wob = 0.0;        // vap / vcl (0 when vcl = 0)
};

struct DescriptorGrid {
    Axis axis = Axis::Z;
    int d = 0;
    std::vector<double> values; // d*d, row-major
};

struct FeatureVector {
    Axis axis = Axis::Z;
    std::vector<double> kinematic_part;
    std::vector<double> descriptor_part;

    std::vector<double> flat() const {
        std::vector<double> v = kinematic_part;
        v.insert(v.end(), descriptor_part.begin(), descriptor_part.end());
        return v;
    }
};

struct FeatureSet {
    FeatureVector fx, fy, fz;
};

// Smoothed trajectory: least-squares parametric cubics x(t), y(t) over the
// frame ordinal when the track has at least 4 points, raw centroids otherwise.
// Returns the path sampled at integer t and its polyline length.
struct AveragePath {
    std::vector<TrackPoint> path;
    double length = 0.0;
};
AveragePath fit_average_path(const Track& track);

KinematicSummary kinematics(const Track& track, double extent_x, double extent_y);

// Normalizes the projection by its max, smooths with `passes` rounds of an
// e x e mean filter (border taps renormalized so a uniform field is a fixed
// point), then area-average resamples to d x d.
DescriptorGrid conv_descriptor(const Projection& proj, int e, int passes, int d);

// Fixed layouts: X = [fps_x] ++ descriptor, Y = [fps_y] ++ descriptor,
// Z = [A,B,M,VCL,VSL,VAP,LIN,STR,WOB] ++ descriptor.
FeatureSet assemble(const KinematicSummary& kin, const DescriptorGrid& hx,
                    const DescriptorGrid& hy, const DescriptorGrid& hz);

// World Health Organization motility band for a curvilinear speed in um/s:
// 'A' >= 25, 'B' in (5,25), 'C' in (0,5], 'D' = 0.
char who_grade(double vcl_um_per_s);

// CSV rows: track_id,axis,len,v1..vN (optionally a label column after len).
struct FeatureRow {
    int track_id = 0;
    Axis axis = Axis::Z;
    std::string label; // empty when the file carries no labels
    std::vector<double> values;
};

void write_features_csv(const std::vector<FeatureRow>& rows,
                        const std::filesystem::path& path, bool with_labels);
std::vector<FeatureRow> read_features_csv(const std::filesystem::path& path);

} // namespace foldover
