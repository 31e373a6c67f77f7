#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "foldover/classify.hpp"
#include "foldover/features.hpp"
#include "foldover/foldover.hpp"
#include "foldover/framestore.hpp"
#include "foldover/segmentation.hpp"
#include "foldover/tracking.hpp"

namespace foldover {

inline constexpr const char* kVersion = "1.0.0";

// Every tunable of the processing chain, with the documented defaults.
struct PipelineConfig {
    std::string threshold = "otsu"; // "otsu" or "fixed:<T>" with T in [0,255]
    Polarity polarity = Polarity::BrightObject;
    int min_area = 4;        // smallest component kept, px
    double gate = 20.0;      // matching gate, px
    int miss_tolerance = 0;  // consecutive missed frames a track survives
    int min_track_len = 3;   // shortest track carried into feature extraction
    double r = 13.0;         // lock radius, px
    double eps_disp = 1.0;   // below this net displacement, skip rotation
    int nu_x = 1, nu_y = 1, nu_z = 1; // projection steps
    int e = 3;               // smoothing kernel side
    int passes = 2;          // smoothing rounds
    int d = 16;              // descriptor side length
    double um_per_px = 1.0;
    double fps = 30.0;
};

// Sets one key=value entry; returns false for an unknown key, throws
// ValidationError for a malformed value.
bool apply_config_entry(PipelineConfig& cfg, const std::string& key,
                        const std::string& value);

// Plain key=value file, one entry per line, '#' starts a comment.
void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path);

void validate_config(const PipelineConfig& cfg);

// Canonical echo used for provenance files; stable key order and formatting.
std::string config_to_string(const PipelineConfig& cfg);

// FNV-1a hash of the config schema (keys and types), printed by --version.
std::string config_schema_hash();

int threshold_for(const PipelineConfig& cfg, const Frame& frame);

// Runs fn(0..n-1) on up to `jobs` workers. Each index owns its output slot,
// so results are identical for any job count.
void parallel_for_indexed(std::size_t n, int jobs,
                          const std::function<void(std::size_t)>& fn);

// Loads a frame source: a .raw file, a directory containing frames.raw, or a
// directory of images.
VideoSequence load_input(const std::filesystem::path& path);

std::map<int, std::string> read_labels_csv(const std::filesystem::path& path);
std::map<int, std::string> read_split_csv(const std::filesystem::path& path);

struct SegmentationOutput {
    std::vector<int> thresholds;
    std::vector<BinaryMask> masks;
    std::vector<std::vector<Detection>> detections;
};

SegmentationOutput segment_sequence(const VideoSequence& video, const PipelineConfig& cfg,
                                    int jobs);

std::vector<Track> track_sequence(const SegmentationOutput& seg, const PipelineConfig& cfg);

struct TrackArtifacts {
    int track_id = 0;
    Foldover rotated;
    Projection proj_x, proj_y, proj_z;
    KinematicSummary kin;
    FeatureSet features;
    char grade = 'D';
};

TrackArtifacts process_track(const Track& track, const VideoSequence& video,
                             const std::vector<BinaryMask>& masks,
                             const PipelineConfig& cfg);

std::vector<TrackArtifacts> process_tracks(const std::vector<Track>& tracks,
                                           const VideoSequence& video,
                                           const std::vector<BinaryMask>& masks,
                                           const PipelineConfig& cfg, int jobs);

std::vector<FeatureRow> feature_rows(const std::vector<TrackArtifacts>& artifacts);

// Feature vectors for one axis keyed by track id, in row order.
std::vector<std::pair<int, std::vector<double>>> axis_vectors(
    const std::vector<FeatureRow>& rows, Axis axis);

// Full chain: segmentation, tracking, per-track foldover features, artifact
// files (config_used.txt, tracks.csv, foldover/, features.csv, report.json).
// When labels (and optionally a split and reference tracks for id joining)
// sit next to the input, the report also carries classification metrics.
void run_full_pipeline(const std::filesystem::path& input,
                       const std::filesystem::path& out_dir,
                       const PipelineConfig& cfg, int jobs);

} // namespace foldover
