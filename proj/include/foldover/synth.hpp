#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "foldover/framestore.hpp"
#include "foldover/tracking.hpp"

namespace foldover {

enum class MotionKind { Stationary, Linear, Circular, Sinusoid };

struct ObjectSpec {
    MotionKind kind = MotionKind::Stationary;
    double x0 = 0.0; // start position; orbit center for circular motion
    double y0 = 0.0;
    double speed = 0.0;     // px/frame along the heading
    double amplitude = 0.0; // orbit radius (circular) / transverse amplitude (sinusoid)
    double period = 0.0;    // frames per cycle
    double heading = 0.0;   // radians; initial phase for circular motion
    double radius = 3.0;    // blob radius; rendered Gaussian sigma = radius/2
    int peak_intensity = 200;
    int enter_frame = 0;
    int exit_frame = 0; // exclusive
    std::string label = "poor";
};

struct SceneSpec {
    int width = 0;
    int height = 0;
    int frames = 0;
    double noise_sigma = 0.0;
    int background = 0;
    std::uint64_t seed = 0;
    std::vector<ObjectSpec> objects;
};

struct GeneratedScene {
    VideoSequence video;
    std::vector<Track> ground_truth;  // one per object, ids 1..N
    std::vector<std::string> labels;  // parallel to ground_truth
};

// Exact real-valued center of an object at an absolute frame index.
std::pair<double, double> object_position(const ObjectSpec& obj, int frame);

// Renders Gaussian blobs over a noisy background, quantized round-half-up to
// 8 bits. Identical specs (including seed) produce byte-identical frames.
GeneratedScene generate(const SceneSpec& spec);

struct BenchmarkDataset {
    SceneSpec scene;
    GeneratedScene data;
    std::vector<int> train_ids;
    std::vector<int> test_ids;
};

// 180 objects (60 per motility class) on one wide frame, with per-class
// curvilinear-speed bands poor [0,1], good [3,6], excellent [9,14] px/frame
// and a seeded 90/90 train/test shuffle.
BenchmarkDataset default_benchmark(std::uint64_t seed);

std::map<int, std::string> label_map(const GeneratedScene& g);

// frames.raw (raw-planar), gt_tracks.csv, labels.csv
void write_scene(const GeneratedScene& g, const std::filesystem::path& dir);
// write_scene plus split.csv (track_id,split with train|test rows)
void write_benchmark(const BenchmarkDataset& b, const std::filesystem::path& dir);

} // namespace foldover
