#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "foldover/classify.hpp"
#include "foldover/errors.hpp"
#include "foldover/features.hpp"
#include "foldover/foldover.hpp"
#include "foldover/framestore.hpp"
#include "foldover/pipeline.hpp"
#include "foldover/segmentation.hpp"
#include "foldover/synth.hpp"
#include "foldover/tracking.hpp"

namespace fs = std::filesystem;
using namespace foldover;

namespace {

// Registers the shared tuning flags on a subcommand and resolves them with
// precedence: explicit flag > --config file > built-in default.
class ConfigBinder {
public:
    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_file_, "key=value config file");
        add(cmd, "--threshold", "threshold", "otsu or fixed:<T>");
        add(cmd, "--polarity", "polarity", "bright or dark objects");
        add(cmd, "--min-area", "min_area", "smallest component kept (px)");
        add(cmd, "--gate", "gate", "matching gate (px)");
        add(cmd, "--miss-tolerance", "miss_tolerance", "missed frames a track survives");
        add(cmd, "--min-track-len", "min_track_len", "shortest track analyzed");
        add(cmd, "--r", "r", "lock radius (px)");
        add(cmd, "--eps-disp", "eps_disp", "rotation displacement threshold (px)");
        add(cmd, "--nu-x", "nu_x", "X projection step");
        add(cmd, "--nu-y", "nu_y", "Y projection step");
        add(cmd, "--nu-z", "nu_z", "Z projection step");
        add(cmd, "--e", "e", "smoothing kernel side");
        add(cmd, "--passes", "passes", "smoothing rounds");
        add(cmd, "--d", "d", "descriptor side length");
        add(cmd, "--um-per-px", "um_per_px", "microns per pixel");
        add(cmd, "--fps", "fps", "frames per second");
    }

    PipelineConfig resolve() const {
        PipelineConfig cfg;
        if (!config_file_.empty()) apply_config_file(cfg, config_file_);
        for (const auto& e : entries_)
            if (e.opt->count() > 0) apply_config_entry(cfg, e.key, *e.value);
        validate_config(cfg);
        return cfg;
    }

private:
    struct Entry {
        CLI::Option* opt = nullptr;
        std::string key;
        std::unique_ptr<std::string> value;
    };

    void add(CLI::App* cmd, const char* flag, const char* key, const char* desc) {
        Entry e;
        e.key = key;
        e.value = std::make_unique<std::string>();
        e.opt = cmd->add_option(flag, *e.value, desc);
        entries_.push_back(std::move(e));
    }

    std::string config_file_;
    std::vector<Entry> entries_;
};

Axis parse_axis_flag(const std::string& s) {
    if (s == "x") return Axis::X;
    if (s == "y") return Axis::Y;
    if (s == "z") return Axis::Z;
    throw ValidationError("axis must be x, y, or z");
}

void echo_config(const PipelineConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream conf(out_dir / "config_used.txt", std::ios::binary);
    if (!conf) throw IoFailureError("cannot write config_used.txt");
    conf << config_to_string(cfg);
}

int cmd_simulate(const std::string& preset, std::uint64_t seed, const fs::path& out) {
    if (preset != "benchmark")
        throw ValidationError("unknown preset '" + preset + "' (available: benchmark)");
    const BenchmarkDataset b = default_benchmark(seed);
    write_benchmark(b, out);
    std::cout << "dataset: " << out.string() << " (" << b.data.ground_truth.size()
              << " tracks, " << b.train_ids.size() << " train / " << b.test_ids.size()
              << " test)\n";
    return 0;
}

int cmd_segment(const fs::path& input, const fs::path& out, const PipelineConfig& cfg,
                int jobs) {
    const VideoSequence video = load_input(input);
    const SegmentationOutput seg = segment_sequence(video, cfg, jobs);
    echo_config(cfg, out);

    fs::create_directories(out / "masks");
    char name[64];
    for (std::size_t i = 0; i < seg.masks.size(); ++i) {
        std::snprintf(name, sizeof(name), "mask_%06zu.pgm", i);
        write_mask_pgm(seg.masks[i], out / "masks" / name);
    }
    {
        std::ofstream th(out / "thresholds.csv", std::ios::binary);
        if (!th) throw IoFailureError("cannot write thresholds.csv");
        th << "frame_index,threshold\n";
        for (std::size_t i = 0; i < seg.thresholds.size(); ++i)
            th << i << ',' << seg.thresholds[i] << "\n";
    }
    {
        std::ofstream det(out / "detections.csv", std::ios::binary);
        if (!det) throw IoFailureError("cannot write detections.csv");
        det << "frame_index,component_id,x,y,area\n";
        char buf[128];
        for (const auto& frame_dets : seg.detections)
            for (const Detection& d : frame_dets) {
                std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,%.6f,%d\n", d.frame_index,
                              d.component_id, d.cx, d.cy, d.area);
                det << buf;
            }
    }
    std::size_t total = 0;
    for (const auto& fd : seg.detections) total += fd.size();
    std::cout << "frames: " << seg.masks.size() << ", detections: " << total << "\n";
    return 0;
}

int cmd_track(const fs::path& input, const fs::path& out, const PipelineConfig& cfg,
              int jobs) {
    const VideoSequence video = load_input(input);
    const SegmentationOutput seg = segment_sequence(video, cfg, jobs);
    const std::vector<Track> tracks = track_sequence(seg, cfg);
    echo_config(cfg, out);
    write_tracks_csv(tracks, out / "tracks.csv");
    std::cout << "tracks: " << tracks.size() << "\n";
    return 0;
}

std::vector<Track> tracks_for(const fs::path& tracks_path, const SegmentationOutput& seg,
                              const PipelineConfig& cfg) {
    if (!tracks_path.empty()) return read_tracks_csv(tracks_path);
    return track_sequence(seg, cfg);
}

int cmd_foldover(const fs::path& input, const fs::path& tracks_path, const fs::path& out,
                 const PipelineConfig& cfg, int jobs) {
    const VideoSequence video = load_input(input);
    const SegmentationOutput seg = segment_sequence(video, cfg, jobs);
    const std::vector<Track> kept = filter_min_length(
        tracks_for(tracks_path, seg, cfg), static_cast<std::size_t>(cfg.min_track_len));
    const std::vector<TrackArtifacts> artifacts =
        process_tracks(kept, video, seg.masks, cfg, jobs);

    echo_config(cfg, out);
    char name[64];
    for (const TrackArtifacts& a : artifacts) {
        std::snprintf(name, sizeof(name), "track_%06d", a.track_id);
        const std::string stem = name;
        write_foldover(a.rotated, out / (stem + ".pgm"), out / (stem + ".json"));
        write_projection(a.proj_x, a.rotated, out / (stem + "_px.pgm"),
                         out / (stem + "_px.json"));
        write_projection(a.proj_y, a.rotated, out / (stem + "_py.pgm"),
                         out / (stem + "_py.json"));
        write_projection(a.proj_z, a.rotated, out / (stem + "_pz.pgm"),
                         out / (stem + "_pz.json"));
    }
    std::cout << "foldovers: " << artifacts.size() << "\n";
    return 0;
}

int cmd_features(const fs::path& input, const fs::path& tracks_path, const fs::path& out,
                 const PipelineConfig& cfg, int jobs) {
    const VideoSequence video = load_input(input);
    const SegmentationOutput seg = segment_sequence(video, cfg, jobs);
    const std::vector<Track> kept = filter_min_length(
        tracks_for(tracks_path, seg, cfg), static_cast<std::size_t>(cfg.min_track_len));
    const std::vector<TrackArtifacts> artifacts =
        process_tracks(kept, video, seg.masks, cfg, jobs);
    echo_config(cfg, out);
    write_features_csv(feature_rows(artifacts), out / "features.csv", false);
    std::cout << "feature rows: " << artifacts.size() * 3 << "\n";
    return 0;
}

struct LabeledVectors {
    std::vector<int> ids;
    std::vector<std::vector<double>> vectors;
    std::vector<std::string> labels; // empty strings when unlabeled
};

LabeledVectors collect_axis(const std::vector<FeatureRow>& rows, Axis axis) {
    LabeledVectors lv;
    for (const FeatureRow& r : rows) {
        if (r.axis != axis) continue;
        lv.ids.push_back(r.track_id);
        lv.vectors.push_back(r.values);
        lv.labels.push_back(r.label);
    }
    return lv;
}

void write_reports(const MetricsReport& rep, const ConfusionMatrix& cm,
                   const fs::path& out) {
    fs::create_directories(out);
    std::ofstream js(out / "report.json", std::ios::binary);
    if (!js) throw IoFailureError("cannot write report.json");
    js << metrics_to_json_string(rep, &cm);
    std::ofstream txt(out / "report.txt", std::ios::binary);
    if (!txt) throw IoFailureError("cannot write report.txt");
    txt << metrics_to_text(rep);
}

int cmd_classify(const fs::path& train_csv, const fs::path& test_csv,
                 const std::string& axis_str, const fs::path& out) {
    const Axis axis = parse_axis_flag(axis_str);
    const LabeledVectors train = collect_axis(read_features_csv(train_csv), axis);
    const LabeledVectors test = collect_axis(read_features_csv(test_csv), axis);
    if (train.vectors.empty()) throw ValidationError("no training rows for that axis");
    for (const std::string& l : train.labels)
        if (l.empty())
            throw ValidationError("training feature csv must carry a label column");

    const std::vector<std::string> pred =
        nearest_centroid(train.vectors, train.labels, test.vectors);

    fs::create_directories(out);
    bool test_labeled = !test.labels.empty();
    for (const std::string& l : test.labels) test_labeled = test_labeled && !l.empty();
    {
        std::ofstream pr(out / "predictions.csv", std::ios::binary);
        if (!pr) throw IoFailureError("cannot write predictions.csv");
        pr << (test_labeled ? "track_id,predicted,actual\n" : "track_id,predicted\n");
        for (std::size_t i = 0; i < pred.size(); ++i) {
            pr << test.ids[i] << ',' << pred[i];
            if (test_labeled) pr << ',' << test.labels[i];
            pr << "\n";
        }
    }
    if (test_labeled) {
        const ConfusionMatrix cm = confusion(pred, test.labels);
        const MetricsReport rep = metrics(cm);
        write_reports(rep, cm, out);
        std::cout << metrics_to_text(rep);
    }
    std::cout << "predictions: " << pred.size() << "\n";
    return 0;
}

int cmd_eval(const fs::path& features_csv, const fs::path& labels_csv,
             fs::path split_csv, const std::string& axis_str, const fs::path& out) {
    const Axis axis = parse_axis_flag(axis_str);
    const auto rows = read_features_csv(features_csv);
    const auto labels = read_labels_csv(labels_csv);
    if (split_csv.empty()) {
        const fs::path sibling = labels_csv.parent_path() / "split.csv";
        if (fs::exists(sibling)) split_csv = sibling;
    }
    std::map<int, std::string> split;
    if (!split_csv.empty()) split = read_split_csv(split_csv);

    std::vector<std::vector<double>> train, test;
    std::vector<std::string> train_labels, truth;
    for (const auto& [id, vec] : axis_vectors(rows, axis)) {
        const auto lab = labels.find(id);
        if (lab == labels.end()) continue;
        bool in_train = true, in_test = true; // no split file: score in-sample
        if (!split.empty()) {
            const auto side = split.find(id);
            if (side == split.end()) continue;
            in_train = side->second == "train";
            in_test = !in_train;
        }
        if (in_train) {
            train.push_back(vec);
            train_labels.push_back(lab->second);
        }
        if (in_test) {
            test.push_back(vec);
            truth.push_back(lab->second);
        }
    }
    if (train.empty() || test.empty())
        throw ValidationError("no scorable samples after joining features with labels");

    const std::vector<std::string> pred = nearest_centroid(train, train_labels, test);
    const ConfusionMatrix cm = confusion(pred, truth);
    const MetricsReport rep = metrics(cm);
    std::cout << metrics_to_text(rep);
    if (!out.empty()) write_reports(rep, cm, out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"foldover: micro-object motility analysis from grayscale video"};
    app.set_version_flag("--version", std::string("foldover ") + kVersion +
                                          " (config-schema " + config_schema_hash() + ")");
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "generate a seeded synthetic dataset");
    std::string sim_preset = "benchmark";
    std::uint64_t sim_seed = 1;
    std::string sim_out;
    sim->add_option("--preset", sim_preset, "dataset preset (benchmark)");
    sim->add_option("--seed", sim_seed, "master seed");
    sim->add_option("--out", sim_out, "output directory")->required();

    auto* seg = app.add_subcommand("segment", "binarize frames and detect components");
    std::string seg_in, seg_out;
    int seg_jobs = 1;
    seg->add_option("--input", seg_in, "frame source")->required();
    seg->add_option("--out", seg_out, "output directory")->required();
    seg->add_option("--jobs", seg_jobs, "worker threads");
    ConfigBinder seg_cfg;
    seg_cfg.attach(seg);

    auto* trk = app.add_subcommand("track", "link detections into tracks");
    std::string trk_in, trk_out;
    int trk_jobs = 1;
    trk->add_option("--input", trk_in, "frame source")->required();
    trk->add_option("--out", trk_out, "output directory")->required();
    trk->add_option("--jobs", trk_jobs, "worker threads");
    ConfigBinder trk_cfg;
    trk_cfg.attach(trk);

    auto* fold = app.add_subcommand("foldover", "accumulate, rotate, and project tracks");
    std::string fold_in, fold_tracks, fold_out;
    int fold_jobs = 1;
    fold->add_option("--input", fold_in, "frame source")->required();
    fold->add_option("--tracks", fold_tracks, "tracks csv (default: run the tracker)");
    fold->add_option("--out", fold_out, "output directory")->required();
    fold->add_option("--jobs", fold_jobs, "worker threads");
    ConfigBinder fold_cfg;
    fold_cfg.attach(fold);

    auto* feat = app.add_subcommand("features", "extract per-track feature vectors");
    std::string feat_in, feat_tracks, feat_out;
    int feat_jobs = 1;
    feat->add_option("--input", feat_in, "frame source")->required();
    feat->add_option("--tracks", feat_tracks, "tracks csv (default: run the tracker)");
    feat->add_option("--out", feat_out, "output directory")->required();
    feat->add_option("--jobs", feat_jobs, "worker threads");
    ConfigBinder feat_cfg;
    feat_cfg.attach(feat);

    auto* cls = app.add_subcommand("classify", "nearest-centroid baseline classifier");
    std::string cls_train, cls_test, cls_axis = "z", cls_out;
    cls->add_option("--train", cls_train, "labeled feature csv")->required();
    cls->add_option("--test", cls_test, "feature csv to predict")->required();
    cls->add_option("--axis", cls_axis, "feature axis (x, y, z)");
    cls->add_option("--out", cls_out, "output directory")->required();

    auto* evl = app.add_subcommand("eval", "score features against labels");
    std::string evl_features, evl_labels, evl_split, evl_axis = "z", evl_out;
    evl->add_option("--features", evl_features, "feature csv")->required();
    evl->add_option("--labels", evl_labels, "labels csv")->required();
    evl->add_option("--split", evl_split, "split csv (default: labels' sibling split.csv)");
    evl->add_option("--axis", evl_axis, "feature axis (x, y, z)");
    evl->add_option("--out", evl_out, "optional report directory");

    auto* pipe = app.add_subcommand("pipeline", "run every stage end to end");
    std::string pipe_in, pipe_out;
    int pipe_jobs = 1;
    pipe->add_option("--input", pipe_in, "frame source")->required();
    pipe->add_option("--out", pipe_out, "output directory")->required();
    pipe->add_option("--jobs", pipe_jobs, "worker threads");
    ConfigBinder pipe_cfg;
    pipe_cfg.attach(pipe);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 1;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_preset, sim_seed, sim_out);
        if (seg->parsed()) return cmd_segment(seg_in, seg_out, seg_cfg.resolve(), seg_jobs);
        if (trk->parsed()) return cmd_track(trk_in, trk_out, trk_cfg.resolve(), trk_jobs);
        if (fold->parsed())
            return cmd_foldover(fold_in, fold_tracks, fold_out, fold_cfg.resolve(),
                                fold_jobs);
        if (feat->parsed())
            return cmd_features(feat_in, feat_tracks, feat_out, feat_cfg.resolve(),
                                feat_jobs);
        if (cls->parsed()) return cmd_classify(cls_train, cls_test, cls_axis, cls_out);
        if (evl->parsed())
            return cmd_eval(evl_features, evl_labels, evl_split, evl_axis, evl_out);
        if (pipe->parsed()) {
            run_full_pipeline(pipe_in, pipe_out, pipe_cfg.resolve(), pipe_jobs);
            std::cout << "pipeline complete: " << pipe_out << "\n";
            return 0;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
