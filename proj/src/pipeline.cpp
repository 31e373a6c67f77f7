#include "foldover/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "foldover/errors.hpp"

namespace foldover {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t idx = 0;
        const int v = std::stoi(value, &idx);
        if (idx != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "' needs an integer, got '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t idx = 0;
        const double v = std::stod(value, &idx);
        if (idx != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "' needs a number, got '" + value + "'");
    }
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

} // namespace

bool apply_config_entry(PipelineConfig& cfg, const std::string& key,
                        const std::string& value) {
    if (key == "threshold") {
        cfg.threshold = value;
    } else if (key == "polarity") {
        if (value == "bright")
            cfg.polarity = Polarity::BrightObject;
        else if (value == "dark")
            cfg.polarity = Polarity::DarkObject;
        else
            throw ValidationError("polarity must be 'bright' or 'dark', got '" + value + "'");
    } else if (key == "min_area") {
        cfg.min_area = parse_int(key, value);
    } else if (key == "gate") {
        cfg.gate = parse_double(key, value);
    } else if (key == "miss_tolerance") {
        cfg.miss_tolerance = parse_int(key, value);
    } else if (key == "min_track_len") {
        cfg.min_track_len = parse_int(key, value);
    } else if (key == "r") {
        cfg.r = parse_double(key, value);
    } else if (key == "eps_disp") {
        cfg.eps_disp = parse_double(key, value);
    } else if (key == "nu_x") {
        cfg.nu_x = parse_int(key, value);
    } else if (key == "nu_y") {
        cfg.nu_y = parse_int(key, value);
    } else if (key == "nu_z") {
        cfg.nu_z = parse_int(key, value);
    } else if (key == "e") {
        cfg.e = parse_int(key, value);
    } else if (key == "passes") {
        cfg.passes = parse_int(key, value);
    } else if (key == "d") {
        cfg.d = parse_int(key, value);
    } else if (key == "um_per_px") {
        cfg.um_per_px = parse_double(key, value);
    } else if (key == "fps") {
        cfg.fps = parse_double(key, value);
    } else {
        return false;
    }
    return true;
}

void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoFailureError("cannot open config file: " + path.string());
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(line_no) +
                                  " is not key=value: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!apply_config_entry(cfg, key, value))
            throw ValidationError("unknown config key '" + key + "' at line " +
                                  std::to_string(line_no));
    }
}

void validate_config(const PipelineConfig& cfg) {
    if (cfg.threshold != "otsu") {
        if (cfg.threshold.rfind("fixed:", 0) != 0)
            throw ValidationError("threshold must be 'otsu' or 'fixed:<T>'");
        const int t = parse_int("threshold", cfg.threshold.substr(6));
        if (t < 0 || t > 255) throw ValidationError("fixed threshold must be in [0,255]");
    }
    if (cfg.min_area < 1) throw ValidationError("min_area must be >= 1");
    if (cfg.gate <= 0.0) throw ValidationError("gate must be > 0");
    if (cfg.miss_tolerance < 0) throw ValidationError("miss_tolerance must be >= 0");
    if (cfg.min_track_len < 1) throw ValidationError("min_track_len must be >= 1");
    if (cfg.r <= 0.0) throw ValidationError("r must be > 0");
    if (cfg.eps_disp < 0.0) throw ValidationError("eps_disp must be >= 0");
    if (cfg.nu_x < 1 || cfg.nu_y < 1 || cfg.nu_z < 1)
        throw ValidationError("projection steps must be >= 1");
    if (cfg.e < 3 || cfg.e % 2 == 0) throw ValidationError("e must be odd and >= 3");
    if (cfg.passes < 1) throw ValidationError("passes must be >= 1");
    if (cfg.d < 1) throw ValidationError("d must be >= 1");
    if (cfg.um_per_px <= 0.0) throw ValidationError("um_per_px must be > 0");
    if (cfg.fps <= 0.0) throw ValidationError("fps must be > 0");
}

std::string config_to_string(const PipelineConfig& cfg) {
    std::ostringstream out;
    out << "threshold=" << cfg.threshold << "\n";
    out << "polarity=" << (cfg.polarity == Polarity::BrightObject ? "bright" : "dark")
        << "\n";
    out << "min_area=" << cfg.min_area << "\n";
    out << "gate=" << format_double(cfg.gate) << "\n";
    out << "miss_tolerance=" << cfg.miss_tolerance << "\n";
    out << "min_track_len=" << cfg.min_track_len << "\n";
    out << "r=" << format_double(cfg.r) << "\n";
    out << "eps_disp=" << format_double(cfg.eps_disp) << "\n";
    out << "nu_x=" << cfg.nu_x << "\n";
    out << "nu_y=" << cfg.nu_y << "\n";
    out << "nu_z=" << cfg.nu_z << "\n";
    out << "e=" << cfg.e << "\n";
    out << "passes=" << cfg.passes << "\n";
    out << "d=" << cfg.d << "\n";
    out << "um_per_px=" << format_double(cfg.um_per_px) << "\n";
    out << "fps=" << format_double(cfg.fps) << "\n";
    return out.str();
}

std::string config_schema_hash() {
    static const char* schema =
        "threshold:string|polarity:enum(bright,dark)|min_area:int|gate:float|"
        "miss_tolerance:int|min_track_len:int|r:float|eps_disp:float|"
        "nu_x:int|nu_y:int|nu_z:int|e:int|passes:int|d:int|um_per_px:float|fps:float";
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char* p = schema; *p; ++p) {
        h ^= static_cast<unsigned char>(*p);
        h *= 0x100000001B3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int threshold_for(const PipelineConfig& cfg, const Frame& frame) {
    if (cfg.threshold == "otsu") return otsu_threshold(frame);
    return parse_int("threshold", cfg.threshold.substr(6));
}

void parallel_for_indexed(std::size_t n, int jobs,
                          const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t workers =
        std::min<std::size_t>(std::max(jobs, 1), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

VideoSequence load_input(const std::filesystem::path& path) {
    if (std::filesystem::is_regular_file(path)) return load_raw_planar(path);
    if (std::filesystem::is_directory(path)) {
        if (std::filesystem::exists(path / "frames.raw"))
            return load_raw_planar(path / "frames.raw");
        return load_sequence(path, SequenceFormat::ImageDir);
    }
    throw IoFailureError("input not found: " + path.string());
}

namespace {

std::map<int, std::string> read_id_string_csv(const std::filesystem::path& path,
                                              const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailureError(std::string("cannot open ") + what + ": " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw IoError(std::string("empty ") + what + ": " + path.string());
    std::map<int, std::string> m;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw IoError(std::string("bad row in ") + what + ": " + line);
        m[parse_int("track_id", line.substr(0, comma))] = line.substr(comma + 1);
    }
    return m;
}

} // namespace

std::map<int, std::string> read_labels_csv(const std::filesystem::path& path) {
    return read_id_string_csv(path, "labels csv");
}

std::map<int, std::string> read_split_csv(const std::filesystem::path& path) {
    auto m = read_id_string_csv(path, "split csv");
    for (const auto& [id, side] : m)
        if (side != "train" && side != "test")
            throw IoError("split values must be train or test, got '" + side + "'");
    return m;
}

SegmentationOutput segment_sequence(const VideoSequence& video, const PipelineConfig& cfg,
                                    int jobs) {
    SegmentationOutput out;
    const std::size_t n = video.frames.size();
    out.thresholds.resize(n);
    out.masks.resize(n);
    out.detections.resize(n);
    parallel_for_indexed(n, jobs, [&](std::size_t i) {
        const Frame& frame = video.frames[i];
        const int t = threshold_for(cfg, frame);
        out.thresholds[i] = t;
        out.masks[i] = binarize(frame, t, cfg.polarity);
        out.detections[i] = detect(out.masks[i], static_cast<int>(i), cfg.min_area);
    });
    return out;
}

std::vector<Track> track_sequence(const SegmentationOutput& seg, const PipelineConfig& cfg) {
    TrackingParams params;
    params.gate = cfg.gate;
    params.miss_tolerance = cfg.miss_tolerance;
    return build_tracks(seg.detections, params);
}

TrackArtifacts process_track(const Track& track, const VideoSequence& video,
                             const std::vector<BinaryMask>& masks,
                             const PipelineConfig& cfg) {
    TrackArtifacts a;
    a.track_id = track.id;
    const Foldover accumulated = accumulate(track, video, masks, cfg.r);
    a.rotated = rotate_to_positive_x(accumulated, cfg.eps_disp);
    const FoldoverExtents ext = support_extents(a.rotated);
    a.proj_x = project(a.rotated, Axis::X, cfg.nu_x);
    a.proj_y = project(a.rotated, Axis::Y, cfg.nu_y);
    a.proj_z = project(a.rotated, Axis::Z, cfg.nu_z);
    a.kin = kinematics(track, ext.x, ext.y);
    const DescriptorGrid hx = conv_descriptor(a.proj_x, cfg.e, cfg.passes, cfg.d);
    const DescriptorGrid hy = conv_descriptor(a.proj_y, cfg.e, cfg.passes, cfg.d);
    const DescriptorGrid hz = conv_descriptor(a.proj_z, cfg.e, cfg.passes, cfg.d);
    a.features = assemble(a.kin, hx, hy, hz);
    a.grade = who_grade(a.kin.vcl * cfg.um_per_px * cfg.fps);
    return a;
}

std::vector<TrackArtifacts> process_tracks(const std::vector<Track>& tracks,
                                           const VideoSequence& video,
                                           const std::vector<BinaryMask>& masks,
                                           const PipelineConfig& cfg, int jobs) {
    std::vector<TrackArtifacts> out(tracks.size());
    parallel_for_indexed(tracks.size(), jobs, [&](std::size_t i) {
        out[i] = process_track(tracks[i], video, masks, cfg);
    });
    return out;
}

std::vector<FeatureRow> feature_rows(const std::vector<TrackArtifacts>& artifacts) {
    std::vector<FeatureRow> rows;
    rows.reserve(artifacts.size() * 3);
    for (const TrackArtifacts& a : artifacts) {
        rows.push_back({a.track_id, Axis::X, "", a.features.fx.flat()});
        rows.push_back({a.track_id, Axis::Y, "", a.features.fy.flat()});
        rows.push_back({a.track_id, Axis::Z, "", a.features.fz.flat()});
    }
    return rows;
}

std::vector<std::pair<int, std::vector<double>>> axis_vectors(
    const std::vector<FeatureRow>& rows, Axis axis) {
    std::vector<std::pair<int, std::vector<double>>> out;
    for (const FeatureRow& r : rows)
        if (r.axis == axis) out.emplace_back(r.track_id, r.values);
    return out;
}

namespace {

std::string padded_id(int id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "track_%06d", id);
    return buf;
}

// Classification block of the pipeline report: per-axis hold-out accuracy
// plus the full metric suite on the Z-axis features.
nlohmann::json classification_report(const std::vector<FeatureRow>& rows,
                                     const std::map<int, std::string>& labels,
                                     const std::map<int, std::string>& split) {
    nlohmann::json j;
    MetricsReport z_report;
    ConfusionMatrix z_cm;
    bool have_z = false;
    for (Axis axis : {Axis::X, Axis::Y, Axis::Z}) {
        std::vector<std::vector<double>> train, test;
        std::vector<std::string> train_labels, truth;
        for (const auto& [id, vec] : axis_vectors(rows, axis)) {
            const auto lab = labels.find(id);
            if (lab == labels.end()) continue;
            bool is_train = true, is_test = true; // no split: score in-sample
            if (!split.empty()) {
                const auto side = split.find(id);
                if (side == split.end()) continue;
                is_train = side->second == "train";
                is_test = !is_train;
            }
            if (is_train) {
                train.push_back(vec);
                train_labels.push_back(lab->second);
            }
            if (is_test) {
                test.push_back(vec);
                truth.push_back(lab->second);
            }
        }
        const auto pred = nearest_centroid(train, train_labels, test);
        const ConfusionMatrix cm = confusion(pred, truth);
        const MetricsReport rep = metrics(cm);
        j["axis_accuracy"][axis_name(axis)] = rep.accuracy;
        if (axis == Axis::Z) {
            z_report = rep;
            z_cm = cm;
            have_z = true;
        }
    }
    if (have_z)
        j["z_metrics"] = nlohmann::json::parse(metrics_to_json_string(z_report, &z_cm));
    return j;
}

} // namespace

void run_full_pipeline(const std::filesystem::path& input,
                       const std::filesystem::path& out_dir,
                       const PipelineConfig& cfg, int jobs) {
    validate_config(cfg);
    const VideoSequence video = load_input(input);

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream conf(out_dir / "config_used.txt", std::ios::binary);
        if (!conf) throw IoFailureError("cannot write config_used.txt");
        conf << config_to_string(cfg);
    }

    const SegmentationOutput seg = segment_sequence(video, cfg, jobs);
    const std::vector<Track> tracks = track_sequence(seg, cfg);
    write_tracks_csv(tracks, out_dir / "tracks.csv");

    const std::vector<Track> kept =
        filter_min_length(tracks, static_cast<std::size_t>(cfg.min_track_len));
    const std::vector<TrackArtifacts> artifacts =
        process_tracks(kept, video, seg.masks, cfg, jobs);

    std::filesystem::create_directories(out_dir / "foldover");
    for (const TrackArtifacts& a : artifacts) {
        const std::string stem = padded_id(a.track_id);
        write_foldover(a.rotated, out_dir / "foldover" / (stem + ".pgm"),
                       out_dir / "foldover" / (stem + ".json"));
    }

    const std::vector<FeatureRow> rows = feature_rows(artifacts);
    write_features_csv(rows, out_dir / "features.csv", false);

    nlohmann::json report;
    report["version"] = kVersion;
    report["tracks_recovered"] = tracks.size();
    report["tracks_analyzed"] = kept.size();
    nlohmann::json grades;
    for (const char* g : {"A", "B", "C", "D"}) grades[g] = 0;
    for (const TrackArtifacts& a : artifacts)
        grades[std::string(1, a.grade)] = grades[std::string(1, a.grade)].get<int>() + 1;
    report["grades"] = grades;

    // Optional classification: labels.csv next to the input, with the ids
    // joined through gt_tracks.csv when present, split by split.csv.
    const std::filesystem::path side_dir =
        std::filesystem::is_directory(input) ? input : input.parent_path();
    const std::filesystem::path labels_path = side_dir / "labels.csv";
    if (std::filesystem::exists(labels_path)) {
        try {
            std::map<int, std::string> labels = read_labels_csv(labels_path);
            std::map<int, std::string> split;
            if (std::filesystem::exists(side_dir / "split.csv"))
                split = read_split_csv(side_dir / "split.csv");

            const std::filesystem::path gt_path = side_dir / "gt_tracks.csv";
            std::map<int, std::string> joined_labels, joined_split;
            if (std::filesystem::exists(gt_path)) {
                const std::vector<Track> gt = read_tracks_csv(gt_path);
                for (const TrackPairing& p : correspond_tracks(gt, kept)) {
                    const int gt_id = gt[p.a_index].id;
                    const int rec_id = kept[p.b_index].id;
                    const auto lab = labels.find(gt_id);
                    if (lab != labels.end()) joined_labels[rec_id] = lab->second;
                    const auto side = split.find(gt_id);
                    if (side != split.end()) joined_split[rec_id] = side->second;
                }
            } else {
                joined_labels = std::move(labels);
                joined_split = std::move(split);
            }
            report["classification"] = classification_report(rows, joined_labels, joined_split);
        } catch (const ValidationError& e) {
            report["classification"] = {{"error", e.what()}};
        }
    }

    std::ofstream rep(out_dir / "report.json", std::ios::binary);
    if (!rep) throw IoFailureError("cannot write report.json");
    rep << report.dump(2) << "\n";
}

} // namespace foldover
