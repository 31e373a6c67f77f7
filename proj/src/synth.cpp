#include "foldover/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "foldover/errors.hpp"
#include "foldover/rng.hpp"

namespace foldover {

double SplitMix64::normal() {
    if (has_spare) {
        has_spare = false;
        return spare;
    }
    double u, v, s;
    do {
        u = uniform(-1.0, 1.0);
        v = uniform(-1.0, 1.0);
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare = v * f;
    has_spare = true;
    return u * f;
}

std::pair<double, double> object_position(const ObjectSpec& obj, int frame) {
    const double tau = static_cast<double>(frame - obj.enter_frame);
    switch (obj.kind) {
        case MotionKind::Stationary:
            return {obj.x0, obj.y0};
        case MotionKind::Linear:
            return {obj.x0 + obj.speed * tau * std::cos(obj.heading),
                    obj.y0 + obj.speed * tau * std::sin(obj.heading)};
        case MotionKind::Circular: {
            const double phase = 2.0 * std::numbers::pi * tau / obj.period + obj.heading;
            return {obj.x0 + obj.amplitude * std::cos(phase),
                    obj.y0 + obj.amplitude * std::sin(phase)};
        }
        case MotionKind::Sinusoid:
        default: {
            const double ux = std::cos(obj.heading), uy = std::sin(obj.heading);
            const double along = obj.speed * tau;
            const double across =
                obj.amplitude * std::sin(2.0 * std::numbers::pi * tau / obj.period);
            return {obj.x0 + along * ux - across * uy, obj.y0 + along * uy + across * ux};
        }
    }
}

namespace {

void validate(const SceneSpec& spec) {
    if (spec.width < 1 || spec.height < 1)
        throw SpecViolationError("scene dimensions must be positive");
    if (spec.frames < 2) throw SpecViolationError("scene needs at least 2 frames");
    if (spec.noise_sigma < 0.0) throw SpecViolationError("noise sigma must be >= 0");
    if (spec.background < 0 || spec.background > 255)
        throw SpecViolationError("background must be an 8-bit intensity");
    for (std::size_t i = 0; i < spec.objects.size(); ++i) {
        const ObjectSpec& o = spec.objects[i];
        const std::string tag = "object " + std::to_string(i + 1) + ": ";
        if (o.exit_frame <= o.enter_frame)
            throw SpecViolationError(tag + "exit frame must follow enter frame");
        if (o.peak_intensity < 1 || o.peak_intensity > 255)
            throw SpecViolationError(tag + "peak intensity must be in [1,255]");
        if (o.peak_intensity <= spec.background + 3.0 * spec.noise_sigma)
            throw SpecViolationError(tag + "peak must exceed background + 3 sigma");
        if (o.radius <= 0.0) throw SpecViolationError(tag + "blob radius must be positive");
        if ((o.kind == MotionKind::Circular || o.kind == MotionKind::Sinusoid) &&
            o.period <= 0.0)
            throw SpecViolationError(tag + "periodic motion needs a positive period");
        const auto [px, py] = object_position(o, o.enter_frame);
        if (px < 0.0 || px >= spec.width || py < 0.0 || py >= spec.height)
            throw SpecViolationError(tag + "start position outside the frame");
    }
}

} // namespace

GeneratedScene generate(const SceneSpec& spec) {
    validate(spec);

    GeneratedScene out;
    out.video.fps = kDefaultFps;
    out.video.id = "scene";
    out.video.frames.reserve(spec.frames);
    out.ground_truth.resize(spec.objects.size());
    out.labels.reserve(spec.objects.size());
    for (std::size_t i = 0; i < spec.objects.size(); ++i) {
        out.ground_truth[i].id = static_cast<int>(i) + 1;
        out.labels.push_back(spec.objects[i].label);
    }

    const std::size_t npix = static_cast<std::size_t>(spec.width) * spec.height;
    std::vector<double> blob(npix);
    for (int t = 0; t < spec.frames; ++t) {
        std::fill(blob.begin(), blob.end(), 0.0);
        for (std::size_t i = 0; i < spec.objects.size(); ++i) {
            const ObjectSpec& o = spec.objects[i];
            if (t < o.enter_frame || t >= o.exit_frame) continue;
            const auto [cx, cy] = object_position(o, t);
            out.ground_truth[i].points.push_back({t, cx, cy});

            const double sigma = o.radius / 2.0;
            const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
            const int cut = static_cast<int>(std::ceil(4.0 * sigma));
            const int x0 = std::max(static_cast<int>(std::floor(cx)) - cut, 0);
            const int x1 = std::min(static_cast<int>(std::ceil(cx)) + cut, spec.width - 1);
            const int y0 = std::max(static_cast<int>(std::floor(cy)) - cut, 0);
            const int y1 = std::min(static_cast<int>(std::ceil(cy)) + cut, spec.height - 1);
            for (int y = y0; y <= y1; ++y) {
                const double dy = y - cy;
                for (int x = x0; x <= x1; ++x) {
                    const double dx = x - cx;
                    blob[static_cast<std::size_t>(y) * spec.width + x] +=
                        o.peak_intensity * std::exp(-(dx * dx + dy * dy) * inv2s2);
                }
            }
        }

        Frame frame(spec.width, spec.height);
        SplitMix64 noise(substream_seed(spec.seed, 0xF0F0ULL + static_cast<std::uint64_t>(t)));
        for (std::size_t k = 0; k < npix; ++k) {
            double v = std::min(blob[k], 255.0) + spec.background;
            if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise.normal();
            const double q = std::floor(v + 0.5); // round half up
            frame.data[k] = static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
        }
        out.video.frames.push_back(std::move(frame));
    }
    return out;
}

namespace {

// Shifts an object so the bounding box of its trajectory over [enter,exit)
// is centered on (cx, cy); returns the max distance from that center.
double center_trajectory(ObjectSpec& o, double cx, double cy) {
    double lox = 0, loy = 0, hix = 0, hiy = 0;
    bool first = true;
    for (int t = o.enter_frame; t < o.exit_frame; ++t) {
        const auto [px, py] = object_position(o, t);
        if (first) {
            lox = hix = px;
            loy = hiy = py;
            first = false;
        } else {
            lox = std::min(lox, px);
            hix = std::max(hix, px);
            loy = std::min(loy, py);
            hiy = std::max(hiy, py);
        }
    }
    o.x0 += cx - (lox + hix) / 2.0;
    o.y0 += cy - (loy + hiy) / 2.0;
    double worst = 0.0;
    for (int t = o.enter_frame; t < o.exit_frame; ++t) {
        const auto [px, py] = object_position(o, t);
        worst = std::max(worst, std::hypot(px - cx, py - cy));
    }
    return worst;
}

double path_length(const ObjectSpec& o) {
    double len = 0.0;
    auto prev = object_position(o, o.enter_frame);
    for (int t = o.enter_frame + 1; t < o.exit_frame; ++t) {
        const auto cur = object_position(o, t);
        len += std::hypot(cur.first - prev.first, cur.second - prev.second);
        prev = cur;
    }
    return len;
}

} // namespace

BenchmarkDataset default_benchmark(std::uint64_t seed) {
    // 15 x 12 cells of 96 px keep every pair of objects at least 56 px apart
    // (orbit excursions are capped at 20 px), so greedy gating cannot swap
    // identities at the default 20 px gate.
    constexpr int kCols = 15, kRows = 12, kPitch = 96, kFrames = 40;
    constexpr double kMaxExcursion = 20.0;

    BenchmarkDataset b;
    b.scene.width = kCols * kPitch;
    b.scene.height = kRows * kPitch;
    b.scene.frames = kFrames;
    b.scene.background = 20;
    b.scene.noise_sigma = 3.0;
    b.scene.seed = seed;

    const double two_pi = 2.0 * std::numbers::pi;
    for (int cell = 0; cell < kCols * kRows; ++cell) {
        const double cx = (cell % kCols) * kPitch + kPitch / 2.0;
        const double cy = (cell / kCols) * kPitch + kPitch / 2.0;
        const int cls = cell % 3;      // 0 poor, 1 good, 2 excellent
        const int ordinal = cell / 3;  // 0..59 within the class
        SplitMix64 rng(substream_seed(seed, 1000ULL + static_cast<std::uint64_t>(cell)));

        ObjectSpec o;
        o.enter_frame = 0;
        o.exit_frame = kFrames;
        o.radius = rng.uniform(5.0, 6.0);
        o.peak_intensity = rng.uniform_int(150, 250);

        // Target curvilinear speed = path length / frame count; the chord per
        // step is scaled by frames/(frames-1) so the realized value lands
        // exactly on target inside the class band.
        const double step_scale = static_cast<double>(kFrames) / (kFrames - 1);
        double target = 0.0;
        if (cls == 0) {
            o.label = "poor";
            if (ordinal < 20) {
                o.kind = MotionKind::Stationary;
            } else if (ordinal < 40) {
                o.kind = MotionKind::Linear;
                target = rng.uniform(0.2, 0.5);
                o.speed = target * step_scale;
                o.heading = rng.uniform(0.0, two_pi);
            } else {
                o.kind = MotionKind::Sinusoid;
                target = rng.uniform(0.3, 0.8);
                o.period = ordinal % 2 ? 10.0 : 12.0;
                o.heading = rng.uniform(0.0, two_pi);
                o.speed = 0.02;
                o.amplitude = 1.0;
            }
        } else if (cls == 1) {
            // Both moving classes orbit with one period each, so their speed
            // bands keep the class gap at least 3x the intra-class spread.
            o.label = "good";
            target = rng.uniform(4.0, 5.2);
            o.heading = rng.uniform(0.0, two_pi);
            o.kind = MotionKind::Circular;
            o.period = 11.0;
            o.amplitude =
                target * step_scale / (2.0 * std::sin(std::numbers::pi / o.period));
        } else {
            o.label = "excellent";
            target = rng.uniform(10.5, 12.5);
            o.kind = MotionKind::Circular;
            o.heading = rng.uniform(0.0, two_pi);
            o.period = 7.0;
            o.amplitude =
                target * step_scale / (2.0 * std::sin(std::numbers::pi / o.period));
        }

        if (o.kind == MotionKind::Sinusoid) {
            // Scale the raw oscillation onto the target path length; shrink the
            // forward drift if the trajectory would leave its cell.
            for (int attempt = 0; attempt < 16; ++attempt) {
                ObjectSpec trial = o;
                const double raw = path_length(trial);
                const double k = target * kFrames / raw;
                trial.speed *= k;
                trial.amplitude *= k;
                if (center_trajectory(trial, cx, cy) <= kMaxExcursion) {
                    o = trial;
                    break;
                }
                o.speed *= 0.5;
            }
        } else {
            center_trajectory(o, cx, cy);
        }
        const double excursion = center_trajectory(o, cx, cy);
        if (excursion > kMaxExcursion + 1e-9)
            throw ValidationError("benchmark trajectory leaves its cell");

        b.scene.objects.push_back(std::move(o));
    }

    b.data = generate(b.scene);

    // Seeded 90/90 shuffle split; every class is guaranteed members on both
    // sides because ids interleave classes and the shuffle is uniform.
    std::vector<int> ids(b.scene.objects.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i) + 1;
    SplitMix64 shuffle(substream_seed(seed, 0x5117ULL));
    for (std::size_t i = ids.size() - 1; i > 0; --i) {
        const std::size_t j = shuffle.next() % (i + 1);
        std::swap(ids[i], ids[j]);
    }
    const std::size_t half = ids.size() / 2;
    b.train_ids.assign(ids.begin(), ids.begin() + half);
    b.test_ids.assign(ids.begin() + half, ids.end());

    // Deterministic safety: if the shuffle left any class off one side, swap
    // in the first stray from the other side.
    auto class_of = [&](int id) { return b.data.labels[id - 1]; };
    for (const std::string cls : {"poor", "good", "excellent"}) {
        auto in_train = std::count_if(b.train_ids.begin(), b.train_ids.end(),
                                      [&](int id) { return class_of(id) == cls; });
        auto in_test = std::count_if(b.test_ids.begin(), b.test_ids.end(),
                                     [&](int id) { return class_of(id) == cls; });
        if (in_train == 0 || in_test == 0) {
            auto& need = in_train == 0 ? b.train_ids : b.test_ids;
            auto& have = in_train == 0 ? b.test_ids : b.train_ids;
            for (std::size_t k = 0; k < have.size(); ++k)
                if (class_of(have[k]) == cls) {
                    std::swap(need.front(), have[k]);
                    break;
                }
        }
    }
    std::sort(b.train_ids.begin(), b.train_ids.end());
    std::sort(b.test_ids.begin(), b.test_ids.end());
    return b;
}

std::map<int, std::string> label_map(const GeneratedScene& g) {
    std::map<int, std::string> m;
    for (std::size_t i = 0; i < g.ground_truth.size(); ++i)
        m[g.ground_truth[i].id] = g.labels[i];
    return m;
}

void write_scene(const GeneratedScene& g, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_raw_planar(g.video, dir / "frames.raw");
    write_tracks_csv(g.ground_truth, dir / "gt_tracks.csv");
    std::ofstream labels(dir / "labels.csv", std::ios::binary);
    if (!labels) throw IoFailureError("cannot open labels.csv for writing");
    labels << "track_id,label\n";
    for (std::size_t i = 0; i < g.ground_truth.size(); ++i)
        labels << g.ground_truth[i].id << ',' << g.labels[i] << "\n";
}

void write_benchmark(const BenchmarkDataset& b, const std::filesystem::path& dir) {
    write_scene(b.data, dir);
    std::ofstream split(dir / "split.csv", std::ios::binary);
    if (!split) throw IoFailureError("cannot open split.csv for writing");
    split << "track_id,split\n";
    std::vector<std::pair<int, const char*>> rows;
    for (int id : b.train_ids) rows.emplace_back(id, "train");
    for (int id : b.test_ids) rows.emplace_back(id, "test");
    std::sort(rows.begin(), rows.end());
    for (const auto& [id, side] : rows) split << id << ',' << side << "\n";
}

} // namespace foldover
