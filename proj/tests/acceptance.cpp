// Release gate: every check below must print PASS. Each criterion pins its
// numeric tolerance and wall-clock budget next to the code that enforces it.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "foldover/classify.hpp"
#include "foldover/features.hpp"
#include "foldover/foldover.hpp"
#include "foldover/pipeline.hpp"
#include "foldover/rng.hpp"
#include "foldover/synth.hpp"
#include "foldover/tracking.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace foldover;

namespace {

constexpr std::uint64_t kBenchmarkSeed = 7;

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome ok(const std::string& detail = "") { return {true, detail}; }
Outcome fail(const std::string& detail) { return {false, detail}; }

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

// ---------------------------------------------------------------- criterion 1
// 200 seeded height maps (<= 64x64, values <= 50): the three projection sums
// must equal the brute-force voxel count exactly, in under 5 seconds.
Outcome volume_conservation() {
    SplitMix64 rng(0xACCE0001);
    for (int trial = 0; trial < 200; ++trial) {
        const int w = rng.uniform_int(1, 64);
        const int h = rng.uniform_int(1, 64);
        Foldover f;
        f.width = w;
        f.height = h;
        f.gamma = 1;
        f.grid.assign(static_cast<std::size_t>(w) * h, 0);
        for (auto& v : f.grid)
            if (rng.uniform01() >= 0.3)
                v = static_cast<std::uint32_t>(rng.uniform_int(0, 50));

        // Voxel-by-voxel enumeration of the solid under the height map.
        std::uint64_t voxels = 0;
        for (std::uint32_t v : f.grid)
            for (std::uint32_t z = 1; z <= v; ++z) ++voxels;

        std::uint64_t sx = 0, sy = 0, sz = 0;
        for (std::uint32_t v : project(f, Axis::X, 1).grid) sx += v;
        for (std::uint32_t v : project(f, Axis::Y, 1).grid) sy += v;
        for (std::uint32_t v : project(f, Axis::Z, 1).grid) sz += v;
        if (sx != voxels || sy != voxels || sz != voxels)
            return fail("trial " + std::to_string(trial) + ": sums " + std::to_string(sx) +
                        "/" + std::to_string(sy) + "/" + std::to_string(sz) + " vs " +
                        std::to_string(voxels) + " voxels");
    }
    return ok("200 grids, exact integer equality");
}

// ---------------------------------------------------------------- criterion 2
// 100 seeded kinematic cases in under 1 second: straight movers satisfy
// |A - B| < 1e-9 with LIN = STR = WOB = 1; stationary movers are all zero.
Outcome kinematic_closed_forms() {
    SplitMix64 rng(0xACCE0002);
    const double tol = 1e-9;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = rng.uniform_int(4, 60);
        Track t;
        t.id = 1;
        if (trial % 2 == 0) {
            const double x0 = rng.uniform(0.0, 50.0), y0 = rng.uniform(0.0, 50.0);
            const double ang = rng.uniform(0.0, 6.28318530717958647692);
            const double speed = rng.uniform(0.5, 5.0);
            for (int i = 0; i < n; ++i)
                t.points.push_back({i, x0 + speed * i * std::cos(ang),
                                    y0 + speed * i * std::sin(ang)});
            const KinematicSummary k = kinematics(t, 0.0, 0.0);
            if (std::abs(k.dist_a - k.disp_b) >= tol)
                return fail("straight trial " + std::to_string(trial) + ": |A-B| = " +
                            fmt(std::abs(k.dist_a - k.disp_b), 12));
            if (std::abs(k.lin - 1.0) >= tol || std::abs(k.str - 1.0) >= tol ||
                std::abs(k.wob - 1.0) >= tol)
                return fail("straight trial " + std::to_string(trial) +
                            ": ratios off unity");
        } else {
            const double x = rng.uniform(0.0, 50.0), y = rng.uniform(0.0, 50.0);
            for (int i = 0; i < n; ++i) t.points.push_back({i, x, y});
            const KinematicSummary k = kinematics(t, 0.0, 0.0);
            if (k.dist_a != 0.0 || k.disp_b != 0.0 || k.avg_path_m != 0.0 ||
                k.vcl != 0.0 || k.vsl != 0.0 || k.vap != 0.0 || k.lin != 0.0 ||
                k.str != 0.0 || k.wob != 0.0)
                return fail("stationary trial " + std::to_string(trial) + " not all-zero");
        }
    }
    return ok("50 straight + 50 stationary cases");
}

// ---------------------------------------------------------------- criterion 3
// 50 exact-cubic tracks in under 1 second: the path fit reproduces every point
// within 1e-6 px and the smoothed length within 1e-6 of the polyline length.
Outcome cubic_fit_fidelity() {
    SplitMix64 rng(0xACCE0003);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = rng.uniform_int(4, 40);
        const double cx[4] = {rng.uniform(0.0, 100.0), rng.uniform(-3.0, 3.0),
                              rng.uniform(-0.1, 0.1), rng.uniform(-0.01, 0.01)};
        const double cy[4] = {rng.uniform(0.0, 100.0), rng.uniform(-3.0, 3.0),
                              rng.uniform(-0.1, 0.1), rng.uniform(-0.01, 0.01)};
        Track t;
        t.id = 1;
        for (int i = 0; i < n; ++i) {
            const double u = i;
            t.points.push_back({i, ((cx[3] * u + cx[2]) * u + cx[1]) * u + cx[0],
                                ((cy[3] * u + cy[2]) * u + cy[1]) * u + cy[0]});
        }
        const AveragePath fitted = fit_average_path(t);
        if (fitted.path.size() != t.points.size())
            return fail("trial " + std::to_string(trial) + ": path length mismatch");
        double polyline = 0.0;
        for (std::size_t i = 0; i < t.points.size(); ++i) {
            const double dx = fitted.path[i].x - t.points[i].x;
            const double dy = fitted.path[i].y - t.points[i].y;
            if (std::abs(dx) >= 1e-6 || std::abs(dy) >= 1e-6)
                return fail("trial " + std::to_string(trial) + ": point " +
                            std::to_string(i) + " off by (" + fmt(dx, 9) + ", " +
                            fmt(dy, 9) + ")");
            if (i > 0)
                polyline += std::hypot(t.points[i].x - t.points[i - 1].x,
                                       t.points[i].y - t.points[i - 1].y);
        }
        if (std::abs(fitted.length - polyline) >= 1e-6)
            return fail("trial " + std::to_string(trial) + ": M differs from polyline by " +
                        fmt(std::abs(fitted.length - polyline), 9));
    }
    return ok("50 cubics reproduced to 1e-6");
}

// Shared state for the benchmark-driven criteria.
struct BenchmarkRun {
    BenchmarkDataset bench;
    SegmentationOutput seg;
    std::vector<Track> recovered;
    std::vector<TrackPairing> pairs; // ground truth index -> recovered index
};

// ---------------------------------------------------------------- criterion 4
// The seeded benchmark (noise sigma <= 5) must come back as exactly 180
// tracks, each pairing with its ground-truth trajectory at mean centroid
// error < 0.5 px and with zero identity switches, in under 60 seconds.
Outcome tracking_recovery(BenchmarkRun& run) {
    run.bench = default_benchmark(kBenchmarkSeed);
    if (run.bench.scene.noise_sigma > 5.0)
        return fail("benchmark noise sigma exceeds the criterion precondition");

    PipelineConfig cfg;
    run.seg = segment_sequence(run.bench.data.video, cfg, 1);
    run.recovered = track_sequence(run.seg, cfg);
    if (run.recovered.size() != 180)
        return fail("recovered " + std::to_string(run.recovered.size()) +
                    " tracks, expected 180");

    run.pairs = correspond_tracks(run.bench.data.ground_truth, run.recovered);
    if (run.pairs.size() != 180)
        return fail("only " + std::to_string(run.pairs.size()) +
                    " ground-truth correspondences");

    double worst = 0.0, mean = 0.0;
    for (const TrackPairing& p : run.pairs) {
        if (p.shared_frames != static_cast<int>(run.bench.data.ground_truth[p.a_index].length()))
            return fail("pair for gt " + std::to_string(p.a_index + 1) +
                        " shares only " + std::to_string(p.shared_frames) + " frames");
        worst = std::max(worst, p.mean_dist);
        mean += p.mean_dist / run.pairs.size();
    }
    if (worst >= 0.5)
        return fail("max per-track mean centroid error " + fmt(worst) + " >= 0.5 px");

    // Identity switches: every recovered point must stay owned by one ground
    // truth object. Ownership = nearest object center at that frame.
    const auto& gt = run.bench.data.ground_truth;
    long switches = 0;
    for (const Track& t : run.recovered) {
        int owner = -1;
        for (const TrackPoint& p : t.points) {
            int nearest = -1;
            double best = 1e18;
            for (std::size_t g = 0; g < gt.size(); ++g) {
                const TrackPoint& q = gt[g].points[p.frame_index];
                const double d = std::hypot(q.x - p.x, q.y - p.y);
                if (d < best) {
                    best = d;
                    nearest = static_cast<int>(g);
                }
            }
            if (owner >= 0 && nearest != owner) ++switches;
            owner = nearest;
        }
    }
    if (switches != 0) return fail(std::to_string(switches) + " identity switches");
    return ok("180/180 tracks, mean err " + fmt(mean) + " px, max " + fmt(worst) +
              " px, 0 switches");
}

// ---------------------------------------------------------------- criterion 5
// Nearest-centroid on the Z-axis features must reach >= 95% accuracy on the
// 90-track held-out half, and the Z accuracy must be >= both the X and Y
// accuracies on the same split, in under 120 seconds.
Outcome heldout_separation(const BenchmarkRun& run) {
    if (run.pairs.size() != 180) return fail("tracking criterion did not populate pairs");

    PipelineConfig cfg;
    const std::vector<Track> kept = filter_min_length(
        run.recovered, static_cast<std::size_t>(cfg.min_track_len));
    const std::vector<TrackArtifacts> artifacts =
        process_tracks(kept, run.bench.data.video, run.seg.masks, cfg, 1);

    // Recovered track id -> feature vectors; ground-truth id -> recovered id.
    std::map<int, const TrackArtifacts*> by_id;
    for (const TrackArtifacts& a : artifacts) by_id[a.track_id] = &a;
    std::map<int, int> gt_to_rec;
    for (const TrackPairing& p : run.pairs)
        gt_to_rec[run.bench.data.ground_truth[p.a_index].id] = run.recovered[p.b_index].id;

    const std::set<int> train_ids(run.bench.train_ids.begin(), run.bench.train_ids.end());
    double acc[3] = {0.0, 0.0, 0.0};
    const Axis axes[3] = {Axis::X, Axis::Y, Axis::Z};
    for (int ax = 0; ax < 3; ++ax) {
        std::vector<std::vector<double>> train, test;
        std::vector<std::string> train_labels, truth;
        for (std::size_t g = 0; g < run.bench.data.ground_truth.size(); ++g) {
            const int gt_id = run.bench.data.ground_truth[g].id;
            const auto rec = gt_to_rec.find(gt_id);
            if (rec == gt_to_rec.end()) return fail("missing recovered pair");
            const auto art = by_id.find(rec->second);
            if (art == by_id.end()) return fail("recovered track was filtered out");
            const FeatureVector& fv = (axes[ax] == Axis::X)   ? art->second->features.fx
                                      : (axes[ax] == Axis::Y) ? art->second->features.fy
                                                              : art->second->features.fz;
            if (train_ids.count(gt_id)) {
                train.push_back(fv.flat());
                train_labels.push_back(run.bench.data.labels[g]);
            } else {
                test.push_back(fv.flat());
                truth.push_back(run.bench.data.labels[g]);
            }
        }
        if (train.size() != 90 || test.size() != 90)
            return fail("split is not 90/90 after joining");
        const std::vector<std::string> pred = nearest_centroid(train, train_labels, test);
        long hits = 0;
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (pred[i] == truth[i]) ++hits;
        acc[ax] = static_cast<double>(hits) / static_cast<double>(pred.size());
    }

    if (acc[2] < 0.95)
        return fail("Z-axis accuracy " + fmt(acc[2]) + " below 0.95");
    if (acc[2] < acc[0] || acc[2] < acc[1])
        return fail("Z accuracy " + fmt(acc[2]) + " not >= X " + fmt(acc[0]) + " and Y " +
                    fmt(acc[1]));
    return ok("accuracy x=" + fmt(acc[0]) + " y=" + fmt(acc[1]) + " z=" + fmt(acc[2]) +
              " on 90 held-out tracks");
}

// ---------------------------------------------------------------- criterion 6
// The metric suite must reproduce the hand-derived report of a fixed 3x3
// matrix to 1e-12.
Outcome metric_suite_hand_check() {
    ConfusionMatrix cm;
    cm.class_names = kClassOrder;
    cm.counts = {{{8, 2, 0}, {1, 6, 1}, {0, 2, 4}}};
    const MetricsReport r = metrics(cm);

    const double tol = 1e-12;
    const double want_prec[3] = {8.0 / 9.0, 6.0 / 10.0, 4.0 / 5.0};
    const double want_rec[3] = {8.0 / 10.0, 6.0 / 8.0, 4.0 / 6.0};
    const double macro_r = (want_rec[0] + want_rec[1] + want_rec[2]) / 3.0;
    const double want_var = ((want_rec[0] - macro_r) * (want_rec[0] - macro_r) +
                             (want_rec[1] - macro_r) * (want_rec[1] - macro_r) +
                             (want_rec[2] - macro_r) * (want_rec[2] - macro_r)) /
                            3.0;

    if (std::abs(r.accuracy - 0.75) >= tol) return fail("accuracy " + fmt(r.accuracy, 15));
    for (int i = 0; i < 3; ++i) {
        if (std::abs(r.precision[i] - want_prec[i]) >= tol)
            return fail("precision " + std::to_string(i + 1));
        if (std::abs(r.recall[i] - want_rec[i]) >= tol)
            return fail("recall " + std::to_string(i + 1));
    }
    if (std::abs(r.macro_r - macro_r) >= tol) return fail("macro recall");
    if (std::abs(r.variance - want_var) >= tol) return fail("recall variance");
    return ok("accuracy/precision/recall/variance all within 1e-12");
}

// ---------------------------------------------------------------- criterion 7
// Motility grade boundaries: 25 -> A, anything in (5,25) -> B, 0 -> D, and
// the documented convention 5 -> C.
Outcome motility_grade_bands() {
    if (who_grade(25.0) != 'A') return fail("25 um/s should grade A");
    for (double v : {5.000001, 10.0, 24.999999})
        if (who_grade(v) != 'B') return fail(fmt(v, 6) + " um/s should grade B");
    if (who_grade(0.0) != 'D') return fail("0 um/s should grade D");
    if (who_grade(5.0) != 'C') return fail("5 um/s should grade C");
    return ok("boundary speeds map to A/B/C/D as documented");
}

// ---------------------------------------------------------------- criterion 8
// Two CLI pipeline runs over the same scene with --jobs 1 and --jobs 8 must
// produce byte-identical artifact directories, in under 120 seconds.
Outcome parallel_determinism(const BenchmarkRun& run, const fs::path& scratch) {
    const fs::path scene = scratch / "scene";
    write_benchmark(run.bench, scene);

    auto run_pipeline = [&](const std::string& jobs, const fs::path& out) {
        const std::string cmd = std::string("\"") + FOLDOVER_CLI_PATH + "\" pipeline --input \"" +
                                scene.string() + "\" --out \"" + out.string() +
                                "\" --jobs " + jobs + " > \"" +
                                (scratch / ("log" + jobs + ".txt")).string() + "\" 2>&1";
        const int status = std::system(cmd.c_str());
        return (status != -1 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    };

    const int rc1 = run_pipeline("1", scratch / "out_serial");
    if (rc1 != 0) return fail("pipeline --jobs 1 exited with " + std::to_string(rc1));
    const int rc8 = run_pipeline("8", scratch / "out_parallel");
    if (rc8 != 0) return fail("pipeline --jobs 8 exited with " + std::to_string(rc8));

    std::string why;
    if (!testutil::dirs_identical(scratch / "out_serial", scratch / "out_parallel", why))
        return fail(why);
    const auto files = testutil::file_listing(scratch / "out_serial");
    return ok(std::to_string(files.size()) + " files byte-identical across job counts");
}

} // namespace

int main() {
    fs::path scratch = fs::temp_directory_path() /
                       ("foldover_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(scratch);
    fs::create_directories(scratch);

    BenchmarkRun run;
    struct Criterion {
        const char* name;
        double budget_s;
        std::function<Outcome()> fn;
    };
    const std::vector<Criterion> criteria = {
        {"projection volume conservation", 5.0, [] { return volume_conservation(); }},
        {"kinematic closed forms", 1.0, [] { return kinematic_closed_forms(); }},
        {"cubic path fit fidelity", 1.0, [] { return cubic_fit_fidelity(); }},
        {"benchmark tracking recovery", 60.0, [&run] { return tracking_recovery(run); }},
        {"held-out class separation", 120.0, [&run] { return heldout_separation(run); }},
        {"metric suite hand check", 5.0, [] { return metric_suite_hand_check(); }},
        {"motility grade bands", 5.0, [] { return motility_grade_bands(); }},
        {"parallel pipeline determinism", 120.0,
         [&run, &scratch] { return parallel_determinism(run, scratch); }},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criteria[i].fn();
        } catch (const std::exception& e) {
            outcome = fail(std::string("exception: ") + e.what());
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (outcome.pass && elapsed > criteria[i].budget_s) {
            outcome = fail("exceeded " + fmt(criteria[i].budget_s, 0) + " s budget (" +
                           fmt(elapsed, 2) + " s)");
        }
        std::printf("[%s] %zu. %s (%.2fs)%s%s\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].name, elapsed, outcome.detail.empty() ? "" : ": ",
                    outcome.detail.c_str());
        std::fflush(stdout);
        if (!outcome.pass) ++failures;
    }

    std::error_code ec;
    fs::remove_all(scratch, ec);

    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
