#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "foldover/features.hpp"

namespace foldover {

inline const std::vector<std::string> kClassOrder = {"poor", "good", "excellent"};

struct ConfusionMatrix {
    std::array<std::array<long, 3>, 3> counts{}; // rows = true, cols = predicted
    std::vector<std::string> class_names;

    long total() const {
        long t = 0;
        for (const auto& row : counts)
            for (long v : row) t += v;
        return t;
    }
};

struct MetricsReport {
    std::vector<std::string> class_names;
    double accuracy = 0.0;
    std::array<double, 3> precision{}, recall{}, specificity{}, f1{};
    double macro_p = 0.0, macro_r = 0.0, macro_f1 = 0.0;
    double variance = 0.0; // mean squared deviation of recalls from macro_r
};

ConfusionMatrix confusion(const std::vector<std::string>& pred,
                          const std::vector<std::string>& truth,
                          const std::vector<std::string>& class_names = kClassOrder);

MetricsReport metrics(const ConfusionMatrix& cm);

// Deterministic baseline: z-score standardize with training statistics
// (zero-variance dimensions dropped), then assign each test vector the class
// with the nearest mean. Ties resolve to the earlier class in class_names.
std::vector<std::string> nearest_centroid(const std::vector<std::vector<double>>& train,
                                          const std::vector<std::string>& train_labels,
                                          const std::vector<std::vector<double>>& test,
                                          const std::vector<std::string>& class_names = kClassOrder);

// Feature CSV with a label column filled from track_id -> label.
void export_csv(std::vector<FeatureRow> rows, const std::map<int, std::string>& labels,
                const std::filesystem::path& path);

// Aligned table with Acc / Pre / Rec / Spe / F1 / macro / variance columns.
std::string metrics_to_text(const MetricsReport& report);

std::string metrics_to_json_string(const MetricsReport& report,
                                   const ConfusionMatrix* cm = nullptr);

} // namespace foldover
