#include "foldover/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include <nlohmann/json.hpp>

#include "foldover/errors.hpp"

namespace foldover {

namespace {

int class_index(const std::string& label, const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == label) return static_cast<int>(i);
    throw UnknownLabelError("unknown class label: " + label);
}

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

} // namespace

ConfusionMatrix confusion(const std::vector<std::string>& pred,
                          const std::vector<std::string>& truth,
                          const std::vector<std::string>& class_names) {
    if (pred.size() != truth.size())
        throw LengthMismatchError("prediction and truth label counts differ");
    if (pred.empty()) throw LengthMismatchError("no samples to score");
    ConfusionMatrix cm;
    cm.class_names = class_names;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const int t = class_index(truth[i], class_names);
        const int p = class_index(pred[i], class_names);
        ++cm.counts[t][p];
    }
    return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
    const long total = cm.total();
    if (total <= 0) throw EmptyMatrixError("confusion matrix has no samples");

    MetricsReport r;
    r.class_names = cm.class_names;
    long trace = 0;
    for (int i = 0; i < 3; ++i) trace += cm.counts[i][i];
    r.accuracy = static_cast<double>(trace) / total;

    for (int i = 0; i < 3; ++i) {
        const double tp = static_cast<double>(cm.counts[i][i]);
        double row = 0, col = 0;
        for (int k = 0; k < 3; ++k) {
            row += cm.counts[i][k];
            col += cm.counts[k][i];
        }
        const double fn = row - tp;
        const double fp = col - tp;
        const double tn = static_cast<double>(total) - tp - fn - fp;
        r.precision[i] = ratio(tp, tp + fp);
        r.recall[i] = ratio(tp, tp + fn);
        r.specificity[i] = ratio(tn, tn + fp);
        r.f1[i] = ratio(2.0 * tp, 2.0 * tp + fp + fn);
    }
    r.macro_p = (r.precision[0] + r.precision[1] + r.precision[2]) / 3.0;
    r.macro_r = (r.recall[0] + r.recall[1] + r.recall[2]) / 3.0;
    r.macro_f1 = ratio(2.0 * r.macro_p * r.macro_r, r.macro_p + r.macro_r);
    double var = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double d = r.recall[i] - r.macro_r;
        var += d * d;
    }
    r.variance = var / 3.0;
    return r;
}

std::vector<std::string> nearest_centroid(const std::vector<std::vector<double>>& train,
                                          const std::vector<std::string>& train_labels,
                                          const std::vector<std::vector<double>>& test,
                                          const std::vector<std::string>& class_names) {
    if (train.size() != train_labels.size())
        throw LengthMismatchError("training vectors and labels differ in count");
    if (train.empty()) throw MissingClassError("no training samples");
    const std::size_t dims = train.front().size();
    for (const auto& v : train)
        if (v.size() != dims) throw InconsistentDimsError("training vector length mismatch");
    for (const auto& v : test)
        if (v.size() != dims) throw InconsistentDimsError("test vector length mismatch");

    const std::size_t nc = class_names.size();
    std::vector<long> per_class(nc, 0);
    std::vector<int> label_idx(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        label_idx[i] = class_index(train_labels[i], class_names);
        ++per_class[label_idx[i]];
    }
    for (std::size_t c = 0; c < nc; ++c)
        if (per_class[c] == 0)
            throw MissingClassError("no training samples for class: " + class_names[c]);

    // Training-set mean and population standard deviation per dimension.
    std::vector<double> mean(dims, 0.0), sd(dims, 0.0);
    for (const auto& v : train)
        for (std::size_t k = 0; k < dims; ++k) mean[k] += v[k];
    for (double& m : mean) m /= static_cast<double>(train.size());
    for (const auto& v : train)
        for (std::size_t k = 0; k < dims; ++k) {
            const double d = v[k] - mean[k];
            sd[k] += d * d;
        }
    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < dims; ++k) {
        sd[k] = std::sqrt(sd[k] / static_cast<double>(train.size()));
        if (sd[k] > 0.0) kept.push_back(k);
    }

    auto standardize = [&](const std::vector<double>& v) {
        std::vector<double> z(kept.size());
        for (std::size_t i = 0; i < kept.size(); ++i)
            z[i] = (v[kept[i]] - mean[kept[i]]) / sd[kept[i]];
        return z;
    };

    std::vector<std::vector<double>> centroid(nc, std::vector<double>(kept.size(), 0.0));
    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto z = standardize(train[i]);
        for (std::size_t k = 0; k < z.size(); ++k) centroid[label_idx[i]][k] += z[k];
    }
    for (std::size_t c = 0; c < nc; ++c)
        for (double& x : centroid[c]) x /= static_cast<double>(per_class[c]);

    std::vector<std::string> pred;
    pred.reserve(test.size());
    for (const auto& v : test) {
        const auto z = standardize(v);
        int best = 0;
        double best_d = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < z.size(); ++k) {
                const double d = z[k] - centroid[c][k];
                d2 += d * d;
            }
            if (c == 0 || d2 < best_d) {
                best = static_cast<int>(c);
                best_d = d2;
            }
        }
        pred.push_back(class_names[best]);
    }
    return pred;
}

void export_csv(std::vector<FeatureRow> rows, const std::map<int, std::string>& labels,
                const std::filesystem::path& path) {
    for (FeatureRow& r : rows) {
        const auto it = labels.find(r.track_id);
        r.label = it != labels.end() ? it->second : "";
    }
    write_features_csv(rows, path, true);
}

std::string metrics_to_text(const MetricsReport& report) {
    std::vector<std::pair<std::string, double>> cols;
    cols.emplace_back("Acc", report.accuracy);
    for (int i = 0; i < 3; ++i)
        cols.emplace_back("Pre" + std::to_string(i + 1), report.precision[i]);
    cols.emplace_back("Mac_P", report.macro_p);
    for (int i = 0; i < 3; ++i)
        cols.emplace_back("Rec" + std::to_string(i + 1), report.recall[i]);
    cols.emplace_back("Mac_R", report.macro_r);
    for (int i = 0; i < 3; ++i)
        cols.emplace_back("Spe" + std::to_string(i + 1), report.specificity[i]);
    for (int i = 0; i < 3; ++i)
        cols.emplace_back("F1-mea" + std::to_string(i + 1), report.f1[i]);
    cols.emplace_back("Mac_F1", report.macro_f1);
    cols.emplace_back("Var", report.variance);

    std::ostringstream head, vals;
    char buf[32];
    for (const auto& [name, value] : cols) {
        std::snprintf(buf, sizeof(buf), "%.4f", value);
        const std::size_t width = std::max(name.size(), std::strlen(buf)) + 2;
        head << std::string(width - name.size(), ' ') << name;
        vals << std::string(width - std::strlen(buf), ' ') << buf;
    }
    return head.str() + "\n" + vals.str() + "\n";
}

std::string metrics_to_json_string(const MetricsReport& report, const ConfusionMatrix* cm) {
    nlohmann::json j;
    j["class_names"] = report.class_names;
    j["accuracy"] = report.accuracy;
    j["precision"] = report.precision;
    j["recall"] = report.recall;
    j["specificity"] = report.specificity;
    j["f1"] = report.f1;
    j["macro_p"] = report.macro_p;
    j["macro_r"] = report.macro_r;
    j["macro_f1"] = report.macro_f1;
    j["variance"] = report.variance;
    if (cm) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : cm->counts) rows.push_back(row);
        j["confusion"] = rows;
    }
    return j.dump(2) + "\n";
}

} // namespace foldover
