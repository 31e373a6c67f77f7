#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "foldover/classify.hpp"
#include "foldover/rng.hpp"
#include "test_util.hpp"

using namespace foldover;
using testutil::TempDir;

namespace {

ConfusionMatrix matrix_from(const std::array<std::array<long, 3>, 3>& counts) {
    ConfusionMatrix cm;
    cm.counts = counts;
    cm.class_names = kClassOrder;
    return cm;
}

} // namespace

TEST_CASE("confusion counts land at (true row, predicted column)") {
    const std::vector<std::string> truth = {"poor", "poor", "good", "excellent", "good"};
    const std::vector<std::string> pred = {"poor", "good", "good", "excellent", "poor"};
    const ConfusionMatrix cm = confusion(pred, truth);
    CHECK(cm.counts[0][0] == 1);
    CHECK(cm.counts[0][1] == 1);
    CHECK(cm.counts[1][0] == 1);
    CHECK(cm.counts[1][1] == 1);
    CHECK(cm.counts[2][2] == 1);
    CHECK(cm.total() == 5);
}

TEST_CASE("identical prediction fills only the diagonal") {
    std::vector<std::string> labels;
    for (int i = 0; i < 10; ++i) labels.push_back(kClassOrder[i % 3]);
    const ConfusionMatrix cm = confusion(labels, labels);
    long diag = 0;
    for (int i = 0; i < 3; ++i) diag += cm.counts[i][i];
    CHECK(diag == 10);
    CHECK(cm.total() == 10);
}

TEST_CASE("a single predicted class fills one column") {
    const std::vector<std::string> truth = {"poor", "good", "excellent", "good"};
    const std::vector<std::string> pred(4, "poor");
    const ConfusionMatrix cm = confusion(pred, truth);
    for (int t = 0; t < 3; ++t) {
        CHECK(cm.counts[t][1] == 0);
        CHECK(cm.counts[t][2] == 0);
    }
    CHECK(cm.counts[0][0] + cm.counts[1][0] + cm.counts[2][0] == 4);
}

TEST_CASE("confusion input validation") {
    CHECK_THROWS_AS(confusion({"poor"}, {"poor", "good"}), LengthMismatchError);
    CHECK_THROWS_AS(confusion({}, {}), LengthMismatchError);
    CHECK_THROWS_AS(confusion({"fast"}, {"poor"}), UnknownLabelError);
    CHECK_THROWS_AS(confusion({"poor"}, {"slow"}), UnknownLabelError);
}

TEST_CASE("metric suite matches an independent hand derivation") {
    const MetricsReport r = metrics(matrix_from({{{8, 2, 0}, {1, 6, 1}, {0, 2, 4}}}));

    // One-vs-rest tallies recomputed from scratch: row sums give the actual
    // class sizes, column sums the predicted ones.
    const double tol = 1e-12;
    CHECK(std::abs(r.accuracy - 0.75) < tol);

    CHECK(std::abs(r.precision[0] - 8.0 / 9.0) < tol);
    CHECK(std::abs(r.precision[1] - 6.0 / 10.0) < tol);
    CHECK(std::abs(r.precision[2] - 4.0 / 5.0) < tol);

    CHECK(std::abs(r.recall[0] - 8.0 / 10.0) < tol);
    CHECK(std::abs(r.recall[1] - 6.0 / 8.0) < tol);
    CHECK(std::abs(r.recall[2] - 4.0 / 6.0) < tol);

    CHECK(std::abs(r.specificity[0] - 13.0 / 14.0) < tol);
    CHECK(std::abs(r.specificity[1] - 12.0 / 16.0) < tol);
    CHECK(std::abs(r.specificity[2] - 17.0 / 18.0) < tol);

    CHECK(std::abs(r.f1[0] - 16.0 / 19.0) < tol);
    CHECK(std::abs(r.f1[1] - 12.0 / 18.0) < tol);
    CHECK(std::abs(r.f1[2] - 8.0 / 11.0) < tol);

    const double mp = (8.0 / 9.0 + 6.0 / 10.0 + 4.0 / 5.0) / 3.0;
    const double mr = (8.0 / 10.0 + 6.0 / 8.0 + 4.0 / 6.0) / 3.0;
    CHECK(std::abs(r.macro_p - mp) < tol);
    CHECK(std::abs(r.macro_r - mr) < tol);
    CHECK(std::abs(r.macro_f1 - 2.0 * mp * mr / (mp + mr)) < tol);

    const double var = ((8.0 / 10.0 - mr) * (8.0 / 10.0 - mr) +
                        (6.0 / 8.0 - mr) * (6.0 / 8.0 - mr) +
                        (4.0 / 6.0 - mr) * (4.0 / 6.0 - mr)) /
                       3.0;
    CHECK(std::abs(r.variance - var) < tol);
}

TEST_CASE("a perfect diagonal scores ones across the board") {
    const MetricsReport r = metrics(matrix_from({{{488, 0, 0}, {0, 124, 0}, {0, 0, 75}}}));
    CHECK(r.accuracy == doctest::Approx(1.0).epsilon(1e-15));
    for (int i = 0; i < 3; ++i) {
        CHECK(r.precision[i] == doctest::Approx(1.0));
        CHECK(r.recall[i] == doctest::Approx(1.0));
        CHECK(r.f1[i] == doctest::Approx(1.0));
        CHECK(r.specificity[i] == doctest::Approx(1.0));
    }
    CHECK(r.variance == doctest::Approx(0.0));
    CHECK(r.macro_f1 == doctest::Approx(1.0));
}

TEST_CASE("an unpredicted class takes precision zero") {
    // Nothing ever lands in column 2: 0/0 precision becomes 0.
    const MetricsReport r = metrics(matrix_from({{{5, 5, 0}, {2, 8, 0}, {1, 9, 0}}}));
    CHECK(r.precision[2] == 0.0);
    CHECK(r.recall[2] == 0.0);
    CHECK(r.f1[2] == 0.0);
}

TEST_CASE("metrics rejects an empty matrix") {
    CHECK_THROWS_AS(metrics(matrix_from({{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}})),
                    EmptyMatrixError);
}

TEST_CASE("self-scoring any covering labelling is perfect") {
    SplitMix64 rng(404);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::string> labels = {"poor", "good", "excellent"};
        const int extra = rng.uniform_int(0, 30);
        for (int i = 0; i < extra; ++i) labels.push_back(kClassOrder[rng.uniform_int(0, 2)]);
        const MetricsReport r = metrics(confusion(labels, labels));
        CHECK(r.accuracy == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(r.variance == doctest::Approx(0.0));
    }
}

TEST_CASE("sample order does not affect the matrix or metrics") {
    SplitMix64 rng(405);
    std::vector<std::string> truth, pred;
    for (int i = 0; i < 40; ++i) {
        truth.push_back(kClassOrder[rng.uniform_int(0, 2)]);
        pred.push_back(kClassOrder[rng.uniform_int(0, 2)]);
    }
    const ConfusionMatrix base = confusion(pred, truth);

    // Shuffle both lists with the same permutation.
    std::vector<std::size_t> order(truth.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_int(0, static_cast<int>(i) - 1)]);
    std::vector<std::string> truth2, pred2;
    for (std::size_t i : order) {
        truth2.push_back(truth[i]);
        pred2.push_back(pred[i]);
    }
    const ConfusionMatrix shuffled = confusion(pred2, truth2);
    CHECK(base.counts == shuffled.counts);

    const MetricsReport ra = metrics(base);
    const MetricsReport rb = metrics(shuffled);
    CHECK(ra.accuracy == rb.accuracy);
    CHECK(ra.macro_f1 == rb.macro_f1);
    CHECK(ra.variance == rb.variance);
}

TEST_CASE("macro f1 stays within bounds and zeroes with its factors") {
    SplitMix64 rng(406);
    for (int trial = 0; trial < 20; ++trial) {
        std::array<std::array<long, 3>, 3> counts{};
        for (auto& row : counts)
            for (auto& c : row) c = rng.uniform_int(0, 9);
        ConfusionMatrix cm = matrix_from(counts);
        if (cm.total() == 0) continue;
        const MetricsReport r = metrics(cm);
        CHECK(r.macro_f1 <= 1.0 + 1e-12);
        CHECK(r.macro_f1 >= 0.0);
        if (r.macro_p * r.macro_r == 0.0)
            CHECK(r.macro_f1 == 0.0);
        else
            CHECK(r.macro_f1 > 0.0);
    }
}

TEST_CASE("nearest centroid separates well-spread clusters") {
    const std::vector<std::vector<double>> train = {
        {-1.0, 0.0}, {1.0, 0.0}, {0.0, -1.0}, {0.0, 1.0},   // poor, mean (0, 0)
        {9.0, 10.0}, {11.0, 10.0}, {10.0, 9.0}, {10.0, 11.0}, // good, mean (10, 10)
        {59.0, 60.0}, {61.0, 60.0}, {60.0, 59.0}, {60.0, 61.0}, // excellent
    };
    const std::vector<std::string> labels = {
        "poor", "poor", "poor", "poor", "good", "good", "good", "good",
        "excellent", "excellent", "excellent", "excellent"};
    const auto pred = nearest_centroid(train, labels, {{1.0, 1.0}, {9.5, 10.5}, {70.0, 55.0}});
    REQUIRE(pred.size() == 3);
    CHECK(pred[0] == "poor");
    CHECK(pred[1] == "good");
    CHECK(pred[2] == "excellent");
}

TEST_CASE("equidistant points go to the earlier class") {
    const std::vector<std::vector<double>> train = {
        {-1.0}, {1.0},  // poor, mean 0
        {1.0}, {3.0},   // good, mean 2
        {7.0}, {9.0},   // excellent, mean 8
    };
    const std::vector<std::string> labels = {"poor", "poor", "good",
                                             "good", "excellent", "excellent"};
    const auto pred = nearest_centroid(train, labels, {{1.0}});
    REQUIRE(pred.size() == 1);
    CHECK(pred[0] == "poor");
}

TEST_CASE("constant dimensions are ignored instead of poisoning the distance") {
    const std::vector<std::vector<double>> train = {
        {0.0, 42.0}, {1.0, 42.0}, {4.0, 42.0}, {5.0, 42.0}, {9.0, 42.0}, {10.0, 42.0}};
    const std::vector<std::string> labels = {"poor", "poor", "good",
                                             "good", "excellent", "excellent"};
    const auto pred = nearest_centroid(train, labels, {{0.2, 42.0}, {9.8, -5.0}});
    REQUIRE(pred.size() == 2);
    CHECK(pred[0] == "poor");
    CHECK(pred[1] == "excellent"); // second dim carries no information at all
}

TEST_CASE("nearest centroid validates its inputs") {
    const std::vector<std::vector<double>> train = {{0.0}, {1.0}, {2.0}};
    SUBCASE("label count mismatch") {
        CHECK_THROWS_AS(nearest_centroid(train, {"poor", "good"}, {{0.0}}),
                        LengthMismatchError);
    }
    SUBCASE("missing class") {
        CHECK_THROWS_AS(nearest_centroid(train, {"poor", "good", "good"}, {{0.0}}),
                        MissingClassError);
    }
    SUBCASE("ragged training vectors") {
        CHECK_THROWS_AS(nearest_centroid({{0.0}, {1.0, 2.0}, {2.0}},
                                         {"poor", "good", "excellent"}, {{0.0}}),
                        InconsistentDimsError);
    }
    SUBCASE("test vector of the wrong width") {
        CHECK_THROWS_AS(nearest_centroid(train, {"poor", "good", "excellent"},
                                         {{0.0, 1.0}}),
                        InconsistentDimsError);
    }
}

TEST_CASE("labelled export writes nine rows for three tracks") {
    TempDir tmp("export");
    std::vector<FeatureRow> rows;
    for (int id : {1, 2, 3})
        for (Axis ax : {Axis::X, Axis::Y, Axis::Z})
            rows.push_back({id, ax, "", {1.0 * id, 2.0 * id}});
    const std::map<int, std::string> labels = {{1, "poor"}, {2, "good"}, {3, "excellent"}};
    export_csv(rows, labels, tmp / "f.csv");

    const auto back = read_features_csv(tmp / "f.csv");
    REQUIRE(back.size() == 9);
    CHECK(back[0].label == "poor");
    CHECK(back[3].label == "good");
    CHECK(back[8].label == "excellent");

    const std::string text = testutil::slurp(tmp / "f.csv");
    CHECK(std::count(text.begin(), text.end(), '\n') == 10); // header + 9 rows

    SUBCASE("round trip is byte stable") {
        std::map<int, std::string> relabel;
        for (const auto& r : back) relabel[r.track_id] = r.label;
        std::vector<FeatureRow> plain = back;
        export_csv(plain, relabel, tmp / "g.csv");
        CHECK(testutil::slurp(tmp / "g.csv") == text);
    }
}

TEST_CASE("empty export still carries a header") {
    TempDir tmp("exportempty");
    export_csv({}, {}, tmp / "empty.csv");
    const std::string text = testutil::slurp(tmp / "empty.csv");
    CHECK(text.rfind("track_id,axis,len", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
    CHECK(read_features_csv(tmp / "empty.csv").empty());
}

TEST_CASE("text report carries the full column set") {
    const MetricsReport r = metrics(matrix_from({{{8, 2, 0}, {1, 6, 1}, {0, 2, 4}}}));
    const std::string text = metrics_to_text(r);
    for (const char* col : {"Acc", "Pre1", "Pre2", "Pre3", "Mac_P", "Rec1", "Rec2",
                            "Rec3", "Mac_R", "Spe1", "Spe2", "Spe3", "F1-mea1",
                            "F1-mea2", "F1-mea3", "Mac_F1", "Var"})
        CHECK(text.find(col) != std::string::npos);
    CHECK(text.find("0.7500") != std::string::npos); // accuracy to 4 places
    // Two lines: headers and values.
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

TEST_CASE("json report parses and mirrors the numbers") {
    const ConfusionMatrix cm = matrix_from({{{8, 2, 0}, {1, 6, 1}, {0, 2, 4}}});
    const MetricsReport r = metrics(cm);
    const auto j = nlohmann::json::parse(metrics_to_json_string(r, &cm));
    CHECK(j.at("accuracy").get<double>() == doctest::Approx(0.75));
    CHECK(j.at("confusion").at(0).at(0).get<long>() == 8);
    CHECK(j.at("precision").at(1).get<double>() == doctest::Approx(0.6));
    CHECK(j.at("class_names").at(2).get<std::string>() == "excellent");
}
