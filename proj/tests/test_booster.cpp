#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "skybuffer/booster.hpp"
#include "skybuffer/logistic.hpp"
#include "skybuffer/metrics.hpp"
#include "skybuffer/model_io.hpp"
#include "skybuffer/rng.hpp"

using namespace skybuffer;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = -3,
                     double hi = 3) {
    Rng rng(seed);
    Matrix x(rows, cols);
    for (auto& v : x.data) v = rng.uniform(lo, hi);
    return x;
}

std::vector<int> noisy_labels_from_column(const Matrix& x, std::size_t col, double flip_rate,
                                          std::uint64_t seed) {
    Rng rng(seed);
    std::vector<int> y(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) {
        y[r] = x.at(r, col) > 0 ? 1 : 0;
        if (rng.uniform() < flip_rate) y[r] = 1 - y[r];
    }
    return y;
}

// Brute-force enumeration of every (feature, midpoint-threshold) root split:
// values sorted ascending with stable row order, prefix sums at run
// boundaries, the published gain formula, ties to the lowest feature then the
// lowest threshold.
struct OracleSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0;
    double gain = 0;
};

OracleSplit oracle_root_split(const Matrix& x, const std::vector<double>& g,
                              const std::vector<double>& h, const TrainConfig& cfg) {
    double g_total = 0, h_total = 0;
    for (std::size_t r = 0; r < x.rows; ++r) {
        g_total += g[r];
        h_total += h[r];
    }
    OracleSplit best;
    for (std::size_t f = 0; f < x.cols; ++f) {
        std::vector<std::pair<double, std::size_t>> vals;
        for (std::size_t r = 0; r < x.rows; ++r) vals.emplace_back(x.at(r, f), r);
        std::stable_sort(vals.begin(), vals.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        double gl = 0, hl = 0;
        for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
            gl += g[vals[k].second];
            hl += h[vals[k].second];
            if (vals[k].first == vals[k + 1].first) continue;
            if (hl < cfg.min_child_hessian || h_total - hl < cfg.min_child_hessian) continue;
            const double thr = vals[k].first + (vals[k + 1].first - vals[k].first) / 2.0;
            if (!(thr > vals[k].first)) continue;
            const double gain =
                split_gain(gl, hl, g_total - gl, h_total - hl, cfg.l2_reg, cfg.min_split_gain);
            if (gain > best.gain && gain > 0)
                best = {true, static_cast<int>(f), thr, gain};
        }
    }
    return best;
}

}  // namespace

TEST_CASE("a depth-one tree separates one-dimensional data") {
    Matrix x(10, 1);
    std::vector<int> y(10);
    for (int i = 0; i < 10; ++i) {
        x.at(static_cast<std::size_t>(i), 0) = i < 5 ? -(i + 1.0) : (i - 4.0);
        y[static_cast<std::size_t>(i)] = i < 5 ? 0 : 1;
    }
    TrainConfig cfg;
    cfg.n_trees = 1;
    cfg.max_depth = 1;
    cfg.learning_rate = 1.0;
    cfg.n_bins = 0;
    cfg.min_child_hessian = 0;
    const auto model = train_booster(x, y, cfg);
    const auto p = predict_proba(model, x);
    for (int i = 0; i < 10; ++i) CHECK((p[static_cast<std::size_t>(i)] >= 0.5) == (y[static_cast<std::size_t>(i)] == 1));

    // The root split must agree with the exhaustive enumeration.
    REQUIRE(model.trees.size() == 1);
    const auto& root = model.trees[0].nodes[0];
    REQUIRE_FALSE(root.leaf);
    std::vector<double> g(10), h(10);
    const double p0 = sigmoid(model.base_score);
    for (std::size_t i = 0; i < 10; ++i) {
        g[i] = p0 - y[i];
        h[i] = p0 * (1 - p0);
    }
    const auto oracle = oracle_root_split(x, g, h, cfg);
    REQUIRE(oracle.found);
    CHECK(root.feature == oracle.feature);
    CHECK(root.threshold == oracle.threshold);
}

TEST_CASE("an empty ensemble predicts the weighted base rate") {
    Matrix x = random_matrix(10, 3, 1);
    std::vector<int> y = {1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
    TrainConfig cfg;
    cfg.n_trees = 0;
    const auto model = train_booster(x, y, cfg);
    const auto p = predict_proba(model, x);
    for (double v : p) CHECK_THAT(v, Catch::Matchers::WithinAbs(0.4, 1e-12));

    SECTION("the positive-class weight shifts the prior") {
        cfg.positive_class_weight = 1.5;  // 6 effective positives vs 6 negatives
        const auto weighted = train_booster(x, y, cfg);
        CHECK_THAT(sigmoid(weighted.base_score), Catch::Matchers::WithinAbs(0.5, 1e-12));
    }
}

TEST_CASE("leaf weights follow -G/(H + lambda) scaled by the learning rate") {
    CHECK_THAT(leaf_weight(-2, 4, 1, 1.0), Catch::Matchers::WithinAbs(0.4, 1e-15));
    CHECK_THAT(leaf_weight(-2, 4, 1, 0.1), Catch::Matchers::WithinAbs(0.04, 1e-15));
    CHECK_THAT(leaf_weight(3, 2, 0, 1.0), Catch::Matchers::WithinAbs(-1.5, 1e-15));
}

TEST_CASE("training loss never increases across 200 iterations") {
    const Matrix x = random_matrix(400, 6, 21);
    const auto y = noisy_labels_from_column(x, 2, 0.15, 22);
    TrainConfig cfg;
    cfg.n_trees = 200;
    cfg.max_depth = 4;
    cfg.learning_rate = 0.1;
    cfg.positive_class_weight = 1.7;
    TrainTrace trace;
    train_booster(x, y, cfg, {}, &trace);
    REQUIRE(trace.loss.size() == 201);
    for (std::size_t i = 1; i < trace.loss.size(); ++i)
        CHECK(trace.loss[i] <= trace.loss[i - 1] + 1e-12);
}

TEST_CASE("swapping classes mirrors every probability") {
    const Matrix x = random_matrix(150, 4, 31);
    const auto y = noisy_labels_from_column(x, 0, 0.1, 32);
    std::vector<int> y_swapped(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) y_swapped[i] = 1 - y[i];
    TrainConfig cfg;
    cfg.n_trees = 40;
    cfg.max_depth = 3;
    cfg.n_bins = 0;
    const auto a = predict_proba(train_booster(x, y, cfg), x);
    const auto b = predict_proba(train_booster(x, y_swapped, cfg), x);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK_THAT(a[i], Catch::Matchers::WithinAbs(1.0 - b[i], 1e-9));
}

TEST_CASE("exact-greedy root splits equal brute-force enumeration") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        Rng rng(seed);
        const auto rows = static_cast<std::size_t>(rng.uniform_int(20, 200));
        const auto cols = static_cast<std::size_t>(rng.uniform_int(2, 8));
        Matrix x = random_matrix(rows, cols, seed + 1);
        // Duplicate some values so tie runs occur.
        for (auto& v : x.data)
            if (rng.uniform() < 0.3) v = std::round(v);
        std::vector<int> y(rows);
        for (auto& v : y) v = rng.uniform() < 0.45 ? 1 : 0;
        if (std::count(y.begin(), y.end(), 1) == 0) y[0] = 1;
        if (std::count(y.begin(), y.end(), 0) == 0) y[1] = 0;

        TrainConfig cfg;
        cfg.n_trees = 1;
        cfg.max_depth = 1;
        cfg.n_bins = 0;
        cfg.min_child_hessian = 0;
        const auto model = train_booster(x, y, cfg);

        std::vector<double> g(rows), h(rows);
        const double p0 = sigmoid(model.base_score);
        for (std::size_t i = 0; i < rows; ++i) {
            g[i] = p0 - y[i];
            h[i] = p0 * (1 - p0);
        }
        const auto oracle = oracle_root_split(x, g, h, cfg);
        const auto& root = model.trees.at(0).nodes.at(0);
        REQUIRE(oracle.found == !root.leaf);
        if (oracle.found) {
            CHECK(root.feature == oracle.feature);
            CHECK(root.threshold == oracle.threshold);
        }
    }
}

TEST_CASE("the margin gradient matches finite differences") {
    Rng rng(55);
    for (int i = 0; i < 20; ++i) {
        const double z = rng.uniform(-4, 4);
        const int y = rng.uniform() < 0.5 ? 1 : 0;
        const double w = rng.uniform(0.5, 3);
        auto loss = [&](double margin) {
            const double p = sigmoid(margin);
            return w * (y ? -std::log(p) : -std::log(1 - p));
        };
        const double eps = 1e-5;
        const double numeric = (loss(z + eps) - loss(z - eps)) / (2 * eps);
        const double analytic = w * (sigmoid(z) - y);
        CHECK_THAT(numeric, Catch::Matchers::WithinRel(analytic, 1e-6));
    }
}

TEST_CASE("degenerate inputs are rejected with clear messages") {
    Matrix x = random_matrix(10, 2, 7);
    std::vector<int> ones(10, 1);
    REQUIRE_THROWS_MATCHES(train_booster(x, ones, TrainConfig{}), DataError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("degenerate labels")));

    std::vector<int> y = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
    x.at(3, 1) = std::nan("");
    REQUIRE_THROWS_MATCHES(
        train_booster(x, y, TrainConfig{}), DataError,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("row 3") &&
                                        Catch::Matchers::ContainsSubstring("column 1")));

    const Matrix good = random_matrix(10, 2, 8);
    const auto model = train_booster(good, y, TrainConfig{});
    const Matrix wrong_width = random_matrix(5, 3, 9);
    REQUIRE_THROWS_AS(predict_proba(model, wrong_width), DataError);
}

TEST_CASE("probabilities stay inside the open unit interval") {
    Matrix x(4, 1);
    x.at(0, 0) = -1e6;
    x.at(1, 0) = -1;
    x.at(2, 0) = 1;
    x.at(3, 0) = 1e6;
    std::vector<int> y = {0, 0, 1, 1};
    TrainConfig cfg;
    cfg.n_trees = 20;
    cfg.max_depth = 2;
    cfg.learning_rate = 1.0;
    cfg.n_bins = 0;
    const auto model = train_booster(x, y, cfg);
    for (double p : predict_proba(model, x)) {
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
    CHECK(sigmoid(0) == 0.5);

    SECTION("even a saturating margin never reaches the endpoints") {
        BoosterModel huge;
        huge.base_score = 500;  // sigmoid(500) rounds to 1.0 in binary64
        huge.feature_names = {"f0"};
        Matrix one(1, 1);
        CHECK(predict_proba(huge, one)[0] < 1.0);
        huge.base_score = -500;
        CHECK(predict_proba(huge, one)[0] > 0.0);
    }
}

TEST_CASE("histogram mode stays close to exact mode on smooth data") {
    const Matrix x = random_matrix(500, 5, 77);
    const auto y = noisy_labels_from_column(x, 1, 0.1, 78);
    TrainConfig exact;
    exact.n_trees = 30;
    exact.max_depth = 3;
    exact.n_bins = 0;
    TrainConfig hist = exact;
    hist.n_bins = 64;
    const auto pe = predict_proba(train_booster(x, y, exact), x);
    const auto ph = predict_proba(train_booster(x, y, hist), x);
    CHECK_THAT(roc_auc(pe, y), Catch::Matchers::WithinAbs(roc_auc(ph, y), 0.02));
}

TEST_CASE("serialized models round-trip bit for bit") {
    const Matrix x = random_matrix(200, 5, 91);
    const auto y = noisy_labels_from_column(x, 3, 0.2, 92);
    TrainConfig cfg;
    cfg.n_trees = 25;
    cfg.max_depth = 4;
    const auto model = train_booster(x, y, cfg);

    const auto text = serialize_model(model);
    const auto loaded = deserialize_model(text);
    const Matrix probe = random_matrix(100, 5, 93);
    const auto p1 = predict_proba(model, probe);
    const auto p2 = predict_proba(loaded, probe);
    for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == p2[i]);
    CHECK(loaded.trees.size() == model.trees.size());
    CHECK(loaded.base_score == model.base_score);
    CHECK(loaded.feature_names == model.feature_names);
    CHECK(serialize_model(loaded) == text);

    SECTION("identical runs serialize identically") {
        const auto again = serialize_model(train_booster(x, y, cfg));
        CHECK(again == text);
    }
    SECTION("version and truncation failures") {
        auto tampered = text;
        tampered.replace(tampered.find("\"1\""), 3, "\"2\"");
        REQUIRE_THROWS_AS(deserialize_model(tampered), SchemaError);
        REQUIRE_THROWS_AS(deserialize_model(text.substr(0, text.size() / 2)), SchemaError);
    }
}

TEST_CASE("logistic baseline fits the base rate with no signal") {
    Matrix x(40, 2);  // all zeros
    std::vector<int> y(40, 0);
    for (int i = 0; i < 10; ++i) y[static_cast<std::size_t>(i)] = 1;
    const auto model = train_logistic_baseline(x, y, 0.0, 4000, 0.5);
    CHECK(model.weights[0] == 0);
    CHECK(model.weights[1] == 0);
    CHECK_THAT(model.intercept, Catch::Matchers::WithinAbs(std::log(0.25 / 0.75), 1e-6));
    for (std::size_t i = 1; i < model.loss_trace.size(); ++i)
        CHECK(model.loss_trace[i] <= model.loss_trace[i - 1]);
}

TEST_CASE("logistic baseline ranks separable data perfectly") {
    Matrix x(30, 1);
    std::vector<int> y(30);
    Rng rng(44);
    for (std::size_t i = 0; i < 30; ++i) {
        const double v = rng.uniform(-2, 2);
        x.at(i, 0) = v;
        y[i] = v > 0 ? 1 : 0;
    }
    if (std::count(y.begin(), y.end(), 1) == 0) { x.at(0, 0) = 1; y[0] = 1; }
    if (std::count(y.begin(), y.end(), 0) == 0) { x.at(1, 0) = -1; y[1] = 0; }
    const auto model = train_logistic_baseline(x, y, 1e-4, 500, 0.5);
    CHECK(roc_auc(predict_linear(model, x), y) == 1.0);
}

TEST_CASE("overwhelming regularization drives weights to zero") {
    const Matrix x = random_matrix(60, 3, 61, -1, 1);
    auto y = noisy_labels_from_column(x, 0, 0.0, 62);
    const auto model = train_logistic_baseline(x, y, 1e6, 300, 0.5);
    for (double w : model.weights) CHECK(std::abs(w) < 1e-3);
}
