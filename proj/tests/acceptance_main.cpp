// Acceptance harness: one line per criterion, nonzero exit when any fails.
// Every tolerance is pinned here, in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "pipeline_fixture.hpp"
#include "skybuffer/model_io.hpp"
#include "skybuffer/report.hpp"
#include "test_util.hpp"

using namespace skybuffer;

namespace {

int g_failures = 0;

void criterion(const std::string& name, const std::function<bool(std::string&)>& body) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %-22s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), secs,
                detail.empty() ? "" : " ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

// --------------------------------------------------------------------------
// Label-formula oracle: labels computed with the generator's true buffers
// must equal the hidden truth on every eligible leg of a 10,000-flight
// network, inside ten seconds.
bool label_formula_oracle(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    SynthConfig cfg;
    cfg.n_tails = 2000;
    cfg.legs_per_tail = 5;
    cfg.n_airports = 12;
    cfg.n_carriers = 4;
    cfg.n_days = 5;
    cfg.seed = 7;
    const auto synth = generate_network(cfg);
    if (synth.flights.size() != 10000) {
        detail = "expected 10000 flights, got " + std::to_string(synth.flights.size());
        return false;
    }

    auto cleaned = clean_flights(synth.flights);
    const auto chained = chain_rotations(cleaned.records);

    BufferTable table;
    for (const auto& [pair, buffer] : synth.pair_buffers)
        table.pairs[pair] = BufferStats{pair.first, pair.second, buffer, table.floor,
                                        BufferStats::Source::kPair};
    const auto labels = label_delay_absorbed(cleaned.records, chained.links, table);

    std::map<std::string, bool> label_by_key;
    for (const auto& lab : labels) {
        const auto& link = chained.links[static_cast<std::size_t>(lab.link_index)];
        label_by_key[flight_key(cleaned.records[static_cast<std::size_t>(link.curr_index)])] =
            lab.absorbed;
    }

    std::int64_t eligible = 0, matched = 0;
    for (const auto& t : synth.truth) {
        if (!t.eligible) continue;
        ++eligible;
        const auto it = label_by_key.find(t.key);
        if (it != label_by_key.end() && it->second == t.absorbed_truth) ++matched;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    detail = std::to_string(matched) + "/" + std::to_string(eligible) + " eligible legs, " +
             std::to_string(labels.size()) + " labels";
    return eligible > 0 && matched == eligible && secs < 10.0;
}

// Rotation oracle: the chain matches the quadratic definition on 20 random
// datasets of 500 flights.
bool rotation_oracle(std::string& detail) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto flights = testutil::random_flights(500, 1000 + seed);
        const auto out = chain_rotations(flights);
        if (!verify_chain(flights, out.links)) {
            detail = "mismatch at seed " + std::to_string(seed);
            return false;
        }
        if (out.links.size() + static_cast<std::size_t>(out.unchained) != flights.size()) {
            detail = "link accounting broke at seed " + std::to_string(seed);
            return false;
        }
    }
    detail = "20 datasets x 500 flights";
    return true;
}

// Metric fidelity: the pairwise AUC example, the published F1 row, and exact
// confusion-consistency of 100 random reports.
bool metric_fidelity(std::string& detail) {
    const double auc = roc_auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1});
    if (std::abs(auc - 0.75) > 1e-12) {
        detail = "AUC example gave " + std::to_string(auc);
        return false;
    }
    const double f1 = f_beta(0.8218, 0.6697, 1.0);
    if (std::abs(f1 - 0.7380) > 1e-3) {
        detail = "F1 row gave " + std::to_string(f1);
        return false;
    }
    Rng rng(404);
    for (int i = 0; i < 100; ++i) {
        const int n = static_cast<int>(rng.uniform_int(5, 300));
        std::vector<double> scores;
        std::vector<int> labels;
        for (int k = 0; k < n; ++k) {
            scores.push_back(rng.uniform());
            labels.push_back(rng.uniform() < 0.35 ? 1 : 0);
        }
        const auto r = compute_metrics(scores, labels, rng.uniform(0.1, 0.9));
        const auto& c = r.confusion;
        if (r.accuracy != static_cast<double>(c.tn + c.tp) / static_cast<double>(c.total())) {
            detail = "accuracy mismatch at report " + std::to_string(i);
            return false;
        }
    }
    detail = "AUC=0.75, F1=0.7380, 100 reports exact";
    return true;
}

// Learner optimization: monotone loss over 200 rounds, exact-greedy root
// equality on 50 instances, and the analytic gradient against central
// differences.
bool learner_optimization(std::string& detail) {
    Rng data_rng(77);
    Matrix x(500, 6);
    for (auto& v : x.data) v = data_rng.uniform(-3, 3);
    std::vector<int> y(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) {
        y[r] = x.at(r, 2) + 0.5 * x.at(r, 4) > 0 ? 1 : 0;
        if (data_rng.uniform() < 0.15) y[r] = 1 - y[r];
    }
    TrainConfig cfg;
    cfg.n_trees = 200;
    cfg.max_depth = 4;
    cfg.learning_rate = 0.1;
    cfg.positive_class_weight = 1.5;
    TrainTrace trace;
    train_booster(x, y, cfg, {}, &trace);
    for (std::size_t i = 1; i < trace.loss.size(); ++i) {
        if (trace.loss[i] > trace.loss[i - 1] + 1e-12) {
            detail = "loss rose at step " + std::to_string(i);
            return false;
        }
    }

    for (int inst = 0; inst < 50; ++inst) {
        Rng rng(900 + static_cast<std::uint64_t>(inst));
        const auto rows = static_cast<std::size_t>(rng.uniform_int(10, 200));
        const auto cols = static_cast<std::size_t>(rng.uniform_int(1, 7));
        Matrix xi(rows, cols);
        for (auto& v : xi.data) {
            v = rng.uniform(-4, 4);
            if (rng.uniform() < 0.35) v = std::round(v);  // force tie runs
        }
        std::vector<int> yi(rows);
        for (auto& v : yi) v = rng.uniform() < 0.5 ? 1 : 0;
        bool has0 = false, has1 = false;
        for (int v : yi) (v ? has1 : has0) = true;
        if (!has0) yi[0] = 0;
        if (!has1) yi[rows > 1 ? 1 : 0] = 1;

        TrainConfig exact;
        exact.n_trees = 1;
        exact.max_depth = 1;
        exact.n_bins = 0;
        exact.min_child_hessian = 0;
        const auto model = train_booster(xi, yi, exact);

        // Independent enumeration of every (feature, midpoint) candidate.
        const double p0 = sigmoid(model.base_score);
        double g_total = 0, h_total = 0;
        std::vector<double> g(rows), h(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            g[r] = p0 - yi[r];
            h[r] = p0 * (1 - p0);
            g_total += g[r];
            h_total += h[r];
        }
        bool found = false;
        int best_f = -1;
        double best_thr = 0, best_gain = 0;
        for (std::size_t f = 0; f < cols; ++f) {
            std::vector<std::pair<double, std::size_t>> vals;
            for (std::size_t r = 0; r < rows; ++r) vals.emplace_back(xi.at(r, f), r);
            std::stable_sort(vals.begin(), vals.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            double gl = 0, hl = 0;
            for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
                gl += g[vals[k].second];
                hl += h[vals[k].second];
                if (vals[k].first == vals[k + 1].first) continue;
                const double thr = vals[k].first + (vals[k + 1].first - vals[k].first) / 2.0;
                if (!(thr > vals[k].first)) continue;
                const double gain =
                    split_gain(gl, hl, g_total - gl, h_total - hl, exact.l2_reg,
                               exact.min_split_gain);
                if (gain > best_gain && gain > 0) {
                    found = true;
                    best_f = static_cast<int>(f);
                    best_thr = thr;
                    best_gain = gain;
                }
            }
        }
        const auto& root = model.trees.at(0).nodes.at(0);
        if (found == root.leaf ||
            (found && (root.feature != best_f || root.threshold != best_thr))) {
            detail = "root split mismatch at instance " + std::to_string(inst);
            return false;
        }
    }

    Rng grad_rng(505);
    for (int i = 0; i < 20; ++i) {
        const double z = grad_rng.uniform(-4, 4);
        const int yy = grad_rng.uniform() < 0.5 ? 1 : 0;
        const double w = grad_rng.uniform(0.5, 3);
        auto loss = [&](double margin) {
            const double p = sigmoid(margin);
            return w * (yy ? -std::log(p) : -std::log(1 - p));
        };
        const double eps = 1e-5;
        const double numeric = (loss(z + eps) - loss(z - eps)) / (2 * eps);
        const double analytic = w * (sigmoid(z) - yy);
        if (std::abs(numeric - analytic) > 1e-6 * std::abs(analytic)) {
            detail = "gradient check failed at point " + std::to_string(i);
            return false;
        }
    }
    detail = "200 rounds monotone, 50 root splits exact, gradient check ok";
    return true;
}

// Threshold tuner: grid argmax equals the exhaustive midpoint scan within one
// grid step on 100 random sets of size <= 50 (scores on a 0.02 lattice so
// every optimal region is wider than the grid).
bool threshold_tuner(std::string& detail) {
    Rng rng(606);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(4, 50));
        std::vector<double> scores;
        std::vector<int> labels;
        for (int i = 0; i < n; ++i) {
            scores.push_back(0.02 * static_cast<double>(rng.uniform_int(1, 49)));
            labels.push_back(rng.uniform() < 0.5 ? 1 : 0);
        }
        labels[0] = 1;
        bool has0 = false;
        for (int v : labels) has0 = has0 || v == 0;
        if (!has0) labels[n > 1 ? 1 : 0] = 0;
        const double beta = rng.uniform() < 0.5 ? 1.0 : 2.0;

        std::vector<double> distinct = scores;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        std::vector<double> cuts = {distinct.front() - 1.0};
        for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
            cuts.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
        cuts.push_back(distinct.back() + 1.0);
        double exact_best = -1, exact_thr = 0;
        for (double t : cuts) {
            const auto c = confusion_at(scores, labels, t);
            const double precision = (c.tp + c.fp) == 0
                                         ? 0.0
                                         : static_cast<double>(c.tp) /
                                               static_cast<double>(c.tp + c.fp);
            const double recall = (c.tp + c.fn) == 0
                                      ? 0.0
                                      : static_cast<double>(c.tp) /
                                            static_cast<double>(c.tp + c.fn);
            const double f = f_beta(precision, recall, beta);
            if (f > exact_best) {
                exact_best = f;
                exact_thr = t;
            }
        }
        const auto tuned = tune_threshold(scores, labels, beta);
        if (std::abs(tuned.f_beta - exact_best) > 1e-12) {
            detail = "objective mismatch at trial " + std::to_string(trial);
            return false;
        }
        const auto c_grid = confusion_at(scores, labels, tuned.threshold);
        const auto c_exact = confusion_at(scores, labels, exact_thr);
        if (c_grid.tp != c_exact.tp || c_grid.fp != c_exact.fp) {
            detail = "grid landed outside the optimal region at trial " + std::to_string(trial);
            return false;
        }
    }
    detail = "100 sets, grid equals exhaustive scan";
    return true;
}

// Two-stage lift: with absorption driving at least 40% of positive labels,
// the absorb-score model beats the identical model without it by >= 0.02
// mean AUC over five seeds, all inside two minutes.
bool two_stage_lift(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    double lift_sum = 0;
    double driven_min = 1.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto cfg = testutil::absorption_driven_config(seed);
        const auto run = testutil::prepare_run(cfg, seed);

        // Share of positive labels that would not be positive on their own
        // newly formed delay.
        std::int64_t positives = 0, driven = 0;
        for (const auto& t : run.synth.truth) {
            if (t.observed_dep_delay > kDepDelayThresholdMin) {
                ++positives;
                if (t.new_delay_min <= kDepDelayThresholdMin) ++driven;
            }
        }
        const double driven_frac =
            positives ? static_cast<double>(driven) / static_cast<double>(positives) : 0;
        driven_min = std::min(driven_min, driven_frac);

        StageConfig stage_cfg;
        const auto outputs = run_two_stage(run.dataset, run.split, stage_cfg);
        const double with_score = *outputs.stage2.test_at_half.roc_auc;
        const double without = *outputs.baselines->booster_test.roc_auc;
        lift_sum += with_score - without;
    }
    const double mean_lift = lift_sum / 5.0;
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char buf[160];
    std::snprintf(buf, sizeof buf, "mean lift %.4f, min driven share %.2f, %.1fs", mean_lift,
                  driven_min, secs);
    detail = buf;
    return driven_min >= 0.40 && mean_lift >= 0.02 && secs < 120.0;
}

// Stage I surrogate: out-of-fold AUC >= 0.99 on the deterministic weather
// rule, and >= 0.80 against the clean labels after 20% of training labels
// are flipped.
bool stage1_surrogate(std::string& detail) {
    const auto run = testutil::prepare_run(testutil::deterministic_rule_config(2024), 13);
    StageConfig cfg;
    cfg.stage1.n_bins = 0;  // exact splits; the rule boundary is sharp
    const auto s1 = run_stage1(run.dataset, run.split, cfg.stage1, cfg.beta);
    const double clean_auc = *s1.oof_at_half.roc_auc;

    // Flip 20% of the Stage I labels, retrain, score the flipped OOF
    // predictions against the original labels.
    auto noisy = run.dataset;
    Rng flip_rng(31337);
    for (auto& row : noisy.rows)
        if (row.stage1_label && flip_rng.uniform() < 0.20) row.stage1_label = 1 - *row.stage1_label;
    const auto s1_noisy = run_stage1(noisy, run.split, cfg.stage1, cfg.beta);

    std::vector<double> scores;
    std::vector<int> clean_labels;
    for (int r : run.split.train_indices) {
        const auto& original = run.dataset.rows[static_cast<std::size_t>(r)];
        const auto& flipped = noisy.rows[static_cast<std::size_t>(r)];
        if (!original.stage1_label || !flipped.stage1_label) continue;
        scores.push_back(s1_noisy.absorb_score[static_cast<std::size_t>(r)]);
        clean_labels.push_back(*original.stage1_label);
    }
    const double noisy_auc = roc_auc(scores, clean_labels);

    char buf[120];
    std::snprintf(buf, sizeof buf, "clean OOF AUC %.4f, noisy-label AUC %.4f", clean_auc,
                  noisy_auc);
    detail = buf;
    return clean_auc >= 0.99 && noisy_auc >= 0.80;
}

// No-leakage: the assertion must hold on a fresh pipeline run and must fire
// when fold bookkeeping is corrupted.
bool no_leakage(std::string& detail) {
    const auto run = testutil::prepare_run(testutil::absorption_driven_config(99, 150), 21);
    StageConfig cfg;
    cfg.stage1.n_trees = 25;
    cfg.stage2.n_trees = 12;
    const auto outputs = run_two_stage(run.dataset, run.split, cfg);
    assert_no_leakage(run.split, outputs.stage1.oof_fold_of_row);
    assert_no_leakage(run.split, outputs.stage2.oof_fold_of_row);

    auto corrupted = outputs.stage2.oof_fold_of_row;
    bool fired = false;
    for (std::size_t f = 0; f < run.split.folds.size() && !fired; ++f) {
        if (run.split.folds[f].train.empty()) continue;
        corrupted[static_cast<std::size_t>(run.split.folds[f].train.front())] =
            static_cast<int>(f);
        try {
            assert_no_leakage(run.split, corrupted);
        } catch (const DataError&) {
            fired = true;
        }
    }
    detail = "assertions hold; corruption detected";
    return fired;
}

// Determinism: two identical pipeline runs serialize byte-identical models,
// scores, and evaluation documents.
bool determinism(std::string& detail) {
    const auto cfg = testutil::absorption_driven_config(55, 200);
    StageConfig stage_cfg;
    stage_cfg.stage1.n_trees = 40;
    stage_cfg.stage2.n_trees = 20;

    const auto run1 = testutil::prepare_run(cfg, 17);
    const auto out1 = run_two_stage(run1.dataset, run1.split, stage_cfg);
    const auto run2 = testutil::prepare_run(cfg, 17);
    const auto out2 = run_two_stage(run2.dataset, run2.split, stage_cfg);

    const bool models = serialize_model(out1.stage1.model) == serialize_model(out2.stage1.model) &&
                        serialize_model(out1.stage2.model) == serialize_model(out2.stage2.model);
    const bool scores = out1.stage1.absorb_score == out2.stage1.absorb_score &&
                        out1.stage2.score == out2.stage2.score;
    const bool reports = stage_outputs_to_json(run1.dataset, out1, stage_cfg.beta) ==
                         stage_outputs_to_json(run2.dataset, out2, stage_cfg.beta);
    detail = std::string("models ") + (models ? "ok" : "differ") + ", scores " +
             (scores ? "ok" : "differ") + ", reports " + (reports ? "ok" : "differ");
    return models && scores && reports;
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");
    criterion("label-formula-oracle", label_formula_oracle);
    criterion("rotation-oracle", rotation_oracle);
    criterion("metric-fidelity", metric_fidelity);
    criterion("learner-optimization", learner_optimization);
    criterion("threshold-tuner", threshold_tuner);
    criterion("two-stage-lift", two_stage_lift);
    criterion("stage1-surrogate", stage1_surrogate);
    criterion("no-leakage", no_leakage);
    criterion("determinism", determinism);
    if (g_failures) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
