#pragma once

// Two-stage orchestration: dataset assembly, stratified splitting, Stage I
// absorption training with out-of-fold scoring, Stage II departure-delay
// training with the absorption score injected, threshold tuning, baselines,
// and seeded random hyperparameter search.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "skybuffer/absorption.hpp"
#include "skybuffer/booster.hpp"
#include "skybuffer/features.hpp"
#include "skybuffer/ingest.hpp"
#include "skybuffer/logistic.hpp"
#include "skybuffer/metrics.hpp"
#include "skybuffer/records.hpp"
#include "skybuffer/rng.hpp"
#include "skybuffer/rotation.hpp"
#include "skybuffer/split.hpp"

namespace skybuffer {

inline constexpr double kDepDelayThresholdMin = 15;  // "delayed" means strictly later than this

struct RowMeta {
    std::string key;
    int flight_index = -1;
    int link_index = -1;  // -1 when the flight has no predecessor
    bool overnight = false;
    double prev_delay_min = 0;
    std::optional<int> stage1_label;  // DelayAbsorbed, present for the Stage I population
    int stage2_label = 0;             // departure more than 15 minutes late
};

struct Dataset {
    Matrix x;  // encoded features, absorb score NOT included
    std::vector<std::string> names;
    std::vector<RowMeta> rows;
};

// One row per flight; links and labels attach by index. Rows keep the flight
// order so matrices line up with any external per-flight series.
inline Dataset assemble_dataset(const std::vector<JoinedFlight>& flights,
                                const std::vector<RotationLink>& links,
                                const std::vector<AbsorptionLabel>& labels,
                                const EncoderState& enc) {
    std::vector<int> link_of(flights.size(), -1);
    for (std::size_t i = 0; i < links.size(); ++i)
        link_of[static_cast<std::size_t>(links[i].curr_index)] = static_cast<int>(i);
    std::vector<int> label_of_link(links.size(), -1);
    for (std::size_t i = 0; i < labels.size(); ++i)
        label_of_link[static_cast<std::size_t>(labels[i].link_index)] = static_cast<int>(i);

    Dataset ds;
    ds.names = feature_names(false);
    ds.x = Matrix(flights.size(), ds.names.size());
    ds.rows.resize(flights.size());
    for (std::size_t i = 0; i < flights.size(); ++i) {
        const auto& jf = flights[i];
        RowMeta& meta = ds.rows[i];
        meta.key = flight_key(jf.flight);
        meta.flight_index = static_cast<int>(i);
        meta.link_index = link_of[i];
        const RotationLink* link = meta.link_index >= 0
                                       ? &links[static_cast<std::size_t>(meta.link_index)]
                                       : nullptr;
        if (link) {
            meta.overnight = link->overnight;
            meta.prev_delay_min = link->prev_delay_min;
            const int lab = label_of_link[static_cast<std::size_t>(meta.link_index)];
            if (lab >= 0) meta.stage1_label = labels[static_cast<std::size_t>(lab)].absorbed ? 1 : 0;
        }
        meta.stage2_label = jf.flight.dep_delay_min.value_or(0.0) > kDepDelayThresholdMin ? 1 : 0;

        const auto vec = build_feature_vector(jf, link, std::nullopt, enc);
        for (std::size_t c = 0; c < vec.size(); ++c) ds.x.at(i, c) = vec[c];
    }
    return ds;
}

inline std::vector<int> stage2_labels(const Dataset& ds) {
    std::vector<int> y(ds.rows.size());
    for (std::size_t i = 0; i < ds.rows.size(); ++i) y[i] = ds.rows[i].stage2_label;
    return y;
}

namespace detail {

inline Matrix gather_rows(const Matrix& x, const std::vector<int>& rows) {
    Matrix out(rows.size(), x.cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t c = 0; c < x.cols; ++c)
            out.at(i, c) = x.at(static_cast<std::size_t>(rows[i]), c);
    return out;
}

template <typename T>
inline std::vector<T> gather(const std::vector<T>& v, const std::vector<int>& rows) {
    std::vector<T> out;
    out.reserve(rows.size());
    for (int r : rows) out.push_back(v[static_cast<std::size_t>(r)]);
    return out;
}

}  // namespace detail

// Every out-of-fold score must come from a fold whose training half excludes
// that row. Throws on any violation.
inline void assert_no_leakage(const SplitPlan& split, const std::vector<int>& oof_fold_of_row) {
    std::vector<std::unordered_set<int>> train_sets(split.folds.size()), val_sets(split.folds.size());
    for (std::size_t f = 0; f < split.folds.size(); ++f) {
        train_sets[f] = {split.folds[f].train.begin(), split.folds[f].train.end()};
        val_sets[f] = {split.folds[f].val.begin(), split.folds[f].val.end()};
    }
    for (std::size_t row = 0; row < oof_fold_of_row.size(); ++row) {
        const int f = oof_fold_of_row[row];
        if (f < 0) continue;
        if (train_sets[static_cast<std::size_t>(f)].count(static_cast<int>(row)))
            throw DataError("leakage: out-of-fold row appears in its fold's training set");
        if (!val_sets[static_cast<std::size_t>(f)].count(static_cast<int>(row)))
            throw DataError("leakage: out-of-fold row missing from its fold's validation set");
    }
}

struct Stage1Result {
    BoosterModel model;                  // trained on all Stage-I-eligible training rows
    std::vector<double> absorb_score;    // one per dataset row
    std::vector<int> oof_fold_of_row;    // fold that produced the score, -1 otherwise
    ThresholdResult tuned;
    EvalReport oof_at_half;    // out-of-fold scores at threshold 0.5
    EvalReport oof_at_tuned;
};

// Absorption defaults outside the Stage I population: a row with nothing to
// absorb scores 1.0; an unchained row scores 0.5 (its no-predecessor flag is
// already a feature). Overnight stays count as nothing to absorb.
inline double default_absorb_score(const RowMeta& meta) {
    if (meta.link_index < 0) return 0.5;
    return 1.0;
}

inline Stage1Result run_stage1(const Dataset& ds, const SplitPlan& split, const TrainConfig& cfg,
                               double beta) {
    std::vector<int> eligible(ds.rows.size(), 0);
    for (std::size_t i = 0; i < ds.rows.size(); ++i)
        eligible[i] = ds.rows[i].stage1_label.has_value() ? 1 : 0;

    Stage1Result res;
    res.absorb_score.assign(ds.rows.size(), 0.0);
    res.oof_fold_of_row.assign(ds.rows.size(), -1);
    for (std::size_t i = 0; i < ds.rows.size(); ++i)
        if (!eligible[i]) res.absorb_score[i] = default_absorb_score(ds.rows[i]);

    auto stage1_rows = [&](const std::vector<int>& rows) {
        std::vector<int> out;
        for (int r : rows)
            if (eligible[static_cast<std::size_t>(r)]) out.push_back(r);
        return out;
    };
    auto stage1_y = [&](const std::vector<int>& rows) {
        std::vector<int> y;
        for (int r : rows) y.push_back(*ds.rows[static_cast<std::size_t>(r)].stage1_label);
        return y;
    };

    const std::vector<int> train_rows = stage1_rows(split.train_indices);
    if (train_rows.empty()) throw DataError("empty Stage I population");

    // Out-of-fold scores for every eligible training row.
    for (std::size_t f = 0; f < split.folds.size(); ++f) {
        const std::vector<int> fit_rows = stage1_rows(split.folds[f].train);
        const std::vector<int> score_rows = stage1_rows(split.folds[f].val);
        if (fit_rows.empty() || score_rows.empty()) continue;
        const BoosterModel fold_model = train_booster(detail::gather_rows(ds.x, fit_rows),
                                                      stage1_y(fit_rows), cfg, ds.names);
        const auto scores = predict_proba(fold_model, detail::gather_rows(ds.x, score_rows));
        for (std::size_t k = 0; k < score_rows.size(); ++k) {
            res.absorb_score[static_cast<std::size_t>(score_rows[k])] = scores[k];
            res.oof_fold_of_row[static_cast<std::size_t>(score_rows[k])] = static_cast<int>(f);
        }
    }
    assert_no_leakage(split, res.oof_fold_of_row);

    // Final Stage I model on all eligible training rows scores the test rows.
    res.model = train_booster(detail::gather_rows(ds.x, train_rows), stage1_y(train_rows), cfg,
                              ds.names);
    const std::vector<int> test_rows = stage1_rows(split.test_indices);
    if (!test_rows.empty()) {
        const auto scores = predict_proba(res.model, detail::gather_rows(ds.x, test_rows));
        for (std::size_t k = 0; k < test_rows.size(); ++k)
            res.absorb_score[static_cast<std::size_t>(test_rows[k])] = scores[k];
    }

    std::vector<double> oof_scores;
    std::vector<int> oof_labels;
    for (int r : train_rows) {
        oof_scores.push_back(res.absorb_score[static_cast<std::size_t>(r)]);
        oof_labels.push_back(*ds.rows[static_cast<std::size_t>(r)].stage1_label);
    }
    res.tuned = tune_threshold(oof_scores, oof_labels, beta);
    res.oof_at_half = compute_metrics(oof_scores, oof_labels, 0.5);
    res.oof_at_tuned = compute_metrics(oof_scores, oof_labels, res.tuned.threshold);
    return res;
}

struct Stage2Result {
    BoosterModel model;            // trained on all training rows
    std::vector<double> score;     // per row: out-of-fold on train, final model on test
    std::vector<int> oof_fold_of_row;
    double pos_weight_used = 1;
    ThresholdResult tuned;         // tuned on training out-of-fold scores
    EvalReport cv_at_half;         // training out-of-fold metrics
    EvalReport test_at_half;
    EvalReport test_at_tuned;
};

inline Stage2Result run_stage2(const Dataset& ds, const std::vector<double>& absorb_score,
                               const SplitPlan& split, TrainConfig cfg, double beta,
                               double pos_weight_override = 0) {
    const Matrix x = with_column(ds.x, absorb_score);
    std::vector<std::string> names = ds.names;
    names.push_back("absorb_score");
    const std::vector<int> y = stage2_labels(ds);

    if (pos_weight_override > 0) {
        cfg.positive_class_weight = pos_weight_override;
    } else {
        double pos = 0, neg = 0;
        for (int r : split.train_indices) (y[static_cast<std::size_t>(r)] ? pos : neg) += 1;
        if (pos == 0 || neg == 0) throw DataError("degenerate labels");
        cfg.positive_class_weight = neg / pos;
    }

    Stage2Result res;
    res.pos_weight_used = cfg.positive_class_weight;
    res.score.assign(ds.rows.size(), 0.0);
    res.oof_fold_of_row.assign(ds.rows.size(), -1);

    for (std::size_t f = 0; f < split.folds.size(); ++f) {
        const auto& fold = split.folds[f];
        const BoosterModel fold_model = train_booster(detail::gather_rows(x, fold.train),
                                                      detail::gather(y, fold.train), cfg, names);
        const auto scores = predict_proba(fold_model, detail::gather_rows(x, fold.val));
        for (std::size_t k = 0; k < fold.val.size(); ++k) {
            res.score[static_cast<std::size_t>(fold.val[k])] = scores[k];
            res.oof_fold_of_row[static_cast<std::size_t>(fold.val[k])] = static_cast<int>(f);
        }
    }
    assert_no_leakage(split, res.oof_fold_of_row);

    res.model = train_booster(detail::gather_rows(x, split.train_indices),
                              detail::gather(y, split.train_indices), cfg, names);
    const auto test_scores = predict_proba(res.model, detail::gather_rows(x, split.test_indices));
    for (std::size_t k = 0; k < split.test_indices.size(); ++k)
        res.score[static_cast<std::size_t>(split.test_indices[k])] = test_scores[k];

    const auto oof = detail::gather(res.score, split.train_indices);
    const auto y_train = detail::gather(y, split.train_indices);
    res.tuned = tune_threshold(oof, y_train, beta);
    res.cv_at_half = compute_metrics(oof, y_train, 0.5);

    const auto y_test = detail::gather(y, split.test_indices);
    res.test_at_half = compute_metrics(test_scores, y_test, 0.5);
    res.test_at_tuned = compute_metrics(test_scores, y_test, res.tuned.threshold);
    return res;
}

struct BaselineReports {
    EvalReport logistic_test;
    EvalReport booster_test;
};

// Standardization for the linear baseline, fitted on the training rows only.
inline Matrix standardize_for_linear(const Matrix& x, const std::vector<int>& train_rows) {
    std::vector<double> mean(x.cols, 0), sd(x.cols, 0);
    for (int r : train_rows)
        for (std::size_t c = 0; c < x.cols; ++c) mean[c] += x.at(static_cast<std::size_t>(r), c);
    for (std::size_t c = 0; c < x.cols; ++c) mean[c] /= static_cast<double>(train_rows.size());
    for (int r : train_rows)
        for (std::size_t c = 0; c < x.cols; ++c) {
            const double d = x.at(static_cast<std::size_t>(r), c) - mean[c];
            sd[c] += d * d;
        }
    for (std::size_t c = 0; c < x.cols; ++c) {
        sd[c] = std::sqrt(sd[c] / static_cast<double>(train_rows.size()));
        if (sd[c] == 0) sd[c] = 1;
    }
    Matrix out(x.rows, x.cols);
    for (std::size_t r = 0; r < x.rows; ++r)
        for (std::size_t c = 0; c < x.cols; ++c) out.at(r, c) = (x.at(r, c) - mean[c]) / sd[c];
    return out;
}

// Single-stage learners on the same features minus the absorb score.
inline BaselineReports run_baselines(const Matrix& x, const std::vector<std::string>& names,
                                     const std::vector<int>& y, const SplitPlan& split,
                                     TrainConfig booster_cfg, double logistic_l2 = 1e-3,
                                     int logistic_epochs = 400, double logistic_step = 0.5,
                                     double pos_weight_override = 0) {
    BaselineReports out;
    if (pos_weight_override > 0) {
        booster_cfg.positive_class_weight = pos_weight_override;
    } else {
        double pos = 0, neg = 0;
        for (int r : split.train_indices) (y[static_cast<std::size_t>(r)] ? pos : neg) += 1;
        if (pos == 0 || neg == 0) throw DataError("degenerate labels");
        booster_cfg.positive_class_weight = neg / pos;
    }

    const auto y_train = detail::gather(y, split.train_indices);
    const auto y_test = detail::gather(y, split.test_indices);

    const BoosterModel booster =
        train_booster(detail::gather_rows(x, split.train_indices), y_train, booster_cfg, names);
    out.booster_test = compute_metrics(
        predict_proba(booster, detail::gather_rows(x, split.test_indices)), y_test, 0.5);

    const Matrix xs = standardize_for_linear(x, split.train_indices);
    const LinearModel lin = train_logistic_baseline(detail::gather_rows(xs, split.train_indices),
                                                    y_train, logistic_l2, logistic_epochs,
                                                    logistic_step);
    out.logistic_test = compute_metrics(
        predict_linear(lin, detail::gather_rows(xs, split.test_indices)), y_test, 0.5);
    return out;
}

// ---------------------------------------------------------------------------
// Seeded random hyperparameter search.

struct SearchSpace {
    int trees_lo = 50, trees_hi = 300;
    int depth_lo = 3, depth_hi = 7;
    double lr_lo = 0.03, lr_hi = 0.3;    // sampled log-uniformly
    double l2_lo = 0.1, l2_hi = 10.0;    // sampled log-uniformly
};

struct TrialRecord {
    TrainConfig config;
    double mean_auc = 0;
    bool ok = false;
    std::string error;
};

struct SearchResult {
    TrainConfig best;
    double best_auc = -1;
    std::vector<TrialRecord> trials;
};

// Uniform random sampling over the space, scored by mean out-of-fold AUC over
// the supplied folds. Failed trials are logged and skipped.
inline SearchResult search_hyperparameters(const Matrix& x, const std::vector<int>& y,
                                           const std::vector<FoldIndices>& folds,
                                           const SearchSpace& space, int n_trials,
                                           std::uint64_t seed, TrainConfig base_cfg) {
    if (n_trials < 1) throw DataError("n_trials must be >= 1");
    SearchResult result;
    result.best = base_cfg;
    Rng rng(Rng::substream(seed, 0x5EA4C4));

    for (int trial = 0; trial < n_trials; ++trial) {
        TrialRecord rec;
        rec.config = base_cfg;
        rec.config.n_trees = static_cast<int>(rng.uniform_int(space.trees_lo, space.trees_hi));
        rec.config.max_depth = static_cast<int>(rng.uniform_int(space.depth_lo, space.depth_hi));
        rec.config.learning_rate = rng.log_uniform(space.lr_lo, space.lr_hi);
        rec.config.l2_reg = rng.log_uniform(space.l2_lo, space.l2_hi);
        try {
            double auc_sum = 0;
            int n_folds = 0;
            for (const auto& fold : folds) {
                const BoosterModel m = train_booster(detail::gather_rows(x, fold.train),
                                                     detail::gather(y, fold.train), rec.config);
                const auto scores = predict_proba(m, detail::gather_rows(x, fold.val));
                auc_sum += roc_auc(scores, detail::gather(y, fold.val));
                ++n_folds;
            }
            rec.mean_auc = auc_sum / n_folds;
            rec.ok = true;
            if (rec.mean_auc > result.best_auc) {
                result.best_auc = rec.mean_auc;
                result.best = rec.config;
            }
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
        result.trials.push_back(std::move(rec));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Whole-run aggregation.

struct StageConfig {
    TrainConfig stage1{200, 6, 0.1, 1.0, 0.0, 1.0, 1.0, 64, 0};
    TrainConfig stage2{60, 3, 0.15, 1.0, 0.0, 1.0, 1.0, 32, 0};
    double beta = 1.0;               // threshold tuning favors F1 by default
    double pos_weight_override = 0;  // 0 = empirical negative/positive ratio
    bool with_baselines = true;
    double logistic_l2 = 1e-3;
    int logistic_epochs = 400;
    double logistic_step = 0.5;
};

struct StageOutputs {
    SplitPlan split;
    Stage1Result stage1;
    Stage2Result stage2;
    std::optional<BaselineReports> baselines;
};

inline StageOutputs run_two_stage(const Dataset& ds, const SplitPlan& split,
                                  const StageConfig& cfg) {
    StageOutputs out;
    out.split = split;
    out.stage1 = run_stage1(ds, split, cfg.stage1, cfg.beta);
    out.stage2 = run_stage2(ds, out.stage1.absorb_score, split, cfg.stage2, cfg.beta,
                            cfg.pos_weight_override);
    if (cfg.with_baselines) {
        out.baselines = run_baselines(ds.x, ds.names, stage2_labels(ds), split, cfg.stage2,
                                      cfg.logistic_l2, cfg.logistic_epochs, cfg.logistic_step,
                                      cfg.pos_weight_override);
    }
    return out;
}

inline void write_scores_csv(const Dataset& ds, const SplitPlan& split,
                             const StageOutputs& outputs, const std::string& path) {
    std::unordered_set<int> test(split.test_indices.begin(), split.test_indices.end());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    write_csv_row(out, {"key", "split", "stage1_label", "stage2_label", "absorb_score",
                        "stage2_score"});
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        const RowMeta& m = ds.rows[i];
        write_csv_row(out, {m.key, test.count(static_cast<int>(i)) ? "test" : "train",
                            m.stage1_label ? std::to_string(*m.stage1_label) : "",
                            std::to_string(m.stage2_label),
                            detail::fmt_double(outputs.stage1.absorb_score[i]),
                            detail::fmt_double(outputs.stage2.score[i])});
    }
}

}  // namespace skybuffer
