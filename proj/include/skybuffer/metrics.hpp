#pragma once

// Binary-classification metrics: rank-based ROC-AUC with half credit for
// ties, step-interpolated average precision, confusion-matrix reports, and
// F-beta threshold tuning over a fixed grid.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "skybuffer/common.hpp"

namespace skybuffer {

struct ConfusionCounts {
    std::int64_t tn = 0, fp = 0, fn = 0, tp = 0;
    std::int64_t total() const { return tn + fp + fn + tp; }
};

struct ClassMetrics {
    double precision = 0, recall = 0, f1 = 0;
};

struct EvalReport {
    std::optional<double> roc_auc;
    std::optional<double> average_precision;
    ClassMetrics positive;
    ClassMetrics negative;
    ConfusionCounts confusion;
    double accuracy = 0;
    double threshold = 0.5;
};

namespace detail {

inline void check_scores_labels(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw DataError("scores/labels length mismatch");
    if (scores.empty()) throw DataError("empty score set");
}

inline std::pair<std::int64_t, std::int64_t> class_counts(const std::vector<int>& labels) {
    std::int64_t pos = 0;
    for (int y : labels) pos += y != 0;
    return {pos, static_cast<std::int64_t>(labels.size()) - pos};
}

}  // namespace detail

// Probability that a random positive outranks a random negative, ties at
// half credit; computed from average ranks.
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    detail::check_scores_labels(scores, labels);
    const auto [pos, neg] = detail::class_counts(labels);
    if (pos == 0 || neg == 0) throw DataError("single-class labels");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] != 0) rank_sum_pos += avg_rank;
        i = j;
    }
    const double p = static_cast<double>(pos);
    const double n = static_cast<double>(neg);
    return (rank_sum_pos - p * (p + 1) / 2.0) / (p * n);
}

// Step-interpolated area under the precision-recall curve; equal scores are
// consumed as one threshold group.
inline double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
    detail::check_scores_labels(scores, labels);
    const auto [pos, neg] = detail::class_counts(labels);
    if (pos == 0 || neg == 0) throw DataError("single-class labels");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0;
    double prev_recall = 0;
    std::int64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] != 0) ++tp;
            else ++fp;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return ap;
}

inline ConfusionCounts confusion_at(const std::vector<double>& scores,
                                    const std::vector<int>& labels, double threshold) {
    ConfusionCounts c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;  // predict positive at or above threshold
        const bool truth = labels[i] != 0;
        if (pred && truth) ++c.tp;
        else if (pred && !truth) ++c.fp;
        else if (!pred && truth) ++c.fn;
        else ++c.tn;
    }
    return c;
}

inline double f_beta(double precision, double recall, double beta) {
    const double b2 = beta * beta;
    const double denom = b2 * precision + recall;
    if (denom == 0) return 0;
    return (1 + b2) * precision * recall / denom;
}

inline EvalReport compute_metrics(const std::vector<double>& scores,
                                  const std::vector<int>& labels, double threshold) {
    detail::check_scores_labels(scores, labels);
    EvalReport r;
    r.threshold = threshold;
    r.confusion = confusion_at(scores, labels, threshold);
    const auto& c = r.confusion;
    r.accuracy = static_cast<double>(c.tn + c.tp) / static_cast<double>(c.total());

    auto safe_div = [](std::int64_t num, std::int64_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    r.positive.precision = safe_div(c.tp, c.tp + c.fp);
    r.positive.recall = safe_div(c.tp, c.tp + c.fn);
    r.positive.f1 = f_beta(r.positive.precision, r.positive.recall, 1.0);
    r.negative.precision = safe_div(c.tn, c.tn + c.fn);
    r.negative.recall = safe_div(c.tn, c.tn + c.fp);
    r.negative.f1 = f_beta(r.negative.precision, r.negative.recall, 1.0);

    const auto [pos, neg] = detail::class_counts(labels);
    if (pos > 0 && neg > 0) {
        r.roc_auc = roc_auc(scores, labels);
        r.average_precision = average_precision(scores, labels);
    }
    return r;
}

struct ThresholdResult {
    double threshold = 0.5;
    double f_beta = 0;
};

inline constexpr double kThresholdGridStep = 0.005;  // grid {0.005, 0.010, ..., 0.995}

// Argmax of positive-class F-beta over the grid; ties go to the lowest
// threshold.
inline ThresholdResult tune_threshold(const std::vector<double>& scores,
                                      const std::vector<int>& labels, double beta) {
    detail::check_scores_labels(scores, labels);
    const auto [pos, neg] = detail::class_counts(labels);
    if (pos == 0 || neg == 0) throw DataError("single-class labels");

    ThresholdResult best;
    best.threshold = kThresholdGridStep;
    best.f_beta = -1;
    for (int k = 1; k <= 199; ++k) {
        const double t = k * kThresholdGridStep;
        const ConfusionCounts c = confusion_at(scores, labels, t);
        const double precision =
            (c.tp + c.fp) == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
        const double recall =
            (c.tp + c.fn) == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
        const double f = f_beta(precision, recall, beta);
        if (f > best.f_beta) {
            best.f_beta = f;
            best.threshold = t;
        }
    }
    return best;
}

}  // namespace skybuffer
