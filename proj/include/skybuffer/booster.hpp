#pragma once

// Second-order gradient-boosted decision trees for binary classification.
// Split gain, leaf weights, and tie-breaking follow one canonical rule set so
// exact-greedy training is reproducible bit for bit and comparable against a
// brute-force split enumeration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "skybuffer/common.hpp"

namespace skybuffer {

struct TrainConfig {
    int n_trees = 150;
    int max_depth = 5;
    double learning_rate = 0.1;
    double l2_reg = 1.0;             // lambda in the gain/leaf formulas
    double min_split_gain = 0.0;     // gamma, subtracted from every split gain
    double min_child_hessian = 1.0;  // minimum summed hessian per child
    double positive_class_weight = 1.0;
    int n_bins = 64;  // 0 = exact greedy over all distinct thresholds
    std::uint64_t seed = 0;

    void validate() const {
        if (n_trees < 0) throw DataError("n_trees must be >= 0");
        if (max_depth < 1) throw DataError("max_depth must be >= 1");
        if (!(learning_rate > 0) || learning_rate > 1)
            throw DataError("learning_rate must be in (0, 1]");
        if (l2_reg < 0 || min_split_gain < 0 || min_child_hessian < 0)
            throw DataError("regularization parameters must be >= 0");
        if (!(positive_class_weight > 0)) throw DataError("positive_class_weight must be > 0");
        if (n_bins < 0) throw DataError("n_bins must be >= 0");
    }
};

struct TreeNode {
    bool leaf = true;
    int feature = -1;
    double threshold = 0;  // x[feature] < threshold goes left
    int left = -1;
    int right = -1;
    double weight = 0;  // leaf value, already scaled by the learning rate
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(const double* x) const {
        int i = 0;
        while (!nodes[static_cast<std::size_t>(i)].leaf) {
            const TreeNode& n = nodes[static_cast<std::size_t>(i)];
            i = x[n.feature] < n.threshold ? n.left : n.right;
        }
        return nodes[static_cast<std::size_t>(i)].weight;
    }
};

struct BoosterModel {
    double base_score = 0;  // log-odds prior
    std::vector<Tree> trees;
    TrainConfig config;
    std::vector<std::string> feature_names;

    double margin(const double* x) const {
        double m = base_score;
        for (const auto& t : trees) m += t.predict(x);
        return m;
    }
};

inline double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double leaf_weight(double grad_sum, double hess_sum, double l2, double learning_rate) {
    return -grad_sum / (hess_sum + l2) * learning_rate;
}

inline double split_gain(double gl, double hl, double gr, double hr, double l2, double gamma) {
    const double parent = (gl + gr) * (gl + gr) / (hl + hr + l2);
    return 0.5 * (gl * gl / (hl + l2) + gr * gr / (hr + l2) - parent) - gamma;
}

namespace detail {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0;
    double gain = 0;
};

// Candidate thresholds sit between consecutive distinct values; accumulation
// walks values in ascending order so repeated runs agree to the last bit.
inline SplitChoice best_split_exact(const Matrix& x, const std::vector<double>& grad,
                                    const std::vector<double>& hess, const std::vector<int>& rows,
                                    const TrainConfig& cfg, double g_total, double h_total) {
    SplitChoice best;
    std::vector<std::pair<double, int>> vals(rows.size());
    for (std::size_t f = 0; f < x.cols; ++f) {
        for (std::size_t k = 0; k < rows.size(); ++k)
            vals[k] = {x.at(static_cast<std::size_t>(rows[k]), f), rows[k]};
        std::stable_sort(vals.begin(), vals.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        double gl = 0, hl = 0;
        for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
            gl += grad[static_cast<std::size_t>(vals[k].second)];
            hl += hess[static_cast<std::size_t>(vals[k].second)];
            if (vals[k].first == vals[k + 1].first) continue;  // no boundary inside a tie run
            const double hr = h_total - hl;
            if (hl < cfg.min_child_hessian || hr < cfg.min_child_hessian) continue;
            const double threshold = vals[k].first + (vals[k + 1].first - vals[k].first) / 2.0;
            if (!(threshold > vals[k].first)) continue;  // adjacent doubles, no room to cut
            const double gain =
                split_gain(gl, hl, g_total - gl, hr, cfg.l2_reg, cfg.min_split_gain);
            if (gain > best.gain && gain > 0) {
                best = {true, static_cast<int>(f), threshold, gain};
            }
        }
    }
    return best;
}

// Per-feature bin edges from equal-frequency quantiles of the training data.
inline std::vector<std::vector<double>> build_bin_edges(const Matrix& x, int n_bins) {
    std::vector<std::vector<double>> edges(x.cols);
    std::vector<double> col(x.rows);
    for (std::size_t f = 0; f < x.cols; ++f) {
        for (std::size_t r = 0; r < x.rows; ++r) col[r] = x.at(r, f);
        std::sort(col.begin(), col.end());
        auto& e = edges[f];
        for (int k = 1; k < n_bins; ++k) {
            const std::size_t pos = static_cast<std::size_t>(
                static_cast<std::uint64_t>(k) * col.size() / static_cast<std::uint64_t>(n_bins));
            if (pos == 0 || pos >= col.size()) continue;
            const double lo = col[pos - 1];
            const double hi = col[pos];
            if (!(lo < hi)) continue;
            const double cut = lo + (hi - lo) / 2.0;
            if (!(cut > lo)) continue;
            if (e.empty() || cut > e.back()) e.push_back(cut);
        }
    }
    return edges;
}

inline int bin_of(const std::vector<double>& edges, double v) {
    return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
}

inline SplitChoice best_split_hist(const std::vector<std::vector<double>>& edges,
                                   const std::vector<std::vector<int>>& binned,
                                   const std::vector<double>& grad,
                                   const std::vector<double>& hess, const std::vector<int>& rows,
                                   const TrainConfig& cfg, double g_total, double h_total) {
    SplitChoice best;
    std::vector<double> gh, hh;
    for (std::size_t f = 0; f < edges.size(); ++f) {
        if (edges[f].empty()) continue;
        const auto n_bins = edges[f].size() + 1;
        gh.assign(n_bins, 0.0);
        hh.assign(n_bins, 0.0);
        for (int r : rows) {
            const int b = binned[f][static_cast<std::size_t>(r)];
            gh[static_cast<std::size_t>(b)] += grad[static_cast<std::size_t>(r)];
            hh[static_cast<std::size_t>(b)] += hess[static_cast<std::size_t>(r)];
        }
        double gl = 0, hl = 0;
        for (std::size_t b = 0; b + 1 < n_bins; ++b) {
            gl += gh[b];
            hl += hh[b];
            const double hr = h_total - hl;
            if (hl < cfg.min_child_hessian || hr < cfg.min_child_hessian) continue;
            const double gain =
                split_gain(gl, hl, g_total - gl, hr, cfg.l2_reg, cfg.min_split_gain);
            if (gain > best.gain && gain > 0) {
                best = {true, static_cast<int>(f), edges[f][b], gain};
            }
        }
    }
    return best;
}

struct GrowContext {
    const Matrix& x;
    const std::vector<double>& grad;
    const std::vector<double>& hess;
    const TrainConfig& cfg;
    const std::vector<std::vector<double>>* edges;       // null in exact mode
    const std::vector<std::vector<int>>* binned;
};

inline int grow_node(Tree& tree, const GrowContext& ctx, std::vector<int>&& rows, int depth) {
    double g = 0, h = 0;
    for (int r : rows) {
        g += ctx.grad[static_cast<std::size_t>(r)];
        h += ctx.hess[static_cast<std::size_t>(r)];
    }

    const int node_index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    detail::SplitChoice split;
    if (depth < ctx.cfg.max_depth && rows.size() >= 2) {
        split = ctx.edges ? best_split_hist(*ctx.edges, *ctx.binned, ctx.grad, ctx.hess, rows,
                                            ctx.cfg, g, h)
                          : best_split_exact(ctx.x, ctx.grad, ctx.hess, rows, ctx.cfg, g, h);
    }

    if (!split.found) {
        tree.nodes[static_cast<std::size_t>(node_index)].weight =
            leaf_weight(g, h, ctx.cfg.l2_reg, ctx.cfg.learning_rate);
        return node_index;
    }

    std::vector<int> left_rows, right_rows;
    left_rows.reserve(rows.size());
    right_rows.reserve(rows.size());
    for (int r : rows) {
        if (ctx.x.at(static_cast<std::size_t>(r), static_cast<std::size_t>(split.feature)) <
            split.threshold)
            left_rows.push_back(r);
        else
            right_rows.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    const int left = grow_node(tree, ctx, std::move(left_rows), depth + 1);
    const int right = grow_node(tree, ctx, std::move(right_rows), depth + 1);
    TreeNode& n = tree.nodes[static_cast<std::size_t>(node_index)];
    n.leaf = false;
    n.feature = split.feature;
    n.threshold = split.threshold;
    n.left = left;
    n.right = right;
    return node_index;
}

}  // namespace detail

// Mean weighted log-loss; the per-step certificate that boosting descends.
inline double weighted_logloss(const std::vector<double>& margins, const std::vector<int>& labels,
                               double pos_weight) {
    double loss = 0, wsum = 0;
    for (std::size_t i = 0; i < margins.size(); ++i) {
        const double w = labels[i] != 0 ? pos_weight : 1.0;
        double p = sigmoid(margins[i]);
        p = std::min(1.0 - 1e-15, std::max(1e-15, p));
        loss += w * (labels[i] != 0 ? -std::log(p) : -std::log(1.0 - p));
        wsum += w;
    }
    return loss / wsum;
}

struct TrainTrace {
    std::vector<double> loss;  // loss[0] is the base-score loss, then one entry per tree
};

inline BoosterModel train_booster(const Matrix& x, const std::vector<int>& y,
                                  const TrainConfig& cfg,
                                  const std::vector<std::string>& feature_names = {},
                                  TrainTrace* trace = nullptr) {
    cfg.validate();
    if (x.rows == 0 || x.cols == 0) throw DataError("empty feature matrix");
    if (y.size() != x.rows) throw DataError("label count does not match rows");
    for (std::size_t r = 0; r < x.rows; ++r)
        for (std::size_t c = 0; c < x.cols; ++c)
            if (!std::isfinite(x.at(r, c)))
                throw DataError("non-finite feature value at row " + std::to_string(r) +
                                ", column " + std::to_string(c) +
                                (feature_names.size() == x.cols ? " (" + feature_names[c] + ")"
                                                                : ""));

    double w_pos = 0, w_neg = 0;
    for (int v : y) (v != 0 ? w_pos : w_neg) += 1.0;
    if (w_pos == 0 || w_neg == 0) throw DataError("degenerate labels");
    w_pos *= cfg.positive_class_weight;

    BoosterModel model;
    model.config = cfg;
    model.base_score = std::log(w_pos / w_neg);
    if (feature_names.size() == x.cols) {
        model.feature_names = feature_names;
    } else {
        for (std::size_t c = 0; c < x.cols; ++c)
            model.feature_names.push_back("f" + std::to_string(c));
    }

    std::vector<double> margins(x.rows, model.base_score);
    if (trace) trace->loss.push_back(weighted_logloss(margins, y, cfg.positive_class_weight));

    std::vector<std::vector<double>> edges;
    std::vector<std::vector<int>> binned;
    const bool hist = cfg.n_bins > 0;
    if (hist) {
        edges = detail::build_bin_edges(x, cfg.n_bins);
        binned.resize(x.cols);
        for (std::size_t f = 0; f < x.cols; ++f) {
            binned[f].resize(x.rows);
            for (std::size_t r = 0; r < x.rows; ++r)
                binned[f][r] = detail::bin_of(edges[f], x.at(r, f));
        }
    }

    std::vector<double> grad(x.rows), hess(x.rows);
    for (int t = 0; t < cfg.n_trees; ++t) {
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double w = y[i] != 0 ? cfg.positive_class_weight : 1.0;
            const double p = sigmoid(margins[i]);
            grad[i] = w * (p - (y[i] != 0 ? 1.0 : 0.0));
            hess[i] = w * p * (1.0 - p);
        }
        Tree tree;
        std::vector<int> all_rows(x.rows);
        std::iota(all_rows.begin(), all_rows.end(), 0);
        detail::GrowContext ctx{x, grad, hess, cfg, hist ? &edges : nullptr,
                                hist ? &binned : nullptr};
        detail::grow_node(tree, ctx, std::move(all_rows), 0);
        for (std::size_t i = 0; i < x.rows; ++i) margins[i] += tree.predict(x.row_ptr(i));
        model.trees.push_back(std::move(tree));
        if (trace) trace->loss.push_back(weighted_logloss(margins, y, cfg.positive_class_weight));
    }
    return model;
}

inline std::vector<double> predict_proba(const BoosterModel& model, const Matrix& x) {
    if (x.cols != model.feature_names.size())
        throw DataError("feature width mismatch: model expects " +
                        std::to_string(model.feature_names.size()) + ", got " +
                        std::to_string(x.cols));
    // The sigmoid saturates to exactly 0 or 1 in binary64 for extreme
    // margins; probabilities stay strictly inside the unit interval.
    constexpr double lo = std::numeric_limits<double>::min();
    constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
    std::vector<double> out(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r)
        out[r] = std::min(hi, std::max(lo, sigmoid(model.margin(x.row_ptr(r)))));
    return out;
}

}  // namespace skybuffer
