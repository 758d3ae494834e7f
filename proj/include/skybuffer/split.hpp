#pragma once

// Stratified train/test split plus stratified k-fold assignment over the
// training rows. Fully determined by the seed.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "skybuffer/common.hpp"
#include "skybuffer/rng.hpp"

namespace skybuffer {

struct FoldIndices {
    std::vector<int> train;
    std::vector<int> val;
};

struct SplitPlan {
    std::vector<int> train_indices;
    std::vector<int> test_indices;
    std::vector<FoldIndices> folds;  // partition of train_indices
    std::uint64_t seed = 0;
};

inline SplitPlan make_split(const std::vector<int>& labels, std::uint64_t seed,
                            double train_frac = 0.8, int n_folds = 5) {
    std::vector<int> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i)
        (labels[i] != 0 ? pos : neg).push_back(static_cast<int>(i));
    if (pos.empty() || neg.empty()) throw DataError("single-class labels");

    Rng rng(Rng::substream(seed, 0x5911));
    rng.shuffle(pos);
    rng.shuffle(neg);

    SplitPlan plan;
    plan.seed = seed;
    const auto n_train_pos = static_cast<std::size_t>(
        static_cast<double>(pos.size()) * train_frac + 0.5);
    const auto n_train_neg = static_cast<std::size_t>(
        static_cast<double>(neg.size()) * train_frac + 0.5);

    for (std::size_t i = 0; i < pos.size(); ++i)
        (i < n_train_pos ? plan.train_indices : plan.test_indices).push_back(pos[i]);
    for (std::size_t i = 0; i < neg.size(); ++i)
        (i < n_train_neg ? plan.train_indices : plan.test_indices).push_back(neg[i]);
    std::sort(plan.train_indices.begin(), plan.train_indices.end());
    std::sort(plan.test_indices.begin(), plan.test_indices.end());

    if (n_folds < 2 || static_cast<std::size_t>(n_folds) > plan.train_indices.size())
        throw DataError("fold count exceeds training rows");

    // Round-robin per class keeps every fold's positive rate within
    // 1/(fold size) of the training rate.
    plan.folds.resize(static_cast<std::size_t>(n_folds));
    std::vector<int> fold_of(labels.size(), -1);
    int next_pos_fold = 0, next_neg_fold = 0;
    for (std::size_t i = 0; i < n_train_pos; ++i) {
        fold_of[static_cast<std::size_t>(pos[i])] = next_pos_fold;
        next_pos_fold = (next_pos_fold + 1) % n_folds;
    }
    for (std::size_t i = 0; i < n_train_neg; ++i) {
        fold_of[static_cast<std::size_t>(neg[i])] = next_neg_fold;
        next_neg_fold = (next_neg_fold + 1) % n_folds;
    }
    for (int row : plan.train_indices) {
        const int f = fold_of[static_cast<std::size_t>(row)];
        for (int k = 0; k < n_folds; ++k)
            (k == f ? plan.folds[static_cast<std::size_t>(k)].val
                    : plan.folds[static_cast<std::size_t>(k)].train)
                .push_back(row);
    }
    return plan;
}

}  // namespace skybuffer
