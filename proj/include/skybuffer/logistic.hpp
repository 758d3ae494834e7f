#pragma once

// L2-regularized logistic regression by full-batch gradient descent with
// step halving. Deterministic reference baseline; expects standardized
// features.

#include <cmath>
#include <vector>

#include "skybuffer/booster.hpp"
#include "skybuffer/common.hpp"

namespace skybuffer {

struct LinearModel {
    std::vector<double> weights;
    double intercept = 0;
    std::vector<double> loss_trace;  // accepted steps only; non-increasing
};

namespace detail {

inline double logistic_loss(const Matrix& x, const std::vector<int>& y,
                            const std::vector<double>& w, double b, double l2) {
    double loss = 0;
    for (std::size_t r = 0; r < x.rows; ++r) {
        double z = b;
        const double* row = x.row_ptr(r);
        for (std::size_t c = 0; c < x.cols; ++c) z += w[c] * row[c];
        double p = sigmoid(z);
        p = std::min(1.0 - 1e-15, std::max(1e-15, p));
        loss += y[r] != 0 ? -std::log(p) : -std::log(1.0 - p);
    }
    loss /= static_cast<double>(x.rows);
    double reg = 0;
    for (double v : w) reg += v * v;
    return loss + 0.5 * l2 * reg;  // intercept is not regularized
}

}  // namespace detail

inline LinearModel train_logistic_baseline(const Matrix& x, const std::vector<int>& y, double l2,
                                           int epochs, double step) {
    if (x.rows == 0 || x.cols == 0) throw DataError("empty feature matrix");
    if (y.size() != x.rows) throw DataError("label count does not match rows");
    int pos = 0;
    for (int v : y) pos += v != 0;
    if (pos == 0 || pos == static_cast<int>(y.size())) throw DataError("degenerate labels");

    LinearModel model;
    model.weights.assign(x.cols, 0.0);
    model.intercept = 0;

    const auto n = static_cast<double>(x.rows);
    std::vector<double> grad(x.cols);
    double prev_loss = detail::logistic_loss(x, y, model.weights, model.intercept, l2);
    model.loss_trace.push_back(prev_loss);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0;
        for (std::size_t r = 0; r < x.rows; ++r) {
            double z = model.intercept;
            const double* row = x.row_ptr(r);
            for (std::size_t c = 0; c < x.cols; ++c) z += model.weights[c] * row[c];
            const double resid = sigmoid(z) - (y[r] != 0 ? 1.0 : 0.0);
            grad_b += resid;
            for (std::size_t c = 0; c < x.cols; ++c) grad[c] += resid * row[c];
        }
        grad_b /= n;
        for (std::size_t c = 0; c < x.cols; ++c) grad[c] = grad[c] / n + l2 * model.weights[c];

        // Halve the step until the full-batch loss stops increasing.
        bool accepted = false;
        for (int tries = 0; tries < 60; ++tries) {
            std::vector<double> w_new(x.cols);
            for (std::size_t c = 0; c < x.cols; ++c) w_new[c] = model.weights[c] - step * grad[c];
            const double b_new = model.intercept - step * grad_b;
            const double loss = detail::logistic_loss(x, y, w_new, b_new, l2);
            if (loss <= prev_loss) {
                model.weights = std::move(w_new);
                model.intercept = b_new;
                prev_loss = loss;
                model.loss_trace.push_back(loss);
                accepted = true;
                break;
            }
            step /= 2;
        }
        if (!accepted) break;  // converged to step-size underflow
    }
    return model;
}

inline std::vector<double> predict_linear(const LinearModel& model, const Matrix& x) {
    if (x.cols != model.weights.size()) throw DataError("feature width mismatch");
    std::vector<double> out(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) {
        double z = model.intercept;
        const double* row = x.row_ptr(r);
        for (std::size_t c = 0; c < x.cols; ++c) z += model.weights[c] * row[c];
        out[r] = sigmoid(z);
    }
    return out;
}

}  // namespace skybuffer
