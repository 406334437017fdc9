#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "fairml/dataset.hpp"
#include "fairml/error.hpp"
#include "fairml/math.hpp"

namespace fairml {

struct LogisticHyper {
    double l2 = 1e-4;
    double learning_rate = 0.1;
    int max_iters = 500;
    double tol = 1e-6;
};

// Linear model over internally standardized features. Coefficients live in
// standardized space; the standardization constants travel with the model.
struct LinearModel {
    std::vector<double> coefficients;
    double intercept = 0.0;
    std::vector<double> feature_mean;
    std::vector<double> feature_scale;
    int iterations = 0;
    double final_loss = 0.0;
};

// Weighted regularized negative log-likelihood
//   L(beta, b) = -sum_i w_i [y_i log s(z_i) + (1-y_i) log(1-s(z_i))] + l2/2 |beta|^2
// with z_i = beta . x_i + b, evaluated on the matrix as given (no
// standardization here). Gradient goes to grad_beta / grad_b.
inline double logistic_loss_grad(const Matrix& X,
                                 std::span<const int> y,
                                 std::span<const double> w,
                                 std::span<const double> beta,
                                 double b,
                                 double l2,
                                 std::vector<double>& grad_beta,
                                 double& grad_b) {
    const std::size_t n = X.rows, p = X.cols;
    grad_beta.assign(p, 0.0);
    grad_b = 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = X.row(i);
        double z = b;
        for (std::size_t j = 0; j < p; ++j) z += beta[j] * xi[j];
        // -[y z - log(1+e^z)] is the per-row negative log-likelihood
        loss += w[i] * (log1p_exp(z) - y[i] * z);
        double r = w[i] * (sigmoid(z) - y[i]);
        for (std::size_t j = 0; j < p; ++j) grad_beta[j] += r * xi[j];
        grad_b += r;
    }
    double reg = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        reg += beta[j] * beta[j];
        grad_beta[j] += l2 * beta[j];
    }
    return loss + 0.5 * l2 * reg;
}

inline double logistic_loss(const Matrix& X,
                            std::span<const int> y,
                            std::span<const double> w,
                            std::span<const double> beta,
                            double b,
                            double l2) {
    std::vector<double> g;
    double gb;
    return logistic_loss_grad(X, y, w, beta, b, l2, g, gb);
}

// Gradient descent at a fixed learning rate on the total-weight-normalized
// gradient; stops at max_iters or when that gradient's inf-norm drops under
// tol. Reported final_loss is the sum-form objective above.
inline LinearModel train_logistic(const EncodedDataset& train, const LogisticHyper& hyper = {}) {
    const std::size_t n = train.n_rows(), p = train.n_features();
    if (n == 0) throw Error("train_logistic: empty dataset");
    bool has0 = false, has1 = false;
    for (int yi : train.y) (yi ? has1 : has0) = true;
    if (!has0 || !has1) throw Error("train_logistic: both classes must be present");
    if (!(hyper.learning_rate > 0) || hyper.l2 < 0 || !(hyper.tol > 0)) {
        throw Error("train_logistic: invalid hyperparameters");
    }

    LinearModel model;
    model.feature_mean.assign(p, 0.0);
    model.feature_scale.assign(p, 1.0);

    double W = 0.0;
    for (double wi : train.w) W += wi;

    // Weighted mean / variance standardization; constant columns get scale 1.
    for (std::size_t j = 0; j < p; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += train.w[i] * train.X.at(i, j);
        m /= W;
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = train.X.at(i, j) - m;
            v += train.w[i] * d * d;
        }
        v /= W;
        model.feature_mean[j] = m;
        model.feature_scale[j] = v > 0.0 ? std::sqrt(v) : 1.0;
    }

    Matrix Z(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            Z.at(i, j) = (train.X.at(i, j) - model.feature_mean[j]) / model.feature_scale[j];
        }
    }

    std::vector<double> beta(p, 0.0), grad;
    double b = 0.0, grad_b = 0.0;
    double loss = 0.0;
    int it = 0;
    for (; it < hyper.max_iters; ++it) {
        loss = logistic_loss_grad(Z, train.y, train.w, beta, b, hyper.l2, grad, grad_b);
        if (!std::isfinite(loss)) {
            throw Error("train_logistic: loss diverged at iteration " + std::to_string(it));
        }
        double inf_norm = std::fabs(grad_b) / W;
        for (std::size_t j = 0; j < p; ++j) inf_norm = std::max(inf_norm, std::fabs(grad[j]) / W);
        if (inf_norm < hyper.tol) break;
        for (std::size_t j = 0; j < p; ++j) beta[j] -= hyper.learning_rate * grad[j] / W;
        b -= hyper.learning_rate * grad_b / W;
    }

    model.coefficients = std::move(beta);
    model.intercept = b;
    model.iterations = it;
    model.final_loss = logistic_loss(Z, train.y, train.w, model.coefficients, b, hyper.l2);
    if (!std::isfinite(model.final_loss)) {
        throw Error("train_logistic: loss diverged at iteration " + std::to_string(it));
    }
    return model;
}

// Per-row probability of class 1.
inline std::vector<double> predict_scores(const LinearModel& model, const Matrix& X) {
    if (X.cols != model.coefficients.size()) {
        throw Error("predict_scores: feature count mismatch (" + std::to_string(X.cols) +
                    " vs model " + std::to_string(model.coefficients.size()) + ")");
    }
    std::vector<double> out;
    out.reserve(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) {
        double z = model.intercept;
        const double* xi = X.row(i);
        for (std::size_t j = 0; j < X.cols; ++j) {
            z += model.coefficients[j] * (xi[j] - model.feature_mean[j]) / model.feature_scale[j];
        }
        out.push_back(sigmoid(z));
    }
    return out;
}

} // namespace fairml
