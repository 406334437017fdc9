#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fairml/dataset.hpp"
#include "fairml/error.hpp"
#include "fairml/math.hpp"

namespace fairml {

struct GbmHyper {
    int n_trees = 100;
    int max_depth = 3;
    double learning_rate = 0.1;
    double l2_leaf_penalty = 1.0;
    double min_child_weight = 1.0;
};

// Flat binary tree; internal nodes carry (feature, threshold, children),
// leaves carry a value. Routing: go left iff x[feature] < threshold.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict_value(const double* x) const {
        int nd = 0;
        while (!nodes[nd].is_leaf()) {
            nd = x[nodes[nd].feature] < nodes[nd].threshold ? nodes[nd].left : nodes[nd].right;
        }
        return nodes[nd].value;
    }
};

// prediction = sigmoid(base_score + learning_rate * sum of tree outputs)
struct GbmModel {
    std::vector<Tree> trees;
    double base_score = 0.0;
    double learning_rate = 0.1;
    std::size_t n_features = 0;
    GbmHyper hyper;
};

// Newton gain of a candidate split, lambda = leaf L2 penalty.
inline double split_gain(double gl, double hl, double gr, double hr, double lambda) {
    auto term = [lambda](double g, double h) {
        double d = h + lambda;
        return d > 0.0 ? g * g / d : 0.0;
    };
    return 0.5 * (term(gl, hl) + term(gr, hr) - term(gl + gr, hl + hr));
}

namespace detail {

struct SplitCand {
    double gain = 0.0; // only strictly positive gains are ever recorded
    double threshold = 0.0;
};

inline double leaf_value(const Dd& g, const Dd& h, double lambda) {
    double denom = h.value() + lambda;
    return denom > 0.0 ? -g.value() / denom : 0.0;
}

} // namespace detail

// Exact greedy Newton boosting on logistic loss. Split candidates are the
// midpoints between consecutive distinct sorted values within a node; ties in
// gain resolve to the lowest feature index, then the lowest threshold. Node
// G/H statistics use compensated sums of exact w*g / w*h products, so results
// do not depend on thread count and integer weights are interchangeable with
// row duplication.
inline GbmModel train_gbm(const EncodedDataset& train, const GbmHyper& hyper = {}) {
    const std::size_t n = train.n_rows();
    const std::size_t p = train.n_features();
    if (n == 0) throw Error("train_gbm: empty dataset");
    if (hyper.n_trees < 0 || hyper.max_depth < 1 || !(hyper.learning_rate > 0) ||
        hyper.l2_leaf_penalty < 0 || hyper.min_child_weight < 0) {
        throw Error("train_gbm: invalid hyperparameters");
    }
    for (double v : train.X.data) {
        if (!std::isfinite(v)) throw Error("train_gbm: non-finite feature value");
    }

    detail::Dd pos_mass, neg_mass;
    for (std::size_t i = 0; i < n; ++i) {
        (train.y[i] ? pos_mass : neg_mass).add(train.w[i]);
    }
    if (!(pos_mass.value() > 0) || !(neg_mass.value() > 0)) {
        throw Error("train_gbm: degenerate single-class input");
    }

    GbmModel model;
    model.hyper = hyper;
    model.learning_rate = hyper.learning_rate;
    model.n_features = p;
    model.base_score = std::log(pos_mass.value() / neg_mass.value());
    if (hyper.n_trees == 0) return model;

    // Presort each feature once: indices ordered by (value, row).
    std::vector<std::vector<std::int32_t>> sorted_idx(p);
    std::vector<std::vector<double>> sorted_val(p);
#pragma omp parallel for schedule(static)
    for (std::int64_t f = 0; f < static_cast<std::int64_t>(p); ++f) {
        auto& idx = sorted_idx[f];
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::int32_t a, std::int32_t b) {
            double va = train.X.at(a, f), vb = train.X.at(b, f);
            return va < vb || (va == vb && a < b);
        });
        auto& val = sorted_val[f];
        val.resize(n);
        for (std::size_t k = 0; k < n; ++k) val[k] = train.X.at(idx[k], f);
    }

    std::vector<double> margin(n, model.base_score);
    std::vector<double> g(n), h(n);
    std::vector<std::int32_t> node_of(n);
    std::vector<std::int32_t> slot_of(1);

    const double lambda = hyper.l2_leaf_penalty;
    const double mcw = hyper.min_child_weight;

    for (int t = 0; t < hyper.n_trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            double prob = sigmoid(margin[i]);
            g[i] = prob - train.y[i];
            h[i] = prob * (1.0 - prob);
        }

        Tree tree;
        tree.nodes.push_back({});
        std::fill(node_of.begin(), node_of.end(), 0);
        std::vector<std::int32_t> level_nodes = {0};

        for (int depth = 0; depth <= hyper.max_depth && !level_nodes.empty(); ++depth) {
            const std::size_t n_slots = level_nodes.size();
            slot_of.assign(tree.nodes.size(), -1);
            for (std::size_t s = 0; s < n_slots; ++s) slot_of[level_nodes[s]] = static_cast<std::int32_t>(s);

            // Node totals, accumulated in row order.
            std::vector<detail::Dd> tot_g(n_slots), tot_h(n_slots);
            for (std::size_t i = 0; i < n; ++i) {
                std::int32_t s = slot_of[node_of[i]];
                if (s < 0) continue;
                tot_g[s].add_prod(train.w[i], g[i]);
                tot_h[s].add_prod(train.w[i], h[i]);
            }

            std::vector<detail::SplitCand> feat_best;
            if (depth < hyper.max_depth) {
                feat_best.assign(p * n_slots, {});
#pragma omp parallel for schedule(static)
                for (std::int64_t f = 0; f < static_cast<std::int64_t>(p); ++f) {
                    std::vector<detail::Dd> acc_g(n_slots), acc_h(n_slots);
                    std::vector<double> prev(n_slots, 0.0);
                    std::vector<char> has_prev(n_slots, 0);
                    detail::SplitCand* best = feat_best.data() + f * n_slots;
                    const auto& idx = sorted_idx[f];
                    const auto& val = sorted_val[f];
                    for (std::size_t k = 0; k < n; ++k) {
                        std::int32_t i = idx[k];
                        std::int32_t s = slot_of[node_of[i]];
                        if (s < 0) continue;
                        double v = val[k];
                        if (has_prev[s] && v > prev[s]) {
                            double gl = acc_g[s].value();
                            double hl = acc_h[s].value();
                            double gr = tot_g[s].minus(acc_g[s]).value();
                            double hr = tot_h[s].minus(acc_h[s]).value();
                            if (hl >= mcw && hr >= mcw) {
                                double gain = split_gain(gl, hl, gr, hr, lambda);
                                if (gain > best[s].gain) {
                                    best[s].gain = gain;
                                    best[s].threshold = 0.5 * (prev[s] + v);
                                }
                            }
                        }
                        acc_g[s].add_prod(train.w[i], g[i]);
                        acc_h[s].add_prod(train.w[i], h[i]);
                        prev[s] = v;
                        has_prev[s] = 1;
                    }
                }
            }

            // Deterministic reduction: ascending feature order, strict improvement.
            std::vector<int> best_feature(n_slots, -1);
            std::vector<detail::SplitCand> best_cand(n_slots);
            for (std::size_t f = 0; f < p && depth < hyper.max_depth; ++f) {
                for (std::size_t s = 0; s < n_slots; ++s) {
                    const detail::SplitCand& c = feat_best[f * n_slots + s];
                    if (c.gain > best_cand[s].gain) {
                        best_cand[s] = c;
                        best_feature[s] = static_cast<int>(f);
                    }
                }
            }

            std::vector<std::int32_t> next_level;
            for (std::size_t s = 0; s < n_slots; ++s) {
                std::int32_t nd = level_nodes[s];
                if (best_feature[s] >= 0 && best_cand[s].gain > 0.0) {
                    TreeNode& parent = tree.nodes[nd];
                    parent.feature = best_feature[s];
                    parent.threshold = best_cand[s].threshold;
                    parent.left = static_cast<int>(tree.nodes.size());
                    parent.right = static_cast<int>(tree.nodes.size() + 1);
                    tree.nodes.push_back({});
                    tree.nodes.push_back({});
                    next_level.push_back(parent.left);
                    next_level.push_back(parent.right);
                } else {
                    tree.nodes[nd].value = detail::leaf_value(tot_g[s], tot_h[s], lambda);
                }
            }

            // Route rows of freshly split nodes to their children.
            for (std::size_t i = 0; i < n; ++i) {
                std::int32_t s = slot_of[node_of[i]];
                if (s < 0) continue;
                const TreeNode& parent = tree.nodes[node_of[i]];
                if (!parent.is_leaf()) {
                    node_of[i] = train.X.at(i, parent.feature) < parent.threshold ? parent.left : parent.right;
                }
            }
            level_nodes = std::move(next_level);
        }

        for (std::size_t i = 0; i < n; ++i) {
            margin[i] += hyper.learning_rate * tree.nodes[node_of[i]].value;
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

// Raw additive score base + lr * sum of the first n_trees trees (all when -1).
inline std::vector<double> predict_margins(const GbmModel& model, const Matrix& X, int n_trees = -1) {
    std::size_t limit = n_trees < 0 ? model.trees.size()
                                    : std::min<std::size_t>(n_trees, model.trees.size());
    std::vector<double> out(X.rows, model.base_score);
    for (std::size_t i = 0; i < X.rows; ++i) {
        const double* xi = X.row(i);
        double acc = 0.0;
        for (std::size_t t = 0; t < limit; ++t) acc += model.trees[t].predict_value(xi);
        out[i] += model.learning_rate * acc;
    }
    return out;
}

// Per-row probability of class 1.
inline std::vector<double> predict_scores(const GbmModel& model, const Matrix& X) {
    if (model.n_features != 0 && X.cols != model.n_features) {
        throw Error("predict_scores: feature count mismatch (" + std::to_string(X.cols) +
                    " vs model " + std::to_string(model.n_features) + ")");
    }
    for (const Tree& t : model.trees) {
        for (const TreeNode& nd : t.nodes) {
            if (!nd.is_leaf() && nd.feature >= static_cast<int>(X.cols)) {
                throw Error("predict_scores: feature count mismatch");
            }
        }
    }
    std::vector<double> out = predict_margins(model, X);
    for (double& v : out) v = sigmoid(v);
    return out;
}

} // namespace fairml
