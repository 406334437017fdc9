#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fairml/dataset.hpp"
#include "fairml/error.hpp"

namespace fairml {

// ------------------------------------------------------------------
// thresholded classification
// ------------------------------------------------------------------

// y_hat = 1 iff score >= threshold.
inline std::vector<int> classify(std::span<const double> scores, double threshold = 0.5) {
    std::vector<int> out;
    out.reserve(scores.size());
    for (double s : scores) out.push_back(s >= threshold ? 1 : 0);
    return out;
}

// ------------------------------------------------------------------
// group confusion counts
// ------------------------------------------------------------------

// Weight-summed confusion counts per group. Positives are label value 1.
struct GroupCounts {
    double tp = 0, fp = 0, tn = 0, fn = 0;

    double total() const { return tp + fp + tn + fn; }
    bool has_tpr() const { return tp + fn > 0; }
    bool has_fpr() const { return fp + tn > 0; }
    double tpr() const {
        if (!has_tpr()) throw Error("undefined TPR: no positive labels in group");
        return tp / (tp + fn);
    }
    double fpr() const {
        if (!has_fpr()) throw Error("undefined FPR: no negative labels in group");
        return fp / (fp + tn);
    }
    double tnr() const { return 1.0 - fpr(); }
    double fnr() const { return 1.0 - tpr(); }
};

struct GroupConfusion {
    GroupCounts priv;
    GroupCounts unpriv;
};

namespace detail {
inline void check_lengths(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw Error(std::string(what) + ": length mismatch");
}
} // namespace detail

inline GroupConfusion confusion_by_group(std::span<const int> y,
                                         std::span<const int> y_hat,
                                         std::span<const int> group,
                                         std::span<const char> mask = {},
                                         std::span<const double> weights = {}) {
    detail::check_lengths(y.size(), y_hat.size(), "confusion_by_group");
    detail::check_lengths(y.size(), group.size(), "confusion_by_group");
    if (!mask.empty()) detail::check_lengths(y.size(), mask.size(), "confusion_by_group");
    if (!weights.empty()) detail::check_lengths(y.size(), weights.size(), "confusion_by_group");

    GroupConfusion c;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!mask.empty() && mask[i]) continue;
        double w = weights.empty() ? 1.0 : weights[i];
        GroupCounts& g = group[i] ? c.priv : c.unpriv;
        if (y[i] == 1) {
            (y_hat[i] == 1 ? g.tp : g.fn) += w;
        } else {
            (y_hat[i] == 1 ? g.fp : g.tn) += w;
        }
    }
    if (c.priv.total() == 0) throw Error("confusion_by_group: empty privileged group");
    if (c.unpriv.total() == 0) throw Error("confusion_by_group: empty unprivileged group");
    return c;
}

// ------------------------------------------------------------------
// fairness metrics
// ------------------------------------------------------------------

struct DiResult {
    double value = 0.0;          // +inf when the privileged favorable rate is zero
    bool priv_rate_zero = false;
    double favorable_rate_priv = 0.0;
    double favorable_rate_unpriv = 0.0;
    double n_priv = 0.0;   // unmasked member count per group
    double n_unpriv = 0.0;
};

// Pr(outcome = favorable | unprivileged) / Pr(outcome = favorable | privileged).
// Outcomes may be true labels (dataset-level) or predictions (model-level).
inline DiResult disparate_impact(std::span<const int> outcomes,
                                 std::span<const int> group,
                                 std::span<const char> mask = {},
                                 int favorable_label = 0,
                                 std::span<const double> weights = {}) {
    detail::check_lengths(outcomes.size(), group.size(), "disparate_impact");
    if (!mask.empty()) detail::check_lengths(outcomes.size(), mask.size(), "disparate_impact");
    if (!weights.empty()) detail::check_lengths(outcomes.size(), weights.size(), "disparate_impact");

    double mass[2] = {0, 0}, fav[2] = {0, 0};
    double count[2] = {0, 0};
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!mask.empty() && mask[i]) continue;
        double w = weights.empty() ? 1.0 : weights[i];
        int g = group[i] ? 1 : 0;
        mass[g] += w;
        count[g] += 1.0;
        if (outcomes[i] == favorable_label) fav[g] += w;
    }
    if (count[1] == 0) throw Error("disparate_impact: empty privileged group");
    if (count[0] == 0) throw Error("disparate_impact: empty unprivileged group");

    DiResult r;
    r.favorable_rate_priv = fav[1] / mass[1];
    r.favorable_rate_unpriv = fav[0] / mass[0];
    r.n_priv = count[1];
    r.n_unpriv = count[0];
    if (r.favorable_rate_priv == 0.0) {
        r.priv_rate_zero = true;
        r.value = std::numeric_limits<double>::infinity();
    } else {
        r.value = r.favorable_rate_unpriv / r.favorable_rate_priv;
    }
    return r;
}

// |1 - di|; kept near zero by a fair model.
inline double di_score(double di) {
    if (!(di >= 0.0)) throw Error("di_score: di must be >= 0");
    return std::fabs(1.0 - di);
}

// 1/2 [(FPR_u - FPR_p) + (TPR_u - TPR_p)].
inline double average_odds_difference(const GroupConfusion& c) {
    return 0.5 * ((c.unpriv.fpr() - c.priv.fpr()) + (c.unpriv.tpr() - c.priv.tpr()));
}

// TPR_u - TPR_p.
inline double equal_opportunity_difference(const GroupConfusion& c) {
    return c.unpriv.tpr() - c.priv.tpr();
}

// (TPR + TNR)/2 over all rows, ungrouped.
inline double balanced_accuracy(std::span<const int> y, std::span<const int> y_hat) {
    detail::check_lengths(y.size(), y_hat.size(), "balanced_accuracy");
    double tp = 0, fn = 0, tn = 0, fp = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 1) {
            (y_hat[i] == 1 ? tp : fn) += 1.0;
        } else {
            (y_hat[i] == 1 ? fp : tn) += 1.0;
        }
    }
    if (tp + fn == 0 || tn + fp == 0) {
        throw Error("balanced_accuracy: both classes must be present");
    }
    return 0.5 * (tp / (tp + fn) + tn / (tn + fp));
}

// ------------------------------------------------------------------
// audit report
// ------------------------------------------------------------------

// All metric values plus group counts and base rates for one evaluation.
// Dataset-level audits fill only the DI fields (has_prediction_metrics off).
struct FairnessReport {
    std::string spec_name;
    double di = 0.0;
    double di_score = 0.0;
    bool di_infinite = false;
    double avg_odd = 0.0;
    double eq_opp = 0.0;
    double balanced_acc = 0.0;
    bool has_prediction_metrics = false;
    double favorable_rate_priv = 0.0;
    double favorable_rate_unpriv = 0.0;
    double n_priv = 0.0;
    double n_unpriv = 0.0;
    bool biased = false;
};

// Four-fifths verdict, symmetric: biased iff di < t or di > 1/t.
inline bool four_fifths_biased(double di, double threshold) {
    if (threshold == 0.0) return false; // disables the rule
    return di < threshold || di > 1.0 / threshold;
}

// Dataset- or prediction-level DI audit for one spec.
inline FairnessReport audit(std::span<const int> outcomes,
                            std::span<const int> group,
                            std::span<const char> mask,
                            const GroupSpec& spec,
                            double threshold = 0.8,
                            std::span<const double> weights = {}) {
    DiResult di = disparate_impact(outcomes, group, mask, spec.favorable_label, weights);
    FairnessReport r;
    r.spec_name = spec.name;
    r.di = di.value;
    r.di_infinite = di.priv_rate_zero;
    r.di_score = di.priv_rate_zero ? std::numeric_limits<double>::infinity() : di_score(di.value);
    r.favorable_rate_priv = di.favorable_rate_priv;
    r.favorable_rate_unpriv = di.favorable_rate_unpriv;
    r.n_priv = di.n_priv;
    r.n_unpriv = di.n_unpriv;
    r.biased = four_fifths_biased(r.di, threshold);
    return r;
}

// Full prediction-level report: DI on predictions plus the odds/opportunity
// gaps and overall balanced accuracy.
inline FairnessReport evaluate_predictions(std::span<const int> y,
                                           std::span<const int> y_hat,
                                           std::span<const int> group,
                                           std::span<const char> mask,
                                           const GroupSpec& spec,
                                           double threshold = 0.8) {
    FairnessReport r = audit(y_hat, group, mask, spec, threshold);
    GroupConfusion c = confusion_by_group(y, y_hat, group, mask);
    r.avg_odd = average_odds_difference(c);
    r.eq_opp = equal_opportunity_difference(c);
    r.balanced_acc = balanced_accuracy(y, y_hat);
    r.has_prediction_metrics = true;
    return r;
}

} // namespace fairml
