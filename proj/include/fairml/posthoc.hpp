#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fairml/error.hpp"
#include "fairml/fairness.hpp"
#include "fairml/math.hpp"

namespace fairml {

enum class CostKind { Gfpr, Gfnr };

inline const char* cost_kind_name(CostKind k) { return k == CostKind::Gfpr ? "gfpr" : "gfnr"; }

// Calibrated equalized-odds mixer: the advantaged (lower-cost) group has its
// scores replaced by its base rate with probability mix_probability, which
// equalizes the chosen generalized error rate across groups in expectation.
struct EqOddsMixer {
    CostKind cost_kind = CostKind::Gfpr;
    int target_priv = 1;          // 1 = privileged group gets mixed, 0 = unprivileged
    double mix_probability = 0.0;
    bool clamped = false;
    double base_rate = 0.0;       // target group's weighted positive-label rate
    double cost_priv = 0.0;       // pre-mix generalized costs
    double cost_unpriv = 0.0;
};

// Generalized costs: gfpr = mean score over y=0 rows, gfnr = mean (1-score)
// over y=1 rows, per group. The trivial base-rate predictor has gfpr = br and
// gfnr = 1 - br. Solves (1-p) cost_target + p cost_base = cost_other for p.
inline EqOddsMixer fit_mixer(std::span<const double> scores,
                             std::span<const int> y,
                             std::span<const int> group,
                             std::span<const char> mask,
                             CostKind cost_kind,
                             std::span<const double> weights = {}) {
    detail::check_lengths(scores.size(), y.size(), "fit_mixer");
    detail::check_lengths(scores.size(), group.size(), "fit_mixer");
    if (!mask.empty()) detail::check_lengths(scores.size(), mask.size(), "fit_mixer");
    if (!weights.empty()) detail::check_lengths(scores.size(), weights.size(), "fit_mixer");

    // [group][label] score mass and weight mass
    double mass[2][2] = {{0, 0}, {0, 0}};
    double score_mass[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!mask.empty() && mask[i]) continue;
        double w = weights.empty() ? 1.0 : weights[i];
        int gi = group[i] ? 1 : 0;
        int yi = y[i] ? 1 : 0;
        mass[gi][yi] += w;
        score_mass[gi][yi] += w * scores[i];
    }
    for (int gi = 0; gi < 2; ++gi) {
        for (int yi = 0; yi < 2; ++yi) {
            if (mass[gi][yi] <= 0.0) {
                throw Error(std::string("fit_mixer: ") + (gi ? "privileged" : "unprivileged") +
                            " group has no rows with label " + std::to_string(yi));
            }
        }
    }

    auto cost_of = [&](int gi) {
        if (cost_kind == CostKind::Gfpr) return score_mass[gi][0] / mass[gi][0];
        return 1.0 - score_mass[gi][1] / mass[gi][1];
    };
    auto base_rate_of = [&](int gi) {
        return mass[gi][1] / (mass[gi][0] + mass[gi][1]);
    };

    EqOddsMixer m;
    m.cost_kind = cost_kind;
    m.cost_priv = cost_of(1);
    m.cost_unpriv = cost_of(0);
    m.target_priv = m.cost_priv <= m.cost_unpriv ? 1 : 0;

    double cost_target = m.target_priv ? m.cost_priv : m.cost_unpriv;
    double cost_other = m.target_priv ? m.cost_unpriv : m.cost_priv;
    m.base_rate = base_rate_of(m.target_priv);
    double cost_base = cost_kind == CostKind::Gfpr ? m.base_rate : 1.0 - m.base_rate;

    if (cost_other == cost_target) {
        m.mix_probability = 0.0; // already equalized
        return m;
    }
    if (cost_base == cost_target) {
        throw Error("fit_mixer: base-rate cost equals the target group's cost; mixing cannot move it");
    }
    double raw = (cost_other - cost_target) / (cost_base - cost_target);
    if (raw < 0.0) {
        m.mix_probability = 0.0;
        m.clamped = true;
    } else if (raw > 1.0) {
        m.mix_probability = 1.0;
        m.clamped = true;
    } else {
        m.mix_probability = raw;
    }
    return m;
}

// Each target-group row independently keeps its score or takes the base rate
// with probability mix_probability. Draws are indexed by absolute row, so the
// result is reproducible for a seed no matter how rows are processed.
inline std::vector<double> apply_mixer(const EqOddsMixer& mixer,
                                       std::span<const double> scores,
                                       std::span<const int> group,
                                       std::span<const char> mask,
                                       std::uint64_t seed) {
    detail::check_lengths(scores.size(), group.size(), "apply_mixer");
    if (!mask.empty()) detail::check_lengths(scores.size(), mask.size(), "apply_mixer");
    std::vector<double> out(scores.begin(), scores.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!mask.empty() && mask[i]) continue;
        if ((group[i] ? 1 : 0) != mixer.target_priv) continue;
        if (counter_uniform01(seed, i) < mixer.mix_probability) out[i] = mixer.base_rate;
    }
    return out;
}

} // namespace fairml
