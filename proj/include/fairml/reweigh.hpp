#pragma once

#include <string>

#include "fairml/dataset.hpp"
#include "fairml/error.hpp"

namespace fairml {

// Per-(group, label) reweighing factors making group membership and label
// statistically independent under the weights: w(g,y) = n_g * n_y / (n * n_gy),
// all counts weight-summed over unmasked rows.
struct ReweighingWeights {
    std::string spec_name;
    int favorable_label = 0;
    // indexed [group][favorability]: group 1 = privileged, favorability 1 = favorable
    double weight[2][2] = {{0, 0}, {0, 0}};
    double cell_mass[2][2] = {{0, 0}, {0, 0}};
    double group_mass[2] = {0, 0};
    double label_mass[2] = {0, 0};
    double total_mass = 0;

    double cell_weight(int privileged, int favorable) const { return weight[privileged][favorable]; }
};

namespace detail {
inline const char* cell_name(int g, int f) {
    if (g && f) return "(privileged, favorable)";
    if (g) return "(privileged, unfavorable)";
    if (f) return "(unprivileged, favorable)";
    return "(unprivileged, unfavorable)";
}
} // namespace detail

inline ReweighingWeights compute_weights(const EncodedDataset& train, const GroupSpec& spec) {
    int s = train.spec_index(spec.name);
    if (s < 0) throw Error("compute_weights: dataset has no protected column '" + spec.name + "'");
    const auto& group = train.protected_cols[s];
    const auto& mask = train.missing_masks[s];

    ReweighingWeights rw;
    rw.spec_name = spec.name;
    rw.favorable_label = spec.favorable_label;
    for (std::size_t i = 0; i < train.n_rows(); ++i) {
        if (mask[i]) continue;
        int g = group[i] ? 1 : 0;
        int f = (train.y[i] == spec.favorable_label) ? 1 : 0;
        rw.cell_mass[g][f] += train.w[i];
    }
    for (int g = 0; g < 2; ++g) {
        for (int f = 0; f < 2; ++f) {
            if (rw.cell_mass[g][f] <= 0.0) {
                throw Error(std::string("compute_weights: empty cell ") + detail::cell_name(g, f) +
                            " for spec '" + spec.name + "'");
            }
            rw.group_mass[g] += rw.cell_mass[g][f];
            rw.label_mass[f] += rw.cell_mass[g][f];
        }
    }
    rw.total_mass = rw.group_mass[0] + rw.group_mass[1];
    for (int g = 0; g < 2; ++g) {
        for (int f = 0; f < 2; ++f) {
            rw.weight[g][f] = rw.group_mass[g] * rw.label_mass[f] / (rw.total_mass * rw.cell_mass[g][f]);
        }
    }
    return rw;
}

// Scales each unmasked row's weight by its cell factor; X, y, P untouched;
// masked rows keep their weight. For unit-weight input this equals assigning
// the cell weights directly, and reapplying recomputed weights is a no-op.
inline EncodedDataset apply_weights(const EncodedDataset& train,
                                    const ReweighingWeights& rw,
                                    const GroupSpec& spec) {
    if (rw.spec_name != spec.name) {
        throw Error("apply_weights: weights were computed for spec '" + rw.spec_name +
                    "', not '" + spec.name + "'");
    }
    int s = train.spec_index(spec.name);
    if (s < 0) throw Error("apply_weights: dataset has no protected column '" + spec.name + "'");
    const auto& group = train.protected_cols[s];
    const auto& mask = train.missing_masks[s];

    EncodedDataset out = train;
    for (std::size_t i = 0; i < out.n_rows(); ++i) {
        if (mask[i]) continue;
        int g = group[i] ? 1 : 0;
        int f = (out.y[i] == spec.favorable_label) ? 1 : 0;
        out.w[i] = train.w[i] * rw.weight[g][f];
    }
    return out;
}

} // namespace fairml
