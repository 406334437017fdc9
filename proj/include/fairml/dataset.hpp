#pragma once

#include <algorithm>
#include <cctype>
#include <random>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "fairml/csv.hpp"
#include "fairml/error.hpp"
#include "fairml/math.hpp"

namespace fairml {

// ------------------------------------------------------------------
// group specs
// ------------------------------------------------------------------

enum class GroupRule {
    ValueSets,   // explicit privileged / unprivileged value lists
    AgeMidpoint, // "[lo,hi)" bins, privileged iff (lo+hi)/2 >= threshold
};

// One protected attribute's privileged / unprivileged / favorable-outcome
// definition. Rows matching neither predicate are masked out of group
// statistics but stay in the data.
struct GroupSpec {
    std::string name;
    std::string attribute;
    GroupRule rule = GroupRule::ValueSets;
    std::vector<std::string> privileged_values;
    std::vector<std::string> unprivileged_values;
    bool privileged_rest = false; // privileged = any value not unprivileged and not missing
    std::vector<std::string> missing_values;
    double age_threshold = 25.0;
    int favorable_label = 0;

    void validate() const {
        if (name.empty()) throw Error("group spec: empty name");
        if (attribute.empty()) throw Error("group spec " + name + ": empty attribute");
        if (favorable_label != 0 && favorable_label != 1) {
            throw Error("group spec " + name + ": favorable_label must be 0 or 1");
        }
        if (rule == GroupRule::ValueSets) {
            if (unprivileged_values.empty()) {
                throw Error("group spec " + name + ": unprivileged_values is empty");
            }
            if (privileged_values.empty() && !privileged_rest) {
                throw Error("group spec " + name + ": no privileged predicate");
            }
            if (!privileged_values.empty() && privileged_rest) {
                throw Error("group spec " + name + ": privileged_values and privileged_rest are exclusive");
            }
            for (const auto& v : privileged_values) {
                for (const auto& u : unprivileged_values) {
                    if (v == u) throw Error("group spec " + name + ": predicates overlap on value '" + v + "'");
                }
            }
        }
    }
};

inline GroupSpec default_gender_spec() {
    GroupSpec s;
    s.name = "gender";
    s.attribute = "gender";
    s.privileged_values = {"Male"};
    s.unprivileged_values = {"Female"};
    return s;
}

inline GroupSpec default_race_spec() {
    GroupSpec s;
    s.name = "race";
    s.attribute = "race";
    s.unprivileged_values = {"AfricanAmerican"};
    s.privileged_rest = true;
    s.missing_values = {"?"};
    return s;
}

inline GroupSpec default_age_spec() {
    GroupSpec s;
    s.name = "age";
    s.attribute = "age";
    s.rule = GroupRule::AgeMidpoint;
    s.age_threshold = 25.0;
    s.missing_values = {"?"};
    return s;
}

// ------------------------------------------------------------------
// encoded dataset
// ------------------------------------------------------------------

// Numeric features + binary labels + per-spec binary protected columns +
// per-row weights. Parallel arrays; row order everywhere matches the input.
struct EncodedDataset {
    Matrix X;
    std::vector<int> y;
    std::vector<double> w;
    std::vector<std::string> feature_names;
    std::vector<std::string> row_ids;

    std::vector<std::string> spec_names;
    std::vector<std::vector<int>> protected_cols;    // per spec: 1 privileged, 0 unprivileged
    std::vector<std::vector<char>> missing_masks;    // per spec: 1 = matched neither predicate

    std::size_t n_rows() const { return y.size(); }
    std::size_t n_features() const { return X.cols; }

    int spec_index(const std::string& name) const {
        for (std::size_t i = 0; i < spec_names.size(); ++i) {
            if (spec_names[i] == name) return static_cast<int>(i);
        }
        return -1;
    }

    void validate() const {
        std::size_t n = y.size();
        if (w.size() != n || X.rows != n || row_ids.size() != n) {
            throw Error("encoded dataset: row-count mismatch across columns");
        }
        for (double wi : w) {
            if (!(wi > 0.0)) throw Error("encoded dataset: non-positive weight");
        }
        for (int yi : y) {
            if (yi != 0 && yi != 1) throw Error("encoded dataset: non-binary label");
        }
        for (std::size_t s = 0; s < protected_cols.size(); ++s) {
            if (protected_cols[s].size() != n || missing_masks[s].size() != n) {
                throw Error("encoded dataset: protected column length mismatch");
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (!missing_masks[s][i] && protected_cols[s][i] != 0 && protected_cols[s][i] != 1) {
                    throw Error("encoded dataset: non-binary protected value");
                }
            }
        }
    }
};

// ------------------------------------------------------------------
// label derivation
// ------------------------------------------------------------------

namespace detail {
inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}
} // namespace detail

// y = 1 iff readmitted within 30 days ("<30"); ">30" and "NO" map to 0.
inline std::vector<int> derive_label(const RecordTable& table) {
    int col = table.column_index("readmitted");
    if (col < 0) throw Error("derive_label: no 'readmitted' column");
    std::vector<int> y;
    y.reserve(table.n_rows());
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        std::string v = detail::lower(table.rows[i][col]);
        if (v == "<30") {
            y.push_back(1);
        } else if (v == ">30" || v == "no") {
            y.push_back(0);
        } else {
            throw Error("derive_label: unknown readmitted value '" + table.rows[i][col] +
                        "' at row " + std::to_string(i));
        }
    }
    return y;
}

// ------------------------------------------------------------------
// protected-attribute binarization
// ------------------------------------------------------------------

struct BinarizedColumn {
    std::vector<int> group;    // 1 privileged, 0 unprivileged (meaningless where masked)
    std::vector<char> missing; // 1 = matched neither predicate
};

// Parses "[lo,hi)" (and the dash form "[lo-hi)" the published csv uses)
// to (lo+hi)/2.
inline double age_bin_midpoint(const std::string& bin) {
    std::size_t sep = bin.find(',');
    if (sep == std::string::npos) sep = bin.find('-', 2);
    if (bin.size() < 5 || bin.front() != '[' || sep == std::string::npos ||
        (bin.back() != ')' && bin.back() != ']')) {
        throw Error("unparseable age bin '" + bin + "'");
    }
    try {
        double lo = std::stod(bin.substr(1, sep - 1));
        double hi = std::stod(bin.substr(sep + 1, bin.size() - sep - 2));
        return 0.5 * (lo + hi);
    } catch (const std::exception&) {
        throw Error("unparseable age bin '" + bin + "'");
    }
}

inline BinarizedColumn binarize_protected(const RecordTable& table, const GroupSpec& spec) {
    spec.validate();
    int col = table.column_index(spec.attribute);
    if (col < 0) throw Error("binarize_protected: missing column '" + spec.attribute + "'");

    auto contains = [](const std::vector<std::string>& xs, const std::string& v) {
        return std::find(xs.begin(), xs.end(), v) != xs.end();
    };

    BinarizedColumn out;
    out.group.resize(table.n_rows(), 0);
    out.missing.resize(table.n_rows(), 0);
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        const std::string& v = table.rows[i][col];
        if (contains(spec.missing_values, v)) {
            out.missing[i] = 1;
            continue;
        }
        if (spec.rule == GroupRule::AgeMidpoint) {
            out.group[i] = age_bin_midpoint(v) >= spec.age_threshold ? 1 : 0;
        } else if (contains(spec.unprivileged_values, v)) {
            out.group[i] = 0;
        } else if (spec.privileged_rest || contains(spec.privileged_values, v)) {
            out.group[i] = 1;
        } else {
            out.missing[i] = 1;
        }
    }
    return out;
}

// ------------------------------------------------------------------
// feature encoding
// ------------------------------------------------------------------

struct EncodeConfig {
    std::vector<std::string> id_columns;      // dropped (identifiers)
    std::vector<std::string> drop_columns;    // dropped (anything else)
    std::vector<std::string> numeric_columns; // parsed as reals, "?" median-imputed
    std::vector<GroupSpec> group_specs;
    bool include_protected_features = true;
    std::string label_column = "readmitted";
    std::string row_id_column = "encounter_id";
};

// Numeric columns are parsed with "?" -> column-median imputation; nominal
// columns are one-hot encoded with one indicator per observed category ("?"
// becomes its own category). Feature order: table column order, categories
// lexicographic. Listed columns absent from the table are ignored.
inline EncodedDataset encode_features(const RecordTable& table, const EncodeConfig& cfg) {
    const std::size_t n = table.n_rows();

    EncodedDataset ds;
    ds.y = derive_label(table);

    for (const auto& spec : cfg.group_specs) {
        BinarizedColumn b = binarize_protected(table, spec);
        ds.spec_names.push_back(spec.name);
        ds.protected_cols.push_back(std::move(b.group));
        ds.missing_masks.push_back(std::move(b.missing));
    }

    std::unordered_set<std::string> dropped(cfg.id_columns.begin(), cfg.id_columns.end());
    dropped.insert(cfg.drop_columns.begin(), cfg.drop_columns.end());
    dropped.insert(cfg.label_column);
    if (!cfg.include_protected_features) {
        for (const auto& spec : cfg.group_specs) dropped.insert(spec.attribute);
    }
    std::unordered_set<std::string> numeric(cfg.numeric_columns.begin(), cfg.numeric_columns.end());

    struct NumericCol {
        int col;
        std::string name;
    };
    struct NominalCol {
        int col;
        std::string name;
        std::vector<std::string> categories; // lexicographic
    };

    // First pass: decide the feature layout.
    std::vector<std::string> names;
    struct Block {
        bool is_numeric;
        int col;
        std::vector<std::string> categories;
        std::size_t first_feature;
    };
    std::vector<Block> blocks;
    for (std::size_t c = 0; c < table.column_names.size(); ++c) {
        const std::string& col_name = table.column_names[c];
        if (dropped.count(col_name)) continue;
        if (numeric.count(col_name)) {
            blocks.push_back({true, static_cast<int>(c), {}, names.size()});
            names.push_back(col_name);
        } else {
            std::set<std::string> cats;
            for (std::size_t i = 0; i < n; ++i) cats.insert(table.rows[i][static_cast<int>(c)]);
            Block b{false, static_cast<int>(c), std::vector<std::string>(cats.begin(), cats.end()), names.size()};
            for (const auto& cat : b.categories) names.push_back(col_name + "=" + cat);
            blocks.push_back(std::move(b));
        }
    }

    ds.feature_names = names;
    ds.X = Matrix(n, names.size(), 0.0);

    // Second pass: fill values.
    for (const auto& b : blocks) {
        if (b.is_numeric) {
            std::vector<double> parsed(n, 0.0);
            std::vector<char> miss(n, 0);
            std::vector<double> present;
            for (std::size_t i = 0; i < n; ++i) {
                const std::string& cell = table.rows[i][b.col];
                if (cell == "?" || cell.empty()) {
                    miss[i] = 1;
                    continue;
                }
                try {
                    std::size_t used = 0;
                    parsed[i] = std::stod(cell, &used);
                    if (used != cell.size()) throw std::invalid_argument(cell);
                } catch (const std::exception&) {
                    throw Error("encode_features: cannot parse '" + cell + "' in numeric column '" +
                                table.column_names[b.col] + "' at row " + std::to_string(i));
                }
                present.push_back(parsed[i]);
            }
            if (present.empty()) {
                throw Error("encode_features: numeric column '" + table.column_names[b.col] +
                            "' has no parseable values");
            }
            std::sort(present.begin(), present.end());
            std::size_t m = present.size();
            double median = (m % 2 == 1) ? present[m / 2] : 0.5 * (present[m / 2 - 1] + present[m / 2]);
            for (std::size_t i = 0; i < n; ++i) {
                ds.X.at(i, b.first_feature) = miss[i] ? median : parsed[i];
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                const std::string& cell = table.rows[i][b.col];
                auto it = std::lower_bound(b.categories.begin(), b.categories.end(), cell);
                std::size_t k = static_cast<std::size_t>(it - b.categories.begin());
                ds.X.at(i, b.first_feature + k) = 1.0;
            }
        }
    }

    int id_col = table.column_index(cfg.row_id_column);
    ds.row_ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ds.row_ids.push_back(id_col >= 0 ? table.rows[i][id_col] : std::to_string(i));
    }
    ds.w.assign(n, 1.0);
    return ds;
}

// Optional cohort filter: removes rows whose discharge disposition denotes
// death or hospice (codes 11, 13, 14, 19, 20, 21).
inline RecordTable drop_expired_discharges(const RecordTable& table) {
    int col = table.column_index("discharge_disposition_id");
    if (col < 0) throw Error("drop_expired_discharges: no 'discharge_disposition_id' column");
    static const std::unordered_set<std::string> kExpired = {"11", "13", "14", "19", "20", "21"};
    RecordTable out;
    out.column_names = table.column_names;
    for (const auto& row : table.rows) {
        if (!kExpired.count(row[col])) out.rows.push_back(row);
    }
    return out;
}

// ------------------------------------------------------------------
// train/test split
// ------------------------------------------------------------------

namespace detail {

// Fisher-Yates against the raw engine stream; std::shuffle's draw sequence
// is implementation-defined, this one reproduces across standard libraries.
inline void seeded_shuffle(std::vector<std::size_t>& xs, std::mt19937_64& rng) {
    for (std::size_t i = xs.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(xs[i - 1], xs[j]);
    }
}

inline EncodedDataset take_rows(const EncodedDataset& d, const std::vector<std::size_t>& idx) {
    EncodedDataset out;
    out.feature_names = d.feature_names;
    out.spec_names = d.spec_names;
    out.X = Matrix(idx.size(), d.X.cols);
    out.y.reserve(idx.size());
    out.w.reserve(idx.size());
    out.row_ids.reserve(idx.size());
    out.protected_cols.resize(d.protected_cols.size());
    out.missing_masks.resize(d.missing_masks.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        std::size_t i = idx[k];
        std::copy(d.X.row(i), d.X.row(i) + d.X.cols, out.X.row(k));
        out.y.push_back(d.y[i]);
        out.w.push_back(d.w[i]);
        out.row_ids.push_back(d.row_ids[i]);
    }
    for (std::size_t s = 0; s < d.protected_cols.size(); ++s) {
        out.protected_cols[s].reserve(idx.size());
        out.missing_masks[s].reserve(idx.size());
        for (std::size_t i : idx) {
            out.protected_cols[s].push_back(d.protected_cols[s][i]);
            out.missing_masks[s].push_back(d.missing_masks[s][i]);
        }
    }
    return out;
}
} // namespace detail

// Stratified on y, deterministic given seed, exact partition. Row order
// within each side follows the input order.
inline std::pair<EncodedDataset, EncodedDataset> split(const EncodedDataset& data,
                                                       double test_fraction,
                                                       std::uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
        throw Error("split: test_fraction must lie in [0,1]");
    }
    const std::size_t n = data.n_rows();
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;

    if (test_fraction == 0.0) return {detail::take_rows(data, all), detail::take_rows(data, {})};
    if (test_fraction == 1.0) return {detail::take_rows(data, {}), detail::take_rows(data, all)};

    std::vector<std::size_t> strata[2];
    for (std::size_t i = 0; i < n; ++i) strata[data.y[i]].push_back(i);

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> test_idx, train_idx;
    for (auto& stratum : strata) {
        if (stratum.empty()) continue;
        std::size_t n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(stratum.size()) + 0.5));
        if (n_test == 0 || n_test == stratum.size()) {
            throw Error("split: stratum of " + std::to_string(stratum.size()) +
                        " rows cannot supply both sides at fraction " + std::to_string(test_fraction));
        }
        detail::seeded_shuffle(stratum, rng);
        test_idx.insert(test_idx.end(), stratum.begin(), stratum.begin() + n_test);
        train_idx.insert(train_idx.end(), stratum.begin() + n_test, stratum.end());
    }
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    return {detail::take_rows(data, train_idx), detail::take_rows(data, test_idx)};
}

} // namespace fairml
