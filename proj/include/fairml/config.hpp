#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairml/dataset.hpp"
#include "fairml/error.hpp"
#include "fairml/gbm.hpp"
#include "fairml/logistic.hpp"
#include "fairml/posthoc.hpp"

namespace fairml {

struct PosthocConfig {
    bool enabled = false;
    CostKind cost_kind = CostKind::Gfpr;
};

// Everything a pipeline run needs; parses from a JSON document whose schema
// admits exactly these keys (unknown keys are errors).
struct PipelineConfig {
    std::string data_path = "data/diabetic_data.csv";
    std::string report_path = "report";
    std::vector<std::string> id_columns = {"encounter_id", "patient_nbr"};
    std::vector<std::string> drop_columns = {"diag_1", "diag_2", "diag_3"};
    std::vector<std::string> numeric_columns = {
        "time_in_hospital", "num_lab_procedures", "num_procedures", "num_medications",
        "number_outpatient", "number_emergency", "number_inpatient", "number_diagnoses"};
    bool exclude_protected_features = false;
    bool exclude_expired_discharges = false;
    std::vector<GroupSpec> group_specs;
    std::string mitigation_spec = "age";
    double audit_threshold = 0.8;
    double test_fraction = 0.3;
    std::uint64_t seed = 42;
    std::string learner = "gbm"; // "gbm" | "logistic"
    GbmHyper gbm;
    LogisticHyper logistic;
    bool auto_threshold = true;      // pick the balanced-accuracy-maximizing threshold
    double decision_threshold = 0.5; // used when auto_threshold is off
    PosthocConfig posthoc;
    int max_reprocess = 0;

    void validate(bool full_run = true) const {
        if (data_path.empty()) throw Error("config: data_path is empty");
        if (group_specs.empty()) throw Error("config: group_specs is empty");
        std::set<std::string> names;
        for (const auto& s : group_specs) {
            s.validate();
            if (!names.insert(s.name).second) throw Error("config: duplicate group spec name '" + s.name + "'");
        }
        if (!names.count(mitigation_spec)) {
            throw Error("config: mitigation_spec '" + mitigation_spec + "' names no group spec");
        }
        if (audit_threshold < 0.0 || audit_threshold > 1.0) {
            throw Error("config: audit_threshold must lie in [0,1]");
        }
        if (full_run && !(test_fraction > 0.0 && test_fraction < 1.0)) {
            throw Error("config: test_fraction must lie in (0,1) for a full run");
        }
        if (learner != "gbm" && learner != "logistic") {
            throw Error("config: learner must be 'gbm' or 'logistic'");
        }
        if (!auto_threshold && !(decision_threshold >= 0.0 && decision_threshold <= 1.0)) {
            throw Error("config: decision_threshold must lie in [0,1]");
        }
        if (max_reprocess < 0) throw Error("config: max_reprocess must be >= 0");
    }

    const GroupSpec& mitigation() const {
        for (const auto& s : group_specs) {
            if (s.name == mitigation_spec) return s;
        }
        throw Error("config: mitigation_spec '" + mitigation_spec + "' names no group spec");
    }

    EncodeConfig encode_config() const {
        EncodeConfig e;
        e.id_columns = id_columns;
        e.drop_columns = drop_columns;
        e.numeric_columns = numeric_columns;
        e.group_specs = group_specs;
        e.include_protected_features = !exclude_protected_features;
        return e;
    }
};

// Defaults for the Diabetes 130-US hospitals file. Group predicates follow
// the usual privileged definitions (male; non-Black; age bins with midpoint
// at or past 25); the favorable outcome is label 1 so audits compare the
// groups' positive-outcome rates directly.
inline PipelineConfig diabetes_default_config() {
    PipelineConfig cfg;
    GroupSpec age = default_age_spec();
    GroupSpec gender = default_gender_spec();
    GroupSpec race = default_race_spec();
    age.favorable_label = 1;
    gender.favorable_label = 1;
    race.favorable_label = 1;
    cfg.group_specs = {age, gender, race};
    return cfg;
}

// ------------------------------------------------------------------
// JSON round trip
// ------------------------------------------------------------------

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known,
                                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) {
            throw Error("config: unknown key '" + it.key() + "' in " + where);
        }
    }
}

inline GroupSpec group_spec_from_json(const nlohmann::json& j) {
    reject_unknown_keys(j,
                        {"name", "attribute", "rule", "privileged_values", "unprivileged_values",
                         "privileged_rest", "missing_values", "age_threshold", "favorable_label"},
                        "group spec");
    GroupSpec s;
    s.name = j.at("name").get<std::string>();
    s.attribute = j.value("attribute", s.name);
    std::string rule = j.value("rule", std::string("values"));
    if (rule == "values") {
        s.rule = GroupRule::ValueSets;
    } else if (rule == "age_midpoint") {
        s.rule = GroupRule::AgeMidpoint;
    } else {
        throw Error("config: group spec rule must be 'values' or 'age_midpoint', got '" + rule + "'");
    }
    if (j.contains("privileged_values")) j.at("privileged_values").get_to(s.privileged_values);
    if (j.contains("unprivileged_values")) j.at("unprivileged_values").get_to(s.unprivileged_values);
    s.privileged_rest = j.value("privileged_rest", false);
    if (j.contains("missing_values")) j.at("missing_values").get_to(s.missing_values);
    s.age_threshold = j.value("age_threshold", 25.0);
    s.favorable_label = j.value("favorable_label", 0);
    return s;
}

inline nlohmann::ordered_json group_spec_to_json(const GroupSpec& s) {
    nlohmann::ordered_json j;
    j["name"] = s.name;
    j["attribute"] = s.attribute;
    j["rule"] = s.rule == GroupRule::AgeMidpoint ? "age_midpoint" : "values";
    j["privileged_values"] = s.privileged_values;
    j["unprivileged_values"] = s.unprivileged_values;
    j["privileged_rest"] = s.privileged_rest;
    j["missing_values"] = s.missing_values;
    j["age_threshold"] = s.age_threshold;
    j["favorable_label"] = s.favorable_label;
    return j;
}

} // namespace detail

// Parses a config document on top of the diabetes defaults; any present key
// overrides, unknown keys are rejected.
inline PipelineConfig config_from_json(const nlohmann::json& j);

namespace detail {
inline PipelineConfig config_from_json_impl(const nlohmann::json& j) {
    reject_unknown_keys(
        j, {"data_path",  "report_path",      "id_columns",       "drop_columns",
            "numeric_columns", "exclude_protected_features", "exclude_expired_discharges",
            "group_specs", "mitigation_spec", "audit_threshold",  "test_fraction",
            "seed",        "learner",         "gbm",              "logistic",
            "decision_threshold", "posthoc",  "max_reprocess"},
        "config");

    PipelineConfig cfg = diabetes_default_config();
    if (j.contains("data_path")) j.at("data_path").get_to(cfg.data_path);
    if (j.contains("report_path")) j.at("report_path").get_to(cfg.report_path);
    if (j.contains("id_columns")) j.at("id_columns").get_to(cfg.id_columns);
    if (j.contains("drop_columns")) j.at("drop_columns").get_to(cfg.drop_columns);
    if (j.contains("numeric_columns")) j.at("numeric_columns").get_to(cfg.numeric_columns);
    if (j.contains("exclude_protected_features")) j.at("exclude_protected_features").get_to(cfg.exclude_protected_features);
    if (j.contains("exclude_expired_discharges")) j.at("exclude_expired_discharges").get_to(cfg.exclude_expired_discharges);
    if (j.contains("group_specs")) {
        cfg.group_specs.clear();
        for (const auto& sj : j.at("group_specs")) cfg.group_specs.push_back(detail::group_spec_from_json(sj));
    }
    if (j.contains("mitigation_spec")) j.at("mitigation_spec").get_to(cfg.mitigation_spec);
    if (j.contains("audit_threshold")) j.at("audit_threshold").get_to(cfg.audit_threshold);
    if (j.contains("test_fraction")) j.at("test_fraction").get_to(cfg.test_fraction);
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("learner")) j.at("learner").get_to(cfg.learner);
    if (j.contains("gbm")) {
        const auto& g = j.at("gbm");
        detail::reject_unknown_keys(g, {"n_trees", "max_depth", "learning_rate", "l2_leaf_penalty", "min_child_weight"}, "gbm");
        cfg.gbm.n_trees = g.value("n_trees", cfg.gbm.n_trees);
        cfg.gbm.max_depth = g.value("max_depth", cfg.gbm.max_depth);
        cfg.gbm.learning_rate = g.value("learning_rate", cfg.gbm.learning_rate);
        cfg.gbm.l2_leaf_penalty = g.value("l2_leaf_penalty", cfg.gbm.l2_leaf_penalty);
        cfg.gbm.min_child_weight = g.value("min_child_weight", cfg.gbm.min_child_weight);
    }
    if (j.contains("logistic")) {
        const auto& l = j.at("logistic");
        detail::reject_unknown_keys(l, {"l2", "learning_rate", "max_iters", "tol"}, "logistic");
        cfg.logistic.l2 = l.value("l2", cfg.logistic.l2);
        cfg.logistic.learning_rate = l.value("learning_rate", cfg.logistic.learning_rate);
        cfg.logistic.max_iters = l.value("max_iters", cfg.logistic.max_iters);
        cfg.logistic.tol = l.value("tol", cfg.logistic.tol);
    }
    if (j.contains("decision_threshold")) {
        const auto& t = j.at("decision_threshold");
        if (t.is_string()) {
            if (t.get<std::string>() != "auto") {
                throw Error("config: decision_threshold must be a number or \"auto\"");
            }
            cfg.auto_threshold = true;
        } else {
            cfg.auto_threshold = false;
            t.get_to(cfg.decision_threshold);
        }
    }
    if (j.contains("posthoc")) {
        const auto& ph = j.at("posthoc");
        detail::reject_unknown_keys(ph, {"enabled", "cost_kind"}, "posthoc");
        cfg.posthoc.enabled = ph.value("enabled", false);
        std::string kind = ph.value("cost_kind", std::string("gfpr"));
        if (kind == "gfpr") {
            cfg.posthoc.cost_kind = CostKind::Gfpr;
        } else if (kind == "gfnr") {
            cfg.posthoc.cost_kind = CostKind::Gfnr;
        } else {
            throw Error("config: posthoc.cost_kind must be 'gfpr' or 'gfnr'");
        }
    }
    if (j.contains("max_reprocess")) j.at("max_reprocess").get_to(cfg.max_reprocess);
    return cfg;
}
} // namespace detail

inline PipelineConfig config_from_json(const nlohmann::json& j) {
    try {
        return detail::config_from_json_impl(j);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("config: ") + e.what());
    }
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed config " + path + ": " + e.what());
    }
    return config_from_json(j);
}

// Effective-config echo (fully resolved, defaults included).
inline nlohmann::ordered_json config_to_json(const PipelineConfig& cfg) {
    nlohmann::ordered_json j;
    j["data_path"] = cfg.data_path;
    j["report_path"] = cfg.report_path;
    j["id_columns"] = cfg.id_columns;
    j["drop_columns"] = cfg.drop_columns;
    j["numeric_columns"] = cfg.numeric_columns;
    j["exclude_protected_features"] = cfg.exclude_protected_features;
    j["exclude_expired_discharges"] = cfg.exclude_expired_discharges;
    nlohmann::ordered_json specs = nlohmann::ordered_json::array();
    for (const auto& s : cfg.group_specs) specs.push_back(detail::group_spec_to_json(s));
    j["group_specs"] = std::move(specs);
    j["mitigation_spec"] = cfg.mitigation_spec;
    j["audit_threshold"] = cfg.audit_threshold;
    j["test_fraction"] = cfg.test_fraction;
    j["seed"] = cfg.seed;
    j["learner"] = cfg.learner;
    j["gbm"] = {{"n_trees", cfg.gbm.n_trees},
                {"max_depth", cfg.gbm.max_depth},
                {"learning_rate", cfg.gbm.learning_rate},
                {"l2_leaf_penalty", cfg.gbm.l2_leaf_penalty},
                {"min_child_weight", cfg.gbm.min_child_weight}};
    j["logistic"] = {{"l2", cfg.logistic.l2},
                     {"learning_rate", cfg.logistic.learning_rate},
                     {"max_iters", cfg.logistic.max_iters},
                     {"tol", cfg.logistic.tol}};
    if (cfg.auto_threshold) {
        j["decision_threshold"] = "auto";
    } else {
        j["decision_threshold"] = cfg.decision_threshold;
    }
    j["posthoc"] = {{"enabled", cfg.posthoc.enabled}, {"cost_kind", cost_kind_name(cfg.posthoc.cost_kind)}};
    j["max_reprocess"] = cfg.max_reprocess;
    return j;
}

} // namespace fairml
