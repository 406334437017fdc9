#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "fairml/error.hpp"
#include "fairml/gbm.hpp"
#include "fairml/logistic.hpp"

namespace fairml {

inline constexpr int kModelSchemaVersion = 1;

// Trees serialize as nested arrays, one [feature, threshold, left, right, value]
// entry per node; linear models as coefficient arrays plus standardization
// constants.

inline nlohmann::ordered_json to_json(const LinearModel& m) {
    nlohmann::ordered_json j;
    j["schema_version"] = kModelSchemaVersion;
    j["kind"] = "logistic";
    j["coefficients"] = m.coefficients;
    j["intercept"] = m.intercept;
    j["feature_mean"] = m.feature_mean;
    j["feature_scale"] = m.feature_scale;
    j["iterations"] = m.iterations;
    j["final_loss"] = m.final_loss;
    return j;
}

inline nlohmann::ordered_json to_json(const GbmModel& m) {
    nlohmann::ordered_json j;
    j["schema_version"] = kModelSchemaVersion;
    j["kind"] = "gbm";
    j["base_score"] = m.base_score;
    j["learning_rate"] = m.learning_rate;
    j["n_features"] = m.n_features;
    j["n_trees"] = m.hyper.n_trees;
    j["max_depth"] = m.hyper.max_depth;
    j["l2_leaf_penalty"] = m.hyper.l2_leaf_penalty;
    j["min_child_weight"] = m.hyper.min_child_weight;
    nlohmann::ordered_json trees = nlohmann::ordered_json::array();
    for (const Tree& t : m.trees) {
        nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
        for (const TreeNode& nd : t.nodes) {
            nodes.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.value});
        }
        trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    return j;
}

inline LinearModel linear_model_from_json(const nlohmann::json& j) {
    if (j.at("kind") != "logistic") throw Error("model file is not a logistic model");
    LinearModel m;
    j.at("coefficients").get_to(m.coefficients);
    j.at("intercept").get_to(m.intercept);
    j.at("feature_mean").get_to(m.feature_mean);
    j.at("feature_scale").get_to(m.feature_scale);
    j.at("iterations").get_to(m.iterations);
    j.at("final_loss").get_to(m.final_loss);
    return m;
}

inline GbmModel gbm_model_from_json(const nlohmann::json& j) {
    if (j.at("kind") != "gbm") throw Error("model file is not a gbm model");
    GbmModel m;
    j.at("base_score").get_to(m.base_score);
    j.at("learning_rate").get_to(m.learning_rate);
    m.n_features = j.value("n_features", std::size_t{0});
    m.hyper.n_trees = j.at("n_trees").get<int>();
    m.hyper.max_depth = j.at("max_depth").get<int>();
    m.hyper.learning_rate = m.learning_rate;
    m.hyper.l2_leaf_penalty = j.at("l2_leaf_penalty").get<double>();
    m.hyper.min_child_weight = j.at("min_child_weight").get<double>();
    for (const auto& tj : j.at("trees")) {
        Tree t;
        for (const auto& nj : tj) {
            TreeNode nd;
            nd.feature = nj.at(0).get<int>();
            nd.threshold = nj.at(1).get<double>();
            nd.left = nj.at(2).get<int>();
            nd.right = nj.at(3).get<int>();
            nd.value = nj.at(4).get<double>();
            t.nodes.push_back(nd);
        }
        m.trees.push_back(std::move(t));
    }
    return m;
}

template <typename Model>
void save_model(const Model& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model file: " + path);
    out << to_json(m).dump(2) << "\n";
}

inline nlohmann::json load_model_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed model file " + path + ": " + e.what());
    }
    return j;
}

} // namespace fairml
