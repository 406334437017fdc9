#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "fairml/config.hpp"
#include "support/datasets.hpp"

using namespace fairml;

TEST_CASE("defaults validate and echo") {
    PipelineConfig cfg = diabetes_default_config();
    cfg.validate(true);
    auto j = config_to_json(cfg);
    CHECK(j.at("learner") == "gbm");
    CHECK(j.at("seed") == 42);
    CHECK(j.at("test_fraction") == 0.3);
    CHECK(j.at("audit_threshold") == 0.8);
    CHECK(j.at("decision_threshold") == "auto");
    CHECK(j.at("group_specs").size() == 3);
    CHECK(j.at("mitigation_spec") == "age");
    CHECK(j.at("gbm").at("n_trees") == 100);
    CHECK(j.at("gbm").at("max_depth") == 3);
    CHECK(j.at("logistic").at("max_iters") == 500);
}

TEST_CASE("config parse round-trips overrides") {
    nlohmann::json j = nlohmann::json::parse(R"({
        "data_path": "x.csv",
        "seed": 7,
        "test_fraction": 0.25,
        "learner": "logistic",
        "logistic": {"l2": 0.5, "max_iters": 99},
        "decision_threshold": 0.4,
        "posthoc": {"enabled": true, "cost_kind": "gfnr"},
        "group_specs": [
            {"name": "g", "attribute": "sex", "privileged_values": ["M"],
             "unprivileged_values": ["F"], "favorable_label": 1}
        ],
        "mitigation_spec": "g"
    })");
    PipelineConfig cfg = config_from_json(j);
    cfg.validate(true);
    CHECK(cfg.data_path == "x.csv");
    CHECK(cfg.seed == 7);
    CHECK(cfg.learner == "logistic");
    CHECK(cfg.logistic.l2 == 0.5);
    CHECK(cfg.logistic.max_iters == 99);
    CHECK(cfg.logistic.tol == 1e-6); // untouched default
    CHECK_FALSE(cfg.auto_threshold);
    CHECK(cfg.decision_threshold == 0.4);
    CHECK(cfg.posthoc.enabled);
    CHECK(cfg.posthoc.cost_kind == CostKind::Gfnr);
    REQUIRE(cfg.group_specs.size() == 1);
    CHECK(cfg.group_specs[0].attribute == "sex");
    CHECK(cfg.group_specs[0].favorable_label == 1);
}

TEST_CASE("unknown keys are rejected everywhere") {
    REQUIRE_THROWS_WITH(config_from_json(nlohmann::json::parse(R"({"data_pth": "x"})")),
                        Catch::Matchers::ContainsSubstring("data_pth"));
    REQUIRE_THROWS_WITH(config_from_json(nlohmann::json::parse(R"({"gbm": {"trees": 5}})")),
                        Catch::Matchers::ContainsSubstring("trees"));
    REQUIRE_THROWS_WITH(
        config_from_json(nlohmann::json::parse(
            R"({"group_specs": [{"name": "g", "priv": ["a"]}]})")),
        Catch::Matchers::ContainsSubstring("priv"));
}

TEST_CASE("invalid configurations are reported") {
    PipelineConfig cfg = diabetes_default_config();
    cfg.mitigation_spec = "ghost";
    REQUIRE_THROWS_WITH(cfg.validate(true), Catch::Matchers::ContainsSubstring("ghost"));

    cfg = diabetes_default_config();
    cfg.test_fraction = 0.0;
    REQUIRE_THROWS_AS(cfg.validate(true), Error);
    cfg.validate(false); // audit-only use allows it

    cfg = diabetes_default_config();
    cfg.learner = "svm";
    REQUIRE_THROWS_WITH(cfg.validate(true), Catch::Matchers::ContainsSubstring("learner"));

    REQUIRE_THROWS_WITH(
        config_from_json(nlohmann::json::parse(R"({"decision_threshold": "half"})")),
        Catch::Matchers::ContainsSubstring("auto"));

    // wrong-typed values surface as config errors, not raw json exceptions
    REQUIRE_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"seed": "abc"})")), Error);
    REQUIRE_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"test_fraction": []})")), Error);
}

TEST_CASE("config file loading") {
    std::string path = testdata::temp_path("cfg.json");
    {
        std::ofstream out(path);
        out << R"({"seed": 123, "drop_columns": []})";
    }
    PipelineConfig cfg = load_config(path);
    CHECK(cfg.seed == 123);
    CHECK(cfg.drop_columns.empty());
    CHECK(cfg.group_specs.size() == 3); // defaults kept

    REQUIRE_THROWS_WITH(load_config("/nonexistent.json"),
                        Catch::Matchers::ContainsSubstring("cannot open"));

    std::string bad = testdata::temp_path("bad.json");
    {
        std::ofstream out(bad);
        out << "{not json";
    }
    REQUIRE_THROWS_WITH(load_config(bad), Catch::Matchers::ContainsSubstring("malformed"));
}
