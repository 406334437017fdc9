#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fairml/model_io.hpp"
#include "support/datasets.hpp"

using namespace fairml;

TEST_CASE("linear model round-trips through JSON") {
    std::mt19937_64 rng(1);
    auto d = testdata::random_dataset(rng, 40, 3);
    LinearModel m = train_logistic(d);

    std::string path = testdata::temp_path("linear_model.json");
    save_model(m, path);
    LinearModel back = linear_model_from_json(load_model_json(path));

    CHECK(back.coefficients == m.coefficients);
    CHECK(back.intercept == m.intercept);
    CHECK(back.feature_mean == m.feature_mean);
    CHECK(back.feature_scale == m.feature_scale);

    auto s1 = predict_scores(m, d.X);
    auto s2 = predict_scores(back, d.X);
    CHECK(s1 == s2);
}

TEST_CASE("gbm model round-trips through JSON with identical predictions") {
    std::mt19937_64 rng(2);
    auto d = testdata::random_dataset(rng, 60, 3);
    GbmHyper h;
    h.n_trees = 6;
    GbmModel m = train_gbm(d, h);

    std::string path = testdata::temp_path("gbm_model.json");
    save_model(m, path);
    GbmModel back = gbm_model_from_json(load_model_json(path));

    REQUIRE(back.trees.size() == m.trees.size());
    CHECK(back.base_score == m.base_score);
    auto s1 = predict_scores(m, d.X);
    auto s2 = predict_scores(back, d.X);
    CHECK(s1 == s2);
}

TEST_CASE("model files are versioned and kind-checked") {
    std::mt19937_64 rng(3);
    auto d = testdata::random_dataset(rng, 30, 2);
    GbmHyper h;
    h.n_trees = 2;
    GbmModel m = train_gbm(d, h);
    std::string path = testdata::temp_path("kind_check.json");
    save_model(m, path);
    auto j = load_model_json(path);
    CHECK(j.at("schema_version").get<int>() == kModelSchemaVersion);
    REQUIRE_THROWS_WITH(linear_model_from_json(j),
                        Catch::Matchers::ContainsSubstring("not a logistic model"));
}

TEST_CASE("identical training inputs serialize to identical bytes") {
    std::mt19937_64 rng(4);
    auto d = testdata::random_dataset(rng, 50, 3);
    GbmHyper h;
    h.n_trees = 5;
    std::string a = to_json(train_gbm(d, h)).dump();
    std::string b = to_json(train_gbm(d, h)).dump();
    CHECK(a == b);

    std::string la = to_json(train_logistic(d)).dump();
    std::string lb = to_json(train_logistic(d)).dump();
    CHECK(la == lb);
}
