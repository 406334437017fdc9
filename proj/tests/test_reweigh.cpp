#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fairml/reweigh.hpp"
#include "support/datasets.hpp"
#include "support/oracles.hpp"

using namespace fairml;

TEST_CASE("compute_weights on the ten-row toy set") {
    auto d = testdata::t10();
    ReweighingWeights rw = compute_weights(d, testdata::t10_spec());
    CHECK(rw.cell_weight(1, 1) == Catch::Approx(0.75));    // privileged favorable
    CHECK(rw.cell_weight(1, 0) == Catch::Approx(1.5));     // privileged unfavorable
    CHECK(rw.cell_weight(0, 1) == Catch::Approx(2.0));     // unprivileged favorable
    CHECK(rw.cell_weight(0, 0) == Catch::Approx(0.6667).margin(5e-5));
    // weight-sum conservation: 4(0.75) + 2(1.5) + 1(2.0) + 3(0.6667) = 10
    double total = 4 * rw.cell_weight(1, 1) + 2 * rw.cell_weight(1, 0) + 1 * rw.cell_weight(0, 1) +
                   3 * rw.cell_weight(0, 0);
    CHECK(total == Catch::Approx(10.0).margin(1e-9));
}

TEST_CASE("independent group and label give unit weights") {
    // cell frequencies proportional: priv 2 fav + 2 unfav, unpriv 3 fav + 3 unfav
    EncodedDataset d;
    d.y = {1, 1, 0, 0, 1, 1, 1, 0, 0, 0};
    d.protected_cols = {{1, 1, 1, 1, 0, 0, 0, 0, 0, 0}};
    d.missing_masks = {std::vector<char>(10, 0)};
    d.spec_names = {"grp"};
    d.w.assign(10, 1.0);
    d.X = Matrix(10, 1);
    for (int i = 0; i < 10; ++i) d.row_ids.push_back(std::to_string(i));
    ReweighingWeights rw = compute_weights(d, testdata::t10_spec());
    for (int g = 0; g < 2; ++g) {
        for (int f = 0; f < 2; ++f) CHECK(rw.weight[g][f] == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("compute_weights reports empty cells") {
    auto d = testdata::t10();
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        if (d.protected_cols[0][i] == 0) d.y[i] = 0; // unprivileged favorable cell empties
    }
    REQUIRE_THROWS_WITH(compute_weights(d, testdata::t10_spec()),
                        Catch::Matchers::ContainsSubstring("(unprivileged, favorable)"));
}

TEST_CASE("apply_weights equalizes weighted favorable rates on the toy set") {
    auto d = testdata::t10();
    auto spec = testdata::t10_spec();
    ReweighingWeights rw = compute_weights(d, spec);
    EncodedDataset rd = apply_weights(d, rw, spec);
    double di = oracle::weighted_disparate_impact(rd.y, rd.protected_cols[0], rd.missing_masks[0],
                                                  rd.w, spec.favorable_label);
    CHECK(di == Catch::Approx(1.0).margin(1e-12));
    // X, y, P untouched
    CHECK(rd.y == d.y);
    CHECK(rd.X.data == d.X.data);
    CHECK(rd.protected_cols[0] == d.protected_cols[0]);
}

TEST_CASE("unit reweighing leaves the dataset unchanged") {
    auto d = testdata::t10();
    auto spec = testdata::t10_spec();
    ReweighingWeights rw = compute_weights(d, spec);
    for (int g = 0; g < 2; ++g) {
        for (int f = 0; f < 2; ++f) rw.weight[g][f] = 1.0;
    }
    EncodedDataset same = apply_weights(d, rw, spec);
    CHECK(same.w == d.w);
}

TEST_CASE("reweighing is idempotent: recomputed weights are all one") {
    auto d = testdata::t10();
    auto spec = testdata::t10_spec();
    EncodedDataset rd = apply_weights(d, compute_weights(d, spec), spec);
    ReweighingWeights again = compute_weights(rd, spec);
    for (int g = 0; g < 2; ++g) {
        for (int f = 0; f < 2; ++f) CHECK(again.weight[g][f] == Catch::Approx(1.0).margin(1e-12));
    }
    EncodedDataset rd2 = apply_weights(rd, again, spec);
    for (std::size_t i = 0; i < rd.n_rows(); ++i) {
        CHECK(rd2.w[i] == Catch::Approx(rd.w[i]).margin(1e-12));
    }
}

TEST_CASE("apply_weights leaves masked rows untouched") {
    std::mt19937_64 rng(31);
    auto d = testdata::random_dataset(rng, 60, 1, true);
    auto spec = testdata::t10_spec();
    EncodedDataset rd = apply_weights(d, compute_weights(d, spec), spec);
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        if (d.missing_masks[0][i]) CHECK(rd.w[i] == 1.0);
    }
}

TEST_CASE("apply_weights checks the spec it was fitted for") {
    auto d = testdata::t10();
    ReweighingWeights rw = compute_weights(d, testdata::t10_spec());
    GroupSpec other = testdata::t10_spec();
    other.name = "other";
    REQUIRE_THROWS_WITH(apply_weights(d, rw, other), Catch::Matchers::ContainsSubstring("other"));
}

TEST_CASE("weighted parity and mass conservation on random datasets") {
    std::mt19937_64 rng(777);
    for (int rep = 0; rep < 200; ++rep) {
        int n = 4 + static_cast<int>(rng() % 197);
        auto d = testdata::random_dataset(rng, n, 1);
        auto spec = testdata::t10_spec();
        EncodedDataset rd = apply_weights(d, compute_weights(d, spec), spec);

        double di = oracle::weighted_disparate_impact(rd.y, rd.protected_cols[0],
                                                      rd.missing_masks[0], rd.w, 1);
        REQUIRE(std::fabs(di - 1.0) < 1e-9);

        double mass = 0;
        for (double w : rd.w) mass += w;
        REQUIRE(std::fabs(mass - static_cast<double>(n)) < 1e-9 * n);

        // weighted joint factorizes per cell
        double cell[2][2] = {{0, 0}, {0, 0}}, gm[2] = {0, 0}, lm[2] = {0, 0}, tot = 0;
        for (std::size_t i = 0; i < rd.n_rows(); ++i) {
            int g = rd.protected_cols[0][i];
            int f = rd.y[i];
            cell[g][f] += rd.w[i];
            gm[g] += rd.w[i];
            lm[f] += rd.w[i];
            tot += rd.w[i];
        }
        for (int g = 0; g < 2; ++g) {
            for (int f = 0; f < 2; ++f) {
                REQUIRE(std::fabs(cell[g][f] / tot - (gm[g] / tot) * (lm[f] / tot)) < 1e-9);
            }
        }
    }
}

TEST_CASE("weights are invariant under row permutation and dataset duplication") {
    std::mt19937_64 rng(54321);
    auto d = testdata::random_dataset(rng, 37, 1);
    auto spec = testdata::t10_spec();
    ReweighingWeights rw = compute_weights(d, spec);

    // permutation
    std::vector<std::size_t> perm(d.n_rows());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    EncodedDataset p = d;
    for (std::size_t k = 0; k < perm.size(); ++k) {
        p.y[k] = d.y[perm[k]];
        p.w[k] = d.w[perm[k]];
        p.protected_cols[0][k] = d.protected_cols[0][perm[k]];
        p.missing_masks[0][k] = d.missing_masks[0][perm[k]];
    }
    ReweighingWeights rw_p = compute_weights(p, spec);

    // duplication of the entire dataset
    EncodedDataset dd = d;
    dd.X = Matrix(2 * d.n_rows(), d.X.cols);
    dd.y.insert(dd.y.end(), d.y.begin(), d.y.end());
    dd.w.insert(dd.w.end(), d.w.begin(), d.w.end());
    dd.row_ids.insert(dd.row_ids.end(), d.row_ids.begin(), d.row_ids.end());
    dd.protected_cols[0].insert(dd.protected_cols[0].end(), d.protected_cols[0].begin(),
                                d.protected_cols[0].end());
    dd.missing_masks[0].insert(dd.missing_masks[0].end(), d.missing_masks[0].begin(),
                               d.missing_masks[0].end());
    ReweighingWeights rw_d = compute_weights(dd, spec);

    for (int g = 0; g < 2; ++g) {
        for (int f = 0; f < 2; ++f) {
            CHECK(rw_p.weight[g][f] == Catch::Approx(rw.weight[g][f]).margin(1e-12));
            CHECK(rw_d.weight[g][f] == Catch::Approx(rw.weight[g][f]).margin(1e-12));
        }
    }
}
