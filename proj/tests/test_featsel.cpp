#include <random>
#include <set>

#include "agro/featsel.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace agro;
using namespace agro::featsel;
using agro::dataset::Dataset;

namespace {

// Ten instances, class [5,5]; a0 splits them into ([4,1], [1,4]).
Dataset ig_example() {
    std::vector<std::vector<int>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 10; ++i) {
        const int y = i < 5 ? 0 : 1;
        const bool odd_one = i == 4 || i == 5;
        rows.push_back({odd_one ? 1 - y : y});
        labels.push_back(y);
    }
    return support::nominal_ds(rows, {2}, labels);
}

std::vector<int> indices_of(const Dataset& ds, const std::vector<std::string>& names) {
    std::vector<int> out;
    for (const auto& n : names) out.push_back(static_cast<int>(ds.attribute_index(n)));
    std::sort(out.begin(), out.end());
    return out;
}

std::set<std::string> names_of(const std::vector<int>& ids) {
    std::set<std::string> out;
    for (int i : ids) out.insert("I" + std::to_string(i));
    return out;
}

// One numeric attribute equal to the class, plus `noise` uniform attributes.
Dataset perfect_plus_noise(int n, int noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) {
        const int y = i % 2;
        std::vector<double> row;
        for (int j = 0; j < noise; ++j) row.push_back(u(rng));
        row.insert(row.begin() + 1, y == 0 ? 0.25 : 0.75);
        rows.push_back(row);
        labels.push_back(y);
    }
    return support::numeric_ds(rows, labels);
}

}  // namespace

TEST_CASE("entropy examples") {
    CHECK(entropy({2, 2}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(entropy({4, 0}) == 0.0);
    CHECK(entropy({3, 1}) == doctest::Approx(0.811278).epsilon(1e-6));
    CHECK_THROWS_AS(entropy({0, 0}), DomainError);
    CHECK_THROWS_AS(entropy({}), DomainError);
    CHECK_THROWS_AS(entropy({1, -1}), DomainError);
}

TEST_CASE("entropy is permutation invariant and maximal on uniform counts") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 200; ++t) {
        const int k = std::uniform_int_distribution<int>(1, 6)(rng);
        std::vector<double> c;
        for (int i = 0; i < k; ++i) c.push_back(std::uniform_int_distribution<int>(0, 20)(rng));
        c[0] += 1;
        auto p = c;
        std::shuffle(p.begin(), p.end(), rng);
        CHECK(entropy(p) == doctest::Approx(entropy(c)).epsilon(1e-12));
        CHECK(entropy(c) <= std::log2(static_cast<double>(k)) + 1e-12);
        CHECK(entropy(c) >= 0.0);
    }
    CHECK(entropy({3, 3, 3, 3}) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("information gain examples") {
    const auto ds = ig_example();
    CHECK(info_gain(ds, "a0") == doctest::Approx(1.0 - 0.721928).epsilon(1e-6));
    CHECK(info_gain(ds, "a0") == doctest::Approx(support::oracle_info_gain(ds, 0)).epsilon(1e-12));

    // Attribute equal to the class.
    const auto perfect = support::nominal_ds({{0}, {1}, {1}, {0}, {1}}, {2}, {0, 1, 1, 0, 1});
    CHECK(info_gain(perfect, "a0") == doctest::Approx(entropy({2, 3})).epsilon(1e-12));

    const auto constant = support::nominal_ds({{0}, {0}, {0}, {0}}, {1}, {0, 1, 0, 1});
    CHECK(info_gain(constant, "a0") == 0.0);

    CHECK_THROWS_AS(info_gain(support::numeric_ds({{0.1}, {0.2}}, {0, 1}), "a0"), UsageError);
}

TEST_CASE("information gain is zero on constructed independence and never negative") {
    // Every value carries the same class mix.
    const auto ds = support::nominal_ds({{0}, {0}, {1}, {1}, {2}, {2}}, {3}, {0, 1, 0, 1, 0, 1});
    CHECK(std::fabs(info_gain(ds, "a0")) <= 1e-15);
    std::mt19937_64 rng(6);
    for (int t = 0; t < 50; ++t) {
        const auto r = support::random_nominal_ds(rng, 25, 3, 1, 3, 0.5);
        for (const auto& a : r.attributes) CHECK(info_gain(r, a.name) >= -1e-15);
    }
}

TEST_CASE("symmetric uncertainty examples") {
    const auto ds = ig_example();
    CHECK(symmetric_uncertainty(ds, "a0", "class") == doctest::Approx(0.278072).epsilon(1e-6));
    CHECK(symmetric_uncertainty(ds, "class", "a0") == symmetric_uncertainty(ds, "a0", "class"));
    CHECK(symmetric_uncertainty(ds, "a0", "a0") == doctest::Approx(1.0).epsilon(1e-15));

    // a1 is independent of a0 by construction (all four combinations once).
    const auto indep = support::nominal_ds({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {2, 2}, {0, 1, 0, 1});
    CHECK(std::fabs(symmetric_uncertainty(indep, "a0", "a1")) <= 1e-15);

    const auto constant = support::nominal_ds({{0, 1}, {0, 0}}, {1, 2}, {0, 1});
    CHECK(symmetric_uncertainty(constant, "a0", "a1") == 0.0);
}

TEST_CASE("symmetric uncertainty is exactly symmetric and matches the oracle") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 100; ++t) {
        const auto ds = support::random_nominal_ds(rng, 30, 4, 2, 3, 0.7);
        for (int a = 0; a < 4; ++a) {
            for (int b = -1; b < 4; ++b) {
                const std::string an = "a" + std::to_string(a), bn = b < 0 ? "class" : "a" + std::to_string(b);
                const double ab = symmetric_uncertainty(ds, an, bn);
                CHECK(ab == symmetric_uncertainty(ds, bn, an));
                CHECK(ab == doctest::Approx(support::oracle_su(ds, a, b)).epsilon(1e-12));
                CHECK((ab >= -1e-15 && ab <= 1.0 + 1e-15));
            }
        }
    }
}

TEST_CASE("merit formula examples") {
    CHECK(cfs_merit_formula(1, 0.6, 0.0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(cfs_merit_formula(2, 0.8, 0.5) == doctest::Approx(0.923760).epsilon(1e-6));
    CHECK(cfs_merit_formula(2, 0.8, 0.5) == doctest::Approx(1.6 / std::sqrt(3.0)).epsilon(1e-15));
}

TEST_CASE("adding a duplicate attribute lowers the merit") {
    std::mt19937_64 rng(8);
    auto ds = support::random_nominal_ds(rng, 40, 2, 2, 2, 0.8);
    // a2 is a copy of a0.
    ds.attributes.push_back(ds.attributes[0]);
    ds.attributes.back().name = "a2";
    for (auto& inst : ds.instances) inst.values.push_back(inst.values[0]);
    const double before = cfs_merit(ds, {"a0", "a1"});
    const double after = cfs_merit(ds, {"a0", "a1", "a2"});
    CHECK(after < before);
    CHECK(before == doctest::Approx(support::oracle_merit(ds, {0, 1})).epsilon(1e-12));
    CHECK_THROWS_AS(cfs_merit(ds, {}), UsageError);
}

TEST_CASE("perfect predictor dominates both selectors") {
    const auto ds = perfect_plus_noise(60, 4, 3);
    const auto cfs = best_first_cfs(ds);
    CHECK(cfs.selected == std::vector<std::string>{"a1"});
    const auto ig = info_gain_rank(ds);
    REQUIRE_FALSE(ig.ranking.empty());
    CHECK(ig.ranking.front() == "a1");
    CHECK(ig.selected.front() == "a1");
}

TEST_CASE("all-constant attributes select nothing") {
    const auto ds = support::numeric_ds({{1, 2}, {1, 2}, {1, 2}, {1, 2}, {1, 2}, {1, 2}, {1, 2}, {1, 2}, {1, 2}, {1, 2}},
                                        {0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
    CHECK(info_gain_rank(ds).selected.empty());
    CHECK(best_first_cfs(ds).selected.empty());
}

TEST_CASE("single-class data cannot be ranked") {
    const auto ds = support::numeric_ds({{1}, {2}, {3}}, {0, 0, 0});
    CHECK_THROWS_AS(info_gain_rank(ds), SelectionError);
    CHECK_THROWS_AS(best_first_cfs(ds), SelectionError);
}

TEST_CASE("InfoGain ranking scores are non-increasing") {
    const auto ds = dataset::build_indicators_ds(support::synthetic_records(300, 12));
    const auto r = info_gain_rank(ds);
    REQUIRE(r.ranking.size() == 21);
    for (std::size_t i = 1; i < r.ranking_scores.size(); ++i) CHECK(r.ranking_scores[i] <= r.ranking_scores[i - 1]);
    for (std::size_t i = 1; i < r.scores.size(); ++i) CHECK(r.scores[i] <= r.scores[i - 1]);
    for (double s : r.scores) CHECK(s > 0.0);
    CHECK(r.fold_selections.size() == 5);
}

TEST_CASE("InfoGain on the planted population selects the eight signal indicators") {
    const auto ds = dataset::build_indicators_ds(support::synthetic_records(1000, 1));
    const auto r = info_gain_rank(ds);
    const std::set<std::string> got(r.selected.begin(), r.selected.end());
    CHECK(got == names_of({4, 7, 8, 9, 12, 16, 19, 20}));
}

TEST_CASE("CFS on the planted seven-indicator population selects exactly those seven") {
    const auto ds = dataset::build_indicators_ds(support::synthetic_records(1000, 1, /*echo=*/false));
    const auto r = best_first_cfs(ds);
    const std::set<std::string> got(r.selected.begin(), r.selected.end());
    CHECK(got == names_of({4, 8, 9, 12, 16, 19, 20}));
    double sum = 0.0;
    for (double s : r.scores) sum += s;
    CHECK(sum == doctest::Approx(r.merit).epsilon(1e-12));
}

TEST_CASE("best-first CFS equals the exhaustive search") {
    std::mt19937_64 rng(2024);
    for (int t = 0; t < 40; ++t) {
        const int attrs = std::uniform_int_distribution<int>(1, 8)(rng);
        const int informative = std::uniform_int_distribution<int>(0, attrs)(rng);
        const int n = std::uniform_int_distribution<int>(10, 40)(rng);
        const auto ds = support::random_nominal_ds(rng, n, attrs, informative, 2, 0.75);
        const auto r = best_first_cfs_nominal(ds);
        CAPTURE(t);
        CHECK(indices_of(ds, r.selected) == support::oracle_exhaustive_cfs(ds));
    }
}

TEST_CASE("selection is deterministic and round-trips through JSON") {
    const auto ds = dataset::build_indicators_ds(support::synthetic_records(200, 13));
    for (auto method : {Method::CFS, Method::InfoGain}) {
        const auto a = method == Method::CFS ? best_first_cfs(ds) : info_gain_rank(ds);
        const auto b = method == Method::CFS ? best_first_cfs(ds) : info_gain_rank(ds);
        const auto text = to_json(a);
        CHECK(text == to_json(b));
        const auto back = selection_from_json(text);
        CHECK(back.method == method);
        CHECK(back.selected == a.selected);
        CHECK(back.scores == a.scores);
        CHECK(to_json(back) == text);
    }
    CHECK_THROWS_AS(selection_from_json("{\"schema\": \"nope\"}"), ParseError);
}

TEST_CASE("apply_selection keeps selected attributes in dataset order") {
    const auto ds = perfect_plus_noise(20, 3, 4);
    SelectionResult sel;
    sel.selected = {"a3", "a0"};
    const auto out = apply_selection(ds, sel);
    REQUIRE(out.num_attributes() == 2);
    CHECK(out.attributes[0].name == "a0");
    CHECK(out.attributes[1].name == "a3");
    CHECK(out.instances[5].values[1] == ds.instances[5].values[3]);
}
