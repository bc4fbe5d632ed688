#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "agro/eval.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace agro;
using namespace agro::eval;
using agro::classify::Algorithm;
using agro::dataset::Dataset;

namespace {

Dataset labeled(int a, int b, double value_for_b = 0.0) {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < a; ++i) {
        rows.push_back({0.0});
        labels.push_back(0);
    }
    for (int i = 0; i < b; ++i) {
        rows.push_back({value_for_b});
        labels.push_back(1);
    }
    return support::numeric_ds(rows, labels);
}

ConfusionMatrix matrix(const std::vector<std::vector<std::size_t>>& counts) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < counts.size(); ++i) names.push_back("c" + std::to_string(i));
    ConfusionMatrix cm(names);
    cm.counts = counts;
    return cm;
}

}  // namespace

TEST_CASE("stratified folds of a 45/55 dataset") {
    const auto ds = labeled(45, 55);
    const auto folds = stratified_folds(ds, 5, 3);
    REQUIRE(folds.size() == 100);
    std::map<int, std::array<int, 2>> per_fold;
    for (std::size_t i = 0; i < folds.size(); ++i) ++per_fold[folds[i]][static_cast<std::size_t>(ds.instances[i].label)];
    REQUIRE(per_fold.size() == 5);
    for (const auto& [f, c] : per_fold) {
        CHECK(c[0] == 9);
        CHECK(c[1] == 11);
    }
    CHECK(stratified_folds(ds, 5, 3) == folds);
    CHECK(stratified_folds(ds, 5, 4) != folds);
}

TEST_CASE("stratified folds stay balanced on uneven counts") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 50; ++t) {
        const int a = std::uniform_int_distribution<int>(5, 40)(rng), b = std::uniform_int_distribution<int>(5, 40)(rng);
        const int k = std::uniform_int_distribution<int>(2, 5)(rng);
        const auto ds = labeled(a, b);
        const auto folds = stratified_folds(ds, k, static_cast<std::uint64_t>(t));
        std::vector<int> size(static_cast<std::size_t>(k), 0);
        std::vector<std::array<int, 2>> cls(static_cast<std::size_t>(k), {0, 0});
        for (std::size_t i = 0; i < folds.size(); ++i) {
            ++size[static_cast<std::size_t>(folds[i])];
            ++cls[static_cast<std::size_t>(folds[i])][static_cast<std::size_t>(ds.instances[i].label)];
        }
        CHECK(*std::max_element(size.begin(), size.end()) - *std::min_element(size.begin(), size.end()) <= 1);
        for (const auto& c : cls) {
            CHECK(std::fabs(c[0] - static_cast<double>(a) / k) < 1.0);
            CHECK(std::fabs(c[1] - static_cast<double>(b) / k) < 1.0);
        }
    }
}

TEST_CASE("single fold and undersized classes") {
    const auto ds = labeled(4, 6);
    const auto one = stratified_folds(ds, 1, 1);
    CHECK(std::all_of(one.begin(), one.end(), [](int f) { return f == 0; }));
    CHECK_THROWS_AS(stratified_folds(labeled(3, 10), 5, 1), StratificationError);
}

TEST_CASE("metrics of the reference matrix") {
    const auto m = precision_recall(matrix({{41, 4}, {2, 53}}));
    CHECK(m.precision[0] == doctest::Approx(41.0 / 43.0).epsilon(1e-12));
    CHECK(m.precision[0] == doctest::Approx(0.953).epsilon(1e-3));
    CHECK(m.precision[1] == doctest::Approx(0.930).epsilon(1e-3));
    CHECK(m.recall[0] == doctest::Approx(0.911).epsilon(1e-3));
    CHECK(m.recall[1] == doctest::Approx(0.964).epsilon(1e-3));
    CHECK(std::fabs(m.weighted_precision - 0.940) <= 0.001);
    // Independent arithmetic: support-weighted mean of the per-class values.
    const double wp = (45.0 * 41.0 / 43.0 + 55.0 * 53.0 / 57.0) / 100.0;
    CHECK(m.weighted_precision == doctest::Approx(wp).epsilon(1e-12));
    CHECK(m.weighted_recall == doctest::Approx(94.0 / 100.0).epsilon(1e-12));
}

TEST_CASE("diagonal matrix has perfect metrics") {
    const auto m = precision_recall(matrix({{5, 0, 0}, {0, 7, 0}, {0, 0, 2}}));
    for (double p : m.precision) CHECK(p == 1.0);
    for (double r : m.recall) CHECK(r == 1.0);
    CHECK(m.weighted_precision == 1.0);
    CHECK(m.weighted_recall == 1.0);
}

TEST_CASE("never-predicted class has precision zero") {
    const auto m = precision_recall(matrix({{0, 5}, {0, 10}}));
    CHECK(m.precision[0] == 0.0);
    CHECK(m.recall[0] == 0.0);
    CHECK(m.precision[1] == doctest::Approx(10.0 / 15.0));
}

TEST_CASE("empty or ragged matrices are rejected") {
    CHECK_THROWS_AS(precision_recall(ConfusionMatrix{}), UsageError);
    auto bad = matrix({{1, 2}, {3, 4}});
    bad.counts[1].pop_back();
    CHECK_THROWS_AS(precision_recall(bad), UsageError);
}

TEST_CASE("metric properties over random matrices") {
    std::mt19937_64 rng(10);
    for (int t = 0; t < 200; ++t) {
        const std::size_t k = std::uniform_int_distribution<std::size_t>(2, 4)(rng);
        std::vector<std::vector<std::size_t>> counts(k, std::vector<std::size_t>(k));
        for (auto& row : counts) {
            for (auto& c : row) c = std::uniform_int_distribution<std::size_t>(0, 20)(rng);
            row[0] += 1;
        }
        const auto m = precision_recall(matrix(counts));
        const auto [pmin, pmax] = std::minmax_element(m.precision.begin(), m.precision.end());
        const auto [rmin, rmax] = std::minmax_element(m.recall.begin(), m.recall.end());
        CHECK(m.weighted_precision >= *pmin - 1e-12);
        CHECK(m.weighted_precision <= *pmax + 1e-12);
        CHECK(m.weighted_recall >= *rmin - 1e-12);
        CHECK(m.weighted_recall <= *rmax + 1e-12);

        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<std::vector<std::size_t>> permuted(k, std::vector<std::size_t>(k));
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) permuted[perm[i]][perm[j]] = counts[i][j];
        }
        const auto mp = precision_recall(matrix(permuted));
        for (std::size_t i = 0; i < k; ++i) {
            CHECK(mp.precision[perm[i]] == doctest::Approx(m.precision[i]).epsilon(1e-12));
            CHECK(mp.recall[perm[i]] == doctest::Approx(m.recall[i]).epsilon(1e-12));
        }
        CHECK(mp.weighted_precision == doctest::Approx(m.weighted_precision).epsilon(1e-12));
    }
}

TEST_CASE("cross-validation with a perfect learner") {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 50; ++i) {
        // A wide gap, so thresholds learned without the held-out fold still separate it.
        rows.push_back({static_cast<double>(i < 25 ? i : i + 100)});
        labels.push_back(i < 25 ? 0 : 1);
    }
    const auto ds = support::numeric_ds(rows, labels);
    classify::LearnerConfig cfg;
    cfg.algorithm = Algorithm::Tree;
    const auto r = cross_validate(cfg, ds, 5, 1);
    CHECK(r.cm.total() == 50);
    CHECK(r.cm.counts == std::vector<std::vector<std::size_t>>{{25, 0}, {0, 25}});
    CHECK(r.metrics.weighted_precision == 1.0);
    CHECK(r.metrics.weighted_recall == 1.0);
}

TEST_CASE("majority-class predictor on a 45/55 split") {
    // A constant attribute leaves naive Bayes with the class prior only.
    const auto ds = labeled(45, 55);
    classify::LearnerConfig cfg;
    cfg.algorithm = Algorithm::NB;
    const auto r = cross_validate(cfg, ds, 5, 2);
    CHECK(r.cm.total() == 100);
    CHECK(r.metrics.weighted_recall == doctest::Approx(0.55).epsilon(1e-12));
    CHECK(r.metrics.precision[0] == 0.0);
}

TEST_CASE("cross-validation is deterministic and thread independent") {
    const auto ds = dataset::build_indicators_ds(support::synthetic_records(150, 40));
    for (auto a : classify::kAllAlgorithms) {
        classify::LearnerConfig cfg;
        cfg.algorithm = a;
        cfg.rf.trees = 10;
        cfg.mlp.epochs = 30;
        const auto one = cross_validate(cfg, ds, 5, 7, 1);
        CHECK(one.cm.total() == ds.size());
        CHECK(cross_validate(cfg, ds, 5, 7, 1).cm == one.cm);
        CHECK(cross_validate(cfg, ds, 5, 7, 3).cm == one.cm);
    }
}

TEST_CASE("selector names") {
    for (auto s : {Selector::none, Selector::CFS, Selector::InfoGain}) CHECK(parse_selector(to_string(s)) == s);
    CHECK_THROWS_AS(parse_selector("pca"), UsageError);
}

TEST_CASE("experiment grid shape, marks and determinism") {
    const auto records = support::synthetic_records(100, 41);
    GridOptions opt;
    opt.threads = 1;
    const auto g = run_experiment_grid(records, 42, opt);
    REQUIRE(g.cells.size() == 36);
    CHECK(g.master_seed == 42);
    int best_marks = 0;
    std::map<Algorithm, int> per_algo;
    for (const auto& c : g.cells) {
        CHECK_FALSE(c.failed);
        CHECK(c.cm.total() == records.size());
        best_marks += c.global_best ? 1 : 0;
        per_algo[c.algorithm] += c.best_for_algorithm ? 1 : 0;
    }
    CHECK(best_marks == 1);
    for (const auto& [a, n] : per_algo) CHECK(n == 1);
    REQUIRE(g.best >= 0);
    for (const auto& c : g.cells) CHECK(c.metrics.weighted_precision <= g.cells[static_cast<std::size_t>(g.best)].metrics.weighted_precision);
    CHECK(g.cell("IndicatorsDS", Selector::CFS, Algorithm::RF).algorithm == Algorithm::RF);

    const auto csv = grid_to_csv(g);
    CHECK(csv.rfind("dataset,selector,algorithm,precision,recall,status\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 37);
    CHECK(grid_to_table(g).find("**") != std::string::npos);

    opt.threads = 3;
    const auto g3 = run_experiment_grid(records, 42, opt);
    CHECK(grid_to_csv(g3) == csv);
    CHECK(grid_to_table(g3) == grid_to_table(g));
}

TEST_CASE("a cell's result does not depend on which other cells run") {
    const auto records = support::synthetic_records(100, 43);
    GridOptions only_nb;
    only_nb.algorithms = {Algorithm::NB};
    const auto small = run_experiment_grid(records, 7, only_nb);
    REQUIRE(small.cells.size() == 6);
    GridOptions pair;
    pair.algorithms = {Algorithm::Tree, Algorithm::NB};
    const auto both = run_experiment_grid(records, 7, pair);
    const auto& a = small.cell("IndicatorsDS", Selector::CFS, Algorithm::NB);
    const auto& b = both.cell("IndicatorsDS", Selector::CFS, Algorithm::NB);
    CHECK(a.cm == b.cm);
    CHECK(a.seed == b.seed);
}
