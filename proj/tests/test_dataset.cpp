#include <random>

#include "agro/dataset.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace agro;
using namespace agro::dataset;
using agro::indicators::Category;

namespace {

Record record_with_indicators(double v, std::uint64_t seed = 3) {
    auto rec = score_record(support::sample_questionnaire(seed));
    rec.iv.values.fill(v);
    rec.score = indicators::compute_si(rec.iv);
    return rec;
}

}  // namespace

TEST_CASE("tri-level encoding") {
    CHECK(encode_tri_level(qschema::TriLevel::insufficient) == 0.0);
    CHECK(encode_tri_level(qschema::TriLevel::partial) == 0.5);
    CHECK(encode_tri_level(qschema::TriLevel::sufficient) == 1.0);
    CHECK(encode_tri_level("partial") == 0.5);
    CHECK_THROWS_AS(encode_tri_level("medium"), UsageError);
}

TEST_CASE("features dataset shape") {
    const auto empty = build_features_ds({});
    CHECK(empty.num_attributes() == 87);
    CHECK(empty.size() == 0);
    CHECK(empty.class_names == std::vector<std::string>{"Low", "Medium", "High"});

    const auto records = support::synthetic_records(100, 8);
    const auto ds = build_features_ds(records);
    CHECK(ds.size() == 100);
    CHECK(ds.num_attributes() == 87);
    CHECK_NOTHROW(ds.check());
}

TEST_CASE("features dataset names the property lacking a field") {
    auto rec = score_record(support::sample_questionnaire());
    rec.q.values.erase("I5.1");
    try {
        build_features_ds({rec});
        FAIL("expected BuildError");
    } catch (const BuildError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("I5.1") != std::string::npos);
        CHECK(msg.find(rec.q.header.property_code) != std::string::npos);
    }
}

TEST_CASE("class label follows the sustainability category") {
    const auto rec = record_with_indicators(0.65);
    CHECK(rec.score.si == doctest::Approx(0.65));
    CHECK(build_indicators_ds({rec}).instances[0].label == static_cast<int>(Category::Medium));
    CHECK(build_features_ds({rec}).instances[0].label == static_cast<int>(Category::Medium));
}

TEST_CASE("indicators dataset examples") {
    const auto rec = record_with_indicators(0.7);
    const auto ds = build_indicators_ds({rec});
    REQUIRE(ds.size() == 1);
    CHECK(ds.num_attributes() == 21);
    CHECK(ds.attributes[0].name == "I1");
    CHECK(ds.attributes[20].name == "I21");
    for (double v : ds.instances[0].values) CHECK(v == 0.7);
    CHECK(ds.class_names[static_cast<std::size_t>(ds.instances[0].label)] == "High");

    auto bad = rec;
    bad.iv.values[3] = 1.2;
    CHECK_THROWS_AS(build_indicators_ds({bad}), BuildError);
}

TEST_CASE("indicators dataset aligns with its records and labels") {
    const auto records = support::synthetic_records(100, 9);
    const auto ds = build_indicators_ds(records);
    REQUIRE(ds.size() == 100);
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (std::size_t j = 0; j < 21; ++j) CHECK(ds.instances[i].values[j] == records[i].iv.values[j]);
        CHECK(ds.instances[i].label == static_cast<int>(indicators::categorize(indicators::compute_si(records[i].iv).si)));
    }
    CHECK(build_indicators_ds(records) == ds);
}

TEST_CASE("CSV round trip") {
    const auto ds = build_indicators_ds(support::synthetic_records(40, 4));
    const auto text = to_csv(ds);
    CHECK(text.rfind("I1,I2,", 0) == 0);
    const auto back = from_csv(text, ds.name);
    CHECK(back.attributes == ds.attributes);
    CHECK(back.class_names == ds.class_names);
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.instances[i].values == ds.instances[i].values);
        CHECK(back.instances[i].label == ds.instances[i].label);
    }
    CHECK(to_csv(back) == text);
}

TEST_CASE("CSV with nominal columns and quoting") {
    const auto ds = from_csv("colour,size,class\n\"red, dark\",1,yes\nblue,2,no\n");
    REQUIRE(ds.num_attributes() == 2);
    CHECK(ds.attributes[0].kind == AttrKind::nominal);
    CHECK(ds.attributes[0].nominal_values == std::vector<std::string>{"blue", "red, dark"});
    CHECK(ds.attributes[1].kind == AttrKind::numeric);
    CHECK(ds.class_names == std::vector<std::string>{"no", "yes"});
    CHECK_THROWS_AS(from_csv("a,b\n1,2\n"), ParseError);
    CHECK_THROWS_AS(from_csv("a,class\n1\n"), ParseError);
}

TEST_CASE("MDL on a constant attribute finds no cut") {
    const auto ds = support::numeric_ds({{1.0}, {1.0}, {1.0}, {1.0}}, {0, 1, 0, 1});
    CHECK(discretize_mdl(ds, "a0").empty());
}

TEST_CASE("MDL on a perfectly separating attribute finds one cut between the classes") {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 20; ++i) {
        rows.push_back({0.1 + 0.015 * i});
        labels.push_back(0);
        rows.push_back({0.6 + 0.015 * i});
        labels.push_back(1);
    }
    const auto cuts = discretize_mdl(support::numeric_ds(rows, labels), "a0");
    REQUIRE(cuts.size() == 1);
    const double max_below = 0.1 + 0.015 * 19;
    CHECK(cuts[0] > max_below);
    CHECK(cuts[0] <= 0.6);
}

TEST_CASE("MDL rejects class-independent noise") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 100; ++i) {
        rows.push_back({u(rng)});
        labels.push_back(i % 2);
    }
    const auto ds = support::numeric_ds(rows, labels);
    CHECK(discretize_mdl(ds, "a0").empty());
    CHECK(support::oracle_mdl_cuts(ds, 0).empty());
}

TEST_CASE("MDL refuses nominal attributes") {
    const auto ds = support::nominal_ds({{0}, {1}}, {2}, {0, 1});
    CHECK_THROWS_AS(discretize_mdl(ds, "a0"), UsageError);
}

TEST_CASE("MDL matches the exhaustive search on random fixtures") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = std::uniform_int_distribution<int>(2, 200)(rng);
        const int classes = std::uniform_int_distribution<int>(2, 3)(rng);
        const int levels = std::uniform_int_distribution<int>(3, 40)(rng);
        const double signal = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        std::vector<std::vector<double>> rows;
        std::vector<int> labels;
        for (int i = 0; i < n; ++i) {
            const int y = std::uniform_int_distribution<int>(0, classes - 1)(rng);
            double x = std::uniform_int_distribution<int>(0, levels - 1)(rng) / static_cast<double>(levels);
            if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < signal) x = (y + x) / classes;
            rows.push_back({x});
            labels.push_back(y);
        }
        std::vector<std::string> names;
        for (int c = 0; c < classes; ++c) names.push_back("c" + std::to_string(c));
        const auto ds = support::numeric_ds(rows, labels, names);
        CAPTURE(trial);
        CHECK(discretize_mdl(ds, "a0") == support::oracle_mdl_cuts(ds, 0));
    }
}

TEST_CASE("discretizer bins values at or below a cut into the lower bin") {
    Discretizer d;
    d.cuts = {{0.5}};
    const auto ds = support::numeric_ds({{0.2}, {0.5}, {0.7}}, {0, 0, 1});
    const auto nom = d.apply(ds);
    REQUIRE(nom.attributes[0].kind == AttrKind::nominal);
    CHECK(nom.attributes[0].nominal_values.size() == 2);
    CHECK(nom.instances[0].values[0] == 0.0);
    CHECK(nom.instances[1].values[0] == 0.0);
    CHECK(nom.instances[2].values[0] == 1.0);
}

TEST_CASE("generator edge cases") {
    CHECK(generate_synthetic(default_synthetic_config(0, 1)).empty());

    auto bad = default_synthetic_config(100, 1);
    bad.planted_rules.push_back({{{12, Condition::Op::ge, 0.8}, {12, Condition::Op::le, 0.2}}, Category::High, 0.3, 0.0});
    CHECK_THROWS_AS(generate_synthetic(bad), ConfigError);

    auto mix = default_synthetic_config(100, 1);
    mix.class_mix = {0.5, 0.5, 0.5};
    CHECK_THROWS_AS(generate_synthetic(mix), ConfigError);
}

TEST_CASE("generator is deterministic and emits valid questionnaires") {
    const auto cfg = default_synthetic_config(150, 21);
    const auto a = generate_synthetic(cfg);
    const auto b = generate_synthetic(cfg);
    REQUIRE(a.size() == 150);
    CHECK(a == b);
    for (const auto& q : a) CHECK_FALSE(qschema::has_errors(qschema::validate(q)));
    auto other = cfg;
    other.seed = 22;
    CHECK(generate_synthetic(other) != a);
}

TEST_CASE("generator hits planted coverage and class mix") {
    const auto cfg = default_synthetic_config(1000, 2);
    const auto records = support::synthetic_records(1000, 2);
    std::array<std::size_t, 3> per_class{};
    for (const auto& r : records) ++per_class[static_cast<std::size_t>(r.score.category)];
    for (std::size_t c = 0; c < 3; ++c) {
        CAPTURE(c);
        CHECK(std::fabs(static_cast<double>(per_class[c]) / 1000.0 - cfg.class_mix[c]) <= 0.02);
    }
    for (const auto& rule : cfg.planted_rules) {
        std::size_t in_class = 0, covered = 0;
        for (const auto& r : records) {
            if (r.score.category != rule.cls) continue;
            ++in_class;
            covered += rule.holds(r.iv) ? 1 : 0;
        }
        REQUIRE(in_class > 0);
        CHECK(std::fabs(static_cast<double>(covered) / static_cast<double>(in_class) - rule.coverage) <= 0.02);
    }
}
