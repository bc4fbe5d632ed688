#include <algorithm>
#include <numeric>
#include <set>

#include "agro/indicators.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace agro;
using namespace agro::indicators;
using agro::qschema::Questionnaire;
using agro::qschema::TriLevel;

namespace {

void set_number(Questionnaire& q, const std::string& code, double v) {
    const auto* spec = qschema::default_registry().find(code);
    REQUIRE(spec != nullptr);
    q.values[code] = qschema::Number{v, spec->unit.value_or("")};
}

double number_or_zero(const Questionnaire& q, const std::string& code) { return q.number(code).value_or(0.0); }

// Rewrites the fields one component reads so that its score becomes `s`
// (0, 0.5 or 1), by inverting the documented mapping.
void force_component(Questionnaire& q, const Component& c, double s) {
    const double target = c.x0 + s * (c.x1 - c.x0);
    switch (c.mapping) {
    case Mapping::tri_level:
        q.values[c.code] = s == 0.0 ? TriLevel::insufficient : s == 1.0 ? TriLevel::sufficient : TriLevel::partial;
        break;
    case Mapping::linear:
        set_number(q, c.code, target);
        break;
    case Mapping::ratio: {
        double den = 0.0;
        for (const auto& d : c.denominator) den += number_or_zero(q, d);
        REQUIRE(den > 0.0);
        for (std::size_t i = 0; i < c.numerator.size(); ++i) set_number(q, c.numerator[i], i == 0 ? target * den : 0.0);
        break;
    }
    case Mapping::max_share: {
        const double rest = c.codes.size() > 1 ? std::min(target, (100.0 - target) / static_cast<double>(c.codes.size() - 1)) : 0.0;
        for (std::size_t i = 0; i < c.codes.size(); ++i) set_number(q, c.codes[i], i == 0 ? target : rest);
        break;
    }
    case Mapping::band:
        set_number(q, c.code, s == 1.0 ? (c.lo1 + c.hi1) / 2.0 : s == 0.5 ? (c.lo0 + c.lo1) / 2.0 : c.lo0);
        break;
    }
}

Questionnaire all_components_at(double s) {
    auto q = support::sample_questionnaire(17);
    for (const auto& ind : default_scoring_table().indicators) {
        for (const auto& c : ind.components) force_component(q, c, s);
    }
    return q;
}

IndicatorVector filled(double v) {
    IndicatorVector iv;
    iv.values.fill(v);
    return iv;
}

}  // namespace

TEST_CASE("scoring table covers indicators 1 to 21 and the registry") {
    const auto& t = default_scoring_table();
    REQUIRE(t.indicators.size() == 21);
    for (int i = 1; i <= 21; ++i) {
        CHECK(t.indicator(i).id == i);
        CHECK_FALSE(t.indicator(i).components.empty());
    }
    CHECK_NOTHROW(check_registry_totality(t, qschema::default_registry()));
}

TEST_CASE("registry lacking a scored code fails the totality check") {
    const auto& reg = qschema::default_registry();
    std::vector<qschema::FieldSpec> fields;
    for (const auto& f : reg.fields()) {
        if (f.code != "I20.1.4") fields.push_back(f);
    }
    const qschema::Registry smaller(reg.version(), fields);
    try {
        check_registry_totality(default_scoring_table(), smaller);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("I20.1.4") != std::string::npos);
    }
}

TEST_CASE("component mappings") {
    CHECK(linear_score(10.0, 100.0, 10.0) == 1.0);
    CHECK(linear_score(100.0, 100.0, 10.0) == 0.0);
    CHECK(linear_score(55.0, 100.0, 10.0) == doctest::Approx(0.5));
    CHECK(linear_score(500.0, 100.0, 10.0) == 0.0);
    CHECK(linear_score(-5.0, 0.0, 10.0) == 0.0);
    CHECK(band_score(5.0, 4.0, 5.0, 6.0, 8.0) == 1.0);
    CHECK(band_score(4.5, 4.0, 5.0, 6.0, 8.0) == doctest::Approx(0.5));
    CHECK(band_score(7.0, 4.0, 5.0, 6.0, 8.0) == doctest::Approx(0.5));
    CHECK(band_score(9.0, 4.0, 5.0, 6.0, 8.0) == 0.0);
}

TEST_CASE("indicator 8 with every component sufficient scores 1") {
    auto q = support::sample_questionnaire();
    for (const auto& c : default_scoring_table().indicator(8).components) force_component(q, c, 1.0);
    CHECK(score_indicator(q, 8) == 1.0);
}

TEST_CASE("indicator with components 0, 0.5 and 1 scores their mean") {
    auto q = support::sample_questionnaire();
    const auto& comps = default_scoring_table().indicator(11).components;
    REQUIRE(comps.size() == 3);
    force_component(q, comps[0], 0.0);
    force_component(q, comps[1], 0.5);
    force_component(q, comps[2], 1.0);
    CHECK(score_indicator(q, 11) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("indicator 12 without the soil analysis names every soil code") {
    auto q = support::sample_questionnaire();
    for (auto it = q.values.begin(); it != q.values.end();) {
        it = it->first.rfind("I12.", 0) == 0 ? q.values.erase(it) : std::next(it);
    }
    try {
        score_indicator(q, 12);
        FAIL("expected ScoringError");
    } catch (const ScoringError& e) {
        CHECK(e.indicator_id() == 12);
        std::vector<std::string> expected;
        for (int i = 1; i <= 10; ++i) expected.push_back("I12." + std::to_string(i));
        CHECK(e.codes() == expected);
    }
    CHECK_THROWS_AS(compute_indicator_vector(q), qschema::ValidationError);
}

TEST_CASE("out of range indicator id is rejected") {
    const auto q = support::sample_questionnaire();
    CHECK_THROWS_AS(score_indicator(q, 0), UsageError);
    CHECK_THROWS_AS(score_indicator(q, 22), UsageError);
}

TEST_CASE("best levels everywhere give 21 ones") {
    const auto iv = compute_indicator_vector(all_components_at(1.0));
    for (double v : iv.values) CHECK(v == 1.0);
}

TEST_CASE("midpoint levels everywhere give 0.5 on every indicator") {
    const auto iv = compute_indicator_vector(all_components_at(0.5));
    for (int i = 1; i <= 21; ++i) {
        CAPTURE(i);
        CHECK(iv.at(i) == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("worst levels everywhere give 21 zeros") {
    // Ratio inputs are rebuilt by multiplication, so allow rounding noise.
    const auto iv = compute_indicator_vector(all_components_at(0.0));
    for (double v : iv.values) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("sub-index partition") {
    std::vector<int> all;
    for (const auto& m : subindex_members()) all.insert(all.end(), m.begin(), m.end());
    std::sort(all.begin(), all.end());
    std::vector<int> expected(21);
    std::iota(expected.begin(), expected.end(), 1);
    CHECK(all == expected);
    const std::array<std::vector<int>, 7> table{{{1, 2, 3, 4}, {5, 6, 7}, {8, 9, 10, 11}, {12}, {13, 14}, {15, 16, 17}, {18, 19, 20, 21}}};
    CHECK(subindex_members() == table);
    for (int s = 0; s < 7; ++s) {
        for (int i : table[static_cast<std::size_t>(s)]) CHECK(subindex_of(i) == s);
    }
}

TEST_CASE("sub-index examples") {
    const auto s = compute_subindexes(filled(0.7));
    for (double v : s.values) CHECK(v == doctest::Approx(0.7).epsilon(1e-15));

    auto iv = filled(0.3);
    iv.values[12] = 1.0;
    iv.values[13] = 0.6;
    CHECK(compute_subindexes(iv).values[4] == doctest::Approx(0.8).epsilon(1e-15));

    iv.values[11] = 0.123456789;
    CHECK(compute_subindexes(iv).values[3] == 0.123456789);
}

TEST_CASE("sustainability index examples") {
    auto one = compute_si(filled(1.0));
    CHECK(one.si == 1.0);
    CHECK(one.category == Category::High);
    CHECK(one.limit == 0.7);

    IndicatorVector mixed;
    for (int i = 0; i < 21; ++i) mixed.values[static_cast<std::size_t>(i)] = i < 10 ? 1.0 : 0.0;
    const auto m = compute_si(mixed);
    CHECK(m.si == doctest::Approx(10.0 / 21.0).epsilon(1e-15));
    CHECK(m.category == Category::Low);

    const auto seven = compute_si(filled(0.7));
    CHECK(seven.si == 0.7);
    CHECK(seven.category == Category::High);
}

TEST_CASE("categorize boundaries") {
    CHECK(categorize(0.75) == Category::High);
    CHECK(categorize(0.60) == Category::Medium);
    CHECK(categorize(0.50) == Category::Medium);
    CHECK(categorize(0.70) == Category::High);
    CHECK(categorize(0.0) == Category::Low);
    CHECK(categorize(1.0) == Category::High);
    CHECK(categorize(std::nextafter(0.5, 0.0)) == Category::Low);
    CHECK(categorize(std::nextafter(0.7, 0.0)) == Category::Medium);
    CHECK_THROWS_AS(categorize(-0.01), DomainError);
    CHECK_THROWS_AS(categorize(1.01), DomainError);
    CHECK_THROWS_AS(categorize(std::nan("")), DomainError);
}

TEST_CASE("category totality over a fine grid") {
    for (int i = 0; i <= 10000; ++i) {
        const double x = i / 10000.0;
        const auto c = categorize(x);
        const bool low = x < 0.5, med = x >= 0.5 && x < 0.7, high = x >= 0.7;
        CHECK(static_cast<int>(low) + static_cast<int>(med) + static_cast<int>(high) == 1);
        CHECK((c == Category::Low) == low);
        CHECK((c == Category::Medium) == med);
        CHECK((c == Category::High) == high);
    }
}

TEST_CASE("range and mean consistency over random questionnaires") {
    const auto records = support::synthetic_records(300, 5);
    for (const auto& r : records) {
        for (double v : r.iv.values) CHECK((v >= 0.0 && v <= 1.0));
        for (double v : compute_subindexes(r.iv).values) CHECK((v >= 0.0 && v <= 1.0));
        long double sum = 0.0L;
        for (double v : r.iv.values) sum += v;
        CHECK(std::fabs(r.score.si - static_cast<double>(sum / 21.0L)) <= 1e-12);
        CHECK(r.score.category == categorize(r.score.si));
    }
}

TEST_CASE("scoring is deterministic") {
    const auto q = support::sample_questionnaire(23);
    CHECK(compute_indicator_vector(q) == compute_indicator_vector(q));
}

TEST_CASE("raising one component never lowers indicator, sub-index or SI") {
    const auto& table = default_scoring_table();
    for (std::uint64_t seed : {31u, 32u, 33u}) {
        const auto base = support::sample_questionnaire(seed);
        const auto iv0 = compute_indicator_vector(base);
        const auto s0 = compute_subindexes(iv0);
        const auto si0 = compute_si(iv0).si;
        for (const auto& ind : table.indicators) {
            for (const auto& c : ind.components) {
                const double before = score_component(base, c, ind.id);
                for (double level : {0.5, 1.0}) {
                    if (level <= before) continue;
                    auto q = base;
                    force_component(q, c, level);
                    const auto iv = compute_indicator_vector(q);
                    CAPTURE(c.primary_code());
                    CHECK(iv.at(ind.id) >= iv0.at(ind.id) - 1e-15);
                    const int s = subindex_of(ind.id);
                    CHECK(compute_subindexes(iv).values[static_cast<std::size_t>(s)] >= s0.values[static_cast<std::size_t>(s)] - 1e-15);
                    CHECK(compute_si(iv).si >= si0 - 1e-15);
                }
            }
        }
    }
}

TEST_CASE("names") {
    CHECK(subindex_names()[4] == "Water Quality");
    CHECK(indicator_names().size() == 21);
    CHECK(to_string(Category::Medium) == "Medium");
}
