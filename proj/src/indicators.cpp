#include "agro/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "agro/numeric.hpp"
#include "agro/paths.hpp"
#include "json.hpp"

namespace agro::indicators {

using nlohmann::json;
using qschema::FieldKind;
using qschema::Questionnaire;

std::string_view to_string(Category c) {
    switch (c) {
    case Category::Low: return "Low";
    case Category::Medium: return "Medium";
    case Category::High: return "High";
    }
    return "?";
}

const std::string& Component::primary_code() const {
    switch (mapping) {
    case Mapping::ratio: return numerator.front();
    case Mapping::max_share: return codes.front();
    default: return code;
    }
}

std::vector<std::string> Component::referenced_codes() const {
    switch (mapping) {
    case Mapping::ratio: {
        std::vector<std::string> out = numerator;
        out.insert(out.end(), denominator.begin(), denominator.end());
        return out;
    }
    case Mapping::max_share: return codes;
    default: return {code};
    }
}

const IndicatorDef& ScoringTable::indicator(int id) const {
    if (id < 1 || id > kIndicatorCount) throw UsageError("indicator id out of range: " + std::to_string(id));
    return indicators.at(static_cast<std::size_t>(id - 1));
}

const Component* ScoringTable::find_component(std::string_view code, int* indicator_id) const {
    for (const auto& ind : indicators) {
        for (const auto& c : ind.components) {
            if (c.primary_code() == code) {
                if (indicator_id) *indicator_id = ind.id;
                return &c;
            }
        }
    }
    return nullptr;
}

namespace {

Mapping parse_mapping(const std::string& s) {
    if (s == "tri_level") return Mapping::tri_level;
    if (s == "linear") return Mapping::linear;
    if (s == "ratio") return Mapping::ratio;
    if (s == "max_share") return Mapping::max_share;
    if (s == "band") return Mapping::band;
    throw ConfigError("unknown component mapping '" + s + "'");
}

}  // namespace

ScoringTable load_scoring_table(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error&) {
        throw ConfigError("scoring table not found: " + path.string());
    }
    ScoringTable table;
    try {
        const json doc = json::parse(text);
        table.version = doc.at("version").get<std::string>();
        for (const auto& ij : doc.at("indicators")) {
            IndicatorDef def;
            def.id = ij.at("id").get<int>();
            def.name = ij.at("name").get<std::string>();
            for (const auto& cj : ij.at("components")) {
                Component c;
                c.mapping = parse_mapping(cj.at("mapping").get<std::string>());
                switch (c.mapping) {
                case Mapping::tri_level: c.code = cj.at("code"); break;
                case Mapping::linear:
                    c.code = cj.at("code");
                    c.x0 = cj.at("x0");
                    c.x1 = cj.at("x1");
                    break;
                case Mapping::ratio:
                    c.numerator = cj.at("numerator").get<std::vector<std::string>>();
                    c.denominator = cj.at("denominator").get<std::vector<std::string>>();
                    c.x0 = cj.at("x0");
                    c.x1 = cj.at("x1");
                    c.zero_denominator = cj.at("zero_denominator");
                    if (c.numerator.empty() || c.denominator.empty()) throw ConfigError("empty ratio component");
                    break;
                case Mapping::max_share:
                    c.codes = cj.at("codes").get<std::vector<std::string>>();
                    c.x0 = cj.at("x0");
                    c.x1 = cj.at("x1");
                    if (c.codes.empty()) throw ConfigError("empty max_share component");
                    break;
                case Mapping::band:
                    c.code = cj.at("code");
                    c.lo0 = cj.at("lo0");
                    c.lo1 = cj.at("lo1");
                    c.hi1 = cj.at("hi1");
                    c.hi0 = cj.at("hi0");
                    if (!(c.lo0 < c.lo1 && c.lo1 <= c.hi1 && c.hi1 < c.hi0)) throw ConfigError("band out of order");
                    break;
                }
                if (c.mapping != Mapping::tri_level && c.mapping != Mapping::band && c.x0 == c.x1) {
                    throw ConfigError("degenerate mapping in indicator " + std::to_string(def.id));
                }
                def.components.push_back(std::move(c));
            }
            if (def.components.empty()) throw ConfigError("indicator without components: " + def.name);
            table.indicators.push_back(std::move(def));
        }
    } catch (const json::exception& e) {
        throw ConfigError("corrupt scoring table " + path.string() + ": " + e.what());
    }
    if (table.indicators.size() != kIndicatorCount) throw ConfigError("scoring table must define 21 indicators");
    for (int i = 0; i < kIndicatorCount; ++i) {
        if (table.indicators[static_cast<std::size_t>(i)].id != i + 1) {
            throw ConfigError("scoring table indicators must be ordered 1..21");
        }
    }
    return table;
}

const ScoringTable& default_scoring_table() {
    static const ScoringTable table = [] {
        auto t = load_scoring_table(data_dir() / "scoring_table.json");
        check_registry_totality(t, qschema::default_registry());
        return t;
    }();
    return table;
}

void check_registry_totality(const ScoringTable& table, const qschema::Registry& registry) {
    std::vector<std::string> problems;
    for (const auto& ind : table.indicators) {
        for (const auto& c : ind.components) {
            const FieldKind want = c.mapping == Mapping::tri_level ? FieldKind::tri_level : FieldKind::numeric;
            for (const auto& code : c.referenced_codes()) {
                const auto* spec = registry.find(code);
                if (spec == nullptr) {
                    problems.push_back(code + " (missing)");
                } else if (spec->kind != want) {
                    problems.push_back(code + " (kind)");
                }
            }
        }
    }
    if (!problems.empty()) {
        std::string msg = "scoring table references codes the registry cannot satisfy:";
        for (const auto& p : problems) msg += " " + p;
        throw ConfigError(msg);
    }
}

namespace {

std::string describe_missing(const std::vector<std::string>& codes, int id) {
    std::string s = "cannot score indicator " + std::to_string(id) + "; missing";
    for (const auto& c : codes) s += " " + c;
    return s;
}

}  // namespace

ScoringError::ScoringError(std::vector<std::string> codes, int indicator_id)
    : Error(describe_missing(codes, indicator_id)), codes_(std::move(codes)), indicator_id_(indicator_id) {}

double linear_score(double v, double x0, double x1) {
    return std::clamp((v - x0) / (x1 - x0), 0.0, 1.0);
}

double band_score(double v, double lo0, double lo1, double hi1, double hi0) {
    if (v <= lo0 || v >= hi0) return 0.0;
    if (v < lo1) return (v - lo0) / (lo1 - lo0);
    if (v > hi1) return (hi0 - v) / (hi0 - hi1);
    return 1.0;
}

namespace {

double tri_value(qschema::TriLevel t) {
    switch (t) {
    case qschema::TriLevel::insufficient: return 0.0;
    case qschema::TriLevel::partial: return 0.5;
    case qschema::TriLevel::sufficient: return 1.0;
    }
    return 0.0;
}

}  // namespace

double score_component(const Questionnaire& q, const Component& c, int indicator_id) {
    std::vector<std::string> missing;
    auto num = [&](const std::string& code) {
        auto v = q.number(code);
        if (!v) missing.push_back(code);
        return v.value_or(0.0);
    };
    double score = 0.0;
    switch (c.mapping) {
    case Mapping::tri_level: {
        auto t = q.tri_level(c.code);
        if (!t) missing.push_back(c.code);
        else score = tri_value(*t);
        break;
    }
    case Mapping::linear: score = linear_score(num(c.code), c.x0, c.x1); break;
    case Mapping::band: score = band_score(num(c.code), c.lo0, c.lo1, c.hi1, c.hi0); break;
    case Mapping::max_share: {
        double m = -HUGE_VAL;
        for (const auto& code : c.codes) m = std::max(m, num(code));
        score = linear_score(m, c.x0, c.x1);
        break;
    }
    case Mapping::ratio: {
        double n = 0.0, d = 0.0;
        for (const auto& code : c.numerator) n += num(code);
        for (const auto& code : c.denominator) d += num(code);
        score = d == 0.0 ? c.zero_denominator : linear_score(n / d, c.x0, c.x1);
        break;
    }
    }
    if (!missing.empty()) throw ScoringError(std::move(missing), indicator_id);
    return score;
}

double score_indicator(const Questionnaire& q, int indicator_id, const ScoringTable& table) {
    const auto& def = table.indicator(indicator_id);
    std::vector<std::string> missing;
    std::vector<double> scores;
    for (const auto& c : def.components) {
        try {
            scores.push_back(score_component(q, c, indicator_id));
        } catch (const ScoringError& e) {
            missing.insert(missing.end(), e.codes().begin(), e.codes().end());
        }
    }
    if (!missing.empty()) throw ScoringError(std::move(missing), indicator_id);
    return stable_mean(scores);
}

IndicatorVector compute_indicator_vector(const Questionnaire& q, const ScoringTable& table,
                                         const qschema::Registry& registry) {
    auto issues = qschema::validate(q, registry);
    if (qschema::has_errors(issues)) throw qschema::ValidationError(std::move(issues));
    IndicatorVector iv;
    for (int id = 1; id <= kIndicatorCount; ++id) {
        iv.values[static_cast<std::size_t>(id - 1)] = score_indicator(q, id, table);
    }
    return iv;
}

const std::array<std::vector<int>, kSubIndexCount>& subindex_members() {
    static const std::array<std::vector<int>, kSubIndexCount> members{{
        {1, 2, 3, 4},
        {5, 6, 7},
        {8, 9, 10, 11},
        {12},
        {13, 14},
        {15, 16, 17},
        {18, 19, 20, 21},
    }};
    return members;
}

const std::array<std::string_view, kSubIndexCount>& subindex_names() {
    static const std::array<std::string_view, kSubIndexCount> names{
        "Economic Balance",         "Social Balance",
        "Business Management",      "Soil Productive Capacity",
        "Water Quality",            "Handling of the Production Systems",
        "Ecology of the Rural Landscape",
    };
    return names;
}

const std::array<std::string_view, kIndicatorCount>& indicator_names() {
    static const std::array<std::string_view, kIndicatorCount> names{
        "Productivity",
        "Income Diversification",
        "Assets Development",
        "Degree of Indebtedness",
        "Basic Services Availability",
        "Scholarship",
        "Work/Employment Quality",
        "Business Management",
        "Information Management",
        "Residues Management",
        "Work Security",
        "Soil Fertility",
        "Water Quality",
        "Contamination Risks",
        "Soil Degradation Evaluation",
        "Conservation Practices Adoption",
        "Roads Quality",
        "Native Vegetation",
        "Permanent Preservation Areas",
        "Legal Reserve Area",
        "Landscape Diversification",
    };
    return names;
}

int subindex_of(int indicator_id) {
    const auto& m = subindex_members();
    for (int s = 0; s < kSubIndexCount; ++s) {
        const auto& g = m[static_cast<std::size_t>(s)];
        if (std::find(g.begin(), g.end(), indicator_id) != g.end()) return s;
    }
    throw UsageError("indicator id out of range: " + std::to_string(indicator_id));
}

SubIndexVector compute_subindexes(const IndicatorVector& iv) {
    SubIndexVector out;
    const auto& m = subindex_members();
    for (std::size_t s = 0; s < m.size(); ++s) {
        std::vector<double> xs;
        for (int id : m[s]) xs.push_back(iv.at(id));
        out.values[s] = stable_mean(xs);
    }
    return out;
}

SustainabilityScore compute_si(const IndicatorVector& iv) {
    SustainabilityScore s;
    s.si = stable_mean(iv.values);
    s.category = categorize(s.si);
    return s;
}

Category categorize(double si) {
    if (!(si >= 0.0 && si <= 1.0)) throw DomainError("sustainability index outside [0, 1]");
    if (si < kLowUpper) return Category::Low;
    if (si < kSustainabilityLimit) return Category::Medium;
    return Category::High;
}

}  // namespace agro::indicators
