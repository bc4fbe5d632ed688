// Synthetic questionnaire populations with planted indicator rules.
//
// Each instance gets a target class (largest-remainder allocation of the class
// mix) and, per planted rule of that class, a flag saying whether it must satisfy
// the rule. Background indicators are realized first and never revisited.
// Signal indicator targets are then drawn from per-class Beta distributions,
// nudged into or out of the rule regions, and redrawn until the SI lands in the
// target class. Targets are inverted into questionnaire field values through
// the scoring table, and the realized questionnaire is scored again so that
// every check runs on what the downstream pipeline will see.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "agro/dataset.hpp"
#include "agro/numeric.hpp"
#include "agro/parallel.hpp"
#include "agro/rng.hpp"

namespace agro::dataset {

using indicators::Category;
using indicators::Component;
using indicators::IndicatorVector;
using indicators::Mapping;
using qschema::Number;
using qschema::Questionnaire;
using qschema::TriLevel;

bool Condition::holds(const IndicatorVector& iv) const {
    const double v = iv.at(indicator);
    return op == Op::ge ? v >= threshold : v <= threshold;
}

bool PlantedRule::holds(const IndicatorVector& iv) const {
    return std::all_of(conditions.begin(), conditions.end(), [&](const Condition& c) { return c.holds(iv); });
}

SyntheticConfig default_synthetic_config(std::size_t n, std::uint64_t seed) {
    SyntheticConfig cfg;
    cfg.n = n;
    cfg.seed = seed;
    PlantedRule soil_and_reserve;
    soil_and_reserve.conditions = {{12, Condition::Op::ge, 0.5}, {20, Condition::Op::ge, 0.7}};
    soil_and_reserve.coverage = 0.58;
    soil_and_reserve.window_start = 0.0;
    PlantedRule management;
    management.conditions = {{8, Condition::Op::ge, 0.81}};
    management.coverage = 0.50;
    management.window_start = 0.35;
    cfg.planted_rules = {soil_and_reserve, management};
    cfg.signal_indicators = {4, 8, 9, 12, 16, 19, 20};
    // Employment quality tracks business management: informative on its own,
    // redundant next to its source.
    cfg.echoes = {Echo{7, 8, 0.2}};
    cfg.signal_beta = {BetaParams{1.5, 3.0}, BetaParams{2.0, 2.0}, BetaParams{2.5, 2.0}};
    cfg.noise_beta = {30.0, 12.0};
    return cfg;
}

namespace {

constexpr std::size_t kClasses = 3;

void check_config(const SyntheticConfig& cfg) {
    double sum = 0.0;
    for (double f : cfg.class_mix) {
        if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("class_mix fractions must lie in [0, 1]");
        sum += f;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw ConfigError("class_mix must sum to 1");
    auto check_beta = [](const BetaParams& b) {
        if (!(b.a > 0.0 && b.b > 0.0)) throw ConfigError("Beta parameters must be positive");
    };
    for (const auto& b : cfg.signal_beta) check_beta(b);
    check_beta(cfg.noise_beta);
    for (int s : cfg.signal_indicators) {
        if (s < 1 || s > indicators::kIndicatorCount) throw ConfigError("signal indicator out of range");
    }
    for (const auto& e : cfg.echoes) {
        if (e.indicator < 1 || e.indicator > indicators::kIndicatorCount || e.source < 1 ||
            e.source > indicators::kIndicatorCount || e.indicator == e.source || !(e.spread >= 0.0)) {
            throw ConfigError("invalid echo indicator");
        }
        for (const auto& r : cfg.planted_rules) {
            for (const auto& c : r.conditions) {
                if (c.indicator == e.indicator) throw ConfigError("an echo indicator cannot carry a planted condition");
            }
        }
    }
    if (cfg.max_attempts <= 0) throw ConfigError("max_attempts must be positive");
    for (const auto& r : cfg.planted_rules) {
        if (!(r.coverage >= 0.0 && r.coverage <= 1.0)) throw ConfigError("rule coverage must lie in [0, 1]");
        if (!(r.window_start >= 0.0 && r.window_start < 1.0)) throw ConfigError("rule window_start must lie in [0, 1)");
        if (r.conditions.empty()) throw ConfigError("planted rule without conditions");
        std::array<double, indicators::kIndicatorCount + 1> lo{}, hi{};
        lo.fill(0.0);
        hi.fill(1.0);
        for (const auto& c : r.conditions) {
            if (c.indicator < 1 || c.indicator > indicators::kIndicatorCount) {
                throw ConfigError("rule condition names indicator " + std::to_string(c.indicator));
            }
            auto& l = lo[static_cast<std::size_t>(c.indicator)];
            auto& h = hi[static_cast<std::size_t>(c.indicator)];
            if (c.op == Condition::Op::ge) l = std::max(l, c.threshold);
            else h = std::min(h, c.threshold);
            if (l > h) throw ConfigError("planted rule has contradictory conditions on indicator " +
                                         std::to_string(c.indicator));
        }
    }
}

std::array<std::size_t, kClasses> allocate(std::size_t n, const std::array<double, kClasses>& mix) {
    std::array<std::size_t, kClasses> counts{};
    std::array<double, kClasses> rem{};
    std::size_t used = 0;
    for (std::size_t c = 0; c < kClasses; ++c) {
        const double exact = mix[c] * static_cast<double>(n);
        counts[c] = static_cast<std::size_t>(std::floor(exact));
        rem[c] = exact - std::floor(exact);
        used += counts[c];
    }
    std::array<std::size_t, kClasses> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (std::size_t i = 0; used < n; ++i, ++used) ++counts[order[i % kClasses]];
    return counts;
}

struct Plan {
    Category cls = Category::Medium;
    std::vector<bool> want;  // per planted rule
};

std::vector<Plan> plan_instances(const SyntheticConfig& cfg) {
    const auto counts = allocate(cfg.n, cfg.class_mix);
    std::vector<Plan> plans;
    plans.reserve(cfg.n);
    for (std::size_t c = 0; c < kClasses; ++c) {
        for (std::size_t i = 0; i < counts[c]; ++i) plans.push_back({static_cast<Category>(c), {}});
    }
    Rng rng(derive_seed(cfg.seed, stable_hash("class-order")));
    rng.shuffle(plans.begin(), plans.end());

    for (std::size_t c = 0; c < kClasses; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < plans.size(); ++i) {
            if (plans[i].cls == static_cast<Category>(c)) members.push_back(i);
        }
        Rng wr(derive_seed(cfg.seed, stable_hash("windows") + c));
        wr.shuffle(members.begin(), members.end());
        const double m = static_cast<double>(members.size());
        for (std::size_t rank = 0; rank < members.size(); ++rank) {
            auto& plan = plans[members[rank]];
            plan.want.assign(cfg.planted_rules.size(), false);
            for (std::size_t r = 0; r < cfg.planted_rules.size(); ++r) {
                const auto& rule = cfg.planted_rules[r];
                if (rule.cls != static_cast<Category>(c)) continue;
                double pos = static_cast<double>(rank) / m - rule.window_start;
                if (pos < 0.0) pos += 1.0;
                plan.want[r] = pos < rule.coverage;
            }
        }
    }
    return plans;
}

double draw_beta(Rng& rng, const BetaParams& b) { return rng.beta(b.a, b.b); }

// Redraws `x` from `b` until it lands in [lo, hi]; falls back to a uniform draw
// when the region has little Beta mass.
double draw_truncated(Rng& rng, const BetaParams& b, double lo, double hi) {
    for (int i = 0; i < 64; ++i) {
        const double x = draw_beta(rng, b);
        if (x >= lo && x <= hi) return x;
    }
    return rng.uniform(lo, hi);
}

// Largest value strictly below t, so that "x <= below(t)" violates "x >= t".
double below(double t) { return std::nextafter(t, -HUGE_VAL); }
double above(double t) { return std::nextafter(t, HUGE_VAL); }

void force_into(Rng& rng, const BetaParams& b, const Condition& c, std::array<double, 22>& t) {
    auto& x = t[static_cast<std::size_t>(c.indicator)];
    x = c.op == Condition::Op::ge ? draw_truncated(rng, b, c.threshold, 1.0) : draw_truncated(rng, b, 0.0, c.threshold);
}

void force_out(Rng& rng, const BetaParams& b, const Condition& c, std::array<double, 22>& t) {
    auto& x = t[static_cast<std::size_t>(c.indicator)];
    x = c.op == Condition::Op::ge ? draw_truncated(rng, b, 0.0, below(c.threshold))
                                  : draw_truncated(rng, b, above(c.threshold), 1.0);
}

using Targets = std::array<double, indicators::kIndicatorCount + 1>;  // 1-based

// Per-indicator bounds that keep every planted rule in its wanted state: wanted
// rules pin their conditions, unwanted ones keep their first failing condition
// failing.
std::pair<Targets, Targets> rule_bounds(const SyntheticConfig& cfg, const Plan& plan, const Targets& t) {
    Targets lo{}, hi{};
    hi.fill(1.0);
    for (std::size_t r = 0; r < cfg.planted_rules.size(); ++r) {
        for (const auto& c : cfg.planted_rules[r].conditions) {
            auto& l = lo[static_cast<std::size_t>(c.indicator)];
            auto& h = hi[static_cast<std::size_t>(c.indicator)];
            const double x = t[static_cast<std::size_t>(c.indicator)];
            if (plan.want[r]) {
                if (c.op == Condition::Op::ge) l = std::max(l, c.threshold);
                else h = std::min(h, c.threshold);
                continue;
            }
            const bool fails = c.op == Condition::Op::ge ? x < c.threshold : x > c.threshold;
            if (!fails) continue;
            if (c.op == Condition::Op::ge) h = std::min(h, below(c.threshold));
            else l = std::max(l, above(c.threshold));
            break;
        }
    }
    return {lo, hi};
}

void apply_echoes(const std::vector<Echo>& echoes, const std::vector<double>& offsets, Targets& t) {
    for (std::size_t e = 0; e < echoes.size(); ++e) {
        const double x = t[static_cast<std::size_t>(echoes[e].source)] + offsets[e];
        t[static_cast<std::size_t>(echoes[e].indicator)] = std::clamp(x, 0.0, 1.0);
    }
}

// Moves every movable indicator the same fraction of the way to its bound
// (upper bound when the mean must rise) until the mean reaches `goal`.
void pull_toward(Targets& t, const std::array<bool, 22>& movable, const std::pair<Targets, Targets>& bounds,
                 const std::vector<Echo>& echoes, const std::vector<double>& offsets, double goal) {
    auto mean_at = [&](double lambda, Targets& out) {
        out = t;
        const bool up = goal > stable_mean(std::vector<double>(t.begin() + 1, t.end()));
        for (std::size_t id = 1; id < t.size(); ++id) {
            if (!movable[id]) continue;
            const double b = up ? bounds.second[id] : bounds.first[id];
            out[id] = t[id] + lambda * (b - t[id]);
        }
        apply_echoes(echoes, offsets, out);
        return stable_mean(std::vector<double>(out.begin() + 1, out.end()));
    };
    Targets tmp;
    const bool up = goal > mean_at(0.0, tmp);
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 40; ++i) {
        const double mid = (lo + hi) / 2.0;
        const double m = mean_at(mid, tmp);
        if ((m < goal) == up) lo = mid;
        else hi = mid;
    }
    mean_at(hi, tmp);
    t = tmp;
}

// A mean just inside the class band, on the side the targets came from.
double band_goal(Rng& rng, Category cls, double mean) {
    const double step = 0.002 + 0.02 * rng.uniform();
    switch (cls) {
        case Category::High: return indicators::kSustainabilityLimit + step;
        case Category::Low: return indicators::kLowUpper - step;
        case Category::Medium:
            return mean >= indicators::kSustainabilityLimit ? indicators::kSustainabilityLimit - step : indicators::kLowUpper + step;
    }
    return mean;
}

// Spreads `units` half-steps over `k` tri-level slots (each 0..2) at random.
std::vector<int> spread_levels(Rng& rng, std::size_t k, int units) {
    std::vector<int> lv(k, 0);
    units = std::clamp(units, 0, static_cast<int>(2 * k));
    for (int u = 0; u < units; ++u) {
        std::size_t j = rng.below(k);
        while (lv[j] == 2) j = (j + 1) % k;
        ++lv[j];
    }
    return lv;
}

TriLevel level_of(int v) {
    return v == 0 ? TriLevel::insufficient : v == 1 ? TriLevel::partial : TriLevel::sufficient;
}

// Scores s_j with mean exactly `mean` (up to rounding), jittered for texture.
std::vector<double> jittered(Rng& rng, std::size_t k, double mean) {
    std::vector<double> e(k);
    for (auto& x : e) x = rng.uniform(-0.25, 0.25);
    const double m = stable_mean(e);
    double lambda = 1.0;
    for (auto& x : e) {
        x -= m;
        if (x > 0) lambda = std::min(lambda, (1.0 - mean) / x);
        if (x < 0) lambda = std::min(lambda, mean / -x);
    }
    std::vector<double> s(k);
    for (std::size_t j = 0; j < k; ++j) s[j] = std::clamp(mean + lambda * e[j], 0.0, 1.0);
    return s;
}

void put(Questionnaire& q, const std::string& code, double v, const std::string& unit) {
    q.values[code] = Number{v, unit};
}

class Realizer {
public:
    Realizer(const indicators::ScoringTable& table, const qschema::Registry& registry)
        : table_(table), registry_(registry) {}

    std::string unit(const std::string& code) const {
        const auto* spec = registry_.find(code);
        return spec && spec->unit ? *spec->unit : std::string{};
    }

    void set(Questionnaire& q, const std::string& code, double v) const { put(q, code, v, unit(code)); }

    double value_or_draw(Questionnaire& q, Rng& rng, const std::string& code) const {
        if (auto v = q.number(code)) return *v;
        double v = 0.0;
        if (code == "I6.1") v = static_cast<double>(2 + rng.below(11));
        else if (code == "I11.1") v = static_cast<double>(1 + rng.below(6));
        else if (code == "I1.5") v = std::round(rng.uniform(20.0, 60.0) * 10.0) / 10.0;
        else if (code == "I1.6") v = std::round(rng.uniform(50.0, 150.0) * 100.0) / 100.0;
        else v = std::round(rng.uniform(1.0, 100.0));
        set(q, code, v);
        return v;
    }

    void numeric_component(Questionnaire& q, Rng& rng, const Component& c, double s) const {
        switch (c.mapping) {
        case Mapping::linear: set(q, c.code, c.x0 + s * (c.x1 - c.x0)); break;
        case Mapping::band:
            if (rng.uniform() < 0.5) set(q, c.code, c.lo0 + s * (c.lo1 - c.lo0));
            else set(q, c.code, c.hi0 - s * (c.hi0 - c.hi1));
            break;
        case Mapping::max_share: {
            const double top = c.x0 + s * (c.x1 - c.x0);
            const std::size_t lead = rng.below(c.codes.size());
            const double rest = (100.0 - top) / static_cast<double>(c.codes.size() - 1);
            for (std::size_t j = 0; j < c.codes.size(); ++j) set(q, c.codes[j], j == lead ? top : rest);
            break;
        }
        case Mapping::ratio: {
            double d = 0.0;
            for (const auto& code : c.denominator) d += value_or_draw(q, rng, code);
            const double total = (c.x0 + s * (c.x1 - c.x0)) * d;
            if (c.numerator.size() == 1) {
                set(q, c.numerator.front(), total);
            } else {
                const double share = rng.uniform(0.2, 0.8);
                set(q, c.numerator[0], total * share);
                double left = total - total * share;
                for (std::size_t j = 1; j < c.numerator.size(); ++j) {
                    const double part = j + 1 == c.numerator.size() ? left : left * rng.uniform(0.2, 0.8);
                    set(q, c.numerator[j], part);
                    left -= part;
                }
            }
            break;
        }
        case Mapping::tri_level: break;
        }
    }

    void indicator(Questionnaire& q, Rng& rng, int id, double target) const {
        const auto& def = table_.indicator(id);
        std::vector<const Component*> tri, num;
        for (const auto& c : def.components) (c.mapping == Mapping::tri_level ? tri : num).push_back(&c);
        const double k = static_cast<double>(def.components.size());
        double tri_sum = 0.0;
        if (!tri.empty()) {
            const int units = static_cast<int>(std::lround(target * 2.0 * static_cast<double>(tri.size())));
            const auto lv = spread_levels(rng, tri.size(), units);
            for (std::size_t j = 0; j < tri.size(); ++j) {
                q.values[tri[j]->code] = level_of(lv[j]);
                tri_sum += lv[j] * 0.5;
            }
        }
        if (num.empty()) return;
        const double mean = std::clamp((k * target - tri_sum) / static_cast<double>(num.size()), 0.0, 1.0);
        const auto s = jittered(rng, num.size(), mean);
        for (std::size_t j = 0; j < num.size(); ++j) numeric_component(q, rng, *num[j], s[j]);
    }

private:
    const indicators::ScoringTable& table_;
    const qschema::Registry& registry_;
};

struct Basin {
    const char* name;
    int weight;
    std::array<const char*, 3> municipalities;
    const char* meso;
};

// Property counts per sub-basin of the original collection drive the weights.
constexpr std::array<Basin, 13> kBasins{{
    {"Tributaries do Alto São Francisco", 19, {"Arcos", "Lagoa da Prata", "Iguatama"}, "Oeste de Minas"},
    {"Basin of Paraopeba River", 16, {"Betim", "Bonfim", "Esmeraldas"}, "Metropolitana de Belo Horizonte"},
    {"Basin of Pará River", 13, {"Pitangui", "Divinópolis", "Itaúna"}, "Oeste de Minas"},
    {"Basin of Das Velhas River", 11, {"Sete Lagoas", "Curvelo", "Caeté"}, "Metropolitana de Belo Horizonte"},
    {"Basin of Piracicaba River", 9, {"Itabira", "João Monlevade", "Rio Piracicaba"}, "Metropolitana de Belo Horizonte"},
    {"Basin of Furnas Reservoir", 8, {"Formiga", "Alfenas", "Campo Belo"}, "Sul/Sudoeste de Minas"},
    {"Basin of Verde River", 5, {"Varginha", "Três Corações", "Lambari"}, "Sul/Sudoeste de Minas"},
    {"Basin of Alto Rio Grande", 4, {"Lavras", "São João del-Rei", "Andrelândia"}, "Campo das Vertentes"},
    {"Basin of tributaries from Minas Gerais of the rivers Preto and Paraibuna", 4,
     {"Juiz de Fora", "Santos Dumont", "Lima Duarte"}, "Zona da Mata"},
    {"Basin of Piranga River", 4, {"Viçosa", "Piranga", "Ponte Nova"}, "Zona da Mata"},
    {"Basin of Santo Antônio River", 3, {"Conceição do Mato Dentro", "Ferros", "Guanhães"}, "Metropolitana de Belo Horizonte"},
    {"Basin of waters around the dam of Três Marias", 3, {"Três Marias", "Morada Nova de Minas", "Abaeté"}, "Central Mineira"},
    {"Hydrographic basin of São Francisco River", 1, {"Pirapora", "Januária", "São Francisco"}, "Norte de Minas"},
}};

constexpr std::array<const char*, 24> kVocabulary{
    "pasto",     "cerca",  "erosão",   "estrada",    "nascente",   "água",     "adubação", "mata",
    "curral",    "esterco", "silagem", "leite",      "ordenha",    "irrigação", "embalagem", "lixo",
    "queimada",  "assoreamento", "voçoroca", "reserva", "capineira", "bebedouro", "crédito", "assistência",
};
constexpr std::array<const char*, 8> kGlue{"de", "da", "do", "e", "na", "no", "com", "sem"};

std::string sentence(Rng& rng, std::size_t words) {
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (!out.empty()) out += ' ';
        out += i % 3 == 1 ? kGlue[rng.below(kGlue.size())] : kVocabulary[rng.below(kVocabulary.size())];
    }
    return out;
}

void fill_context(Questionnaire& q, Rng& rng, std::size_t index, const Realizer& rz) {
    auto& h = q.header;
    char code[16];
    std::snprintf(code, sizeof code, "MG%05zu", index + 1);
    h.property_code = code;
    h.project_id = "isa-2016";
    h.institution_id = "inst-01";
    // Collection window: August 2016 to January 2017.
    const int month_offset = static_cast<int>(rng.below(6));
    const int year = month_offset < 5 ? 2016 : 2017;
    const unsigned month = month_offset < 5 ? static_cast<unsigned>(8 + month_offset) : 1u;
    const unsigned day = static_cast<unsigned>(1 + rng.below(28));
    h.interview_date = std::chrono::year_month_day{std::chrono::year{year}, std::chrono::month{month},
                                                   std::chrono::day{day}};
    int total = 0;
    for (const auto& b : kBasins) total += b.weight;
    int pick = static_cast<int>(rng.below(static_cast<std::size_t>(total)));
    const Basin* basin = &kBasins.front();
    for (const auto& b : kBasins) {
        if (pick < b.weight) {
            basin = &b;
            break;
        }
        pick -= b.weight;
    }
    h.water_basin = basin->name;
    h.municipality = basin->municipalities[rng.below(3)];
    h.state = "MG";
    h.meso_region = basin->meso;
    h.latitude = std::round(rng.uniform(-22.5, -17.0) * 1e5) / 1e5;
    h.longitude = std::round(rng.uniform(-48.0, -42.0) * 1e5) / 1e5;
    const double u = rng.uniform();
    h.main_income = u < 0.8 ? "dairy" : u < 0.9 ? "coffee" : "beef";

    static constexpr std::array<const char*, 5> kOwnership{"owner", "tenant", "partner", "squatter", "other"};
    q.values["Q5"] = qschema::Category{u < 0.85 ? "owner" : kOwnership[1 + rng.below(4)]};
    rz.set(q, "Q6", static_cast<double>(25 + rng.below(51)));
    const double area = std::round(std::exp(rng.uniform(std::log(5.0), std::log(400.0))) * 100.0) / 100.0;
    rz.set(q, "Q7.2", area);
    rz.set(q, "Q7.3", static_cast<double>(5 + rng.below(36)));
    rz.set(q, "G3.1.3", std::round(area * rng.uniform(0.03, 0.2) * 100.0) / 100.0);
    const double income = std::round(area * rng.uniform(2000.0, 9000.0));
    rz.set(q, "Q11.1", income);
    rz.set(q, "Q11.2", std::round(income * rng.uniform(0.0, 0.4)));
    rz.set(q, "Q11.3", static_cast<double>(1 + rng.below(5)));
    rz.set(q, "Q12.1", std::round(area * rng.uniform(500.0, 3000.0)));
    rz.set(q, "Q12.2", std::round(area * rng.uniform(300.0, 2000.0)));
    rz.set(q, "Q12.3", std::round(area * rng.uniform(500.0, 4000.0)));
    rz.set(q, "Q12.4", rng.uniform() < 0.4 ? std::round(area * rng.uniform(100.0, 1500.0)) : 0.0);
    rz.set(q, "Q13.3", std::round(area * rng.uniform(15000.0, 40000.0)));
    rz.set(q, "Q14.2", static_cast<double>(rng.below(6)));
    q.values["Q17"] = qschema::Text{sentence(rng, 4 + rng.below(8))};
    q.values["I1.1"] = qschema::Text{sentence(rng, 3 + rng.below(5))};
    q.values["Q3.3"] = qschema::Text{std::string("córrego ") + kVocabulary[rng.below(kVocabulary.size())]};
    for (const char* yn : {"I2.5", "I10.6", "I17.3", "I21.3"}) {
        q.values[yn] = qschema::Category{rng.uniform() < 0.5 ? "yes" : "no"};
    }
}

}  // namespace

std::vector<Questionnaire> generate_synthetic(const SyntheticConfig& cfg) {
    check_config(cfg);
    if (cfg.n == 0) return {};
    const auto& table = indicators::default_scoring_table();
    const auto& registry = qschema::default_registry();
    const auto plans = plan_instances(cfg);
    const Realizer rz(table, registry);

    std::array<bool, 22> is_signal{}, is_fixed{};
    for (int s : cfg.signal_indicators) is_signal[static_cast<std::size_t>(s)] = true;
    // Background indicators are drawn once per instance, before anything that
    // depends on the class, so they carry no class information at all. Only
    // the signal, echo and rule indicators are redrawn until the class fits.
    is_fixed.fill(true);
    for (int s : cfg.signal_indicators) is_fixed[static_cast<std::size_t>(s)] = false;
    for (const auto& e : cfg.echoes) is_fixed[static_cast<std::size_t>(e.indicator)] = false;
    for (const auto& r : cfg.planted_rules) {
        for (const auto& c : r.conditions) is_fixed[static_cast<std::size_t>(c.indicator)] = false;
    }
    std::array<bool, 22> movable = {};
    for (std::size_t id = 1; id < movable.size(); ++id) movable[id] = !is_fixed[id];
    for (const auto& e : cfg.echoes) movable[static_cast<std::size_t>(e.indicator)] = false;
    const std::uint64_t base = derive_seed(cfg.seed, stable_hash("instances"));

    std::vector<Questionnaire> out(cfg.n);
    parallel_for(cfg.n, default_threads(), [&](std::size_t i) {
        const auto& plan = plans[i];
        const auto cls = static_cast<std::size_t>(plan.cls);
        Rng rng(derive_seed(base, i));
        auto dist = [&](int id) -> const BetaParams& {
            return is_signal[static_cast<std::size_t>(id)] ? cfg.signal_beta[cls] : cfg.noise_beta;
        };

        Questionnaire background;
        fill_context(background, rng, i, rz);
        Targets fixed{};
        for (int id = 1; id <= indicators::kIndicatorCount; ++id) {
            if (!is_fixed[static_cast<std::size_t>(id)]) continue;
            rz.indicator(background, rng, id, draw_beta(rng, cfg.noise_beta));
            fixed[static_cast<std::size_t>(id)] = indicators::score_indicator(background, id, table);
        }

        for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
            Targets t = fixed;
            for (int id = 1; id <= indicators::kIndicatorCount; ++id) {
                if (!is_fixed[static_cast<std::size_t>(id)]) t[static_cast<std::size_t>(id)] = draw_beta(rng, dist(id));
            }
            // Two passes settle rules that share an indicator in the common case;
            // the realized check below catches the rest.
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t r = 0; r < cfg.planted_rules.size(); ++r) {
                    const auto& rule = cfg.planted_rules[r];
                    IndicatorVector probe;
                    std::copy(t.begin() + 1, t.end(), probe.values.begin());
                    const bool holds = rule.holds(probe);
                    if (plan.want[r] && !holds) {
                        for (const auto& c : rule.conditions) {
                            if (!c.holds(probe)) force_into(rng, dist(c.indicator), c, t);
                        }
                    } else if (!plan.want[r] && holds) {
                        const auto& c = rule.conditions[rng.below(rule.conditions.size())];
                        force_out(rng, dist(c.indicator), c, t);
                    }
                }
            }
            std::vector<double> offsets;
            for (const auto& e : cfg.echoes) offsets.push_back(rng.uniform(-e.spread, e.spread));
            apply_echoes(cfg.echoes, offsets, t);
            double mean = stable_mean(std::vector<double>(t.begin() + 1, t.end()));
            if (indicators::categorize(mean) != plan.cls) {
                pull_toward(t, movable, rule_bounds(cfg, plan, t), cfg.echoes, offsets, band_goal(rng, plan.cls, mean));
                mean = stable_mean(std::vector<double>(t.begin() + 1, t.end()));
                if (indicators::categorize(mean) != plan.cls) continue;
            }

            Questionnaire q = background;
            for (int id = 1; id <= indicators::kIndicatorCount; ++id) {
                if (!is_fixed[static_cast<std::size_t>(id)]) rz.indicator(q, rng, id, t[static_cast<std::size_t>(id)]);
            }
            IndicatorVector iv;
            for (int id = 1; id <= indicators::kIndicatorCount; ++id) {
                iv.values[static_cast<std::size_t>(id - 1)] = indicators::score_indicator(q, id, table);
            }
            if (indicators::compute_si(iv).category != plan.cls) continue;
            bool ok = true;
            for (std::size_t r = 0; r < cfg.planted_rules.size() && ok; ++r) {
                ok = cfg.planted_rules[r].holds(iv) == plan.want[r];
            }
            if (!ok) continue;
            out[i] = std::move(q);
            return;
        }
        throw ConfigError("synthetic configuration is infeasible: no instance of class " +
                          std::string(indicators::to_string(plan.cls)) + " matched the planted rules after " +
                          std::to_string(cfg.max_attempts) + " attempts");
    });
    return out;
}

}  // namespace agro::dataset
