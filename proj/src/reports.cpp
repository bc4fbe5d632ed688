#include "agro/reports.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

#include "agro/numeric.hpp"
#include "agro/paths.hpp"

namespace agro::reports {

namespace ind = agro::indicators;

// ------------------------------------------------------------------ filtering

bool FilterCriteria::empty() const {
    return !project && !year && !main_income && !state && !meso_region && !micro_region && !senar_region &&
           !coffee_region && municipalities.empty() && water_basins.empty();
}

bool FilterCriteria::matches(const qschema::Questionnaire& q) const {
    const auto& h = q.header;
    auto eq = [](const std::optional<std::string>& want, const std::string& have) { return !want || *want == have; };
    return eq(project, h.project_id) && (!year || *year == h.year()) && eq(main_income, h.main_income) &&
           eq(state, h.state) && eq(meso_region, h.meso_region) && eq(micro_region, h.micro_region) &&
           eq(senar_region, h.senar_region) && eq(coffee_region, h.coffee_region) &&
           (municipalities.empty() || municipalities.contains(h.municipality)) &&
           (water_basins.empty() || water_basins.contains(h.water_basin));
}

std::vector<Record> filter_records(const std::vector<Record>& records, const FilterCriteria& criteria) {
    std::vector<Record> out;
    for (const auto& r : records) {
        if (criteria.matches(r.q)) out.push_back(r);
    }
    std::stable_sort(out.begin(), out.end(), [](const Record& a, const Record& b) {
        if (a.q.header.property_code != b.q.header.property_code) return a.q.header.property_code < b.q.header.property_code;
        return a.q.header.year() < b.q.header.year();
    });
    return out;
}

// ---------------------------------------------------------------- aggregation

BoxStats box_stats(std::vector<double> values) {
    if (values.empty()) throw UsageError("box plot of an empty sample");
    std::sort(values.begin(), values.end());
    auto quantile = [&](double p) {
        const double h = p * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
    };
    return {values.front(), quantile(0.25), quantile(0.5), quantile(0.75), values.back()};
}

const std::array<MonetaryItem, kMonetaryItems>& monetary_items() {
    static const std::array<MonetaryItem, kMonetaryItems> items{{
        {"Q11.1", "Estimated annual gross income"},
        {"Q12.1", "Facilities and other betterments"},
        {"Q12.2", "Machinery and equipment"},
        {"Q12.3", "Animals"},
        {"Q12.4", "Irrigation"},
        {"Q13.3", "Total estimated value of the rural property"},
    }};
    return items;
}

AggregateReport aggregate(const std::vector<Record>& records) {
    if (records.empty()) throw AggregationError("no records to aggregate");
    AggregateReport r;
    r.matched = records.size();
    std::vector<double> col(records.size());
    for (int i = 0; i < ind::kIndicatorCount; ++i) {
        const auto k = static_cast<std::size_t>(i);
        for (std::size_t n = 0; n < records.size(); ++n) col[n] = records[n].iv.values[k];
        r.mean_indicators.values[k] = stable_mean(col);
    }
    std::vector<ind::SubIndexVector> subs;
    subs.reserve(records.size());
    for (const auto& rec : records) subs.push_back(ind::compute_subindexes(rec.iv));
    for (std::size_t s = 0; s < ind::kSubIndexCount; ++s) {
        for (std::size_t n = 0; n < records.size(); ++n) col[n] = subs[n].values[s];
        r.mean_subindexes.values[s] = stable_mean(col);
        r.subindex_box[s] = box_stats(col);
    }
    for (std::size_t n = 0; n < records.size(); ++n) col[n] = records[n].score.si;
    r.mean_si = stable_mean(col);
    r.si_box = box_stats(col);
    for (std::size_t m = 0; m < kMonetaryItems; ++m) {
        for (std::size_t n = 0; n < records.size(); ++n) col[n] = records[n].q.number(monetary_items()[m].code).value_or(0.0);
        r.monetary[m] = stable_sum(col);
    }
    return r;
}

namespace {

Json box_json(const BoxStats& b) {
    return Json{{"min", b.min}, {"q1", b.q1}, {"median", b.median}, {"q3", b.q3}, {"max", b.max}};
}

std::string indicator_id(int i) { return "I" + std::to_string(i); }

}  // namespace

Json to_json(const AggregateReport& r) {
    Json j;
    j["schema"] = "agro-aggregate/1";
    j["matched"] = r.matched;
    Json inds = Json::object();
    for (int i = 1; i <= ind::kIndicatorCount; ++i) inds[indicator_id(i)] = r.mean_indicators.at(i);
    j["mean_indicators"] = inds;
    Json subs = Json::array();
    for (std::size_t s = 0; s < ind::kSubIndexCount; ++s) {
        subs.push_back({{"id", "S" + std::to_string(s + 1)},
                        {"name", ind::subindex_names()[s]},
                        {"mean", r.mean_subindexes.values[s]},
                        {"box", box_json(r.subindex_box[s])}});
    }
    j["subindexes"] = subs;
    j["mean_si"] = r.mean_si;
    j["si_box"] = box_json(r.si_box);
    Json money = Json::array();
    for (std::size_t m = 0; m < kMonetaryItems; ++m) {
        money.push_back({{"code", monetary_items()[m].code}, {"label", monetary_items()[m].label}, {"sum", r.monetary[m]}});
    }
    j["monetary"] = money;
    j["limit"] = ind::kSustainabilityLimit;
    return j;
}

// ---------------------------------------------------------------------- radar

std::string_view to_string(RadarView v) {
    switch (v) {
        case RadarView::subindexes: return "subindexes";
        case RadarView::socioeconomic: return "socioeconomic";
        case RadarView::environmental: return "environmental";
    }
    return "?";
}

RadarView parse_radar_view(std::string_view s) {
    for (auto v : {RadarView::subindexes, RadarView::socioeconomic, RadarView::environmental}) {
        if (to_string(v) == s) return v;
    }
    throw UsageError("unknown radar view '" + std::string(s) + "'");
}

RadarSeries radar_data(const AggregateReport& report, RadarView view) {
    RadarSeries r;
    r.view = view;
    if (view == RadarView::subindexes) {
        for (std::size_t s = 0; s < ind::kSubIndexCount; ++s) {
            r.axes.emplace_back(ind::subindex_names()[s]);
            r.values.push_back(report.mean_subindexes.values[s]);
        }
    } else {
        const int first = view == RadarView::socioeconomic ? 1 : 12;
        const int last = view == RadarView::socioeconomic ? 11 : ind::kIndicatorCount;
        for (int i = first; i <= last; ++i) {
            r.axes.push_back(indicator_id(i) + " " + std::string(ind::indicator_names()[static_cast<std::size_t>(i - 1)]));
            r.values.push_back(report.mean_indicators.at(i));
        }
    }
    r.limit.assign(r.axes.size(), ind::kSustainabilityLimit);
    return r;
}

Json to_json(const RadarSeries& r) {
    return Json{{"schema", "agro-radar/1"},
                {"view", to_string(r.view)},
                {"axes", r.axes},
                {"series", Json::array({Json{{"name", "mean"}, {"values", r.values}},
                                        Json{{"name", "limit"}, {"values", r.limit}}})}};
}

// --------------------------------------------------------------------- sankey

SankeyGraph sankey_from_rules(const classify::RuleSet& rs, const std::vector<dataset::AttributeSpec>& attributes,
                              const std::vector<std::string>& class_names, const std::vector<Record>& records) {
    // Map every referenced attribute onto an indicator column.
    std::vector<int> indicator_of(attributes.size(), 0);
    for (const auto& rule : rs.rules) {
        if (rule.cls < 0 || static_cast<std::size_t>(rule.cls) >= class_names.size()) throw UsageError("rule class out of range");
        for (const auto& c : rule.conditions) {
            if (c.attribute < 0 || static_cast<std::size_t>(c.attribute) >= attributes.size()) {
                throw UsageError("rule condition refers to an unknown attribute");
            }
            const auto& spec = attributes[static_cast<std::size_t>(c.attribute)];
            int id = 0;
            if (spec.name.size() > 1 && spec.name[0] == 'I') {
                id = std::atoi(spec.name.c_str() + 1);
                if (indicator_id(id) != spec.name) id = 0;
            }
            if (id < 1 || id > ind::kIndicatorCount || spec.kind != dataset::AttrKind::numeric ||
                c.op == classify::Condition::Op::eq) {
                throw UsageError("rule attribute '" + spec.name + "' is not a numeric indicator of the records");
            }
            indicator_of[static_cast<std::size_t>(c.attribute)] = id;
        }
    }
    std::vector<std::vector<double>> xs;
    std::vector<std::string> cats;
    for (const auto& rec : records) {
        std::vector<double> x(attributes.size(), 0.0);
        for (std::size_t a = 0; a < attributes.size(); ++a) {
            if (indicator_of[a] > 0) x[a] = rec.iv.at(indicator_of[a]);
        }
        xs.push_back(std::move(x));
        cats.emplace_back(ind::to_string(ind::categorize(rec.score.si)));
    }

    SankeyGraph g;
    std::map<std::pair<SankeyNode::Kind, std::string>, std::size_t> ids;
    auto node = [&](SankeyNode::Kind kind, const std::string& label) {
        auto [it, fresh] = ids.try_emplace({kind, label}, g.nodes.size());
        if (fresh) g.nodes.push_back({kind, label});
        return it->second;
    };
    for (std::size_t r = 0; r < rs.rules.size(); ++r) {
        const auto& rule = rs.rules[r];
        std::vector<bool> alive(records.size(), true);
        std::size_t prev = 0;
        for (std::size_t k = 0; k < rule.conditions.size(); ++k) {
            const auto& c = rule.conditions[k];
            std::size_t count = 0;
            for (std::size_t n = 0; n < records.size(); ++n) {
                alive[n] = alive[n] && c.holds(xs[n]);
                count += alive[n] ? 1 : 0;
            }
            const std::size_t here = node(SankeyNode::Kind::conjunct, classify::condition_to_text(c, attributes));
            if (k > 0) g.links.push_back({prev, here, count, r});
            prev = here;
        }
        const std::string& cls = class_names[static_cast<std::size_t>(rule.cls)];
        std::size_t covered = 0, in_class = 0, class_total = 0;
        for (std::size_t n = 0; n < records.size(); ++n) {
            class_total += cats[n] == cls ? 1 : 0;
            if (!alive[n]) continue;
            ++covered;
            in_class += cats[n] == cls ? 1 : 0;
        }
        const std::size_t out = node(SankeyNode::Kind::outcome, cls);
        if (!rule.conditions.empty()) g.links.push_back({prev, out, covered, r});
        g.rule_covered.push_back(covered);
        g.rule_covered_in_class.push_back(in_class);
        g.rule_coverage.push_back(class_total > 0 ? static_cast<double>(in_class) / static_cast<double>(class_total) : 0.0);
    }
    if (rs.default_class >= 0 && static_cast<std::size_t>(rs.default_class) < class_names.size()) {
        node(SankeyNode::Kind::outcome, class_names[static_cast<std::size_t>(rs.default_class)]);
    }
    return g;
}

SankeyGraph sankey_from_rules(const classify::TrainedModel& model, const std::vector<Record>& records) {
    const auto* rs = std::get_if<classify::RuleSet>(&model.body);
    if (rs == nullptr) throw UsageError("a Sankey diagram needs a rule model");
    return sankey_from_rules(*rs, model.attributes, model.class_names, records);
}

Json to_json(const SankeyGraph& g) {
    Json nodes = Json::array();
    for (const auto& n : g.nodes) {
        nodes.push_back({{"label", n.label}, {"kind", n.kind == SankeyNode::Kind::conjunct ? "conjunct" : "outcome"}});
    }
    Json links = Json::array();
    for (const auto& l : g.links) {
        links.push_back({{"source", l.source}, {"target", l.target}, {"weight", l.weight}, {"rule", l.rule}});
    }
    Json rules = Json::array();
    for (std::size_t r = 0; r < g.rule_coverage.size(); ++r) {
        rules.push_back({{"rule", r},
                         {"covered", g.rule_covered[r]},
                         {"covered_in_class", g.rule_covered_in_class[r]},
                         {"coverage", g.rule_coverage[r]}});
    }
    return Json{{"schema", "agro-sankey/1"}, {"nodes", nodes}, {"links", links}, {"rules", rules}};
}

// ------------------------------------------------------------------- CFS bars

std::vector<Bar> cfs_bar_data(const featsel::SelectionResult& sel) {
    if (sel.method != featsel::Method::CFS) throw UsageError("CFS bars need a CFS selection");
    if (sel.scores.size() != sel.selected.size()) throw UsageError("selection has one score per attribute missing");
    std::vector<Bar> bars;
    for (std::size_t i = 0; i < sel.selected.size(); ++i) bars.push_back({sel.selected[i], sel.scores[i]});
    return bars;
}

Json to_json(const std::vector<Bar>& bars, std::string_view dataset_name) {
    Json b = Json::array();
    for (const auto& bar : bars) b.push_back({{"attribute", bar.attribute}, {"score", bar.score}});
    return Json{{"schema", "agro-cfs-bars/1"}, {"dataset", dataset_name}, {"bars", b}};
}

// -------------------------------------------------------------------- scatter

namespace {

// 0 for SI, 1..21 for indicators, -1..-7 for sub-indexes; nullopt otherwise.
std::optional<int> parse_score_id(std::string_view id) {
    if (id == "SI") return 0;
    if (id.size() < 2 || (id[0] != 'I' && id[0] != 'S')) return std::nullopt;
    int v = 0;
    for (char ch : id.substr(1)) {
        if (ch < '0' || ch > '9' || v > 100) return std::nullopt;
        v = v * 10 + (ch - '0');
    }
    if (id[1] == '0') return std::nullopt;
    if (id[0] == 'I' && v >= 1 && v <= ind::kIndicatorCount) return v;
    if (id[0] == 'S' && v >= 1 && v <= ind::kSubIndexCount) return -v;
    return std::nullopt;
}

}  // namespace

bool is_score_id(std::string_view id) { return parse_score_id(id).has_value(); }

double score_by_id(const Record& r, std::string_view id) {
    const auto k = parse_score_id(id);
    if (!k) throw UsageError("unknown score id '" + std::string(id) + "' (use I1..I21, S1..S7 or SI)");
    if (*k == 0) return r.score.si;
    if (*k > 0) return r.iv.at(*k);
    return ind::compute_subindexes(r.iv).values[static_cast<std::size_t>(-*k - 1)];
}

std::vector<ScatterPoint> scatter_data(const std::vector<Record>& records, std::string_view x, std::string_view y) {
    for (auto id : {x, y}) {
        if (!is_score_id(id)) throw UsageError("unknown score id '" + std::string(id) + "' (use I1..I21, S1..S7 or SI)");
    }
    std::vector<ScatterPoint> pts;
    for (const auto& r : records) {
        pts.push_back({r.q.header.property_code, r.q.header.year(), std::string(ind::to_string(r.score.category)),
                       score_by_id(r, x), score_by_id(r, y)});
    }
    return pts;
}

Json scatter_to_json(const std::vector<ScatterPoint>& pts, std::string_view x, std::string_view y) {
    Json p = Json::array();
    for (const auto& pt : pts) {
        p.push_back({{"property", pt.property_code}, {"year", pt.year}, {"category", pt.category}, {"x", pt.x}, {"y", pt.y}});
    }
    return Json{{"schema", "agro-scatter/1"}, {"x", x}, {"y", y}, {"points", p}};
}

// ------------------------------------------------------------------ area tree

AreaTree area_tree_data(const std::vector<Record>& records, std::string_view id) {
    if (!is_score_id(id)) throw UsageError("unknown score id '" + std::string(id) + "' (use I1..I21, S1..S7 or SI)");
    AreaTree t;
    t.id = std::string(id);
    for (const auto& r : records) {
        const auto area = r.q.number("Q7.2");
        const std::string who = r.q.header.property_code + "/" + std::to_string(r.q.header.year());
        if (!area) {
            t.warnings.push_back(who + ": no total area (Q7.2); skipped");
            continue;
        }
        if (!(*area > 0.0)) {
            t.warnings.push_back(who + ": total area is zero; skipped");
            continue;
        }
        t.rects.push_back({r.q.header.property_code, r.q.header.year(), *area, 0.0, score_by_id(r, id)});
    }
    std::vector<double> areas;
    for (const auto& rect : t.rects) areas.push_back(rect.area_ha);
    const double total = stable_sum(areas);
    for (auto& rect : t.rects) rect.weight = rect.area_ha / total;
    return t;
}

Json to_json(const AreaTree& t) {
    Json rects = Json::array();
    for (const auto& r : t.rects) {
        rects.push_back({{"property", r.property_code}, {"year", r.year}, {"area_ha", r.area_ha}, {"weight", r.weight}, {"value", r.value}});
    }
    return Json{{"schema", "agro-area-tree/1"}, {"id", t.id}, {"rectangles", rects}, {"warnings", t.warnings}};
}

// ------------------------------------------------------------------ word cloud

namespace {

// Decodes one UTF-8 code point starting at s[i]; malformed bytes come back as
// themselves so they are treated as separators.
char32_t next_code_point(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = b0;
    if (b0 >= 0xF0 && b0 < 0xF8) {
        extra = 3;
        cp = b0 & 0x07u;
    } else if (b0 >= 0xE0) {
        extra = 2;
        cp = b0 & 0x0Fu;
    } else if (b0 >= 0xC0) {
        extra = 1;
        cp = b0 & 0x1Fu;
    } else if (b0 >= 0x80) {
        ++i;
        return 0;
    }
    if (i + static_cast<std::size_t>(extra) >= s.size()) {
        i = s.size();
        return 0;
    }
    for (int k = 1; k <= extra; ++k) {
        const auto b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
        if ((b & 0xC0u) != 0x80u) {
            ++i;
            return 0;
        }
        cp = (cp << 6) | (b & 0x3Fu);
    }
    i += static_cast<std::size_t>(extra) + 1;
    return cp;
}

bool is_word_char(char32_t cp) {
    if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
    if (cp < 0xC0 || cp == 0xD7 || cp == 0xF7) return false;
    if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows
    return true;
}

char32_t fold(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (std::size_t i = 0; i < text.size();) {
        const char32_t cp = next_code_point(text, i);
        if (is_word_char(cp)) {
            append_utf8(cur, fold(cp));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace

std::set<std::string> load_stop_words(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        for (auto& t : tokenize(line)) words.insert(std::move(t));
    }
    return words;
}

const std::set<std::string>& default_stop_words() {
    static const std::set<std::string> words = [] {
        try {
            return load_stop_words(data_dir() / "stopwords.txt");
        } catch (const Error& e) {
            throw ConfigError(std::string("stop-word list: ") + e.what());
        }
    }();
    return words;
}

std::vector<std::pair<std::string, std::size_t>> word_frequencies(const std::vector<Record>& records,
                                                                  const std::set<std::string>& stop_words) {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : records) {
        for (const auto& [code, value] : r.q.values) {
            const auto* t = std::get_if<qschema::Text>(&value);
            if (t == nullptr) continue;
            for (auto& tok : tokenize(t->text)) {
                if (!stop_words.contains(tok)) ++counts[tok];
            }
        }
    }
    std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
}

Json words_to_json(const std::vector<std::pair<std::string, std::size_t>>& words) {
    Json w = Json::array();
    for (const auto& [tok, n] : words) w.push_back({{"token", tok}, {"count", n}});
    return Json{{"schema", "agro-words/1"}, {"words", w}};
}

// ------------------------------------------------------------ property report

Json property_report(const qschema::Questionnaire& q, const ind::IndicatorVector& iv, const ind::SustainabilityScore& si) {
    const auto& h = q.header;
    Json j;
    j["schema"] = "agro-property-report/1";
    j["header"] = {{"property_code", h.property_code},
                   {"project", h.project_id},
                   {"institution", h.institution_id},
                   {"date", qschema::format_date(h.interview_date)},
                   {"municipality", h.municipality},
                   {"water_basin", h.water_basin},
                   {"main_income", h.main_income}};
    const double limit = si.limit;
    Json inds = Json::array();
    for (int i = 1; i <= ind::kIndicatorCount; ++i) {
        inds.push_back({{"id", indicator_id(i)},
                        {"name", ind::indicator_names()[static_cast<std::size_t>(i - 1)]},
                        {"value", iv.at(i)},
                        {"below_limit", iv.at(i) < limit}});
    }
    j["indicators"] = inds;
    const auto subs = ind::compute_subindexes(iv);
    Json sj = Json::array();
    for (std::size_t s = 0; s < ind::kSubIndexCount; ++s) {
        sj.push_back({{"id", "S" + std::to_string(s + 1)},
                      {"name", ind::subindex_names()[s]},
                      {"value", subs.values[s]},
                      {"below_limit", subs.values[s] < limit}});
    }
    j["subindexes"] = sj;
    j["si"] = {{"value", si.si}, {"category", ind::to_string(si.category)}, {"below_limit", si.si < limit}};
    j["limit"] = limit;
    return j;
}

std::string property_report_text(const Json& report) {
    std::ostringstream out;
    char buf[160];
    const auto& h = report.at("header");
    out << "Property " << h.at("property_code").get<std::string>() << "  (" << h.at("date").get<std::string>() << ", "
        << h.at("municipality").get<std::string>() << ")\n";
    auto line = [&](const Json& item) {
        std::snprintf(buf, sizeof buf, "  %-4s %-40s %.4f%s\n", item.at("id").get<std::string>().c_str(),
                      item.at("name").get<std::string>().c_str(), item.at("value").get<double>(),
                      item.at("below_limit").get<bool>() ? "  below limit" : "");
        out << buf;
    };
    out << "Indicators\n";
    for (const auto& i : report.at("indicators")) line(i);
    out << "Sub-indexes\n";
    for (const auto& s : report.at("subindexes")) line(s);
    const auto& si = report.at("si");
    std::snprintf(buf, sizeof buf, "SI %.4f  %s%s\n", si.at("value").get<double>(), si.at("category").get<std::string>().c_str(),
                  si.at("below_limit").get<bool>() ? "  below limit" : "");
    out << buf;
    return out.str();
}

// ---------------------------------------------------------- store and plans

Json to_json(const AdequationPlan& p) {
    Json rec = Json::object();
    for (int i = 1; i <= ind::kIndicatorCount; ++i) rec[indicator_id(i)] = p.recommendations[static_cast<std::size_t>(i - 1)];
    return Json{{"schema", "agro-adequation-plan/1"},
                {"property_code", p.ref.property_code},
                {"year", p.ref.year},
                {"author", p.author},
                {"date", p.date},
                {"recommendations", rec}};
}

AdequationPlan plan_from_json(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(std::string("adequation plan: ") + e.what(), e.byte);
    }
    try {
        if (j.at("schema").get<std::string>() != "agro-adequation-plan/1") throw ParseError("adequation plan: unknown schema", 0);
        AdequationPlan p;
        p.ref.property_code = j.at("property_code").get<std::string>();
        p.ref.year = j.at("year").get<int>();
        p.author = j.at("author").get<std::string>();
        p.date = j.at("date").get<std::string>();
        const auto& rec = j.at("recommendations");
        for (auto it = rec.begin(); it != rec.end(); ++it) {
            const auto id = parse_score_id(it.key());
            if (!id || *id < 1) throw ParseError("adequation plan: unknown slot '" + it.key() + "'", 0);
            p.recommendations[static_cast<std::size_t>(*id - 1)] = it.value().get<std::string>();
        }
        return p;
    } catch (const Json::exception& e) {
        throw ParseError(std::string("adequation plan: ") + e.what(), 0);
    }
}

namespace {

void check_ref(const RecordRef& ref) {
    const auto& c = ref.property_code;
    if (c.empty() || c == "." || c == ".." || c.find_first_of("/\\\t\n") != std::string::npos) {
        throw UsageError("property code '" + c + "' cannot name a store directory");
    }
}

std::string ref_text(const RecordRef& ref) { return ref.property_code + "/" + std::to_string(ref.year); }

}  // namespace

Store::Store(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path Store::default_root() {
    if (const char* env = std::getenv("AGRO_STORE"); env != nullptr && *env != '\0') return env;
    return "store";
}

std::filesystem::path Store::questionnaire_path(const RecordRef& ref) const {
    check_ref(ref);
    return root_ / ref.property_code / (std::to_string(ref.year) + ".isa");
}

std::filesystem::path Store::plan_path(const RecordRef& ref) const {
    check_ref(ref);
    return root_ / ref.property_code / (std::to_string(ref.year) + ".plan");
}

std::vector<RecordRef> Store::list() const {
    const auto path = root_ / "index";
    if (!std::filesystem::exists(path)) return {};
    std::istringstream in(read_file(path));
    std::vector<RecordRef> refs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("store index: malformed line '" + line + "'", 0);
        refs.push_back({line.substr(0, tab), std::atoi(line.c_str() + tab + 1)});
    }
    return refs;
}

void Store::write_index(const std::vector<RecordRef>& refs) const {
    std::string text;
    for (const auto& r : refs) text += r.property_code + "\t" + std::to_string(r.year) + "\n";
    write_file_atomic(root_ / "index", text);
}

RecordRef Store::put(const qschema::Questionnaire& q) {
    const RecordRef ref{q.header.property_code, q.header.year()};
    const auto path = questionnaire_path(ref);
    const std::string bytes = qschema::serialize(q);
    std::lock_guard lock(mu_);
    write_file_atomic(path, bytes);
    auto refs = list();
    if (!std::binary_search(refs.begin(), refs.end(), ref)) {
        refs.insert(std::upper_bound(refs.begin(), refs.end(), ref), ref);
        write_index(refs);
    }
    return ref;
}

bool Store::contains(const RecordRef& ref) const { return std::filesystem::exists(questionnaire_path(ref)); }

qschema::Questionnaire Store::get(const RecordRef& ref) const {
    const auto path = questionnaire_path(ref);
    if (!std::filesystem::exists(path)) throw NotFoundError("no questionnaire " + ref_text(ref) + " in " + root_.string());
    return qschema::parse_questionnaire(read_file(path));
}

std::vector<Record> Store::load_records() const {
    std::vector<Record> out;
    for (const auto& ref : list()) out.push_back(dataset::score_record(get(ref)));
    return out;
}

void Store::attach_adequation_plan(const AdequationPlan& plan) {
    if (!contains(plan.ref)) throw NotFoundError("no questionnaire " + ref_text(plan.ref) + " for the adequation plan");
    if (!plan.date.empty() && !qschema::parse_date(plan.date)) throw UsageError("plan date must be YYYY-MM-DD");
    const auto path = plan_path(plan.ref);
    std::lock_guard lock(mu_);
    write_file_atomic(path, to_json(plan).dump(2) + "\n");
}

AdequationPlan Store::read_adequation_plan(const RecordRef& ref) const {
    const auto path = plan_path(ref);
    if (!std::filesystem::exists(path)) throw NotFoundError("no adequation plan for " + ref_text(ref));
    return plan_from_json(read_file(path));
}

// ---------------------------------------------------------------- bundles

std::vector<std::string> write_bundle(const std::filesystem::path& out_dir, const std::vector<Record>& records,
                                      const BundleOptions& opt) {
    std::vector<std::pair<std::string, Json>> docs;
    const auto agg = aggregate(records);
    docs.emplace_back("aggregate.json", to_json(agg));
    for (auto v : {RadarView::subindexes, RadarView::socioeconomic, RadarView::environmental}) {
        docs.emplace_back("radar_" + std::string(to_string(v)) + ".json", to_json(radar_data(agg, v)));
    }
    Json box = Json::array();
    for (std::size_t s = 0; s < ind::kSubIndexCount; ++s) {
        box.push_back({{"id", "S" + std::to_string(s + 1)}, {"name", ind::subindex_names()[s]}, {"box", box_json(agg.subindex_box[s])}});
    }
    box.push_back({{"id", "SI"}, {"name", "Sustainability Index"}, {"box", box_json(agg.si_box)}});
    docs.emplace_back("boxplot.json", Json{{"schema", "agro-boxplot/1"}, {"boxes", box}});
    docs.emplace_back("scatter.json", scatter_to_json(scatter_data(records, opt.scatter_x, opt.scatter_y), opt.scatter_x, opt.scatter_y));
    docs.emplace_back("area_tree.json", to_json(area_tree_data(records, opt.area_id)));
    docs.emplace_back("words.json", words_to_json(word_frequencies(records, opt.stop_words)));
    if (opt.rules != nullptr) docs.emplace_back("sankey.json", to_json(sankey_from_rules(*opt.rules, records)));
    if (opt.selection != nullptr) docs.emplace_back("cfs_bars.json", to_json(cfs_bar_data(*opt.selection), opt.selection->dataset_name));

    std::vector<std::string> names;
    for (const auto& [name, doc] : docs) {
        write_file_atomic(out_dir / name, doc.dump(2) + "\n");
        names.push_back(name);
    }
    return names;
}

}  // namespace agro::reports
