#include "agro/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "agro/numeric.hpp"
#include "agro/paths.hpp"
#include "json.hpp"

namespace agro::dataset {

std::size_t Dataset::attribute_index(std::string_view attr) const {
    for (std::size_t i = 0; i < attributes.size(); ++i) {
        if (attributes[i].name == attr) return i;
    }
    throw UsageError("no attribute named '" + std::string(attr) + "' in " + name);
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (const auto& inst : instances) ++counts.at(static_cast<std::size_t>(inst.label));
    return counts;
}

int Dataset::present_classes() const {
    const auto c = class_counts();
    return static_cast<int>(std::count_if(c.begin(), c.end(), [](std::size_t x) { return x > 0; }));
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.name = name;
    out.attributes = attributes;
    out.class_names = class_names;
    out.instances.reserve(rows.size());
    for (auto r : rows) out.instances.push_back(instances.at(r));
    return out;
}

Dataset Dataset::project(const std::vector<std::string>& names) const {
    std::vector<std::size_t> idx;
    idx.reserve(names.size());
    for (const auto& n : names) idx.push_back(attribute_index(n));
    Dataset out;
    out.name = name;
    out.class_names = class_names;
    for (auto i : idx) out.attributes.push_back(attributes[i]);
    out.instances.reserve(instances.size());
    for (const auto& inst : instances) {
        Instance p;
        p.label = inst.label;
        p.id = inst.id;
        p.values.reserve(idx.size());
        for (auto i : idx) p.values.push_back(inst.values[i]);
        out.instances.push_back(std::move(p));
    }
    return out;
}

void Dataset::check() const {
    std::set<std::string> seen;
    for (const auto& a : attributes) {
        if (!seen.insert(a.name).second) throw UsageError("duplicate attribute name " + a.name);
        if (a.kind == AttrKind::nominal && a.nominal_values.empty()) {
            throw UsageError("nominal attribute without values: " + a.name);
        }
    }
    for (const auto& inst : instances) {
        if (inst.values.size() != attributes.size()) throw UsageError("instance arity mismatch in " + name);
        if (inst.label < 0 || inst.label >= num_classes()) throw UsageError("class label out of range in " + name);
        for (std::size_t j = 0; j < attributes.size(); ++j) {
            const double v = inst.values[j];
            if (!std::isfinite(v)) throw UsageError("non-finite value for " + attributes[j].name);
            if (attributes[j].kind == AttrKind::nominal) {
                if (v < 0 || v >= static_cast<double>(attributes[j].nominal_values.size()) || v != std::floor(v)) {
                    throw UsageError("nominal index out of range for " + attributes[j].name);
                }
            }
        }
    }
}

const std::vector<std::string>& category_names() {
    static const std::vector<std::string> names{"Low", "Medium", "High"};
    return names;
}

double encode_tri_level(qschema::TriLevel level) {
    switch (level) {
    case qschema::TriLevel::insufficient: return 0.0;
    case qschema::TriLevel::partial: return 0.5;
    case qschema::TriLevel::sufficient: return 1.0;
    }
    throw UsageError("unknown tri-level value");
}

double encode_tri_level(std::string_view token) {
    auto level = qschema::parse_tri_level(token);
    if (!level) throw UsageError("unknown tri-level token '" + std::string(token) + "'");
    return encode_tri_level(*level);
}

Record score_record(qschema::Questionnaire q) {
    Record r;
    r.iv = indicators::compute_indicator_vector(q);
    r.score = indicators::compute_si(r.iv);
    r.q = std::move(q);
    return r;
}

FeaturesManifest load_features_manifest(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error&) {
        throw ConfigError("features manifest not found: " + path.string());
    }
    FeaturesManifest m;
    try {
        const auto doc = nlohmann::json::parse(text);
        m.version = doc.at("version").get<std::string>();
        std::set<std::string> names;
        for (const auto& f : doc.at("features")) {
            FeatureDef d;
            d.name = f.at("name").get<std::string>();
            const auto src = f.at("source").get<std::string>();
            if (src == "field") d.source = FeatureDef::Source::field;
            else if (src == "score") d.source = FeatureDef::Source::score;
            else throw ConfigError("unknown feature source '" + src + "'");
            d.code = f.at("code").get<std::string>();
            if (!names.insert(d.name).second) throw ConfigError("duplicate feature " + d.name);
            m.features.push_back(std::move(d));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("corrupt features manifest " + path.string() + ": " + e.what());
    }
    return m;
}

const FeaturesManifest& default_features_manifest() {
    static const FeaturesManifest m = load_features_manifest(data_dir() / "features_manifest.json");
    return m;
}

namespace {

std::string record_id(const qschema::Questionnaire& q) {
    return q.header.property_code + "/" + std::to_string(q.header.year());
}

int class_index(indicators::Category c) { return static_cast<int>(c); }

}  // namespace

Dataset build_features_ds(const std::vector<Record>& records, const FeaturesManifest& manifest) {
    const auto& table = indicators::default_scoring_table();
    Dataset ds;
    ds.name = "FeaturesDS";
    ds.class_names = category_names();
    for (const auto& f : manifest.features) ds.attributes.push_back({f.name, AttrKind::numeric, {}});
    for (const auto& rec : records) {
        Instance inst;
        inst.id = record_id(rec.q);
        inst.label = class_index(indicators::categorize(rec.score.si));
        inst.values.reserve(manifest.features.size());
        for (const auto& f : manifest.features) {
            if (f.source == FeatureDef::Source::score) {
                int ind = 0;
                const auto* comp = table.find_component(f.code, &ind);
                if (comp == nullptr) throw ConfigError("feature " + f.name + " names no scoring component");
                try {
                    inst.values.push_back(indicators::score_component(rec.q, *comp, ind));
                } catch (const indicators::ScoringError& e) {
                    throw BuildError("property " + inst.id + " lacks feature field " + e.codes().front());
                }
                continue;
            }
            auto it = rec.q.values.find(f.code);
            if (it == rec.q.values.end()) throw BuildError("property " + inst.id + " lacks feature field " + f.code);
            if (const auto* n = std::get_if<qschema::Number>(&it->second)) {
                inst.values.push_back(n->value);
            } else if (const auto* t = std::get_if<qschema::TriLevel>(&it->second)) {
                inst.values.push_back(encode_tri_level(*t));
            } else {
                throw BuildError("feature field " + f.code + " is neither numeric nor tri-level");
            }
        }
        ds.instances.push_back(std::move(inst));
    }
    return ds;
}

Dataset build_indicators_ds(const std::vector<Record>& records) {
    Dataset ds;
    ds.name = "IndicatorsDS";
    ds.class_names = category_names();
    for (int i = 1; i <= indicators::kIndicatorCount; ++i) {
        ds.attributes.push_back({"I" + std::to_string(i), AttrKind::numeric, {}});
    }
    for (const auto& rec : records) {
        Instance inst;
        inst.id = record_id(rec.q);
        for (double v : rec.iv.values) {
            if (!(v >= 0.0 && v <= 1.0)) throw BuildError("property " + inst.id + " has an indicator outside [0, 1]");
        }
        inst.values.assign(rec.iv.values.begin(), rec.iv.values.end());
        inst.label = class_index(indicators::categorize(rec.score.si));
        ds.instances.push_back(std::move(inst));
    }
    return ds;
}

// ---------------------------------------------------------------- CSV

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string format_number(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
        case '"': quoted = true; any = true; break;
        case ',': row.push_back(std::move(field)); field.clear(); any = true; break;
        case '\r': break;
        case '\n':
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
            break;
        default: field += c; any = true;
        }
    }
    if (quoted) throw ParseError("unterminated quoted CSV field", text.size());
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::optional<double> parse_number(const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace

std::string to_csv(const Dataset& ds) {
    std::string out;
    for (const auto& a : ds.attributes) out += csv_field(a.name) + ",";
    out += "class\n";
    for (const auto& inst : ds.instances) {
        for (std::size_t j = 0; j < ds.attributes.size(); ++j) {
            const auto& a = ds.attributes[j];
            if (a.kind == AttrKind::nominal) {
                out += csv_field(a.nominal_values.at(static_cast<std::size_t>(inst.values[j])));
            } else {
                out += format_number(inst.values[j]);
            }
            out += ',';
        }
        out += csv_field(ds.class_names.at(static_cast<std::size_t>(inst.label))) + "\n";
    }
    return out;
}

Dataset from_csv(std::string_view text, std::string name) {
    const auto rows = parse_csv(text);
    if (rows.empty()) throw ParseError("empty CSV document", 0);
    const auto& header = rows.front();
    if (header.size() < 1 || header.back() != "class") throw ParseError("last CSV column must be 'class'", 0);
    const std::size_t na = header.size() - 1;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != header.size()) {
            throw ParseError("CSV row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                                 " fields, expected " + std::to_string(header.size()),
                             0);
        }
    }
    Dataset ds;
    ds.name = std::move(name);
    for (std::size_t j = 0; j < na; ++j) {
        AttributeSpec a{header[j], AttrKind::numeric, {}};
        std::set<std::string> tokens;
        bool numeric = true;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            tokens.insert(rows[r][j]);
            if (!parse_number(rows[r][j])) numeric = false;
        }
        if (!numeric) {
            a.kind = AttrKind::nominal;
            a.nominal_values.assign(tokens.begin(), tokens.end());
        }
        ds.attributes.push_back(std::move(a));
    }
    std::set<std::string> labels;
    for (std::size_t r = 1; r < rows.size(); ++r) labels.insert(rows[r].back());
    const auto& known = category_names();
    if (std::all_of(labels.begin(), labels.end(),
                    [&](const std::string& l) { return std::find(known.begin(), known.end(), l) != known.end(); })) {
        ds.class_names = known;
    } else {
        ds.class_names.assign(labels.begin(), labels.end());
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
        Instance inst;
        for (std::size_t j = 0; j < na; ++j) {
            const auto& a = ds.attributes[j];
            if (a.kind == AttrKind::numeric) {
                inst.values.push_back(*parse_number(rows[r][j]));
            } else {
                auto it = std::lower_bound(a.nominal_values.begin(), a.nominal_values.end(), rows[r][j]);
                inst.values.push_back(static_cast<double>(it - a.nominal_values.begin()));
            }
        }
        auto it = std::find(ds.class_names.begin(), ds.class_names.end(), rows[r].back());
        inst.label = static_cast<int>(it - ds.class_names.begin());
        ds.instances.push_back(std::move(inst));
    }
    return ds;
}

// ---------------------------------------------------------------- MDL

namespace {

struct Point {
    double v;
    int y;
};

int distinct_classes(const std::vector<std::size_t>& counts) {
    return static_cast<int>(std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
}

void mdl_split(const std::vector<Point>& pts, std::size_t lo, std::size_t hi, std::size_t nclasses,
               std::vector<double>& cuts) {
    const std::size_t n = hi - lo;
    if (n < 2) return;
    std::vector<std::size_t> total(nclasses, 0);
    for (std::size_t i = lo; i < hi; ++i) ++total[static_cast<std::size_t>(pts[i].y)];
    const double h = entropy_of(total);
    if (h == 0.0) return;

    std::vector<std::size_t> left(nclasses, 0), right = total;
    std::vector<std::size_t> best_left, best_right;
    double best = HUGE_VAL;
    std::size_t best_at = 0;
    for (std::size_t i = lo + 1; i < hi; ++i) {
        const auto y = static_cast<std::size_t>(pts[i - 1].y);
        ++left[y];
        --right[y];
        if (!(pts[i - 1].v < pts[i].v)) continue;
        const double nl = static_cast<double>(i - lo), nr = static_cast<double>(hi - i);
        const double e = (nl * entropy_of(left) + nr * entropy_of(right)) / static_cast<double>(n);
        if (e < best - kEntropyTolerance) {
            best = e;
            best_at = i;
            best_left = left;
            best_right = right;
        }
    }
    if (best_at == 0) return;
    const double gain = h - best;
    const double k = distinct_classes(total), k1 = distinct_classes(best_left), k2 = distinct_classes(best_right);
    const double delta =
        std::log2(std::pow(3.0, k) - 2.0) - (k * h - k1 * entropy_of(best_left) - k2 * entropy_of(best_right));
    const double threshold = (std::log2(static_cast<double>(n) - 1.0) + delta) / static_cast<double>(n);
    if (!(gain > threshold)) return;
    cuts.push_back(split_point(pts[best_at - 1].v, pts[best_at].v));
    mdl_split(pts, lo, best_at, nclasses, cuts);
    mdl_split(pts, best_at, hi, nclasses, cuts);
}

}  // namespace

std::vector<double> discretize_mdl(const Dataset& ds, std::string_view attribute) {
    const auto j = ds.attribute_index(attribute);
    if (ds.attributes[j].kind != AttrKind::numeric) {
        throw UsageError("MDL discretization needs a numeric attribute; " + std::string(attribute) + " is nominal");
    }
    std::vector<Point> pts;
    pts.reserve(ds.size());
    for (const auto& inst : ds.instances) pts.push_back({inst.values[j], inst.label});
    std::stable_sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.v < b.v; });
    std::vector<double> cuts;
    mdl_split(pts, 0, pts.size(), ds.class_names.size(), cuts);
    std::sort(cuts.begin(), cuts.end());
    return cuts;
}

Discretizer fit_mdl(const Dataset& ds) {
    Discretizer d;
    d.cuts.resize(ds.num_attributes());
    for (std::size_t j = 0; j < ds.num_attributes(); ++j) {
        if (ds.attributes[j].kind == AttrKind::numeric) d.cuts[j] = discretize_mdl(ds, ds.attributes[j].name);
    }
    return d;
}

Dataset Discretizer::apply(const Dataset& ds) const {
    if (cuts.size() != ds.num_attributes()) throw UsageError("discretizer fitted on a different attribute list");
    Dataset out = ds;
    for (std::size_t j = 0; j < ds.num_attributes(); ++j) {
        auto& a = out.attributes[j];
        if (a.kind != AttrKind::numeric) continue;
        const auto& c = cuts[j];
        a.kind = AttrKind::nominal;
        a.nominal_values.clear();
        if (c.empty()) {
            a.nominal_values.push_back("'All'");
        } else {
            std::string lo = "-inf";
            for (double cut : c) {
                a.nominal_values.push_back("(" + lo + "-" + format_number(cut) + "]");
                lo = format_number(cut);
            }
            a.nominal_values.push_back("(" + lo + "-inf)");
        }
        for (auto& inst : out.instances) {
            const double v = inst.values[j];
            inst.values[j] = static_cast<double>(std::lower_bound(c.begin(), c.end(), v) - c.begin());
        }
    }
    return out;
}

}  // namespace agro::dataset
