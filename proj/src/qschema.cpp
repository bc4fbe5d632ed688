#include "agro/qschema.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <regex>

#include "json.hpp"

#include "agro/paths.hpp"

namespace agro::qschema {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(FieldKind kind) {
    switch (kind) {
    case FieldKind::numeric: return "numeric";
    case FieldKind::tri_level: return "tri_level";
    case FieldKind::categorical: return "categorical";
    case FieldKind::free_text: return "free_text";
    case FieldKind::table: return "table";
    }
    return "?";
}

std::string_view to_string(TriLevel level) {
    switch (level) {
    case TriLevel::insufficient: return "insufficient";
    case TriLevel::partial: return "partial";
    case TriLevel::sufficient: return "sufficient";
    }
    return "?";
}

std::optional<TriLevel> parse_tri_level(std::string_view token) {
    if (token == "insufficient") return TriLevel::insufficient;
    if (token == "partial") return TriLevel::partial;
    if (token == "sufficient") return TriLevel::sufficient;
    return std::nullopt;
}

namespace {

std::optional<FieldKind> parse_kind(std::string_view s) {
    for (auto k : {FieldKind::numeric, FieldKind::tri_level, FieldKind::categorical, FieldKind::free_text,
                   FieldKind::table}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

int part_rank(char c) {
    switch (c) {
    case 'Q': return 0;
    case 'G': return 1;
    case 'I': return 2;
    default: return 3;
    }
}

std::vector<long> code_segments(std::string_view code) {
    std::vector<long> out;
    std::size_t i = 1;
    while (i <= code.size()) {
        long v = 0;
        auto [ptr, ec] = std::from_chars(code.data() + i, code.data() + code.size(), v);
        if (ec != std::errc{}) break;
        out.push_back(v);
        i = static_cast<std::size_t>(ptr - code.data()) + 1;
    }
    return out;
}

}  // namespace

bool code_less(std::string_view a, std::string_view b) {
    if (a.empty() || b.empty() || !is_well_formed_code(a) || !is_well_formed_code(b)) {
        // Header pseudo-codes and anything malformed sort after real codes, lexicographically.
        const bool wa = !a.empty() && is_well_formed_code(a);
        const bool wb = !b.empty() && is_well_formed_code(b);
        if (wa != wb) return wa;
        return a < b;
    }
    if (part_rank(a[0]) != part_rank(b[0])) return part_rank(a[0]) < part_rank(b[0]);
    return code_segments(a) < code_segments(b);
}

bool is_well_formed_code(std::string_view code) {
    static const std::regex re(R"(^[QGI][0-9]+(\.[0-9]+)*$)");
    return std::regex_match(code.begin(), code.end(), re);
}

Registry::Registry(std::string version, std::vector<FieldSpec> fields)
    : version_(std::move(version)), fields_(std::move(fields)) {
    for (std::size_t i = 0; i < fields_.size(); ++i) {
        if (!index_.emplace(fields_[i].code, i).second) {
            throw ConfigError("duplicate field code in registry: " + fields_[i].code);
        }
    }
}

const FieldSpec* Registry::find(std::string_view code) const {
    auto it = index_.find(std::string(code));
    return it == index_.end() ? nullptr : &fields_[it->second];
}

Registry load_field_registry(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error&) {
        throw ConfigError("field registry not found: " + path.string());
    }
    try {
        const json doc = json::parse(text);
        std::vector<FieldSpec> fields;
        for (const auto& item : doc.at("fields")) {
            FieldSpec spec;
            spec.code = item.at("code").get<std::string>();
            spec.label = item.at("label").get<std::string>();
            auto kind = parse_kind(item.at("kind").get<std::string>());
            if (!kind) throw ConfigError("unknown field kind for " + spec.code);
            spec.kind = *kind;
            if (item.contains("unit")) spec.unit = item["unit"].get<std::string>();
            if (item.contains("allowed_values")) spec.allowed_values = item["allowed_values"].get<std::vector<std::string>>();
            spec.required = item.value("required", false);
            if (item.contains("min")) spec.min = item["min"].get<double>();
            if (item.contains("max")) spec.max = item["max"].get<double>();
            if (item.contains("header_field")) spec.header_field = item["header_field"].get<std::string>();
            if (!is_well_formed_code(spec.code)) throw ConfigError("malformed field code in registry: " + spec.code);
            fields.push_back(std::move(spec));
        }
        return Registry(doc.at("version").get<std::string>(), std::move(fields));
    } catch (const json::exception& e) {
        throw ConfigError("corrupt field registry " + path.string() + ": " + e.what());
    }
}

const Registry& default_registry() {
    static const Registry registry = load_field_registry(data_dir() / "registry.json");
    return registry;
}

FieldKind kind_of(const FieldValue& value) {
    return std::visit(
        [](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Number>) return FieldKind::numeric;
            else if constexpr (std::is_same_v<T, TriLevel>) return FieldKind::tri_level;
            else if constexpr (std::is_same_v<T, Category>) return FieldKind::categorical;
            else if constexpr (std::is_same_v<T, Text>) return FieldKind::free_text;
            else return FieldKind::table;
        },
        value);
}

std::optional<double> Questionnaire::number(std::string_view code) const {
    auto it = values.find(std::string(code));
    if (it == values.end()) return std::nullopt;
    if (const auto* n = std::get_if<Number>(&it->second)) return n->value;
    return std::nullopt;
}

std::optional<TriLevel> Questionnaire::tri_level(std::string_view code) const {
    auto it = values.find(std::string(code));
    if (it == values.end()) return std::nullopt;
    if (const auto* t = std::get_if<TriLevel>(&it->second)) return *t;
    return std::nullopt;
}

const std::string* Questionnaire::text(std::string_view code) const {
    auto it = values.find(std::string(code));
    if (it == values.end()) return nullptr;
    if (const auto* t = std::get_if<Text>(&it->second)) return &t->text;
    if (const auto* c = std::get_if<Category>(&it->second)) return &c->token;
    return nullptr;
}

std::string format_issue(const ValidationIssue& issue) {
    return std::string(issue.severity == Severity::error ? "error" : "warning") + " " + issue.code + ": " +
           issue.message;
}

namespace {

std::string summarize(const std::vector<ValidationIssue>& issues) {
    std::string s = "questionnaire validation failed";
    for (const auto& i : issues) {
        if (i.severity == Severity::error) {
            s += "; " + i.code + ": " + i.message;
        }
    }
    return s;
}

}  // namespace

ValidationError::ValidationError(std::vector<ValidationIssue> issues)
    : Error(summarize(issues)), issues_(std::move(issues)) {}

std::optional<double> parse_decimal(std::string_view text) {
    std::string s(text);
    s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == ' '; }), s.end());
    if (s.empty()) return std::nullopt;
    const bool has_comma = s.find(',') != std::string::npos;
    const bool has_dot = s.find('.') != std::string::npos;
    if (has_comma && has_dot) {
        s.erase(std::remove(s.begin(), s.end(), '.'), s.end());
    }
    std::replace(s.begin(), s.end(), ',', '.');
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string format_date(const std::chrono::year_month_day& date) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

std::optional<std::chrono::year_month_day> parse_date(std::string_view text) {
    int y = 0;
    unsigned m = 0, d = 0;
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    auto num = [&](std::size_t at, std::size_t len, auto& out) {
        auto [p, ec] = std::from_chars(text.data() + at, text.data() + at + len, out);
        return ec == std::errc{} && p == text.data() + at + len;
    };
    if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return std::nullopt;
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return ymd;
}

namespace {

// Structural problems are ParseErrors; offsets past the JSON tokenizer are not
// known, so they point at the document start.
[[noreturn]] void structural(const std::string& what) { throw ParseError(what, 0); }

double header_number(const json& h, const char* key, std::vector<ValidationIssue>& issues) {
    if (!h.contains(key)) {
        issues.push_back({std::string("header.") + key, Severity::error, "missing"});
        return 0.0;
    }
    const auto& v = h[key];
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        if (auto d = parse_decimal(v.get<std::string>())) return *d;
    }
    issues.push_back({std::string("header.") + key, Severity::error, "expected a number"});
    return 0.0;
}

std::string header_string(const json& h, const char* key, std::vector<ValidationIssue>& issues,
                          bool required = true) {
    if (!h.contains(key)) {
        if (required) issues.push_back({std::string("header.") + key, Severity::error, "missing"});
        return {};
    }
    if (!h[key].is_string()) {
        issues.push_back({std::string("header.") + key, Severity::error, "expected a string"});
        return {};
    }
    return h[key].get<std::string>();
}

std::optional<FieldValue> convert_value(const FieldSpec& spec, const json& v, std::string& problem) {
    switch (spec.kind) {
    case FieldKind::numeric: {
        const json* raw = &v;
        std::string unit = spec.unit.value_or("");
        if (v.is_object()) {
            if (!v.contains("value")) {
                problem = "numeric object without \"value\"";
                return std::nullopt;
            }
            raw = &v["value"];
            if (v.contains("unit")) {
                if (!v["unit"].is_string() || v["unit"].get<std::string>() != unit) {
                    problem = "unit does not match registry unit '" + unit + "'";
                    return std::nullopt;
                }
            }
        }
        std::optional<double> d;
        if (raw->is_number()) d = raw->get<double>();
        else if (raw->is_string()) d = parse_decimal(raw->get<std::string>());
        if (!d || !std::isfinite(*d)) {
            problem = "expected a finite number";
            return std::nullopt;
        }
        return Number{*d, unit};
    }
    case FieldKind::tri_level: {
        if (v.is_string()) {
            if (auto t = parse_tri_level(v.get<std::string>())) return *t;
        }
        problem = "expected one of insufficient, partial, sufficient";
        return std::nullopt;
    }
    case FieldKind::categorical: {
        if (!v.is_string()) {
            problem = "expected a category token";
            return std::nullopt;
        }
        return Category{v.get<std::string>()};
    }
    case FieldKind::free_text: {
        if (!v.is_string()) {
            problem = "expected text";
            return std::nullopt;
        }
        return Text{v.get<std::string>()};
    }
    case FieldKind::table: {
        if (!v.is_array()) {
            problem = "expected an array of rows";
            return std::nullopt;
        }
        Table t;
        for (const auto& r : v) {
            if (!r.is_object()) {
                problem = "table rows must be objects";
                return std::nullopt;
            }
            Row row;
            for (const auto& [k, cell] : r.items()) {
                if (cell.is_number()) {
                    const double d = cell.get<double>();
                    if (!std::isfinite(d)) {
                        problem = "non-finite table cell";
                        return std::nullopt;
                    }
                    row.emplace(k, d);
                } else if (cell.is_string()) {
                    row.emplace(k, cell.get<std::string>());
                } else {
                    problem = "table cells must be numbers or strings";
                    return std::nullopt;
                }
            }
            t.rows.push_back(std::move(row));
        }
        return t;
    }
    }
    return std::nullopt;
}

}  // namespace

Questionnaire parse_questionnaire(std::string_view bytes, const Registry& registry) {
    json doc;
    try {
        doc = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed questionnaire document: ") + e.what(), e.byte);
    }
    if (!doc.is_object()) structural("questionnaire document must be an object");
    if (!doc.contains("schema_version") || !doc["schema_version"].is_string()) structural("missing schema_version");
    if (!doc.contains("header") || !doc["header"].is_object()) structural("missing header object");
    if (doc.contains("values") && !doc["values"].is_object()) structural("values must be an object");

    Questionnaire q;
    std::vector<ValidationIssue> issues;
    q.schema_version = doc["schema_version"].get<std::string>();
    if (q.schema_version != kSchemaVersion) {
        issues.push_back({"schema_version", Severity::error, "unsupported schema version " + q.schema_version});
    }

    const json& h = doc["header"];
    auto& hd = q.header;
    hd.property_code = header_string(h, "property_code", issues);
    hd.project_id = header_string(h, "project_id", issues);
    hd.institution_id = header_string(h, "institution_id", issues);
    const std::string date = header_string(h, "interview_date", issues);
    if (auto ymd = parse_date(date)) {
        hd.interview_date = *ymd;
    } else if (h.contains("interview_date")) {
        issues.push_back({"header.interview_date", Severity::error, "expected a YYYY-MM-DD date"});
    }
    hd.municipality = header_string(h, "municipality", issues);
    hd.water_basin = header_string(h, "water_basin", issues);
    hd.latitude = header_number(h, "latitude", issues);
    hd.longitude = header_number(h, "longitude", issues);
    hd.main_income = header_string(h, "main_income", issues);
    hd.state = header_string(h, "state", issues, false);
    hd.meso_region = header_string(h, "meso_region", issues, false);
    hd.micro_region = header_string(h, "micro_region", issues, false);
    hd.senar_region = header_string(h, "senar_region", issues, false);
    hd.coffee_region = header_string(h, "coffee_region", issues, false);

    if (doc.contains("values")) {
        for (const auto& [code, v] : doc["values"].items()) {
            const FieldSpec* spec = registry.find(code);
            if (spec == nullptr) {
                if (is_well_formed_code(code)) {
                    q.unrecognized_codes.push_back(code);
                } else {
                    issues.push_back({code, Severity::error, "unknown field code"});
                }
                continue;
            }
            if (spec->header_field) {
                issues.push_back({code, Severity::error, "stored in header." + *spec->header_field});
                continue;
            }
            std::string problem;
            if (auto fv = convert_value(*spec, v, problem)) {
                q.values.emplace(code, std::move(*fv));
            } else {
                issues.push_back({code, Severity::error, "type mismatch: " + problem});
            }
        }
    }
    std::sort(q.unrecognized_codes.begin(), q.unrecognized_codes.end(),
              [](const auto& a, const auto& b) { return code_less(a, b); });
    if (has_errors(issues)) {
        std::stable_sort(issues.begin(), issues.end(),
                         [](const auto& a, const auto& b) { return code_less(a.code, b.code); });
        throw ValidationError(std::move(issues));
    }
    return q;
}

bool has_errors(const std::vector<ValidationIssue>& issues) {
    return std::any_of(issues.begin(), issues.end(), [](const auto& i) { return i.severity == Severity::error; });
}

std::vector<ValidationIssue> validate(const Questionnaire& q, const Registry& registry) {
    std::vector<ValidationIssue> issues;
    const auto& h = q.header;
    if (q.schema_version != kSchemaVersion) {
        issues.push_back({"schema_version", Severity::error, "unsupported schema version " + q.schema_version});
    }
    if (h.property_code.empty()) issues.push_back({"header.property_code", Severity::error, "must not be empty"});
    if (!h.interview_date.ok()) issues.push_back({"header.interview_date", Severity::error, "invalid date"});
    if (!std::isfinite(h.latitude) || h.latitude < -90.0 || h.latitude > 90.0) {
        issues.push_back({"header.latitude", Severity::error, "latitude must lie in [-90, 90]"});
    }
    if (!std::isfinite(h.longitude) || h.longitude < -180.0 || h.longitude > 180.0) {
        issues.push_back({"header.longitude", Severity::error, "longitude must lie in [-180, 180]"});
    }

    for (const auto& code : q.unrecognized_codes) {
        issues.push_back({code, Severity::warning, "not in registry " + registry.version() + "; ignored"});
    }

    for (const auto& spec : registry.fields()) {
        if (spec.header_field) continue;
        auto it = q.values.find(spec.code);
        if (it == q.values.end()) {
            if (spec.required) issues.push_back({spec.code, Severity::error, "required field missing"});
            continue;
        }
        const FieldValue& v = it->second;
        if (kind_of(v) != spec.kind) {
            issues.push_back({spec.code, Severity::error,
                              "expected " + std::string(to_string(spec.kind)) + " value"});
            continue;
        }
        if (const auto* n = std::get_if<Number>(&v)) {
            if (!std::isfinite(n->value)) {
                issues.push_back({spec.code, Severity::error, "value must be finite"});
            } else if ((spec.min && n->value < *spec.min) || (spec.max && n->value > *spec.max)) {
                char buf[160];
                std::snprintf(buf, sizeof buf, "value %g outside [%g, %g]", n->value,
                              spec.min.value_or(-HUGE_VAL), spec.max.value_or(HUGE_VAL));
                issues.push_back({spec.code, Severity::error, buf});
            }
        } else if (const auto* c = std::get_if<Category>(&v)) {
            if (!spec.allowed_values.empty() &&
                std::find(spec.allowed_values.begin(), spec.allowed_values.end(), c->token) ==
                    spec.allowed_values.end()) {
                issues.push_back({spec.code, Severity::error, "category '" + c->token + "' not allowed"});
            }
        }
    }
    for (const auto& [code, v] : q.values) {
        if (registry.find(code) == nullptr) {
            issues.push_back({code, Severity::error, "unknown field code"});
        }
    }
    std::stable_sort(issues.begin(), issues.end(),
                     [](const auto& a, const auto& b) { return code_less(a.code, b.code); });
    return issues;
}

namespace {

ordered_json value_to_json(const FieldValue& v) {
    return std::visit(
        [](const auto& x) -> ordered_json {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Number>) {
                // -0.0 and 0.0 compare equal; keep one spelling.
                return x.value == 0.0 ? 0.0 : x.value;
            } else if constexpr (std::is_same_v<T, TriLevel>) {
                return std::string(to_string(x));
            } else if constexpr (std::is_same_v<T, Category>) {
                return x.token;
            } else if constexpr (std::is_same_v<T, Text>) {
                return x.text;
            } else {
                ordered_json rows = ordered_json::array();
                for (const auto& row : x.rows) {
                    ordered_json r = ordered_json::object();
                    for (const auto& [k, cell] : row) {
                        if (const auto* d = std::get_if<double>(&cell)) r[k] = *d == 0.0 ? 0.0 : *d;
                        else r[k] = std::get<std::string>(cell);
                    }
                    rows.push_back(std::move(r));
                }
                return rows;
            }
        },
        v);
}

}  // namespace

std::string serialize(const Questionnaire& q, const Registry& registry) {
    auto issues = validate(q, registry);
    if (has_errors(issues)) {
        throw ValidationError(std::move(issues));
    }
    const auto& h = q.header;
    ordered_json header = ordered_json::object();
    header["property_code"] = h.property_code;
    header["project_id"] = h.project_id;
    header["institution_id"] = h.institution_id;
    header["interview_date"] = format_date(h.interview_date);
    header["municipality"] = h.municipality;
    header["water_basin"] = h.water_basin;
    header["latitude"] = h.latitude == 0.0 ? 0.0 : h.latitude;
    header["longitude"] = h.longitude == 0.0 ? 0.0 : h.longitude;
    header["main_income"] = h.main_income;
    auto optional_field = [&](const char* key, const std::string& value) {
        if (!value.empty()) header[key] = value;
    };
    optional_field("state", h.state);
    optional_field("meso_region", h.meso_region);
    optional_field("micro_region", h.micro_region);
    optional_field("senar_region", h.senar_region);
    optional_field("coffee_region", h.coffee_region);

    std::vector<const std::pair<const std::string, FieldValue>*> entries;
    entries.reserve(q.values.size());
    for (const auto& e : q.values) entries.push_back(&e);
    std::sort(entries.begin(), entries.end(), [](auto* a, auto* b) { return code_less(a->first, b->first); });
    ordered_json values = ordered_json::object();
    for (const auto* e : entries) values[e->first] = value_to_json(e->second);

    ordered_json doc = ordered_json::object();
    doc["schema_version"] = q.schema_version;
    doc["header"] = std::move(header);
    doc["values"] = std::move(values);
    return doc.dump(2) + "\n";
}

}  // namespace agro::qschema
