#pragma once

// ISA questionnaire record: field registry, parsing, validation and the
// canonical on-disk document (the ".isa" file).

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "agro/error.hpp"

namespace agro::qschema {

inline constexpr std::string_view kSchemaVersion = "isa-questionnaire/1";

enum class FieldKind { numeric, tri_level, categorical, free_text, table };

enum class TriLevel { insufficient, partial, sufficient };

std::string_view to_string(FieldKind kind);
std::string_view to_string(TriLevel level);
std::optional<TriLevel> parse_tri_level(std::string_view token);

struct FieldSpec {
    std::string code;
    std::string label;
    FieldKind kind = FieldKind::numeric;
    std::optional<std::string> unit;
    std::vector<std::string> allowed_values;  // categorical only; empty = any token
    bool required = false;
    std::optional<double> min;
    std::optional<double> max;
    // Items whose value lives in the questionnaire header (date, coordinates, ...).
    std::optional<std::string> header_field;
};

class Registry {
public:
    Registry() = default;
    Registry(std::string version, std::vector<FieldSpec> fields);

    const std::string& version() const noexcept { return version_; }
    const std::vector<FieldSpec>& fields() const noexcept { return fields_; }
    std::size_t size() const noexcept { return fields_.size(); }
    const FieldSpec* find(std::string_view code) const;

private:
    std::string version_;
    std::vector<FieldSpec> fields_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Throws ConfigError when the file is absent or malformed.
Registry load_field_registry(const std::filesystem::path& path);

/// Registry shipped in the data directory, loaded once.
const Registry& default_registry();

/// Natural ordering of field codes: "Q2.1" < "Q10.1" < "G2.1" order is by prefix
/// rank (Q, G, I) and then numerically per segment.
bool code_less(std::string_view a, std::string_view b);

/// True for syntactically valid codes ("Q14.2", "I12.10", "G3.1.3").
bool is_well_formed_code(std::string_view code);

struct QuestionnaireHeader {
    std::string property_code;
    std::string project_id;
    std::string institution_id;
    std::chrono::year_month_day interview_date{};
    std::string municipality;
    std::string water_basin;
    double latitude = 0.0;
    double longitude = 0.0;
    std::string main_income;
    // Optional geographic groupings used by report filters.
    std::string state;
    std::string meso_region;
    std::string micro_region;
    std::string senar_region;
    std::string coffee_region;

    int year() const { return static_cast<int>(interview_date.year()); }
    bool operator==(const QuestionnaireHeader&) const = default;
};

struct Number {
    double value = 0.0;
    std::string unit;
    bool operator==(const Number&) const = default;
};
struct Category {
    std::string token;
    bool operator==(const Category&) const = default;
};
struct Text {
    std::string text;
    bool operator==(const Text&) const = default;
};
using Cell = std::variant<double, std::string>;
using Row = std::map<std::string, Cell>;
struct Table {
    std::vector<Row> rows;
    bool operator==(const Table&) const = default;
};

using FieldValue = std::variant<Number, TriLevel, Category, Text, Table>;

FieldKind kind_of(const FieldValue& value);

struct Questionnaire {
    std::string schema_version{kSchemaVersion};
    QuestionnaireHeader header;
    std::map<std::string, FieldValue> values;
    // Well-formed codes absent from the registry; dropped at parse, reported as warnings.
    std::vector<std::string> unrecognized_codes;

    std::optional<double> number(std::string_view code) const;
    std::optional<TriLevel> tri_level(std::string_view code) const;
    const std::string* text(std::string_view code) const;

    bool operator==(const Questionnaire& other) const {
        return schema_version == other.schema_version && header == other.header && values == other.values;
    }
};

enum class Severity { error, warning };

struct ValidationIssue {
    std::string code;
    Severity severity = Severity::error;
    std::string message;
    bool operator==(const ValidationIssue&) const = default;
};

std::string format_issue(const ValidationIssue& issue);

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<ValidationIssue> issues);
    const std::vector<ValidationIssue>& issues() const noexcept { return issues_; }

private:
    std::vector<ValidationIssue> issues_;
};

/// Decimal comma or point; "1.234,5" is read as 1234.5.
std::optional<double> parse_decimal(std::string_view text);

/// Throws ParseError for malformed documents and ValidationError for unknown
/// (malformed) codes or values whose type does not match the registry.
Questionnaire parse_questionnaire(std::string_view bytes, const Registry& registry = default_registry());

/// Issues sorted by code. No errors iff the questionnaire is complete and in
/// range; unrecognized codes only produce warnings.
std::vector<ValidationIssue> validate(const Questionnaire& q, const Registry& registry = default_registry());

bool has_errors(const std::vector<ValidationIssue>& issues);

/// Canonical, byte-stable document. Refuses (ValidationError) invalid input.
std::string serialize(const Questionnaire& q, const Registry& registry = default_registry());

std::string format_date(const std::chrono::year_month_day& date);
std::optional<std::chrono::year_month_day> parse_date(std::string_view text);

}  // namespace agro::qschema
