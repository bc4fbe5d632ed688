#pragma once

// Tabular datasets for selection and classification: the raw-feature and
// indicator datasets, CSV exchange, supervised MDL discretization and the
// synthetic questionnaire generator.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agro/error.hpp"
#include "agro/indicators.hpp"
#include "agro/qschema.hpp"

namespace agro::dataset {

enum class AttrKind { numeric, nominal };

struct AttributeSpec {
    std::string name;
    AttrKind kind = AttrKind::numeric;
    std::vector<std::string> nominal_values;  // nominal only; instances store the index
    bool operator==(const AttributeSpec&) const = default;
};

struct Instance {
    std::vector<double> values;
    int label = 0;   // index into Dataset::class_names
    std::string id;  // provenance, e.g. "P0001/2018"; not used by learners
    bool operator==(const Instance&) const = default;
};

struct Dataset {
    std::string name;
    std::vector<AttributeSpec> attributes;
    std::vector<std::string> class_names;
    std::vector<Instance> instances;

    std::size_t size() const noexcept { return instances.size(); }
    std::size_t num_attributes() const noexcept { return attributes.size(); }
    int num_classes() const noexcept { return static_cast<int>(class_names.size()); }

    /// Throws UsageError for unknown names.
    std::size_t attribute_index(std::string_view name) const;
    std::vector<std::size_t> class_counts() const;
    /// Number of classes with at least one instance.
    int present_classes() const;

    Dataset subset(const std::vector<std::size_t>& rows) const;
    /// Keeps the named attributes in the given order.
    Dataset project(const std::vector<std::string>& names) const;

    /// Throws UsageError when an instance breaks the attribute contract.
    void check() const;

    bool operator==(const Dataset&) const = default;
};

/// Class names used by the domain datasets, in categorize() order.
const std::vector<std::string>& category_names();

class BuildError : public Error {
public:
    using Error::Error;
};

double encode_tri_level(qschema::TriLevel level);
/// Token form; throws UsageError for anything but the three level names.
double encode_tri_level(std::string_view token);

/// A scored questionnaire: the unit the builders and reports work on.
struct Record {
    qschema::Questionnaire q;
    indicators::IndicatorVector iv;
    indicators::SustainabilityScore score;
};

/// Validates and scores `q`.
Record score_record(qschema::Questionnaire q);

struct FeatureDef {
    std::string name;
    enum class Source { field, score } source = Source::field;
    std::string code;
};

struct FeaturesManifest {
    std::string version;
    std::vector<FeatureDef> features;
};

FeaturesManifest load_features_manifest(const std::filesystem::path& path);
const FeaturesManifest& default_features_manifest();

Dataset build_features_ds(const std::vector<Record>& records,
                          const FeaturesManifest& manifest = default_features_manifest());
Dataset build_indicators_ds(const std::vector<Record>& records);

std::string to_csv(const Dataset& ds);
/// Columns that parse as numbers everywhere become numeric; others nominal with
/// sorted values. The last column is the class.
Dataset from_csv(std::string_view text, std::string name = "dataset");

/// Fayyad-Irani entropy cuts for one numeric attribute; ascending.
std::vector<double> discretize_mdl(const Dataset& ds, std::string_view attribute);

/// Per-attribute cut points fitted on one dataset and applied to others.
struct Discretizer {
    std::vector<std::vector<double>> cuts;  // empty for nominal attributes
    /// Numeric attributes become nominal bins; value <= cut goes to the lower bin.
    Dataset apply(const Dataset& ds) const;
};

Discretizer fit_mdl(const Dataset& ds);

// ---------------------------------------------------------------- synthetic

struct Condition {
    int indicator = 1;
    enum class Op { ge, le } op = Op::ge;
    double threshold = 0.0;
    bool holds(const indicators::IndicatorVector& iv) const;
};

struct PlantedRule {
    std::vector<Condition> conditions;
    indicators::Category cls = indicators::Category::High;
    double coverage = 0.5;  // fraction of `cls` instances satisfying all conditions
    // Start of this rule's coverage window over a random permutation of the
    // class members, as a fraction; windows wrap around.
    double window_start = 0.0;
    bool holds(const indicators::IndicatorVector& iv) const;
};

/// An indicator that follows another one plus uniform noise of half-width
/// `spread`, independent of the class given its source.
struct Echo {
    int indicator = 7;
    int source = 8;
    double spread = 0.2;
};

struct BetaParams {
    double a = 2.0, b = 2.0;
};

struct SyntheticConfig {
    std::size_t n = 100;
    std::uint64_t seed = 1;
    std::vector<PlantedRule> planted_rules;
    // Low, Medium, High.
    std::array<double, 3> class_mix{0.0, 0.55, 0.45};
    std::vector<int> signal_indicators;
    std::array<BetaParams, 3> signal_beta{};  // per class
    BetaParams noise_beta{};
    std::vector<Echo> echoes;
    int max_attempts = 20000;
};

/// Two planted High-class rules ({I12 >= 0.5, I20 >= 0.7} at 58% coverage and
/// {I8 >= 0.81} at 50%) over seven signal indicators, with I7 echoing I8.
SyntheticConfig default_synthetic_config(std::size_t n, std::uint64_t seed);

/// Throws ConfigError for invalid or infeasible configurations.
std::vector<qschema::Questionnaire> generate_synthetic(const SyntheticConfig& cfg);

}  // namespace agro::dataset
