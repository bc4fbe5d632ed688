#pragma once

// The 21 ISA indicators, the 7 sub-indexes and the Sustainability Index.
// Component mappings come from a versioned scoring table (data/scoring_table.json).

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "agro/error.hpp"
#include "agro/qschema.hpp"

namespace agro::indicators {

inline constexpr int kIndicatorCount = 21;
inline constexpr int kSubIndexCount = 7;
inline constexpr double kSustainabilityLimit = 0.7;
inline constexpr double kLowUpper = 0.5;

enum class Category { Low, Medium, High };
std::string_view to_string(Category c);

/// Indicator scores; `values[i]` holds indicator i+1.
struct IndicatorVector {
    std::array<double, kIndicatorCount> values{};
    double at(int indicator_id) const { return values.at(static_cast<std::size_t>(indicator_id - 1)); }
    bool operator==(const IndicatorVector&) const = default;
};

struct SubIndexVector {
    std::array<double, kSubIndexCount> values{};
    bool operator==(const SubIndexVector&) const = default;
};

struct SustainabilityScore {
    double si = 0.0;
    Category category = Category::Low;
    double limit = kSustainabilityLimit;
};

enum class Mapping { tri_level, linear, ratio, max_share, band };

// One scored input of an indicator. Which fields are meaningful depends on
// `mapping`:
//   tri_level  code
//   linear     code, x0 (score 0), x1 (score 1); clamped
//   ratio      numerator/denominator sums mapped like `linear`, zero_denominator
//              used when the denominator sums to 0
//   max_share  largest of codes mapped like `linear`
//   band       code; 0 at or beyond lo0/hi0, 1 inside [lo1, hi1], linear between
struct Component {
    Mapping mapping = Mapping::tri_level;
    std::string code;
    std::vector<std::string> numerator;
    std::vector<std::string> denominator;
    std::vector<std::string> codes;
    double x0 = 0.0, x1 = 1.0;
    double zero_denominator = 0.0;
    double lo0 = 0.0, lo1 = 0.0, hi1 = 0.0, hi0 = 0.0;

    /// Code that names the component in the features manifest.
    const std::string& primary_code() const;
    /// Every questionnaire code the component reads.
    std::vector<std::string> referenced_codes() const;
};

struct IndicatorDef {
    int id = 0;
    std::string name;
    std::vector<Component> components;
};

struct ScoringTable {
    std::string version;
    std::vector<IndicatorDef> indicators;  // ordered by id, 1..21

    const IndicatorDef& indicator(int id) const;
    /// Component whose primary code is `code`, or nullptr.
    const Component* find_component(std::string_view code, int* indicator_id = nullptr) const;
};

ScoringTable load_scoring_table(const std::filesystem::path& path);
const ScoringTable& default_scoring_table();

/// Throws ConfigError naming every code the table reads that the registry lacks
/// or that has an incompatible kind.
void check_registry_totality(const ScoringTable& table, const qschema::Registry& registry);

class ScoringError : public Error {
public:
    ScoringError(std::vector<std::string> codes, int indicator_id);
    const std::vector<std::string>& codes() const noexcept { return codes_; }
    int indicator_id() const noexcept { return indicator_id_; }

private:
    std::vector<std::string> codes_;
    int indicator_id_;
};

/// Piecewise-linear helper shared with the synthetic generator: 0 at x0, 1 at x1, clamped.
double linear_score(double v, double x0, double x1);
double band_score(double v, double lo0, double lo1, double hi1, double hi0);

double score_component(const qschema::Questionnaire& q, const Component& c, int indicator_id = 0);

double score_indicator(const qschema::Questionnaire& q, int indicator_id,
                       const ScoringTable& table = default_scoring_table());

/// Validates `q` first (ValidationError), then scores all 21 indicators.
IndicatorVector compute_indicator_vector(const qschema::Questionnaire& q,
                                         const ScoringTable& table = default_scoring_table(),
                                         const qschema::Registry& registry = qschema::default_registry());

/// Members of each sub-index, 1-based indicator ids.
const std::array<std::vector<int>, kSubIndexCount>& subindex_members();
const std::array<std::string_view, kSubIndexCount>& subindex_names();
const std::array<std::string_view, kIndicatorCount>& indicator_names();
/// Sub-index (0-based) that contains the indicator.
int subindex_of(int indicator_id);

SubIndexVector compute_subindexes(const IndicatorVector& iv);
SustainabilityScore compute_si(const IndicatorVector& iv);

/// Throws DomainError outside [0, 1].
Category categorize(double si);

}  // namespace agro::indicators
