#pragma once

// Chart data behind the dashboards: record filtering and aggregation, radar,
// box plot, rule Sankey, CFS bars, scatter, area tree, word frequencies, the
// single-property report, plus the on-disk record store and adequation plans.
//
// Every chart serializes to a JSON document carrying a "schema" tag of the form
// "agro-<chart>/1".

#include <array>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "agro/classify.hpp"
#include "agro/dataset.hpp"
#include "agro/error.hpp"
#include "agro/featsel.hpp"
#include "agro/indicators.hpp"
#include "json.hpp"

namespace agro::reports {

using dataset::Record;
using Json = nlohmann::ordered_json;

// ------------------------------------------------------------------ filtering

struct FilterCriteria {
    std::optional<std::string> project;
    std::optional<int> year;
    std::optional<std::string> main_income;
    std::optional<std::string> state;
    std::optional<std::string> meso_region;
    std::optional<std::string> micro_region;
    std::optional<std::string> senar_region;
    std::optional<std::string> coffee_region;
    std::set<std::string> municipalities;  // any of
    std::set<std::string> water_basins;    // any of

    bool empty() const;
    bool matches(const qschema::Questionnaire& q) const;
};

/// Matching records ordered by (property code, year); the sort is stable.
std::vector<Record> filter_records(const std::vector<Record>& records, const FilterCriteria& criteria);

// ---------------------------------------------------------------- aggregation

class AggregationError : public Error {
public:
    using Error::Error;
};

struct BoxStats {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
    bool operator==(const BoxStats&) const = default;
};

/// Five-number summary with linearly interpolated quartiles (h = (n-1)p).
/// Throws UsageError on an empty sample.
BoxStats box_stats(std::vector<double> values);

struct MonetaryItem {
    std::string_view code;
    std::string_view label;
};
inline constexpr std::size_t kMonetaryItems = 6;
/// Gross income, facilities, machinery, animals, irrigation, total estimated value.
const std::array<MonetaryItem, kMonetaryItems>& monetary_items();

struct AggregateReport {
    std::size_t matched = 0;
    indicators::IndicatorVector mean_indicators;
    indicators::SubIndexVector mean_subindexes;
    double mean_si = 0.0;
    std::array<double, kMonetaryItems> monetary{};  // sums, in monetary_items() order
    std::array<BoxStats, indicators::kSubIndexCount> subindex_box{};
    BoxStats si_box;
};

/// Throws AggregationError for an empty subset.
AggregateReport aggregate(const std::vector<Record>& records);
Json to_json(const AggregateReport& r);

// ---------------------------------------------------------------------- radar

enum class RadarView { subindexes, socioeconomic, environmental };
std::string_view to_string(RadarView v);
RadarView parse_radar_view(std::string_view s);

struct RadarSeries {
    RadarView view = RadarView::subindexes;
    std::vector<std::string> axes;
    std::vector<double> values;
    std::vector<double> limit;  // the sustainability limit on every axis
};

/// Sub-indexes: 7 axes. Socioeconomic: indicators 1-11. Environmental: 12-21.
RadarSeries radar_data(const AggregateReport& report, RadarView view);
Json to_json(const RadarSeries& r);

// --------------------------------------------------------------------- sankey

struct SankeyNode {
    enum class Kind { conjunct, outcome };
    Kind kind = Kind::conjunct;
    std::string label;  // "I12 >= 0.5" or a class name
};

struct SankeyLink {
    std::size_t source = 0, target = 0;  // node indices
    std::size_t weight = 0;              // records satisfying the rule up to the target conjunct
    std::size_t rule = 0;
};

struct SankeyGraph {
    std::vector<SankeyNode> nodes;
    std::vector<SankeyLink> links;
    // Per rule: records satisfying every condition, how many of those carry the
    // rule's class, and that count over the class total.
    std::vector<std::size_t> rule_covered;
    std::vector<std::size_t> rule_covered_in_class;
    std::vector<double> rule_coverage;
};

/// Conditions are evaluated on the records' indicator dataset. Identical
/// conjuncts share one node. Throws UsageError when a rule refers to an
/// attribute the indicator dataset lacks or treats differently.
SankeyGraph sankey_from_rules(const classify::RuleSet& rs, const std::vector<dataset::AttributeSpec>& attributes,
                              const std::vector<std::string>& class_names, const std::vector<Record>& records);
/// Throws UsageError unless the model is a rule set.
SankeyGraph sankey_from_rules(const classify::TrainedModel& model, const std::vector<Record>& records);
Json to_json(const SankeyGraph& g);

// ------------------------------------------------------------------- CFS bars

struct Bar {
    std::string attribute;
    double score = 0.0;  // merit gained when the attribute joined the subset
    bool operator==(const Bar&) const = default;
};

/// Throws UsageError for a non-CFS selection.
std::vector<Bar> cfs_bar_data(const featsel::SelectionResult& sel);
Json to_json(const std::vector<Bar>& bars, std::string_view dataset_name = {});

// -------------------------------------------------------------------- scatter

/// "I1".."I21", "S1".."S7" (sub-indexes) or "SI". Throws UsageError otherwise.
double score_by_id(const Record& r, std::string_view id);
bool is_score_id(std::string_view id);

struct ScatterPoint {
    std::string property_code;
    int year = 0;
    std::string category;
    double x = 0.0, y = 0.0;
};

std::vector<ScatterPoint> scatter_data(const std::vector<Record>& records, std::string_view x, std::string_view y);
Json scatter_to_json(const std::vector<ScatterPoint>& pts, std::string_view x, std::string_view y);

// ------------------------------------------------------------------ area tree

struct AreaRect {
    std::string property_code;
    int year = 0;
    double area_ha = 0.0;
    double weight = 0.0;  // share of the total area of the emitted rectangles
    double value = 0.0;
};

struct AreaTree {
    std::string id;
    std::vector<AreaRect> rects;
    std::vector<std::string> warnings;  // one per skipped record
};

/// Area from the total land area field; records without a positive area are
/// skipped with a warning.
AreaTree area_tree_data(const std::vector<Record>& records, std::string_view id);
Json to_json(const AreaTree& t);

// ------------------------------------------------------------------ word cloud

/// The shipped Portuguese/English list (data/stopwords.txt).
const std::set<std::string>& default_stop_words();
/// One word per line; blank lines and lines starting with '#' are ignored.
std::set<std::string> load_stop_words(const std::filesystem::path& path);

/// Lowercased tokens of every free-text answer, split on anything that is not
/// a letter or digit. Sorted by count descending, then token.
std::vector<std::pair<std::string, std::size_t>> word_frequencies(const std::vector<Record>& records,
                                                                  const std::set<std::string>& stop_words = default_stop_words());
Json words_to_json(const std::vector<std::pair<std::string, std::size_t>>& words);

// ------------------------------------------------------------ property report

/// Header, indicators, sub-indexes, SI and category; any score below the limit
/// is flagged.
Json property_report(const qschema::Questionnaire& q, const indicators::IndicatorVector& iv,
                     const indicators::SustainabilityScore& si);
std::string property_report_text(const Json& report);

// ---------------------------------------------------------- store and plans

struct RecordRef {
    std::string property_code;
    int year = 0;
    auto operator<=>(const RecordRef&) const = default;
};

struct AdequationPlan {
    RecordRef ref;
    std::array<std::string, indicators::kIndicatorCount> recommendations;  // slot i is indicator i+1
    std::string author;
    std::string date;  // YYYY-MM-DD
    bool operator==(const AdequationPlan&) const = default;
};

Json to_json(const AdequationPlan& p);
/// Throws ParseError on a malformed document.
AdequationPlan plan_from_json(std::string_view text);

/// Layout: <root>/<property_code>/<year>.isa, <root>/<property_code>/<year>.plan
/// and <root>/index (one "code<TAB>year" line per questionnaire, sorted).
class Store {
public:
    explicit Store(std::filesystem::path root);

    /// $AGRO_STORE when set, else "store".
    static std::filesystem::path default_root();

    const std::filesystem::path& root() const noexcept { return root_; }

    /// Validates, writes the canonical file and updates the index. Replaces an
    /// existing questionnaire with the same reference.
    RecordRef put(const qschema::Questionnaire& q);
    bool contains(const RecordRef& ref) const;
    /// Throws NotFoundError.
    qschema::Questionnaire get(const RecordRef& ref) const;
    std::vector<RecordRef> list() const;
    /// Every stored questionnaire, scored, in index order.
    std::vector<Record> load_records() const;

    /// Throws NotFoundError when the questionnaire is not stored.
    void attach_adequation_plan(const AdequationPlan& plan);
    /// Throws NotFoundError when no plan (or no questionnaire) exists.
    AdequationPlan read_adequation_plan(const RecordRef& ref) const;

private:
    std::filesystem::path questionnaire_path(const RecordRef& ref) const;
    std::filesystem::path plan_path(const RecordRef& ref) const;
    void write_index(const std::vector<RecordRef>& refs) const;

    std::filesystem::path root_;
    mutable std::mutex mu_;
};

// ---------------------------------------------------------------- bundles

struct BundleOptions {
    std::string scatter_x = "I12";
    std::string scatter_y = "SI";
    std::string area_id = "SI";
    const classify::TrainedModel* rules = nullptr;
    const featsel::SelectionResult* selection = nullptr;
    std::set<std::string> stop_words = default_stop_words();
};

/// Writes one JSON file per chart into `out_dir` and returns the file names
/// written, in order.
std::vector<std::string> write_bundle(const std::filesystem::path& out_dir, const std::vector<Record>& records,
                                      const BundleOptions& opt = {});

}  // namespace agro::reports
