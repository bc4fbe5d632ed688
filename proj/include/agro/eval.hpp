#pragma once

// Stratified cross-validation, pooled confusion matrices, precision/recall and
// the dataset x selector x algorithm experiment grid.

#include <cstdint>
#include <string>
#include <vector>

#include "agro/classify.hpp"
#include "agro/dataset.hpp"
#include "agro/error.hpp"
#include "agro/featsel.hpp"

namespace agro::eval {

class StratificationError : public Error {
public:
    using Error::Error;
};

/// Fold index in [0, k) per instance. Each class is shuffled with `seed` and
/// dealt round-robin, the deal continuing across classes, so fold sizes differ
/// by at most one and every fold gets its share of each class.
std::vector<int> stratified_folds(const dataset::Dataset& ds, int k = 5, std::uint64_t seed = 1);

struct ConfusionMatrix {
    std::vector<std::string> classes;
    std::vector<std::vector<std::size_t>> counts;  // [actual][predicted]

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::vector<std::string> class_names);
    void add(int actual, int predicted, std::size_t n = 1);
    void merge(const ConfusionMatrix& other);
    std::size_t total() const;
    bool operator==(const ConfusionMatrix&) const = default;
};

struct Metrics {
    std::vector<double> precision, recall;
    std::vector<std::size_t> support;
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
};

/// Throws UsageError for an empty or non-square matrix.
Metrics precision_recall(const ConfusionMatrix& cm);

struct CvResult {
    ConfusionMatrix cm;
    Metrics metrics;
};

/// Pooled k-fold CV. Trainer failures are rethrown as classify::TrainingError
/// naming the fold. Folds run on up to `threads` threads.
CvResult cross_validate(const classify::LearnerConfig& cfg, const dataset::Dataset& ds, int k = 5,
                        std::uint64_t seed = 1, std::size_t threads = 1);

enum class Selector { none, CFS, InfoGain };
std::string_view to_string(Selector s);
Selector parse_selector(std::string_view s);

struct GridCell {
    std::string dataset;
    Selector selector = Selector::none;
    classify::Algorithm algorithm = classify::Algorithm::NB;
    std::uint64_t seed = 0;
    std::vector<std::string> attributes;
    bool failed = false;
    std::string error;
    ConfusionMatrix cm;
    Metrics metrics;
    bool best_for_algorithm = false;
    bool global_best = false;
};

struct GridOptions {
    int folds = 5;
    std::size_t threads = 1;
    std::vector<classify::Algorithm> algorithms{classify::kAllAlgorithms.begin(), classify::kAllAlgorithms.end()};
};

struct GridResult {
    std::uint64_t master_seed = 0;
    std::vector<GridCell> cells;  // dataset-major, then selector, then algorithm
    std::vector<featsel::SelectionResult> selections;
    int best = -1;  // index of the global best cell, -1 when every cell failed

    const GridCell& cell(std::string_view dataset, Selector s, classify::Algorithm a) const;
};

/// Seeds: selection and CV folds derive from (master_seed, dataset[/selector])
/// and each learner from (master_seed, dataset/selector/algorithm), so a cell's
/// result does not depend on which other cells run.
GridResult run_experiment_grid(const std::vector<dataset::Record>& records, std::uint64_t master_seed,
                               const GridOptions& opt = {});

/// Same grid on prebuilt datasets (FeaturesDS first, IndicatorsDS second in the
/// usual call).
GridResult run_experiment_grid(const std::vector<dataset::Dataset>& datasets, std::uint64_t master_seed,
                               const GridOptions& opt = {});

/// header: dataset,selector,algorithm,precision,recall,status
std::string grid_to_csv(const GridResult& g);
/// One block per algorithm, one row per dataset, precision then recall columns
/// for no selection, CFS and InfoGain. '*' marks the best cell of an algorithm,
/// '**' the global best.
std::string grid_to_table(const GridResult& g);

}  // namespace agro::eval
