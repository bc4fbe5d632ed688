#pragma once

// Entropy-based attribute evaluation: information gain ranking and
// correlation-based subset selection (CFS) with a forward best-first search.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "agro/dataset.hpp"
#include "agro/error.hpp"

namespace agro::featsel {

class SelectionError : public Error {
public:
    using Error::Error;
};

enum class Method { CFS, InfoGain };
std::string_view to_string(Method m);

struct SelectionResult {
    Method method = Method::CFS;
    std::string dataset_name;
    // CFS: selection order along the search path, scores are the merit gained by
    // each addition (they sum to `merit`). InfoGain: rank order, scores are the
    // mean gains, non-increasing.
    std::vector<std::string> selected;
    std::vector<double> scores;
    double merit = 0.0;  // CFS only
    // InfoGain: every attribute in rank order with its mean gain.
    std::vector<std::string> ranking;
    std::vector<double> ranking_scores;
    // Selections made on the training part of each of the 5 folds.
    std::vector<std::vector<std::string>> fold_selections;
};

/// Bits; throws DomainError for an empty/all-zero or negative count vector.
double entropy(const std::vector<double>& class_counts);

/// Requires a nominal attribute (discretize numerics first); UsageError otherwise.
double info_gain(const dataset::Dataset& ds, std::string_view attribute);

/// `a` or `b` may be "class". Both must be nominal.
double symmetric_uncertainty(const dataset::Dataset& ds, std::string_view a, std::string_view b);

/// Merit from already computed correlations: k * mean_cf / sqrt(k + k(k-1) * mean_ff).
double cfs_merit_formula(std::size_t k, double mean_cf, double mean_ff);

/// Merit of a subset of nominal attributes; UsageError for an empty subset.
double cfs_merit(const dataset::Dataset& ds, const std::vector<std::string>& subset);

struct RankOptions {
    int folds = 5;
    std::uint64_t seed = 1;
    double threshold = 0.0;
};

/// Ranks attributes by mean information gain over stratified folds, each fold
/// discretized with MDL cuts fitted on its own training part.
SelectionResult info_gain_rank(const dataset::Dataset& ds, const RankOptions& opt = {});

struct CfsOptions {
    int patience = 5;       // consecutive non-improving expansions before stopping
    int folds = 5;          // 0 disables the fold-wise report
    std::uint64_t seed = 1;
};

/// MDL-discretizes numerics, then runs forward best-first search on CFS merit.
SelectionResult best_first_cfs(const dataset::Dataset& ds, const CfsOptions& opt = {});

/// Search on an already nominal dataset, without fold reports. Exposed for tests.
SelectionResult best_first_cfs_nominal(const dataset::Dataset& ds, int patience = 5);

/// Keeps the selected attributes (in dataset order) and the class.
dataset::Dataset apply_selection(const dataset::Dataset& ds, const SelectionResult& sel);

std::string to_json(const SelectionResult& sel);
/// Inverse of to_json; throws ParseError.
SelectionResult selection_from_json(std::string_view text);

}  // namespace agro::featsel
