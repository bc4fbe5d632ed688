#pragma once

#include <vector>

#include "agro/classify.hpp"

namespace agro::classify::detail {

/// Non-empty, internally consistent, and valid config. Throws UsageError.
void require_trainable(const dataset::Dataset& ds, const LearnerConfig& cfg);

TrainedModel make_model(Algorithm a, const dataset::Dataset& ds, const LearnerConfig& cfg);

std::vector<double> class_counts(const dataset::Dataset& ds, const std::vector<std::size_t>& rows);

/// Index of the largest entry; the lowest index wins ties.
int argmax(const std::vector<double>& v);

std::vector<double> nb_dist(const NbModel& m, const std::vector<dataset::AttributeSpec>& attrs,
                            const std::vector<double>& x);
std::vector<double> tree_dist(const Tree& t, const std::vector<dataset::AttributeSpec>& attrs,
                              const std::vector<double>& x);
std::vector<double> forest_dist(const ForestModel& m, const std::vector<dataset::AttributeSpec>& attrs,
                                std::size_t classes, const std::vector<double>& x);
std::vector<double> boost_dist(const BoostModel& m, std::size_t classes, const std::vector<double>& x);
std::vector<double> rules_dist(const RuleSet& rs, std::size_t classes, const std::vector<double>& x);
std::vector<double> mlp_dist(const MlpModel& m, const std::vector<dataset::AttributeSpec>& attrs,
                             const std::vector<double>& x);

}  // namespace agro::classify::detail
