#pragma once

// Classifier families used by the experiment grid. Every trainer is a pure
// function of (dataset, config): the seed in the config drives all randomness.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "agro/dataset.hpp"
#include "agro/error.hpp"

namespace agro::classify {

enum class Algorithm { NB, Tree, RF, AdaBoost, Ripper, MLP };
std::string_view to_string(Algorithm a);
/// Accepts the names printed by to_string, case-insensitively.
Algorithm parse_algorithm(std::string_view s);
inline constexpr std::array<Algorithm, 6> kAllAlgorithms{Algorithm::NB,       Algorithm::Tree,   Algorithm::RF,
                                                         Algorithm::AdaBoost, Algorithm::Ripper, Algorithm::MLP};

class TrainingError : public Error {
public:
    using Error::Error;
};

struct NbParams {
    double variance_floor = 1e-6;
};

struct TreeParams {
    double confidence = 0.25;  // pruning confidence factor, in (0, 0.5]
    int min_leaf = 2;
    bool prune = true;
};

struct ForestParams {
    int trees = 100;
    int max_depth = 0;     // 0 = unlimited
    int features = 0;      // candidates per split; 0 = floor(log2 k) + 1
    std::size_t threads = 1;
};

struct BoostParams {
    int rounds = 10;
};

struct RipperParams {
    int folds = 3;           // one fold of this many is held out for pruning
    double min_cover = 2.0;  // instances a condition must cover in the grow set
    int optimizations = 2;
    bool check_error_rate = true;
};

struct MlpParams {
    double learning_rate = 0.3;
    double momentum = 0.2;
    int hidden = -1;  // -1 = floor((attributes + classes) / 2)
    int epochs = 500;
    double init_range = 0.05;
};

struct LearnerConfig {
    Algorithm algorithm = Algorithm::NB;
    std::uint64_t seed = 1;
    NbParams nb;
    TreeParams tree;
    ForestParams rf;
    BoostParams boost;
    RipperParams ripper;
    MlpParams mlp;

    /// Throws UsageError when a parameter is out of range.
    void check() const;
};

// ---------------------------------------------------------------- models

struct NbModel {
    std::vector<double> log_prior;  // per class
    // Classes with training rows. The others keep their smoothed prior in
    // `log_prior` but are never predicted.
    std::vector<bool> present;
    // Nominal attributes: log P(value | class), [attr][class][value]. Values
    // never seen for a class use `log_unseen[attr][class]`.
    std::vector<std::vector<std::vector<double>>> log_freq;
    std::vector<std::vector<double>> log_unseen;
    // Numeric attributes: per-class Gaussian, [attr][class].
    std::vector<std::vector<double>> mean, variance;
};

struct TreeNode {
    int attribute = -1;     // -1 for leaves
    double threshold = 0;   // numeric splits: value <= threshold goes to children[0]
    std::vector<int> children;
    std::vector<double> counts;  // training class counts reaching this node
    std::vector<double> dist;    // leaf distribution (inherited when the leaf is empty)
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    std::size_t leaves() const;
    std::size_t depth() const;
};

struct ForestModel {
    std::vector<Tree> trees;
};

struct Stump {
    int attribute = -1;      // -1: constant stump
    bool nominal = false;
    double threshold = 0.0;  // numeric: x <= threshold; nominal: x == threshold
    int if_true = 1;         // +1 / -1
    int if_false = -1;
    int vote(const std::vector<double>& values) const;
};

struct BoostRound {
    Stump stump;
    double alpha = 0.0;
    double error = 0.0;           // weighted error before reweighting
    double error_reweighted = 0;  // same stump on the updated weights
};

struct BoostLearner {
    int positive = 0;  // class index voted by +1
    int negative = -1; // -1 in one-vs-rest mode
    std::vector<BoostRound> rounds;
    double prior = 0.5;  // share of positives; the prediction of an empty ensemble
};

struct BoostModel {
    std::vector<BoostLearner> learners;  // one for binary data, one per class otherwise
};

struct Condition {
    int attribute = 0;
    enum class Op { le, ge, eq } op = Op::ge;
    double value = 0.0;  // nominal: index of the value
    bool holds(const std::vector<double>& values) const;
    bool operator==(const Condition&) const = default;
};

struct Rule {
    std::vector<Condition> conditions;
    int cls = 0;
    std::size_t coverage = 0;  // training instances this rule fires on first
    std::size_t correct = 0;
    bool fires(const std::vector<double>& values) const;
};

struct RuleSet {
    std::vector<Rule> rules;
    int default_class = 0;
    std::size_t default_coverage = 0;
    std::size_t default_correct = 0;
    /// Index of the first firing rule, or -1.
    int first_match(const std::vector<double>& values) const;
};

struct MlpModel {
    // Input encoding: numeric attributes scaled by the training min/max,
    // nominal attributes one-hot.
    std::vector<double> lo, hi;
    std::size_t inputs = 0, hidden = 0, outputs = 0;
    // Row-major with the bias last: w1 is hidden x (inputs + 1), w2 is
    // outputs x (hidden + 1).
    std::vector<double> w1, w2;
    std::vector<double> loss_history;  // mean squared error per epoch
};

struct TrainedModel {
    Algorithm algorithm = Algorithm::NB;
    std::vector<dataset::AttributeSpec> attributes;
    std::vector<std::string> class_names;
    std::uint64_t seed = 0;
    std::variant<NbModel, Tree, ForestModel, BoostModel, RuleSet, MlpModel> body;
};

TrainedModel train_naive_bayes(const dataset::Dataset& ds, const LearnerConfig& cfg = {});
TrainedModel train_tree(const dataset::Dataset& ds, const LearnerConfig& cfg = {});
TrainedModel train_random_forest(const dataset::Dataset& ds, const LearnerConfig& cfg = {});
TrainedModel train_adaboost(const dataset::Dataset& ds, const LearnerConfig& cfg = {});
TrainedModel train_ripper(const dataset::Dataset& ds, const LearnerConfig& cfg = {});
TrainedModel train_mlp(const dataset::Dataset& ds, const LearnerConfig& cfg = {});

/// Dispatches on cfg.algorithm.
TrainedModel train(const dataset::Dataset& ds, const LearnerConfig& cfg);

struct Prediction {
    int cls = 0;
    std::vector<double> dist;
};

/// Throws UsageError when the instance does not fit the model's attribute list.
Prediction predict(const TrainedModel& model, const dataset::Instance& inst);

/// UsageError unless `ds` has exactly the model's attributes and classes.
void check_compatible(const TrainedModel& model, const dataset::Dataset& ds);

// ---------------------------------------------------------------- inspection

/// Weighted training error of one stump; used by the boosting tests.
double stump_error(const Stump& s, const dataset::Dataset& ds, const std::vector<double>& weights, int positive);

/// Squared-error loss over `ds` and its gradient with respect to the packed
/// parameter vector (w1 followed by w2).
struct LossGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};
LossGradient mlp_loss_gradient(const TrainedModel& model, const dataset::Dataset& ds);
std::vector<double> mlp_parameters(const TrainedModel& model);
void set_mlp_parameters(TrainedModel& model, const std::vector<double>& params);

/// One line per rule: "IF I12 >= 0.5 AND I20 >= 0.7 THEN High  (coverage 812, correct 812)".
std::string rules_to_text(const TrainedModel& model);
std::string condition_to_text(const Condition& c, const std::vector<dataset::AttributeSpec>& attrs);

/// Versioned JSON ("agro-model/1").
std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(std::string_view text);

}  // namespace agro::classify
