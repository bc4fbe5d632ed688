#include "agro/classify.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "classify_internal.hpp"
#include "json.hpp"

namespace agro::classify {

using dataset::AttrKind;
using dataset::AttributeSpec;
using dataset::Dataset;
using json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 6> kNames{"NB", "Tree", "RF", "AdaBoost", "Ripper", "MLP"};

}  // namespace

std::string_view to_string(Algorithm a) { return kNames[static_cast<std::size_t>(a)]; }

Algorithm parse_algorithm(std::string_view s) {
    auto lower = [](std::string_view v) {
        std::string out(v);
        for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        return out;
    };
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        if (lower(kNames[i]) == lower(s)) return static_cast<Algorithm>(i);
    }
    throw UsageError("unknown algorithm: " + std::string(s));
}

void LearnerConfig::check() const {
    auto fail = [](const std::string& m) { throw UsageError("invalid learner config: " + m); };
    if (!(nb.variance_floor > 0.0)) fail("variance floor must be positive");
    if (!(tree.confidence > 0.0 && tree.confidence <= 0.5)) fail("tree confidence must lie in (0, 0.5]");
    if (tree.min_leaf < 1) fail("tree min_leaf must be at least 1");
    if (rf.trees < 1) fail("forest needs at least one tree");
    if (rf.max_depth < 0 || rf.features < 0) fail("forest depth and feature count must be non-negative");
    if (boost.rounds < 1) fail("boosting needs at least one round");
    if (ripper.folds < 2) fail("ripper folds must be at least 2");
    if (ripper.min_cover < 0.0 || ripper.optimizations < 0) fail("ripper min_cover and optimizations must be non-negative");
    if (!(mlp.learning_rate > 0.0) || mlp.momentum < 0.0 || mlp.momentum >= 1.0) fail("mlp rates out of range");
    if (mlp.epochs < 0 || mlp.hidden < -1 || mlp.hidden == 0) fail("mlp epochs/hidden out of range");
    if (!(mlp.init_range > 0.0)) fail("mlp init range must be positive");
}

// ---------------------------------------------------------------- shared

namespace detail {

void require_trainable(const Dataset& ds, const LearnerConfig& cfg) {
    cfg.check();
    if (ds.size() == 0) throw UsageError("cannot train on an empty dataset");
    if (ds.class_names.empty()) throw UsageError("dataset has no classes");
    ds.check();
}

TrainedModel make_model(Algorithm a, const Dataset& ds, const LearnerConfig& cfg) {
    TrainedModel m;
    m.algorithm = a;
    m.attributes = ds.attributes;
    m.class_names = ds.class_names;
    m.seed = cfg.seed;
    return m;
}

std::vector<double> class_counts(const Dataset& ds, const std::vector<std::size_t>& rows) {
    std::vector<double> c(ds.class_names.size(), 0.0);
    for (auto r : rows) c[static_cast<std::size_t>(ds.instances[r].label)] += 1.0;
    return c;
}

int argmax(const std::vector<double>& v) {
    int best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
}

// ---------------------------------------------------------------- naive Bayes

std::vector<double> nb_dist(const NbModel& m, const std::vector<AttributeSpec>& attrs, const std::vector<double>& x) {
    const std::size_t C = m.log_prior.size();
    std::vector<double> score = m.log_prior;
    constexpr double kNever = -std::numeric_limits<double>::infinity();
    constexpr double kHalfLog2Pi = 0.91893853320467274178;
    for (std::size_t j = 0; j < attrs.size(); ++j) {
        for (std::size_t c = 0; c < C; ++c) {
            if (attrs[j].kind == AttrKind::nominal) {
                const auto& row = m.log_freq[j][c];
                const double v = x[j];
                const bool known = v >= 0.0 && v < static_cast<double>(row.size()) && v == std::floor(v);
                score[c] += known ? row[static_cast<std::size_t>(v)] : m.log_unseen[j][c];
            } else {
                const double var = m.variance[j][c];
                const double d = x[j] - m.mean[j][c];
                score[c] += -0.5 * d * d / var - 0.5 * std::log(var) - kHalfLog2Pi;
            }
        }
    }
    for (std::size_t c = 0; c < C; ++c) {
        if (!m.present[c]) score[c] = kNever;
    }
    const double top = *std::max_element(score.begin(), score.end());
    std::vector<double> p(C);
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) sum += p[c] = std::exp(score[c] - top);
    for (auto& v : p) v /= sum;
    return p;
}

}  // namespace detail

TrainedModel train_naive_bayes(const Dataset& ds, const LearnerConfig& cfg) {
    detail::require_trainable(ds, cfg);
    auto model = detail::make_model(Algorithm::NB, ds, cfg);
    const std::size_t C = ds.class_names.size(), A = ds.num_attributes();
    const double n = static_cast<double>(ds.size());
    const auto counts = ds.class_counts();

    NbModel nb;
    for (std::size_t c = 0; c < C; ++c) {
        nb.log_prior.push_back(std::log((counts[c] + 1.0) / (n + static_cast<double>(C))));
        nb.present.push_back(counts[c] > 0);
    }
    nb.log_freq.resize(A);
    nb.log_unseen.resize(A);
    nb.mean.resize(A);
    nb.variance.resize(A);
    for (std::size_t j = 0; j < A; ++j) {
        const auto& spec = ds.attributes[j];
        if (spec.kind == AttrKind::nominal) {
            const std::size_t V = spec.nominal_values.size();
            std::vector<std::vector<double>> freq(C, std::vector<double>(V, 0.0));
            for (const auto& inst : ds.instances) freq[static_cast<std::size_t>(inst.label)][static_cast<std::size_t>(inst.values[j])] += 1.0;
            nb.log_freq[j].resize(C);
            nb.log_unseen[j].resize(C);
            for (std::size_t c = 0; c < C; ++c) {
                const double denom = static_cast<double>(counts[c]) + static_cast<double>(V);
                for (std::size_t v = 0; v < V; ++v) nb.log_freq[j][c].push_back(std::log((freq[c][v] + 1.0) / denom));
                nb.log_unseen[j][c] = std::log(1.0 / denom);
            }
            continue;
        }
        // Two-pass moments per class. Absent classes get the overall moments,
        // which only keeps the stored model finite.
        std::vector<double> sum(C, 0.0), sq(C, 0.0);
        double all_sum = 0.0, all_sq = 0.0;
        for (const auto& inst : ds.instances) sum[static_cast<std::size_t>(inst.label)] += inst.values[j], all_sum += inst.values[j];
        const double all_mean = all_sum / n;
        std::vector<double> mean(C, all_mean);
        for (std::size_t c = 0; c < C; ++c) {
            if (counts[c] > 0) mean[c] = sum[c] / static_cast<double>(counts[c]);
        }
        for (const auto& inst : ds.instances) {
            const double d = inst.values[j] - mean[static_cast<std::size_t>(inst.label)];
            sq[static_cast<std::size_t>(inst.label)] += d * d;
            all_sq += (inst.values[j] - all_mean) * (inst.values[j] - all_mean);
        }
        nb.mean[j] = mean;
        nb.variance[j].resize(C);
        for (std::size_t c = 0; c < C; ++c) {
            const double var = counts[c] > 0 ? sq[c] / static_cast<double>(counts[c]) : all_sq / n;
            nb.variance[j][c] = std::max(var, cfg.nb.variance_floor);
        }
    }
    model.body = std::move(nb);
    return model;
}

TrainedModel train(const Dataset& ds, const LearnerConfig& cfg) {
    switch (cfg.algorithm) {
        case Algorithm::NB: return train_naive_bayes(ds, cfg);
        case Algorithm::Tree: return train_tree(ds, cfg);
        case Algorithm::RF: return train_random_forest(ds, cfg);
        case Algorithm::AdaBoost: return train_adaboost(ds, cfg);
        case Algorithm::Ripper: return train_ripper(ds, cfg);
        case Algorithm::MLP: return train_mlp(ds, cfg);
    }
    throw UsageError("unknown algorithm");
}

// ---------------------------------------------------------------- prediction

void check_compatible(const TrainedModel& model, const Dataset& ds) {
    if (ds.attributes != model.attributes) {
        throw UsageError("dataset " + ds.name + " does not match the model's attribute list");
    }
    if (ds.class_names != model.class_names) throw UsageError("dataset " + ds.name + " does not match the model's classes");
}

Prediction predict(const TrainedModel& model, const dataset::Instance& inst) {
    const auto& x = inst.values;
    if (x.size() != model.attributes.size()) {
        throw UsageError("instance has " + std::to_string(x.size()) + " values, model expects " +
                         std::to_string(model.attributes.size()));
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (std::isnan(x[j])) throw UsageError("missing value for " + model.attributes[j].name);
    }
    const std::size_t C = model.class_names.size();
    Prediction p;
    p.dist = std::visit(
        [&](const auto& body) -> std::vector<double> {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, NbModel>) return detail::nb_dist(body, model.attributes, x);
            else if constexpr (std::is_same_v<T, Tree>) return detail::tree_dist(body, model.attributes, x);
            else if constexpr (std::is_same_v<T, ForestModel>) return detail::forest_dist(body, model.attributes, C, x);
            else if constexpr (std::is_same_v<T, BoostModel>) return detail::boost_dist(body, C, x);
            else if constexpr (std::is_same_v<T, RuleSet>) return detail::rules_dist(body, C, x);
            else return detail::mlp_dist(body, model.attributes, x);
        },
        model.body);
    p.cls = detail::argmax(p.dist);
    return p;
}

// ---------------------------------------------------------------- rules

bool Condition::holds(const std::vector<double>& x) const {
    const double v = x[static_cast<std::size_t>(attribute)];
    switch (op) {
        case Op::le: return v <= value;
        case Op::ge: return v >= value;
        case Op::eq: return v == value;
    }
    return false;
}

bool Rule::fires(const std::vector<double>& x) const {
    return std::all_of(conditions.begin(), conditions.end(), [&](const Condition& c) { return c.holds(x); });
}

int RuleSet::first_match(const std::vector<double>& x) const {
    for (std::size_t i = 0; i < rules.size(); ++i) {
        if (rules[i].fires(x)) return static_cast<int>(i);
    }
    return -1;
}

namespace detail {

std::vector<double> rules_dist(const RuleSet& rs, std::size_t classes, const std::vector<double>& x) {
    std::vector<double> d(classes, 0.0);
    const int r = rs.first_match(x);
    d[static_cast<std::size_t>(r < 0 ? rs.default_class : rs.rules[static_cast<std::size_t>(r)].cls)] = 1.0;
    return d;
}

}  // namespace detail

namespace {

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

std::string condition_to_text(const Condition& c, const std::vector<AttributeSpec>& attrs) {
    const auto& a = attrs.at(static_cast<std::size_t>(c.attribute));
    switch (c.op) {
        case Condition::Op::le: return a.name + " <= " + format_number(c.value);
        case Condition::Op::ge: return a.name + " >= " + format_number(c.value);
        case Condition::Op::eq: return a.name + " = " + a.nominal_values.at(static_cast<std::size_t>(c.value));
    }
    return {};
}

std::string rules_to_text(const TrainedModel& model) {
    const auto* rs = std::get_if<RuleSet>(&model.body);
    if (rs == nullptr) throw UsageError("model is not a rule set");
    std::string out;
    for (const auto& r : rs->rules) {
        std::string line = "IF ";
        for (std::size_t i = 0; i < r.conditions.size(); ++i) {
            if (i) line += " AND ";
            line += condition_to_text(r.conditions[i], model.attributes);
        }
        line += " THEN " + model.class_names[static_cast<std::size_t>(r.cls)];
        line += "  (coverage " + std::to_string(r.coverage) + ", correct " + std::to_string(r.correct) + ")\n";
        out += line;
    }
    out += "DEFAULT " + model.class_names[static_cast<std::size_t>(rs->default_class)] + "  (coverage " +
           std::to_string(rs->default_coverage) + ", correct " + std::to_string(rs->default_correct) + ")\n";
    return out;
}

// ---------------------------------------------------------------- JSON

namespace {

constexpr const char* kModelSchema = "agro-model/1";

json tree_json(const Tree& t) {
    json nodes = json::array();
    for (const auto& n : t.nodes) {
        json j;
        j["attribute"] = n.attribute;
        if (n.attribute >= 0) {
            j["threshold"] = n.threshold;
            j["children"] = n.children;
        }
        j["counts"] = n.counts;
        j["dist"] = n.dist;
        nodes.push_back(std::move(j));
    }
    return nodes;
}

Tree tree_from(const json& j) {
    Tree t;
    for (const auto& n : j) {
        TreeNode node;
        node.attribute = n.at("attribute").get<int>();
        if (node.attribute >= 0) {
            node.threshold = n.at("threshold").get<double>();
            node.children = n.at("children").get<std::vector<int>>();
        }
        node.counts = n.at("counts").get<std::vector<double>>();
        node.dist = n.at("dist").get<std::vector<double>>();
        t.nodes.push_back(std::move(node));
    }
    for (const auto& n : t.nodes) {
        for (int c : n.children) {
            if (c <= 0 || static_cast<std::size_t>(c) >= t.nodes.size()) throw ParseError("tree child index out of range", 0);
        }
    }
    return t;
}

json stump_json(const Stump& s) {
    return json{{"attribute", s.attribute}, {"nominal", s.nominal}, {"threshold", s.threshold},
                {"if_true", s.if_true}, {"if_false", s.if_false}};
}

Stump stump_from(const json& j) {
    Stump s;
    s.attribute = j.at("attribute").get<int>();
    s.nominal = j.at("nominal").get<bool>();
    s.threshold = j.at("threshold").get<double>();
    s.if_true = j.at("if_true").get<int>();
    s.if_false = j.at("if_false").get<int>();
    return s;
}

std::string_view op_name(Condition::Op op) {
    return op == Condition::Op::le ? "<=" : op == Condition::Op::ge ? ">=" : "=";
}

Condition::Op op_from(const std::string& s) {
    if (s == "<=") return Condition::Op::le;
    if (s == ">=") return Condition::Op::ge;
    if (s == "=") return Condition::Op::eq;
    throw ParseError("unknown rule operator " + s, 0);
}

json body_json(const TrainedModel& m) {
    return std::visit(
        [](const auto& b) -> json {
            using T = std::decay_t<decltype(b)>;
            json j;
            if constexpr (std::is_same_v<T, NbModel>) {
                j["log_prior"] = b.log_prior;
                j["present"] = b.present;
                j["log_freq"] = b.log_freq;
                j["log_unseen"] = b.log_unseen;
                j["mean"] = b.mean;
                j["variance"] = b.variance;
            } else if constexpr (std::is_same_v<T, Tree>) {
                j["nodes"] = tree_json(b);
            } else if constexpr (std::is_same_v<T, ForestModel>) {
                j["trees"] = json::array();
                for (const auto& t : b.trees) j["trees"].push_back(tree_json(t));
            } else if constexpr (std::is_same_v<T, BoostModel>) {
                j["learners"] = json::array();
                for (const auto& l : b.learners) {
                    json lj{{"positive", l.positive}, {"negative", l.negative}, {"prior", l.prior}, {"rounds", json::array()}};
                    for (const auto& r : l.rounds) {
                        lj["rounds"].push_back({{"stump", stump_json(r.stump)},
                                                {"alpha", r.alpha},
                                                {"error", r.error},
                                                {"error_reweighted", r.error_reweighted}});
                    }
                    j["learners"].push_back(std::move(lj));
                }
            } else if constexpr (std::is_same_v<T, RuleSet>) {
                j["rules"] = json::array();
                for (const auto& r : b.rules) {
                    json rj{{"class", r.cls}, {"coverage", r.coverage}, {"correct", r.correct}, {"conditions", json::array()}};
                    for (const auto& c : r.conditions) {
                        rj["conditions"].push_back({{"attribute", c.attribute}, {"op", std::string(op_name(c.op))}, {"value", c.value}});
                    }
                    j["rules"].push_back(std::move(rj));
                }
                j["default_class"] = b.default_class;
                j["default_coverage"] = b.default_coverage;
                j["default_correct"] = b.default_correct;
            } else {
                j["lo"] = b.lo;
                j["hi"] = b.hi;
                j["inputs"] = b.inputs;
                j["hidden"] = b.hidden;
                j["outputs"] = b.outputs;
                j["w1"] = b.w1;
                j["w2"] = b.w2;
                j["loss_history"] = b.loss_history;
            }
            return j;
        },
        m.body);
}

}  // namespace

std::string model_to_json(const TrainedModel& m) {
    json j;
    j["schema"] = kModelSchema;
    j["algorithm"] = std::string(to_string(m.algorithm));
    j["seed"] = m.seed;
    j["classes"] = m.class_names;
    j["attributes"] = json::array();
    for (const auto& a : m.attributes) {
        json aj{{"name", a.name}, {"kind", a.kind == AttrKind::nominal ? "nominal" : "numeric"}};
        if (a.kind == AttrKind::nominal) aj["values"] = a.nominal_values;
        j["attributes"].push_back(std::move(aj));
    }
    j["model"] = body_json(m);
    return j.dump(2) + "\n";
}

TrainedModel model_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model file is not JSON: ") + e.what(), e.byte);
    }
    try {
        if (j.at("schema").get<std::string>() != kModelSchema) throw ParseError("unsupported model schema", 0);
        TrainedModel m;
        m.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
        m.seed = j.at("seed").get<std::uint64_t>();
        m.class_names = j.at("classes").get<std::vector<std::string>>();
        for (const auto& a : j.at("attributes")) {
            AttributeSpec spec;
            spec.name = a.at("name").get<std::string>();
            const auto kind = a.at("kind").get<std::string>();
            if (kind == "nominal") {
                spec.kind = AttrKind::nominal;
                spec.nominal_values = a.at("values").get<std::vector<std::string>>();
            } else if (kind != "numeric") {
                throw ParseError("unknown attribute kind " + kind, 0);
            }
            m.attributes.push_back(std::move(spec));
        }
        const auto& b = j.at("model");
        switch (m.algorithm) {
            case Algorithm::NB: {
                NbModel nb;
                nb.log_prior = b.at("log_prior").get<std::vector<double>>();
                nb.present = b.at("present").get<std::vector<bool>>();
                if (nb.present.size() != nb.log_prior.size()) throw ParseError("NB model: one presence flag per class expected", 0);
                nb.log_freq = b.at("log_freq").get<std::vector<std::vector<std::vector<double>>>>();
                nb.log_unseen = b.at("log_unseen").get<std::vector<std::vector<double>>>();
                nb.mean = b.at("mean").get<std::vector<std::vector<double>>>();
                nb.variance = b.at("variance").get<std::vector<std::vector<double>>>();
                m.body = std::move(nb);
                break;
            }
            case Algorithm::Tree: m.body = tree_from(b.at("nodes")); break;
            case Algorithm::RF: {
                ForestModel f;
                for (const auto& t : b.at("trees")) f.trees.push_back(tree_from(t));
                m.body = std::move(f);
                break;
            }
            case Algorithm::AdaBoost: {
                BoostModel bm;
                for (const auto& lj : b.at("learners")) {
                    BoostLearner l;
                    l.positive = lj.at("positive").get<int>();
                    l.negative = lj.at("negative").get<int>();
                    l.prior = lj.at("prior").get<double>();
                    for (const auto& r : lj.at("rounds")) {
                        l.rounds.push_back({stump_from(r.at("stump")), r.at("alpha").get<double>(), r.at("error").get<double>(),
                                            r.at("error_reweighted").get<double>()});
                    }
                    bm.learners.push_back(std::move(l));
                }
                m.body = std::move(bm);
                break;
            }
            case Algorithm::Ripper: {
                RuleSet rs;
                for (const auto& rj : b.at("rules")) {
                    Rule r;
                    r.cls = rj.at("class").get<int>();
                    r.coverage = rj.at("coverage").get<std::size_t>();
                    r.correct = rj.at("correct").get<std::size_t>();
                    for (const auto& c : rj.at("conditions")) {
                        r.conditions.push_back({c.at("attribute").get<int>(), op_from(c.at("op").get<std::string>()),
                                                c.at("value").get<double>()});
                    }
                    rs.rules.push_back(std::move(r));
                }
                rs.default_class = b.at("default_class").get<int>();
                rs.default_coverage = b.at("default_coverage").get<std::size_t>();
                rs.default_correct = b.at("default_correct").get<std::size_t>();
                m.body = std::move(rs);
                break;
            }
            case Algorithm::MLP: {
                MlpModel mm;
                mm.lo = b.at("lo").get<std::vector<double>>();
                mm.hi = b.at("hi").get<std::vector<double>>();
                mm.inputs = b.at("inputs").get<std::size_t>();
                mm.hidden = b.at("hidden").get<std::size_t>();
                mm.outputs = b.at("outputs").get<std::size_t>();
                mm.w1 = b.at("w1").get<std::vector<double>>();
                mm.w2 = b.at("w2").get<std::vector<double>>();
                mm.loss_history = b.at("loss_history").get<std::vector<double>>();
                if (mm.w1.size() != mm.hidden * (mm.inputs + 1) || mm.w2.size() != mm.outputs * (mm.hidden + 1)) {
                    throw ParseError("MLP weight matrices have the wrong size", 0);
                }
                m.body = std::move(mm);
                break;
            }
        }
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed model file: ") + e.what(), 0);
    } catch (const UsageError& e) {
        throw ParseError(e.what(), 0);
    }
}

}  // namespace agro::classify
