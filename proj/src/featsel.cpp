#include "agro/featsel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "agro/eval.hpp"
#include "agro/numeric.hpp"
#include "json.hpp"

namespace agro::featsel {

using dataset::AttrKind;
using dataset::Dataset;

std::string_view to_string(Method m) { return m == Method::CFS ? "CFS" : "InfoGain"; }

double entropy(const std::vector<double>& class_counts) {
    double total = 0.0;
    for (double c : class_counts) {
        if (!(c >= 0.0) || !std::isfinite(c)) throw DomainError("class counts must be finite and non-negative");
        total += c;
    }
    if (total <= 0.0) throw DomainError("entropy of an empty count vector");
    return entropy_of(class_counts);
}

namespace {

constexpr std::size_t kClassColumn = static_cast<std::size_t>(-1);

std::size_t column(const Dataset& ds, std::string_view name) {
    if (name == "class") return kClassColumn;
    const auto j = ds.attribute_index(name);
    if (ds.attributes[j].kind != AttrKind::nominal) {
        throw UsageError("attribute " + std::string(name) + " is numeric; discretize it first");
    }
    return j;
}

std::size_t arity(const Dataset& ds, std::size_t col) {
    return col == kClassColumn ? ds.class_names.size() : ds.attributes[col].nominal_values.size();
}

std::size_t cell(const dataset::Instance& inst, std::size_t col) {
    return col == kClassColumn ? static_cast<std::size_t>(inst.label) : static_cast<std::size_t>(inst.values[col]);
}

// Entropies over the rows of a nominal dataset, cached per column so CFS does
// not recount marginals for every pair.
class Correlations {
public:
    explicit Correlations(const Dataset& ds) : ds_(ds), n_(ds.num_attributes()) {
        class_su_.assign(n_, -1.0);
        pair_su_.assign(n_ * n_, -1.0);
        marginal_.assign(n_ + 1, -1.0);
    }

    double h(std::size_t col) {
        double& slot = marginal_[col == kClassColumn ? n_ : col];
        if (slot < 0.0) {
            std::vector<std::size_t> counts(arity(ds_, col), 0);
            for (const auto& inst : ds_.instances) ++counts[cell(inst, col)];
            slot = entropy_of(counts);
        }
        return slot;
    }

    double joint(std::size_t a, std::size_t b) const {
        const std::size_t nb = arity(ds_, b);
        std::vector<std::size_t> counts(arity(ds_, a) * nb, 0);
        for (const auto& inst : ds_.instances) ++counts[cell(inst, a) * nb + cell(inst, b)];
        return entropy_of(counts);
    }

    // Arguments are put in a fixed order so that su(a, b) == su(b, a) bit for bit.
    double su(std::size_t a, std::size_t b) {
        if (a > b) std::swap(a, b);
        const double ha = h(a), hb = h(b);
        if (ha == 0.0 || hb == 0.0) return 0.0;
        const double ig = ha + hb - joint(a, b);
        return std::clamp(2.0 * ig / (ha + hb), 0.0, 1.0);
    }

    double class_su(std::size_t a) {
        if (class_su_[a] < 0.0) class_su_[a] = su(a, kClassColumn);
        return class_su_[a];
    }

    double pair_su(std::size_t a, std::size_t b) {
        if (a > b) std::swap(a, b);
        double& slot = pair_su_[a * n_ + b];
        if (slot < 0.0) slot = su(a, b);
        return slot;
    }

    /// Attributes given in ascending index order.
    double merit(const std::vector<std::size_t>& subset) {
        const std::size_t k = subset.size();
        if (k == 0) return 0.0;
        double cf = 0.0, ff = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            cf += class_su(subset[i]);
            for (std::size_t j = i + 1; j < k; ++j) ff += pair_su(subset[i], subset[j]);
        }
        const double kd = static_cast<double>(k);
        const double mean_ff = k > 1 ? ff / (kd * (kd - 1.0) / 2.0) : 0.0;
        return cfs_merit_formula(k, cf / kd, mean_ff);
    }

private:
    const Dataset& ds_;
    std::size_t n_;
    std::vector<double> class_su_, pair_su_, marginal_;
};

void require_classes(const Dataset& ds) {
    if (ds.size() == 0) throw SelectionError("feature selection on an empty dataset");
    if (ds.present_classes() < 2) throw SelectionError("feature selection needs at least two classes");
}

}  // namespace

double info_gain(const Dataset& ds, std::string_view attribute) {
    const auto col = column(ds, attribute);
    if (col == kClassColumn) throw UsageError("info_gain of the class against itself");
    if (ds.size() == 0) throw UsageError("info_gain on an empty dataset");
    const std::size_t nv = arity(ds, col), nc = ds.class_names.size();
    std::vector<std::size_t> cls(nc, 0), by_value(nv * nc, 0), value_total(nv, 0);
    for (const auto& inst : ds.instances) {
        const auto v = cell(inst, col);
        const auto c = static_cast<std::size_t>(inst.label);
        ++cls[c];
        ++by_value[v * nc + c];
        ++value_total[v];
    }
    double conditional = 0.0;
    const double n = static_cast<double>(ds.size());
    for (std::size_t v = 0; v < nv; ++v) {
        if (value_total[v] == 0) continue;
        std::vector<std::size_t> row(by_value.begin() + static_cast<std::ptrdiff_t>(v * nc),
                                     by_value.begin() + static_cast<std::ptrdiff_t>((v + 1) * nc));
        conditional += static_cast<double>(value_total[v]) / n * entropy_of(row);
    }
    return std::max(0.0, entropy_of(cls) - conditional);
}

double symmetric_uncertainty(const Dataset& ds, std::string_view a, std::string_view b) {
    const auto ca = column(ds, a), cb = column(ds, b);
    Correlations corr(ds);
    return corr.su(ca, cb);
}

double cfs_merit_formula(std::size_t k, double mean_cf, double mean_ff) {
    const double kd = static_cast<double>(k);
    const double denom = std::sqrt(kd + kd * (kd - 1.0) * mean_ff);
    return denom > 0.0 ? kd * mean_cf / denom : 0.0;
}

double cfs_merit(const Dataset& ds, const std::vector<std::string>& subset) {
    if (subset.empty()) throw UsageError("CFS merit of an empty subset");
    std::vector<std::size_t> idx;
    for (const auto& name : subset) {
        const auto c = column(ds, name);
        if (c == kClassColumn) throw UsageError("the class cannot be part of a CFS subset");
        idx.push_back(c);
    }
    std::sort(idx.begin(), idx.end());
    Correlations corr(ds);
    // Duplicates are legal and penalized like any perfectly redundant attribute.
    const std::size_t k = idx.size();
    double cf = 0.0, ff = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        cf += corr.class_su(idx[i]);
        for (std::size_t j = i + 1; j < k; ++j) ff += idx[i] == idx[j] ? (corr.h(idx[i]) > 0 ? 1.0 : 0.0) : corr.pair_su(idx[i], idx[j]);
    }
    const double kd = static_cast<double>(k);
    return cfs_merit_formula(k, cf / kd, k > 1 ? ff / (kd * (kd - 1.0) / 2.0) : 0.0);
}

// ---------------------------------------------------------------- InfoGain

SelectionResult info_gain_rank(const Dataset& ds, const RankOptions& opt) {
    require_classes(ds);
    const std::size_t na = ds.num_attributes();
    auto counts = ds.class_counts();
    std::size_t smallest = ds.size();
    for (auto c : counts) {
        if (c > 0) smallest = std::min(smallest, c);
    }
    const int folds = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(std::max(opt.folds, 1)), smallest));

    auto gains_on = [&](const Dataset& train) {
        const Dataset nominal = dataset::fit_mdl(train).apply(train);
        std::vector<double> g(na);
        for (std::size_t j = 0; j < na; ++j) g[j] = info_gain(nominal, nominal.attributes[j].name);
        return g;
    };
    auto select = [&](const std::vector<double>& g, std::vector<std::size_t>* order_out) {
        std::vector<std::size_t> order(na);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return g[a] > g[b]; });
        if (order_out) *order_out = order;
        std::vector<std::string> sel;
        for (auto j : order) {
            if (g[j] > opt.threshold) sel.push_back(ds.attributes[j].name);
        }
        return sel;
    };

    SelectionResult res;
    res.method = Method::InfoGain;
    res.dataset_name = ds.name;
    std::vector<double> mean(na, 0.0);
    if (folds <= 1) {
        mean = gains_on(ds);
    } else {
        const auto assignment = eval::stratified_folds(ds, folds, opt.seed);
        std::vector<std::vector<double>> per_fold(static_cast<std::size_t>(folds));
        for (int f = 0; f < folds; ++f) {
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < ds.size(); ++i) {
                if (assignment[i] != f) rows.push_back(i);
            }
            per_fold[static_cast<std::size_t>(f)] = gains_on(ds.subset(rows));
            res.fold_selections.push_back(select(per_fold[static_cast<std::size_t>(f)], nullptr));
        }
        for (std::size_t j = 0; j < na; ++j) {
            std::vector<double> col;
            for (const auto& g : per_fold) col.push_back(g[j]);
            mean[j] = stable_mean(col);
        }
    }
    std::vector<std::size_t> order;
    res.selected = select(mean, &order);
    for (auto j : order) {
        res.ranking.push_back(ds.attributes[j].name);
        res.ranking_scores.push_back(mean[j]);
        if (mean[j] > opt.threshold) res.scores.push_back(mean[j]);
    }
    return res;
}

// ---------------------------------------------------------------- CFS

namespace {

struct Node {
    std::vector<std::size_t> sorted;  // canonical key
    std::vector<std::size_t> order;   // insertion order along the search path
    double merit = 0.0;
};

// Better merit first; near-equal merits prefer smaller subsets, then the
// lexicographically smaller index list (manifest order).
bool better(const Node& a, const Node& b) {
    if (a.merit > b.merit + kEntropyTolerance) return true;
    if (b.merit > a.merit + kEntropyTolerance) return false;
    if (a.sorted.size() != b.sorted.size()) return a.sorted.size() < b.sorted.size();
    return a.sorted < b.sorted;
}

}  // namespace

SelectionResult best_first_cfs_nominal(const Dataset& ds, int patience) {
    require_classes(ds);
    for (const auto& a : ds.attributes) {
        if (a.kind != AttrKind::nominal) throw UsageError("CFS search needs nominal attributes; " + a.name + " is numeric");
    }
    Correlations corr(ds);
    const std::size_t na = ds.num_attributes();

    std::vector<Node> open{Node{}};
    std::set<std::vector<std::size_t>> visited{{}};
    Node best;  // empty subset, merit 0
    int stale = 0;
    while (!open.empty() && stale < patience) {
        auto head = std::min_element(open.begin(), open.end(), better);
        Node cur = std::move(*head);
        open.erase(head);
        bool improved = false;
        for (std::size_t a = 0; a < na; ++a) {
            if (std::binary_search(cur.sorted.begin(), cur.sorted.end(), a)) continue;
            Node child;
            child.sorted = cur.sorted;
            child.sorted.insert(std::upper_bound(child.sorted.begin(), child.sorted.end(), a), a);
            if (!visited.insert(child.sorted).second) continue;
            child.order = cur.order;
            child.order.push_back(a);
            child.merit = corr.merit(child.sorted);
            if (better(child, best) && child.merit > best.merit + kEntropyTolerance) {
                best = child;
                improved = true;
            }
            open.push_back(std::move(child));
        }
        stale = improved ? 0 : stale + 1;
    }

    SelectionResult res;
    res.method = Method::CFS;
    res.dataset_name = ds.name;
    res.merit = best.merit;
    std::vector<std::size_t> prefix;
    double prev = 0.0;
    for (auto a : best.order) {
        prefix.insert(std::upper_bound(prefix.begin(), prefix.end(), a), a);
        const double m = corr.merit(prefix);
        res.selected.push_back(ds.attributes[a].name);
        res.scores.push_back(m - prev);
        prev = m;
    }
    return res;
}

SelectionResult best_first_cfs(const Dataset& ds, const CfsOptions& opt) {
    require_classes(ds);
    auto run = [&](const Dataset& d) { return best_first_cfs_nominal(dataset::fit_mdl(d).apply(d), opt.patience); };
    SelectionResult res = run(ds);
    auto counts = ds.class_counts();
    std::size_t smallest = ds.size();
    for (auto c : counts) {
        if (c > 0) smallest = std::min(smallest, c);
    }
    const int folds = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(std::max(opt.folds, 0)), smallest));
    if (folds >= 2) {
        const auto assignment = eval::stratified_folds(ds, folds, opt.seed);
        for (int f = 0; f < folds; ++f) {
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < ds.size(); ++i) {
                if (assignment[i] != f) rows.push_back(i);
            }
            const Dataset train = ds.subset(rows);
            if (train.present_classes() < 2) {
                res.fold_selections.emplace_back();
                continue;
            }
            res.fold_selections.push_back(run(train).selected);
        }
    }
    return res;
}

Dataset apply_selection(const Dataset& ds, const SelectionResult& sel) {
    std::set<std::string> keep(sel.selected.begin(), sel.selected.end());
    std::vector<std::string> names;
    for (const auto& a : ds.attributes) {
        if (keep.count(a.name)) names.push_back(a.name);
    }
    if (names.size() != keep.size()) throw UsageError("selection names attributes absent from " + ds.name);
    return ds.project(names);
}

std::string to_json(const SelectionResult& sel) {
    nlohmann::ordered_json j;
    j["schema"] = "agro-selection/1";
    j["method"] = std::string(to_string(sel.method));
    j["dataset"] = sel.dataset_name;
    j["selected"] = sel.selected;
    j["scores"] = sel.scores;
    if (sel.method == Method::CFS) j["merit"] = sel.merit;
    if (!sel.ranking.empty()) {
        auto& r = j["ranking"] = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < sel.ranking.size(); ++i) {
            r.push_back({{"attribute", sel.ranking[i]}, {"score", sel.ranking_scores[i]}});
        }
    }
    j["fold_selections"] = sel.fold_selections;
    return j.dump(2) + "\n";
}

SelectionResult selection_from_json(std::string_view text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("selection: ") + e.what(), e.byte);
    }
    try {
        if (j.at("schema").get<std::string>() != "agro-selection/1") throw ParseError("selection: unknown schema", 0);
        SelectionResult sel;
        const auto method = j.at("method").get<std::string>();
        if (method == to_string(Method::CFS)) sel.method = Method::CFS;
        else if (method == to_string(Method::InfoGain)) sel.method = Method::InfoGain;
        else throw ParseError("selection: unknown method '" + method + "'", 0);
        sel.dataset_name = j.at("dataset").get<std::string>();
        sel.selected = j.at("selected").get<std::vector<std::string>>();
        sel.scores = j.at("scores").get<std::vector<double>>();
        if (sel.method == Method::CFS) sel.merit = j.at("merit").get<double>();
        if (j.contains("ranking")) {
            for (const auto& r : j["ranking"]) {
                sel.ranking.push_back(r.at("attribute").get<std::string>());
                sel.ranking_scores.push_back(r.at("score").get<double>());
            }
        }
        sel.fold_selections = j.at("fold_selections").get<std::vector<std::vector<std::string>>>();
        if (sel.scores.size() != sel.selected.size()) throw ParseError("selection: one score per selected attribute expected", 0);
        return sel;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("selection: ") + e.what(), 0);
    }
}

}  // namespace agro::featsel
