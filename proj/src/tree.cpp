// C4.5-style pruned tree and the unpruned random trees of the forest. Both
// grow from the same node representation; they differ in split scoring and in
// which attributes a node may look at.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "agro/numeric.hpp"
#include "agro/parallel.hpp"
#include "agro/rng.hpp"
#include "classify_internal.hpp"

namespace agro::classify {

using dataset::AttrKind;
using dataset::AttributeSpec;
using dataset::Dataset;

std::size_t Tree::leaves() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.attribute < 0; }));
}

std::size_t Tree::depth() const {
    if (nodes.empty()) return 0;
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t best = 0;
    // Children always have larger indices than their parent.
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (int c : nodes[i].children) d[static_cast<std::size_t>(c)] = d[i] + 1;
        best = std::max(best, d[i]);
    }
    return best;
}

namespace {

bool is_pure(const std::vector<double>& counts) {
    return std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }) <= 1;
}

std::vector<double> normalized(const std::vector<double>& counts) {
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    std::vector<double> d(counts.size(), 0.0);
    if (total <= 0.0) return d;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = counts[i] / total;
    return d;
}

struct Split {
    bool valid = false;
    int attribute = -1;
    double threshold = 0.0;
    double gain = 0.0;
    double split_info = 0.0;
    std::vector<std::vector<std::size_t>> branches;
};

struct Point {
    double v;
    int label;
    std::size_t row;
};

// Best binary cut on a numeric attribute by information gain. Both sides must
// hold at least `min_side` rows. `candidates` receives the number of cut
// positions that satisfied the size constraint.
Split numeric_split(const Dataset& ds, const std::vector<std::size_t>& rows, std::size_t j, double min_side,
                    std::size_t* candidates) {
    const std::size_t C = ds.class_names.size();
    std::vector<Point> pts;
    pts.reserve(rows.size());
    for (auto r : rows) pts.push_back({ds.instances[r].values[j], ds.instances[r].label, r});
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.v < b.v || (a.v == b.v && a.row < b.row); });

    std::vector<double> total(C, 0.0), left(C, 0.0);
    for (const auto& p : pts) total[static_cast<std::size_t>(p.label)] += 1.0;
    const double n = static_cast<double>(pts.size());
    const double h = entropy_of(total);

    Split best;
    double best_cond = 0.0;
    std::size_t count = 0, best_pos = 0;
    std::vector<double> right(C);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        left[static_cast<std::size_t>(pts[i].label)] += 1.0;
        if (pts[i].v == pts[i + 1].v) continue;
        const double nl = static_cast<double>(i + 1), nr = n - nl;
        if (nl < min_side || nr < min_side) continue;
        ++count;
        for (std::size_t c = 0; c < C; ++c) right[c] = total[c] - left[c];
        const double cond = (nl * entropy_of(left) + nr * entropy_of(right)) / n;
        if (!best.valid || cond < best_cond - kEntropyTolerance) {
            best.valid = true;
            best_cond = cond;
            best_pos = i;
        }
    }
    if (candidates) *candidates = count;
    if (!best.valid) return best;
    best.attribute = static_cast<int>(j);
    best.threshold = split_point(pts[best_pos].v, pts[best_pos + 1].v);
    best.gain = h - best_cond;
    best.branches.resize(2);
    for (std::size_t i = 0; i < pts.size(); ++i) best.branches[i <= best_pos ? 0 : 1].push_back(pts[i].row);
    for (auto& b : best.branches) std::sort(b.begin(), b.end());
    const double pl = static_cast<double>(best_pos + 1) / n;
    best.split_info = entropy_of(std::vector<double>{pl, 1.0 - pl});
    return best;
}

Split nominal_split(const Dataset& ds, const std::vector<std::size_t>& rows, std::size_t j) {
    const std::size_t C = ds.class_names.size();
    const std::size_t V = ds.attributes[j].nominal_values.size();
    Split s;
    s.attribute = static_cast<int>(j);
    s.branches.resize(V);
    for (auto r : rows) s.branches[static_cast<std::size_t>(ds.instances[r].values[j])].push_back(r);
    std::vector<double> total(C, 0.0), sizes;
    double cond = 0.0;
    const double n = static_cast<double>(rows.size());
    for (const auto& b : s.branches) {
        if (b.empty()) continue;
        auto counts = detail::class_counts(ds, b);
        for (std::size_t c = 0; c < C; ++c) total[c] += counts[c];
        cond += static_cast<double>(b.size()) / n * entropy_of(counts);
        sizes.push_back(static_cast<double>(b.size()));
    }
    s.gain = entropy_of(total) - cond;
    s.split_info = entropy_of(sizes);
    s.valid = sizes.size() >= 2;
    return s;
}

// ---------------------------------------------------------------- C4.5

// z with P(Z > z) = cf, by bisection on erfc.
double normal_quantile_upper(double cf) {
    double lo = 0.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = (lo + hi) / 2.0;
        if (0.5 * std::erfc(mid / std::sqrt(2.0)) > cf) lo = mid;
        else hi = mid;
    }
    return (lo + hi) / 2.0;
}

// Pessimistic extra errors for a leaf with N instances and e observed errors:
// the upper confidence limit on the error count, minus e.
double add_errs(double N, double e, double cf, double z) {
    if (N <= 0.0) return 0.0;
    if (e < 1.0) {
        const double base = N * (1.0 - std::pow(cf, 1.0 / N));
        if (e == 0.0) return base;
        return base + e * (add_errs(N, 1.0, cf, z) - base);
    }
    if (e + 0.5 >= N) return std::max(N - e, 0.0);
    const double f = (e + 0.5) / N;
    const double r = (f + z * z / (2.0 * N) + z * std::sqrt(f / N - f * f / N + z * z / (4.0 * N * N))) / (1.0 + z * z / N);
    return r * N - e;
}

class C45Builder {
public:
    C45Builder(const Dataset& ds, const TreeParams& p) : ds_(ds), p_(p) {
        z_ = p.confidence == 0.25 ? 0.6744897501960817 : normal_quantile_upper(p.confidence);
    }

    Tree build() {
        std::vector<std::size_t> all(ds_.size());
        std::iota(all.begin(), all.end(), 0);
        grow(all, {});
        if (p_.prune) {
            collapse(0);
            prune(0);
        }
        return compact();
    }

private:
    int grow(const std::vector<std::size_t>& rows, const std::vector<double>& parent_dist) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        auto counts = detail::class_counts(ds_, rows);
        tree_.nodes[static_cast<std::size_t>(id)].counts = counts;
        tree_.nodes[static_cast<std::size_t>(id)].dist = rows.empty() ? parent_dist : normalized(counts);
        const double n = static_cast<double>(rows.size());
        if (rows.empty() || is_pure(counts) || n < 2.0 * p_.min_leaf) return id;

        Split s = choose(rows);
        if (!s.valid) return id;
        const auto dist = tree_.nodes[static_cast<std::size_t>(id)].dist;
        std::vector<int> kids;
        for (const auto& b : s.branches) kids.push_back(grow(b, dist));
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.attribute = s.attribute;
        node.threshold = s.threshold;
        node.children = std::move(kids);
        return id;
    }

    Split choose(const std::vector<std::size_t>& rows) {
        const double n = static_cast<double>(rows.size());
        const double C = static_cast<double>(ds_.class_names.size());
        // Numeric cuts need this many rows on each side.
        const double min_split = std::clamp(0.1 * n / C, static_cast<double>(p_.min_leaf), 25.0);
        std::vector<Split> splits;
        for (std::size_t j = 0; j < ds_.num_attributes(); ++j) {
            Split s;
            if (ds_.attributes[j].kind == AttrKind::numeric) {
                std::size_t candidates = 0;
                s = numeric_split(ds_, rows, j, min_split, &candidates);
                if (s.valid && candidates > 0) s.gain -= std::log2(static_cast<double>(candidates)) / n;
            } else {
                s = nominal_split(ds_, rows, j);
                if (s.valid) s.valid = nominal_ok(s);
            }
            if (s.valid) splits.push_back(std::move(s));
        }
        if (splits.empty()) return {};
        double avg = 0.0;
        for (const auto& s : splits) avg += s.gain;
        avg /= static_cast<double>(splits.size());
        Split* best = nullptr;
        double best_ratio = 0.0;
        for (auto& s : splits) {
            if (s.gain <= kEntropyTolerance || s.gain < avg - 1e-3 || s.split_info <= 0.0) continue;
            const double ratio = s.gain / s.split_info;
            if (best == nullptr || ratio > best_ratio + kEntropyTolerance) {
                best = &s;
                best_ratio = ratio;
            }
        }
        return best ? std::move(*best) : Split{};
    }

    // At least two well-populated branches, and no impure branch below the
    // leaf minimum (it could never be split further).
    bool nominal_ok(const Split& s) const {
        int big = 0;
        for (const auto& b : s.branches) {
            if (b.size() >= static_cast<std::size_t>(p_.min_leaf)) ++big;
            else if (!b.empty() && !is_pure(detail::class_counts(ds_, b))) return false;
        }
        return big >= 2;
    }

    static double errors(const std::vector<double>& counts) {
        const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
        return total - (counts.empty() ? 0.0 : *std::max_element(counts.begin(), counts.end()));
    }

    double training_errors(int id) const {
        const auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        if (node.attribute < 0) return errors(node.counts);
        double e = 0.0;
        for (int c : node.children) e += training_errors(c);
        return e;
    }

    void make_leaf(int id) {
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.attribute = -1;
        node.children.clear();
    }

    void collapse(int id) {
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        if (node.attribute < 0) return;
        if (training_errors(id) >= errors(node.counts) - 1e-3) {
            make_leaf(id);
            return;
        }
        for (int c : std::vector<int>(node.children)) collapse(c);
    }

    double leaf_estimate(const std::vector<double>& counts) const {
        const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
        const double e = errors(counts);
        return e + add_errs(n, e, p_.confidence, z_);
    }

    double subtree_estimate(int id) const {
        const auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        if (node.attribute < 0) return leaf_estimate(node.counts);
        double s = 0.0;
        for (int c : node.children) s += subtree_estimate(c);
        return s;
    }

    void prune(int id) {
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        if (node.attribute < 0) return;
        for (int c : std::vector<int>(node.children)) prune(c);
        if (leaf_estimate(tree_.nodes[static_cast<std::size_t>(id)].counts) <= subtree_estimate(id) + 0.1) make_leaf(id);
    }

    // Drops nodes orphaned by pruning; keeps parents before children.
    Tree compact() const {
        Tree out;
        std::vector<int> map(tree_.nodes.size(), -1);
        std::vector<int> queue{0};
        for (std::size_t q = 0; q < queue.size(); ++q) {
            const int old = queue[q];
            map[static_cast<std::size_t>(old)] = static_cast<int>(out.nodes.size());
            out.nodes.push_back(tree_.nodes[static_cast<std::size_t>(old)]);
            for (int c : tree_.nodes[static_cast<std::size_t>(old)].children) queue.push_back(c);
        }
        for (auto& n : out.nodes) {
            for (auto& c : n.children) c = map[static_cast<std::size_t>(c)];
        }
        return out;
    }

    const Dataset& ds_;
    TreeParams p_;
    double z_;
    Tree tree_;
};

// ---------------------------------------------------------------- random tree

class RandomTreeBuilder {
public:
    RandomTreeBuilder(const Dataset& ds, std::size_t m, int max_depth, Rng& rng)
        : ds_(ds), m_(m), max_depth_(max_depth), rng_(rng) {}

    Tree build(const std::vector<std::size_t>& rows) {
        grow(rows, {}, 0);
        return std::move(tree_);
    }

private:
    int grow(const std::vector<std::size_t>& rows, const std::vector<double>& parent_dist, int depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        auto counts = detail::class_counts(ds_, rows);
        tree_.nodes[static_cast<std::size_t>(id)].counts = counts;
        tree_.nodes[static_cast<std::size_t>(id)].dist = rows.empty() ? parent_dist : normalized(counts);
        if (rows.size() < 2 || is_pure(counts) || (max_depth_ > 0 && depth >= max_depth_)) return id;

        // Visit attributes in random order; keep going past m until some
        // candidate has positive gain.
        std::vector<std::size_t> order(ds_.num_attributes());
        std::iota(order.begin(), order.end(), 0);
        rng_.shuffle(order.begin(), order.end());
        Split best;
        std::size_t tried = 0;
        for (auto j : order) {
            if (tried >= m_ && best.valid && best.gain > kEntropyTolerance) break;
            ++tried;
            Split s = ds_.attributes[j].kind == AttrKind::numeric ? numeric_split(ds_, rows, j, 1.0, nullptr)
                                                                  : nominal_split(ds_, rows, j);
            if (s.valid && (!best.valid || s.gain > best.gain + kEntropyTolerance)) best = std::move(s);
        }
        if (!best.valid || best.gain <= kEntropyTolerance) return id;
        const auto dist = tree_.nodes[static_cast<std::size_t>(id)].dist;
        std::vector<int> kids;
        for (const auto& b : best.branches) kids.push_back(grow(b, dist, depth + 1));
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.attribute = best.attribute;
        node.threshold = best.threshold;
        node.children = std::move(kids);
        return id;
    }

    const Dataset& ds_;
    std::size_t m_;
    int max_depth_;
    Rng& rng_;
    Tree tree_;
};

int child_for(const TreeNode& node, const std::vector<AttributeSpec>& attrs, const std::vector<double>& x) {
    const auto j = static_cast<std::size_t>(node.attribute);
    const double v = x[j];
    if (attrs[j].kind == AttrKind::numeric) return node.children[v <= node.threshold ? 0 : 1];
    if (v < 0.0 || v >= static_cast<double>(node.children.size()) || v != std::floor(v)) return -1;
    return node.children[static_cast<std::size_t>(v)];
}

}  // namespace

namespace detail {

std::vector<double> tree_dist(const Tree& t, const std::vector<AttributeSpec>& attrs, const std::vector<double>& x) {
    std::size_t id = 0;
    while (t.nodes[id].attribute >= 0) {
        const int next = child_for(t.nodes[id], attrs, x);
        if (next < 0) break;  // value outside the training domain: stop here
        id = static_cast<std::size_t>(next);
    }
    const auto& node = t.nodes[id];
    return node.attribute < 0 ? node.dist : normalized(node.counts);
}

std::vector<double> forest_dist(const ForestModel& m, const std::vector<AttributeSpec>& attrs, std::size_t classes,
                                const std::vector<double>& x) {
    std::vector<double> votes(classes, 0.0);
    for (const auto& t : m.trees) votes[static_cast<std::size_t>(argmax(tree_dist(t, attrs, x)))] += 1.0;
    for (auto& v : votes) v /= static_cast<double>(m.trees.size());
    return votes;
}

}  // namespace detail

TrainedModel train_tree(const Dataset& ds, const LearnerConfig& cfg) {
    detail::require_trainable(ds, cfg);
    auto model = detail::make_model(Algorithm::Tree, ds, cfg);
    model.body = C45Builder(ds, cfg.tree).build();
    return model;
}

TrainedModel train_random_forest(const Dataset& ds, const LearnerConfig& cfg) {
    detail::require_trainable(ds, cfg);
    auto model = detail::make_model(Algorithm::RF, ds, cfg);
    const std::size_t k = ds.num_attributes();
    std::size_t m = cfg.rf.features > 0 ? static_cast<std::size_t>(cfg.rf.features)
                                        : (k == 0 ? 0 : static_cast<std::size_t>(std::floor(std::log2(static_cast<double>(k)))) + 1);
    m = std::min(m, k);
    ForestModel forest;
    forest.trees.resize(static_cast<std::size_t>(cfg.rf.trees));
    const std::size_t n = ds.size();
    parallel_for(forest.trees.size(), cfg.rf.threads, [&](std::size_t t) {
        Rng rng(derive_seed(cfg.seed, t));
        std::vector<std::size_t> rows(n);
        for (auto& r : rows) r = rng.below(n);
        std::sort(rows.begin(), rows.end());
        forest.trees[t] = RandomTreeBuilder(ds, m, cfg.rf.max_depth, rng).build(rows);
    });
    model.body = std::move(forest);
    return model;
}

}  // namespace agro::classify
