// AdaBoost over decision stumps. Binary data boosts one learner; three or
// more present classes boost one learner per class against the rest.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "agro/numeric.hpp"
#include "classify_internal.hpp"

namespace agro::classify {

using dataset::AttrKind;
using dataset::Dataset;

int Stump::vote(const std::vector<double>& x) const {
    if (attribute < 0) return if_true;
    const double v = x[static_cast<std::size_t>(attribute)];
    const bool t = nominal ? v == threshold : v <= threshold;
    return t ? if_true : if_false;
}

namespace {

constexpr double kEpsMin = 1e-10;

struct Labeled {
    const Dataset& ds;
    std::vector<int> y;  // +1 / -1
};

double weighted_error(const Stump& s, const Labeled& d, const std::vector<double>& w) {
    double err = 0.0, total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        total += w[i];
        if (s.vote(d.ds.instances[i].values) != d.y[i]) err += w[i];
    }
    return total > 0.0 ? err / total : 0.0;
}

// Lowest weighted error stump; ties go to the earliest attribute, then the
// smallest threshold, then the polarity voting +1 on the true side.
Stump best_stump(const Labeled& d, const std::vector<double>& w) {
    const Dataset& ds = d.ds;
    const std::size_t n = ds.size();
    double wpos = 0.0, wneg = 0.0;
    for (std::size_t i = 0; i < n; ++i) (d.y[i] > 0 ? wpos : wneg) += w[i];

    Stump best;
    best.if_true = wpos >= wneg ? 1 : -1;
    best.if_false = best.if_true;
    double best_err = std::min(wpos, wneg);
    bool have_split = false;

    auto consider = [&](int attr, bool nominal, double thr, double pos_true, double neg_true) {
        // true side votes +1: errors are negatives on the true side plus positives on the false side
        const double e1 = neg_true + (wpos - pos_true);
        const double e2 = pos_true + (wneg - neg_true);
        const double e = std::min(e1, e2);
        if (!have_split || e < best_err - 1e-15) {
            have_split = true;
            best_err = e;
            best.attribute = attr;
            best.nominal = nominal;
            best.threshold = thr;
            best.if_true = e1 <= e2 ? 1 : -1;
            best.if_false = -best.if_true;
        }
    };

    std::vector<std::size_t> order(n);
    for (std::size_t j = 0; j < ds.num_attributes(); ++j) {
        const int attr = static_cast<int>(j);
        if (ds.attributes[j].kind == AttrKind::nominal) {
            const std::size_t V = ds.attributes[j].nominal_values.size();
            std::vector<double> p(V, 0.0), q(V, 0.0);
            std::vector<bool> seen(V, false);
            for (std::size_t i = 0; i < n; ++i) {
                const auto v = static_cast<std::size_t>(ds.instances[i].values[j]);
                seen[v] = true;
                (d.y[i] > 0 ? p[v] : q[v]) += w[i];
            }
            if (std::count(seen.begin(), seen.end(), true) < 2) continue;
            for (std::size_t v = 0; v < V; ++v) {
                if (seen[v]) consider(attr, true, static_cast<double>(v), p[v], q[v]);
            }
            continue;
        }
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double va = ds.instances[a].values[j], vb = ds.instances[b].values[j];
            return va < vb || (va == vb && a < b);
        });
        double pl = 0.0, nl = 0.0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const std::size_t i = order[k];
            (d.y[i] > 0 ? pl : nl) += w[i];
            const double v = ds.instances[i].values[j], next = ds.instances[order[k + 1]].values[j];
            if (v == next) continue;
            consider(attr, false, split_point(v, next), pl, nl);
        }
    }
    return best;
}

BoostLearner boost(const Labeled& d, int rounds) {
    const std::size_t n = d.ds.size();
    BoostLearner learner;
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    learner.prior = static_cast<double>(std::count(d.y.begin(), d.y.end(), 1)) / static_cast<double>(n);
    for (int r = 0; r < rounds; ++r) {
        const Stump s = best_stump(d, w);
        const double eps = weighted_error(s, d, w);
        if (eps >= 0.5) break;
        const double ec = std::clamp(eps, kEpsMin, 1.0 - kEpsMin);
        const double alpha = 0.5 * std::log((1.0 - ec) / ec);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] *= std::exp(-alpha * d.y[i] * s.vote(d.ds.instances[i].values));
            total += w[i];
        }
        for (auto& v : w) v /= total;
        learner.rounds.push_back({s, alpha, eps, weighted_error(s, d, w)});
        if (eps < kEpsMin) break;
    }
    return learner;
}

double positive_probability(const BoostLearner& l, const std::vector<double>& x) {
    if (l.rounds.empty()) return l.prior;
    double f = 0.0;
    for (const auto& r : l.rounds) f += r.alpha * r.stump.vote(x);
    return 1.0 / (1.0 + std::exp(-2.0 * f));
}

}  // namespace

double stump_error(const Stump& s, const Dataset& ds, const std::vector<double>& weights, int positive) {
    if (weights.size() != ds.size()) throw UsageError("one weight per instance required");
    Labeled d{ds, {}};
    for (const auto& inst : ds.instances) d.y.push_back(inst.label == positive ? 1 : -1);
    return weighted_error(s, d, weights);
}

namespace detail {

std::vector<double> boost_dist(const BoostModel& m, std::size_t classes, const std::vector<double>& x) {
    std::vector<double> d(classes, 0.0);
    if (m.learners.size() == 1) {
        const auto& l = m.learners[0];
        const double p = positive_probability(l, x);
        d[static_cast<std::size_t>(l.positive)] += p;
        if (l.negative >= 0) d[static_cast<std::size_t>(l.negative)] += 1.0 - p;
        else d[static_cast<std::size_t>(l.positive)] = 1.0;
        return d;
    }
    double total = 0.0;
    for (const auto& l : m.learners) total += d[static_cast<std::size_t>(l.positive)] = positive_probability(l, x);
    for (const auto& l : m.learners) {
        auto& v = d[static_cast<std::size_t>(l.positive)];
        v = total > 0.0 ? v / total : 1.0 / static_cast<double>(m.learners.size());
    }
    return d;
}

}  // namespace detail

TrainedModel train_adaboost(const Dataset& ds, const LearnerConfig& cfg) {
    detail::require_trainable(ds, cfg);
    auto model = detail::make_model(Algorithm::AdaBoost, ds, cfg);
    const auto counts = ds.class_counts();
    std::vector<int> present;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] > 0) present.push_back(static_cast<int>(c));
    }
    BoostModel bm;
    auto labeled = [&](int positive) {
        Labeled d{ds, {}};
        for (const auto& inst : ds.instances) d.y.push_back(inst.label == positive ? 1 : -1);
        return d;
    };
    if (present.size() == 1) {
        BoostLearner l;
        l.positive = present[0];
        l.prior = 1.0;
        bm.learners.push_back(l);
    } else if (present.size() == 2) {
        auto l = boost(labeled(present[1]), cfg.boost.rounds);
        l.positive = present[1];
        l.negative = present[0];
        bm.learners.push_back(std::move(l));
    } else {
        for (int c : present) {
            auto l = boost(labeled(c), cfg.boost.rounds);
            l.positive = c;
            bm.learners.push_back(std::move(l));
        }
    }
    model.body = std::move(bm);
    return model;
}

}  // namespace agro::classify
