// RIPPER rule induction in the style of the JRip learner: per-class
// sequential covering with grow/prune splits, description-length stopping and
// an optimization pass that weighs replacement and revision of each rule.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "agro/rng.hpp"
#include "classify_internal.hpp"

namespace agro::classify {

using dataset::AttrKind;
using dataset::Dataset;

namespace {

using Rows = std::vector<std::size_t>;
using Conds = std::vector<Condition>;

constexpr double kMaxDlSurplus = 64.0;

double subset_dl(double t, double k, double p) {
    p = std::min(p, 1.0);
    double rt = p > 0.0 ? -k * std::log2(p) : 0.0;
    if (t - k > 0.0) rt -= (t - k) * std::log2(1.0 - p);
    return rt;
}

// Same coverage, fewer conditions: "a >= 0.6 AND a >= 0.8" becomes "a >= 0.8".
Conds simplify(const Conds& conds) {
    Conds out;
    for (const auto& c : conds) {
        auto same = std::find_if(out.begin(), out.end(), [&](const Condition& o) { return o.attribute == c.attribute && o.op == c.op; });
        if (same == out.end() || c.op == Condition::Op::eq) {
            out.push_back(c);
            continue;
        }
        same->value = c.op == Condition::Op::ge ? std::max(same->value, c.value) : std::min(same->value, c.value);
    }
    return out;
}

bool covers(const Conds& conds, const std::vector<double>& x) {
    return std::all_of(conds.begin(), conds.end(), [&](const Condition& c) { return c.holds(x); });
}

// One class against the rest, on the data left when the class's turn comes.
class OneClass {
public:
    OneClass(const Dataset& ds, const Rows& data, int cls, const RipperParams& p, Rng& rng)
        : ds_(ds), data_(data), cls_(cls), p_(p), rng_(rng) {
        double pos = 0.0;
        for (auto r : data_) pos += positive(r) ? 1.0 : 0.0;
        exp_fp_over_err_ = data_.empty() ? 0.0 : pos / static_cast<double>(data_.size());
        for (std::size_t j = 0; j < ds_.num_attributes(); ++j) {
            if (ds_.attributes[j].kind == AttrKind::nominal) {
                total_conds_ += static_cast<double>(ds_.attributes[j].nominal_values.size());
            } else {
                std::vector<double> v;
                for (auto r : data_) v.push_back(value(r, j));
                std::sort(v.begin(), v.end());
                total_conds_ += 2.0 * static_cast<double>(std::unique(v.begin(), v.end()) - v.begin());
            }
        }
    }

    std::vector<Conds> learn() {
        std::vector<Conds> rules;
        double min_dl = total_dl(rules);
        cover(rules, min_dl);
        reduce_dl(rules);
        for (int k = 0; k < p_.optimizations; ++k) {
            optimize(rules);
            min_dl = total_dl(rules);
            cover(rules, min_dl);
            reduce_dl(rules);
        }
        return rules;
    }

private:
    bool positive(std::size_t r) const { return ds_.instances[r].label == cls_; }
    double value(std::size_t r, std::size_t j) const { return ds_.instances[r].values[j]; }
    const std::vector<double>& row(std::size_t r) const { return ds_.instances[r].values; }

    double theory_dl(const Conds& c) const {
        const double k = static_cast<double>(c.size());
        if (k == 0.0) return 0.0;
        double tdl = std::log2(k);
        if (k > 1.0) tdl += 2.0 * std::log2(tdl);
        tdl += subset_dl(total_conds_, k, k / total_conds_);
        return 0.5 * tdl;
    }

    double data_dl(double cover, double uncover, double fp, double fn) const {
        const double total_bits = std::log2(cover + uncover + 1.0);
        double cover_bits, uncover_bits;
        if (cover > uncover) {
            const double exp_err = exp_fp_over_err_ * (fp + fn);
            cover_bits = subset_dl(cover, fp, exp_err / cover);
            uncover_bits = uncover > 0.0 ? subset_dl(uncover, fn, fn / uncover) : 0.0;
        } else {
            const double exp_err = (1.0 - exp_fp_over_err_) * (fp + fn);
            cover_bits = cover > 0.0 ? subset_dl(cover, fp, fp / cover) : 0.0;
            uncover_bits = subset_dl(uncover, fn, exp_err / uncover);
        }
        return total_bits + cover_bits + uncover_bits;
    }

    double total_dl(const std::vector<Conds>& rules) const {
        double cover = 0, uncover = 0, fp = 0, fn = 0;
        for (auto r : data_) {
            const bool hit = std::any_of(rules.begin(), rules.end(), [&](const Conds& c) { return covers(c, row(r)); });
            const bool pos = positive(r);
            if (hit) {
                cover += 1;
                if (!pos) fp += 1;
            } else {
                uncover += 1;
                if (pos) fn += 1;
            }
        }
        double dl = data_dl(cover, uncover, fp, fn);
        for (const auto& c : rules) dl += theory_dl(c);
        return dl;
    }

    Rows uncovered_by(const std::vector<Conds>& rules, std::size_t upto) const {
        Rows out;
        for (auto r : data_) {
            bool hit = false;
            for (std::size_t i = 0; i < upto && !hit; ++i) hit = covers(rules[i], row(r));
            if (!hit) out.push_back(r);
        }
        return out;
    }

    // Stratified random split; the last of `folds` parts is held out for pruning.
    std::pair<Rows, Rows> split(const Rows& rows) {
        Rows pos, neg;
        Rows shuffled = rows;
        rng_.shuffle(shuffled.begin(), shuffled.end());
        for (auto r : shuffled) (positive(r) ? pos : neg).push_back(r);
        Rows grow, prune;
        for (const Rows* part : {&pos, &neg}) {
            const std::size_t held = part->size() / static_cast<std::size_t>(p_.folds);
            grow.insert(grow.end(), part->begin(), part->end() - static_cast<std::ptrdiff_t>(held));
            prune.insert(prune.end(), part->end() - static_cast<std::ptrdiff_t>(held), part->end());
        }
        std::sort(grow.begin(), grow.end());
        std::sort(prune.begin(), prune.end());
        return {grow, prune};
    }

    // Adds conditions by FOIL gain until the covered grow rows are pure or no
    // condition helps.
    Conds grow(const Rows& rows, Conds conds) const {
        Rows covered;
        for (auto r : rows) {
            if (covers(conds, row(r))) covered.push_back(r);
        }
        std::vector<bool> used(ds_.num_attributes(), false);
        for (const auto& c : conds) {
            if (c.op == Condition::Op::eq) used[static_cast<std::size_t>(c.attribute)] = true;
        }
        std::vector<std::pair<double, bool>> pts;
        for (;;) {
            double p = 0.0;
            for (auto r : covered) p += positive(r) ? 1.0 : 0.0;
            const double t = static_cast<double>(covered.size());
            if (p == t || p == 0.0) break;
            const double base = std::log2((p + 1.0) / (t + 1.0));
            auto gain = [&](double tp, double tc) { return tp * (std::log2((tp + 1.0) / (tc + 1.0)) - base); };

            double best_gain = 0.0;
            Condition best;
            bool found = false;
            auto offer = [&](double tp, double tc, Condition c) {
                if (tc < p_.min_cover || tc <= 0.0) return;
                const double g = gain(tp, tc);
                if (g > best_gain + 1e-12) {
                    best_gain = g;
                    best = c;
                    found = true;
                }
            };
            for (std::size_t j = 0; j < ds_.num_attributes(); ++j) {
                const int attr = static_cast<int>(j);
                if (ds_.attributes[j].kind == AttrKind::nominal) {
                    if (used[j]) continue;
                    const std::size_t V = ds_.attributes[j].nominal_values.size();
                    std::vector<double> tp(V, 0.0), tc(V, 0.0);
                    for (auto r : covered) {
                        const auto v = static_cast<std::size_t>(value(r, j));
                        tc[v] += 1.0;
                        if (positive(r)) tp[v] += 1.0;
                    }
                    for (std::size_t v = 0; v < V; ++v) offer(tp[v], tc[v], {attr, Condition::Op::eq, static_cast<double>(v)});
                    continue;
                }
                pts.clear();
                for (auto r : covered) pts.emplace_back(value(r, j), positive(r));
                std::sort(pts.begin(), pts.end());
                const std::size_t n = pts.size();
                // "<= x" for each distinct x, ascending.
                double cp = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    cp += pts[i].second ? 1.0 : 0.0;
                    if (i + 1 < n && pts[i + 1].first == pts[i].first) continue;
                    if (i + 1 == n) break;  // covers everything
                    offer(cp, static_cast<double>(i + 1), {attr, Condition::Op::le, pts[i].first});
                }
                // ">= x" for each distinct x above the minimum, ascending.
                cp = 0.0;
                std::vector<double> suffix_pos(n + 1, 0.0);
                for (std::size_t i = n; i-- > 0;) suffix_pos[i] = suffix_pos[i + 1] + (pts[i].second ? 1.0 : 0.0);
                for (std::size_t i = 1; i < n; ++i) {
                    if (pts[i].first == pts[i - 1].first) continue;
                    offer(suffix_pos[i], static_cast<double>(n - i), {attr, Condition::Op::ge, pts[i].first});
                }
            }
            if (!found) break;
            conds.push_back(best);
            if (best.op == Condition::Op::eq) used[static_cast<std::size_t>(best.attribute)] = true;
            Rows next;
            for (auto r : covered) {
                if (best.holds(row(r))) next.push_back(r);
            }
            covered = std::move(next);
        }
        return conds;
    }

    // Keeps the prefix with the best (p - n) / (p + n) on the prune rows; the
    // shortest prefix wins ties.
    Conds prune(const Conds& conds, const Rows& rows) const {
        if (conds.size() <= 1) return conds;
        std::vector<bool> alive(rows.size(), true);
        double best_worth = -std::numeric_limits<double>::infinity();
        std::size_t best_len = conds.size();
        for (std::size_t L = 1; L <= conds.size(); ++L) {
            double p = 0.0, n = 0.0;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (!alive[i]) continue;
                if (!conds[L - 1].holds(row(rows[i]))) {
                    alive[i] = false;
                    continue;
                }
                (positive(rows[i]) ? p : n) += 1.0;
            }
            const double worth = p + n > 0.0 ? (p - n) / (p + n) : 0.0;
            if (worth > best_worth) {
                best_worth = worth;
                best_len = L;
            }
        }
        return Conds(conds.begin(), conds.begin() + static_cast<std::ptrdiff_t>(best_len));
    }

    void cover(std::vector<Conds>& rules, double min_dl) {
        Rows remaining = uncovered_by(rules, rules.size());
        for (;;) {
            const auto pos = std::count_if(remaining.begin(), remaining.end(), [&](std::size_t r) { return positive(r); });
            if (pos == 0) break;
            auto [grow_rows, prune_rows] = split(remaining);
            Conds rule = prune(grow(grow_rows, {}), prune_rows);
            if (rule.empty()) break;

            double cov = 0.0, fp = 0.0, tp = 0.0;
            for (auto r : remaining) {
                if (!covers(rule, row(r))) continue;
                cov += 1.0;
                (positive(r) ? tp : fp) += 1.0;
            }
            rules.push_back(rule);
            const double dl = total_dl(rules);
            const bool stop = dl > min_dl + kMaxDlSurplus || tp <= 0.0 || (p_.check_error_rate && fp / cov >= 0.5);
            if (stop) {
                rules.pop_back();
                break;
            }
            min_dl = std::min(min_dl, dl);
            Rows next;
            for (auto r : remaining) {
                if (!covers(rule, row(r))) next.push_back(r);
            }
            remaining = std::move(next);
        }
    }

    // Deletes rules, last first, whose removal does not lengthen the description.
    void reduce_dl(std::vector<Conds>& rules) const {
        for (std::size_t k = rules.size(); k-- > 0;) {
            const double with = total_dl(rules);
            auto without = rules;
            without.erase(without.begin() + static_cast<std::ptrdiff_t>(k));
            if (total_dl(without) <= with) rules = std::move(without);
        }
    }

    void optimize(std::vector<Conds>& rules) {
        for (std::size_t i = 0; i < rules.size(); ++i) {
            const Rows before = uncovered_by(rules, i);
            if (std::none_of(before.begin(), before.end(), [&](std::size_t r) { return positive(r); })) continue;
            auto [grow_rows, prune_rows] = split(before);
            const Conds replacement = prune(grow(grow_rows, {}), prune_rows);
            const Conds revision = prune(grow(grow_rows, rules[i]), prune_rows);

            const Conds original = rules[i];
            double best_dl = total_dl(rules);
            Conds best = original;
            for (const Conds* cand : {&revision, &replacement}) {
                if (cand->empty() || *cand == original) continue;
                rules[i] = *cand;
                const double dl = total_dl(rules);
                if (dl < best_dl) {
                    best_dl = dl;
                    best = *cand;
                }
            }
            rules[i] = best;
        }
    }

    const Dataset& ds_;
    Rows data_;
    int cls_;
    RipperParams p_;
    Rng& rng_;
    double exp_fp_over_err_ = 0.0;
    double total_conds_ = 0.0;
};

}  // namespace

TrainedModel train_ripper(const Dataset& ds, const LearnerConfig& cfg) {
    detail::require_trainable(ds, cfg);
    auto model = detail::make_model(Algorithm::Ripper, ds, cfg);
    const auto counts = ds.class_counts();
    std::vector<int> order;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] > 0) order.push_back(static_cast<int>(c));
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return counts[static_cast<std::size_t>(a)] < counts[static_cast<std::size_t>(b)]; });

    Rng rng(cfg.seed);
    RuleSet rs;
    Rows data(ds.size());
    std::iota(data.begin(), data.end(), 0);
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const int cls = order[k];
        const auto rules = OneClass(ds, data, cls, cfg.ripper, rng).learn();
        for (const auto& conds : rules) rs.rules.push_back({simplify(conds), cls, 0, 0});
        Rows next;
        for (auto r : data) {
            if (std::none_of(rules.begin(), rules.end(), [&](const Conds& c) { return covers(c, ds.instances[r].values); })) {
                next.push_back(r);
            }
        }
        data = std::move(next);
    }

    // Counts by first match over the full training data; the default class is
    // the majority of what no rule claims.
    std::vector<double> leftover(counts.size(), 0.0);
    for (const auto& inst : ds.instances) {
        const int m = rs.first_match(inst.values);
        if (m < 0) {
            leftover[static_cast<std::size_t>(inst.label)] += 1.0;
            continue;
        }
        auto& rule = rs.rules[static_cast<std::size_t>(m)];
        ++rule.coverage;
        if (rule.cls == inst.label) ++rule.correct;
    }
    const double uncovered = std::accumulate(leftover.begin(), leftover.end(), 0.0);
    rs.default_class = uncovered > 0.0 ? detail::argmax(leftover) : (order.empty() ? 0 : order.back());
    rs.default_coverage = static_cast<std::size_t>(uncovered);
    rs.default_correct = static_cast<std::size_t>(leftover[static_cast<std::size_t>(rs.default_class)]);
    model.body = std::move(rs);
    return model;
}

}  // namespace agro::classify
