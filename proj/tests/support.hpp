#pragma once

// Fixtures and brute-force oracles shared by the unit tests and the acceptance
// runner. The oracles recompute quantities straight from their definitions
// with ordered maps and full enumeration, sharing no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "agro/dataset.hpp"
#include "agro/indicators.hpp"
#include "agro/qschema.hpp"

namespace support {

using agro::dataset::AttrKind;
using agro::dataset::Dataset;
using agro::dataset::Record;

inline std::vector<Record> synthetic_records(std::size_t n, std::uint64_t seed, bool echo = true) {
    auto cfg = agro::dataset::default_synthetic_config(n, seed);
    if (!echo) cfg.echoes.clear();
    std::vector<Record> out;
    for (auto& q : agro::dataset::generate_synthetic(cfg)) out.push_back(agro::dataset::score_record(std::move(q)));
    return out;
}

inline agro::qschema::Questionnaire sample_questionnaire(std::uint64_t seed = 3) {
    return agro::dataset::generate_synthetic(agro::dataset::default_synthetic_config(1, seed)).at(0);
}

/// Numeric attributes a0, a1, ...; classes named by `classes`.
inline Dataset numeric_ds(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
                          std::vector<std::string> classes = {"A", "B"}) {
    Dataset ds;
    ds.name = "fixture";
    ds.class_names = std::move(classes);
    const std::size_t k = rows.empty() ? 0 : rows[0].size();
    for (std::size_t j = 0; j < k; ++j) ds.attributes.push_back({"a" + std::to_string(j), AttrKind::numeric, {}});
    for (std::size_t i = 0; i < rows.size(); ++i) ds.instances.push_back({rows[i], labels[i], "r" + std::to_string(i)});
    return ds;
}

/// Nominal attributes a0, a1, ... with values "v0".."v{V-1}".
inline Dataset nominal_ds(const std::vector<std::vector<int>>& rows, const std::vector<int>& values_per_attr,
                          const std::vector<int>& labels, std::vector<std::string> classes = {"A", "B"}) {
    Dataset ds;
    ds.name = "fixture";
    ds.class_names = std::move(classes);
    for (std::size_t j = 0; j < values_per_attr.size(); ++j) {
        agro::dataset::AttributeSpec a{"a" + std::to_string(j), AttrKind::nominal, {}};
        for (int v = 0; v < values_per_attr[j]; ++v) a.nominal_values.push_back("v" + std::to_string(v));
        ds.attributes.push_back(a);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<double> x(rows[i].begin(), rows[i].end());
        ds.instances.push_back({x, labels[i], "r" + std::to_string(i)});
    }
    return ds;
}

/// Random nominal dataset; the first `informative` attributes copy the class
/// with probability `fidelity`, the rest are uniform noise.
inline Dataset random_nominal_ds(std::mt19937_64& rng, int n, int attrs, int informative, int classes, double fidelity) {
    std::uniform_int_distribution<int> cls(0, classes - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<int> values(static_cast<std::size_t>(attrs));
    for (auto& v : values) v = std::uniform_int_distribution<int>(2, 4)(rng);
    std::vector<std::vector<int>> rows;
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) {
        const int y = cls(rng);
        std::vector<int> row;
        for (int j = 0; j < attrs; ++j) {
            const int V = values[static_cast<std::size_t>(j)];
            if (j < informative && u(rng) < fidelity) row.push_back(y % V);
            else row.push_back(std::uniform_int_distribution<int>(0, V - 1)(rng));
        }
        rows.push_back(row);
        labels.push_back(y);
    }
    std::vector<std::string> names;
    for (int c = 0; c < classes; ++c) names.push_back("c" + std::to_string(c));
    return nominal_ds(rows, values, labels, names);
}

// ------------------------------------------------------------------ oracles

inline double oracle_entropy(const std::map<long, long>& counts) {
    long n = 0;
    for (const auto& [k, c] : counts) n += c;
    double h = 0.0;
    for (const auto& [k, c] : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(n);
        h += -p * std::log2(p);
    }
    return h;
}

/// Column as integer codes; -1 selects the class.
inline std::vector<long> column(const Dataset& ds, int attr) {
    std::vector<long> out;
    for (const auto& inst : ds.instances) {
        out.push_back(attr < 0 ? inst.label : static_cast<long>(inst.values[static_cast<std::size_t>(attr)]));
    }
    return out;
}

inline double oracle_joint_entropy(const std::vector<long>& a, const std::vector<long>& b) {
    std::map<std::pair<long, long>, long> joint;
    for (std::size_t i = 0; i < a.size(); ++i) ++joint[{a[i], b[i]}];
    std::map<long, long> flat;
    long idx = 0;
    for (const auto& [k, c] : joint) flat[idx++] = c;
    return oracle_entropy(flat);
}

inline double oracle_marginal_entropy(const std::vector<long>& a) {
    std::map<long, long> m;
    for (long v : a) ++m[v];
    return oracle_entropy(m);
}

/// H(class) - sum_v P(v) H(class | v), by direct enumeration of partitions.
inline double oracle_info_gain(const Dataset& ds, int attr) {
    const auto x = column(ds, attr), y = column(ds, -1);
    std::map<long, std::map<long, long>> by_value;
    for (std::size_t i = 0; i < x.size(); ++i) ++by_value[x[i]][y[i]];
    double cond = 0.0;
    for (const auto& [v, counts] : by_value) {
        long nv = 0;
        for (const auto& [k, c] : counts) nv += c;
        cond += static_cast<double>(nv) / static_cast<double>(x.size()) * oracle_entropy(counts);
    }
    return oracle_marginal_entropy(y) - cond;
}

/// 2 I(a;b) / (H(a) + H(b)), with I from the joint entropy; 0 when either is constant.
inline double oracle_su(const Dataset& ds, int a, int b) {
    const auto x = column(ds, a), y = column(ds, b);
    const double ha = oracle_marginal_entropy(x), hb = oracle_marginal_entropy(y);
    if (ha == 0.0 || hb == 0.0) return 0.0;
    const double mi = ha + hb - oracle_joint_entropy(x, y);
    return 2.0 * mi / (ha + hb);
}

inline double oracle_merit(const Dataset& ds, const std::vector<int>& subset) {
    const double k = static_cast<double>(subset.size());
    double cf = 0.0, ff = 0.0;
    for (int a : subset) cf += oracle_su(ds, a, -1);
    for (std::size_t i = 0; i < subset.size(); ++i) {
        for (std::size_t j = i + 1; j < subset.size(); ++j) ff += oracle_su(ds, subset[i], subset[j]);
    }
    const double mean_cf = cf / k;
    const double pairs = k * (k - 1.0) / 2.0;
    const double mean_ff = pairs > 0 ? ff / pairs : 0.0;
    return k * mean_cf / std::sqrt(k + k * (k - 1.0) * mean_ff);
}

/// Highest-merit non-empty subset over all 2^k - 1 candidates. Merits within
/// 1e-12 count as equal; ties go to the smaller subset, then the
/// lexicographically smaller index list.
inline std::vector<int> oracle_exhaustive_cfs(const Dataset& ds) {
    const int k = static_cast<int>(ds.num_attributes());
    std::vector<int> best;
    double best_merit = -1.0;
    for (unsigned mask = 1; mask < (1u << k); ++mask) {
        std::vector<int> s;
        for (int j = 0; j < k; ++j) {
            if (mask & (1u << j)) s.push_back(j);
        }
        const double m = oracle_merit(ds, s);
        const bool better = m > best_merit + 1e-12 ||
                            (std::fabs(m - best_merit) <= 1e-12 && (s.size() < best.size() || (s.size() == best.size() && s < best)));
        if (better) {
            best = s;
            best_merit = m;
        }
    }
    return best;
}

/// Recursive Fayyad-Irani cuts found by trying every midpoint between adjacent
/// distinct values (ties keep the lower cut), with the MDL acceptance test.
inline void oracle_mdl_rec(std::vector<std::pair<double, int>> pts, std::vector<double>& cuts) {
    const std::size_t n = pts.size();
    if (n < 2) return;
    auto ent = [](const std::vector<std::pair<double, int>>& p) {
        std::map<long, long> m;
        for (const auto& [v, y] : p) ++m[y];
        return oracle_entropy(m);
    };
    auto classes = [](const std::vector<std::pair<double, int>>& p) {
        std::map<int, int> m;
        for (const auto& [v, y] : p) ++m[y];
        return static_cast<double>(m.size());
    };
    const double h = ent(pts);
    if (h == 0.0) return;
    std::vector<double> values;
    for (const auto& [v, y] : pts) values.push_back(v);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    double best = 1e300, best_cut = 0.0;
    std::vector<std::pair<double, int>> best_l, best_r;
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        // Keep values[i] <= cut < values[i + 1] even when the two are one ulp apart.
        double cut = (values[i] + values[i + 1]) / 2.0;
        if (!(cut < values[i + 1])) cut = values[i];
        std::vector<std::pair<double, int>> l, r;
        for (const auto& p : pts) (p.first <= cut ? l : r).push_back(p);
        const double e = (static_cast<double>(l.size()) * ent(l) + static_cast<double>(r.size()) * ent(r)) / static_cast<double>(n);
        if (e < best - 1e-12) {
            best = e;
            best_cut = cut;
            best_l = l;
            best_r = r;
        }
    }
    if (best_l.empty()) return;
    const double k = classes(pts), k1 = classes(best_l), k2 = classes(best_r);
    const double delta = std::log2(std::pow(3.0, k) - 2.0) - (k * h - k1 * ent(best_l) - k2 * ent(best_r));
    const double gain = h - best;
    if (!(gain > (std::log2(static_cast<double>(n) - 1.0) + delta) / static_cast<double>(n))) return;
    cuts.push_back(best_cut);
    oracle_mdl_rec(best_l, cuts);
    oracle_mdl_rec(best_r, cuts);
}

inline std::vector<double> oracle_mdl_cuts(const Dataset& ds, std::size_t attr) {
    std::vector<std::pair<double, int>> pts;
    for (const auto& inst : ds.instances) pts.emplace_back(inst.values[attr], inst.label);
    std::vector<double> cuts;
    oracle_mdl_rec(pts, cuts);
    std::sort(cuts.begin(), cuts.end());
    return cuts;
}

/// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("agro-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

}  // namespace support
