#include "agro/eval.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <numeric>
#include <optional>
#include <sstream>

#include "agro/parallel.hpp"
#include "agro/rng.hpp"

namespace agro::eval {

using classify::Algorithm;
using dataset::Dataset;

std::vector<int> stratified_folds(const Dataset& ds, int k, std::uint64_t seed) {
    if (k < 1) throw UsageError("fold count must be at least 1");
    std::vector<int> fold(ds.size(), 0);
    if (k == 1) return fold;
    const auto counts = ds.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] > 0 && counts[c] < static_cast<std::size_t>(k)) {
            throw StratificationError("class " + ds.class_names[c] + " has " + std::to_string(counts[c]) +
                                      " instances, fewer than " + std::to_string(k) + " folds");
        }
    }
    Rng rng(seed);
    std::size_t next = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (static_cast<std::size_t>(ds.instances[i].label) == c) members.push_back(i);
        }
        rng.shuffle(members.begin(), members.end());
        for (auto i : members) {
            fold[i] = static_cast<int>(next);
            next = (next + 1) % static_cast<std::size_t>(k);
        }
    }
    return fold;
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names)
    : classes(std::move(class_names)), counts(classes.size(), std::vector<std::size_t>(classes.size(), 0)) {}

void ConfusionMatrix::add(int actual, int predicted, std::size_t n) {
    counts.at(static_cast<std::size_t>(actual)).at(static_cast<std::size_t>(predicted)) += n;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.classes != classes) throw UsageError("cannot merge confusion matrices over different classes");
    for (std::size_t i = 0; i < counts.size(); ++i) {
        for (std::size_t j = 0; j < counts.size(); ++j) counts[i][j] += other.counts[i][j];
    }
}

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
    return t;
}

Metrics precision_recall(const ConfusionMatrix& cm) {
    const std::size_t C = cm.counts.size();
    for (const auto& row : cm.counts) {
        if (row.size() != C) throw UsageError("confusion matrix must be square");
    }
    const std::size_t n = cm.total();
    if (n == 0) throw UsageError("precision/recall of an empty confusion matrix");
    Metrics m;
    m.precision.assign(C, 0.0);
    m.recall.assign(C, 0.0);
    m.support.assign(C, 0);
    for (std::size_t c = 0; c < C; ++c) {
        std::size_t col = 0;
        for (std::size_t a = 0; a < C; ++a) col += cm.counts[a][c];
        const std::size_t row = std::accumulate(cm.counts[c].begin(), cm.counts[c].end(), std::size_t{0});
        m.support[c] = row;
        const double tp = static_cast<double>(cm.counts[c][c]);
        m.precision[c] = col > 0 ? tp / static_cast<double>(col) : 0.0;
        m.recall[c] = row > 0 ? tp / static_cast<double>(row) : 0.0;
        m.weighted_precision += static_cast<double>(row) * m.precision[c];
        m.weighted_recall += static_cast<double>(row) * m.recall[c];
    }
    m.weighted_precision /= static_cast<double>(n);
    m.weighted_recall /= static_cast<double>(n);
    return m;
}

namespace {

ConfusionMatrix run_fold(const classify::LearnerConfig& cfg, const Dataset& ds, const std::vector<int>& folds, int f) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < ds.size(); ++i) (folds[i] == f ? test_rows : train_rows).push_back(i);
    // k = 1: the single fold is both the training and the test set.
    if (train_rows.empty()) train_rows = test_rows;
    ConfusionMatrix cm(ds.class_names);
    try {
        const auto model = classify::train(ds.subset(train_rows), cfg);
        for (auto i : test_rows) cm.add(ds.instances[i].label, classify::predict(model, ds.instances[i]).cls);
    } catch (const Error& e) {
        throw classify::TrainingError("fold " + std::to_string(f) + ": " + e.what());
    }
    return cm;
}

}  // namespace

CvResult cross_validate(const classify::LearnerConfig& cfg, const Dataset& ds, int k, std::uint64_t seed,
                        std::size_t threads) {
    const auto folds = stratified_folds(ds, k, seed);
    std::vector<ConfusionMatrix> parts(static_cast<std::size_t>(k));
    parallel_for(parts.size(), threads, [&](std::size_t f) { parts[f] = run_fold(cfg, ds, folds, static_cast<int>(f)); });
    CvResult out{ConfusionMatrix(ds.class_names), {}};
    for (const auto& p : parts) out.cm.merge(p);
    out.metrics = precision_recall(out.cm);
    return out;
}

// ---------------------------------------------------------------- grid

namespace {

constexpr std::array<std::string_view, 3> kSelectorNames{"none", "CFS", "InfoGain"};
constexpr std::array<Selector, 3> kSelectors{Selector::none, Selector::CFS, Selector::InfoGain};

std::uint64_t key_seed(std::uint64_t master, const std::string& key) { return derive_seed(master, stable_hash(key)); }

}  // namespace

std::string_view to_string(Selector s) { return kSelectorNames[static_cast<std::size_t>(s)]; }

Selector parse_selector(std::string_view s) {
    std::string lower(s);
    for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (lower == "none" || lower == "all") return Selector::none;
    if (lower == "cfs") return Selector::CFS;
    if (lower == "infogain") return Selector::InfoGain;
    throw UsageError("unknown selector: " + std::string(s));
}

const GridCell& GridResult::cell(std::string_view dataset, Selector s, Algorithm a) const {
    for (const auto& c : cells) {
        if (c.dataset == dataset && c.selector == s && c.algorithm == a) return c;
    }
    throw NotFoundError("no grid cell " + std::string(dataset) + "/" + std::string(to_string(s)) + "/" +
                        std::string(classify::to_string(a)));
}

GridResult run_experiment_grid(const std::vector<Dataset>& datasets, std::uint64_t master_seed, const GridOptions& opt) {
    GridResult g;
    g.master_seed = master_seed;

    // Selection once per (dataset, selector) on the full data.
    struct Variant {
        std::string dataset;
        Selector selector;
        std::uint64_t fold_seed;
        std::optional<Dataset> data;
        std::string error;
    };
    std::vector<Variant> variants;
    for (const auto& ds : datasets) {
        const auto fold_seed = key_seed(master_seed, ds.name + "/folds");
        for (auto s : kSelectors) variants.push_back({ds.name, s, fold_seed, std::nullopt, {}});
    }
    std::vector<std::optional<featsel::SelectionResult>> sels(variants.size());
    parallel_for(variants.size(), opt.threads, [&](std::size_t v) {
        auto& var = variants[v];
        const Dataset& ds = datasets[v / kSelectors.size()];
        const auto sel_seed = key_seed(master_seed, ds.name + "/" + std::string(to_string(var.selector)));
        try {
            if (var.selector == Selector::none) {
                var.data = ds;
                return;
            }
            featsel::SelectionResult sel = var.selector == Selector::CFS
                                               ? featsel::best_first_cfs(ds, {5, opt.folds, sel_seed})
                                               : featsel::info_gain_rank(ds, {opt.folds, sel_seed, 0.0});
            if (sel.selected.empty()) throw featsel::SelectionError("selection kept no attributes");
            var.data = featsel::apply_selection(ds, sel);
            sels[v] = std::move(sel);
        } catch (const Error& e) {
            var.error = e.what();
        }
    });
    for (auto& s : sels) {
        if (s) g.selections.push_back(std::move(*s));
    }

    // One task per (variant, algorithm, fold).
    const std::size_t A = opt.algorithms.size();
    const auto k = static_cast<std::size_t>(opt.folds);
    for (const auto& var : variants) {
        for (auto a : opt.algorithms) {
            GridCell c;
            c.dataset = var.dataset;
            c.selector = var.selector;
            c.algorithm = a;
            c.seed = key_seed(master_seed, var.dataset + "/" + std::string(to_string(var.selector)) + "/" +
                                               std::string(classify::to_string(a)));
            if (var.data) {
                for (const auto& at : var.data->attributes) c.attributes.push_back(at.name);
            } else {
                c.failed = true;
                c.error = var.error;
            }
            g.cells.push_back(std::move(c));
        }
    }
    std::vector<std::vector<int>> folds(variants.size());
    std::vector<std::string> fold_error(variants.size());
    for (std::size_t v = 0; v < variants.size(); ++v) {
        if (!variants[v].data) continue;
        try {
            folds[v] = stratified_folds(*variants[v].data, opt.folds, variants[v].fold_seed);
        } catch (const Error& e) {
            fold_error[v] = e.what();
        }
    }
    std::vector<std::optional<ConfusionMatrix>> parts(g.cells.size() * k);
    std::vector<std::string> errors(parts.size());
    parallel_for(parts.size(), opt.threads, [&](std::size_t t) {
        const std::size_t cell = t / k, f = t % k, v = cell / A;
        if (g.cells[cell].failed || !fold_error[v].empty()) return;
        classify::LearnerConfig cfg;
        cfg.algorithm = g.cells[cell].algorithm;
        cfg.seed = g.cells[cell].seed;
        try {
            parts[t] = run_fold(cfg, *variants[v].data, folds[v], static_cast<int>(f));
        } catch (const Error& e) {
            errors[t] = e.what();
        }
    });

    for (std::size_t cell = 0; cell < g.cells.size(); ++cell) {
        auto& c = g.cells[cell];
        if (c.failed) continue;
        const std::size_t v = cell / A;
        if (!fold_error[v].empty()) {
            c.failed = true;
            c.error = fold_error[v];
            continue;
        }
        c.cm = ConfusionMatrix(variants[v].data->class_names);
        for (std::size_t f = 0; f < k; ++f) {
            if (!errors[cell * k + f].empty()) {
                c.failed = true;
                c.error = errors[cell * k + f];
                break;
            }
            c.cm.merge(*parts[cell * k + f]);
        }
        if (!c.failed) c.metrics = precision_recall(c.cm);
    }

    // Best cells: weighted precision, then weighted recall, then grid order.
    auto better = [](const GridCell& a, const GridCell& b) {
        if (a.metrics.weighted_precision != b.metrics.weighted_precision) {
            return a.metrics.weighted_precision > b.metrics.weighted_precision;
        }
        return a.metrics.weighted_recall > b.metrics.weighted_recall;
    };
    for (auto a : opt.algorithms) {
        int best = -1;
        for (std::size_t i = 0; i < g.cells.size(); ++i) {
            const auto& c = g.cells[i];
            if (c.failed || c.algorithm != a) continue;
            if (best < 0 || better(c, g.cells[static_cast<std::size_t>(best)])) best = static_cast<int>(i);
        }
        if (best >= 0) g.cells[static_cast<std::size_t>(best)].best_for_algorithm = true;
    }
    for (std::size_t i = 0; i < g.cells.size(); ++i) {
        if (g.cells[i].failed) continue;
        if (g.best < 0 || better(g.cells[i], g.cells[static_cast<std::size_t>(g.best)])) g.best = static_cast<int>(i);
    }
    if (g.best >= 0) g.cells[static_cast<std::size_t>(g.best)].global_best = true;
    return g;
}

GridResult run_experiment_grid(const std::vector<dataset::Record>& records, std::uint64_t master_seed,
                               const GridOptions& opt) {
    std::vector<Dataset> ds{dataset::build_features_ds(records), dataset::build_indicators_ds(records)};
    int present = 0;
    for (auto c : ds[1].class_counts()) present += c > 0 ? 1 : 0;
    if (present < 2) throw UsageError("the experiment grid needs at least two classes among the records");
    return run_experiment_grid(ds, master_seed, opt);
}

namespace {

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string fixed6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::string grid_to_csv(const GridResult& g) {
    std::string out = "dataset,selector,algorithm,precision,recall,status\n";
    for (const auto& c : g.cells) {
        out += c.dataset + "," + std::string(to_string(c.selector)) + "," + std::string(classify::to_string(c.algorithm)) + ",";
        if (c.failed) {
            out += ",,failed\n";
            continue;
        }
        out += fixed6(c.metrics.weighted_precision) + "," + fixed6(c.metrics.weighted_recall) + ",";
        out += c.global_best ? "best" : c.best_for_algorithm ? "best_for_algorithm" : "ok";
        out += "\n";
    }
    return out;
}

std::string grid_to_table(const GridResult& g) {
    std::vector<std::string> datasets;
    std::vector<Algorithm> algorithms;
    for (const auto& c : g.cells) {
        if (std::find(datasets.begin(), datasets.end(), c.dataset) == datasets.end()) datasets.push_back(c.dataset);
        if (std::find(algorithms.begin(), algorithms.end(), c.algorithm) == algorithms.end()) algorithms.push_back(c.algorithm);
    }
    std::size_t width = 12;
    for (const auto& d : datasets) width = std::max(width, d.size() + 1);

    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.append(w - s.size(), ' ');
        return s;
    };
    auto lpad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.insert(0, w - s.size(), ' ');
        return s;
    };
    std::ostringstream os;
    os << pad("Algorithm", 10) << pad("Dataset", width) << "| " << lpad("Precision", 9) << "                   | "
       << lpad("Recall", 6) << "\n";
    os << pad("", 10) << pad("", width) << "| " << lpad("All", 9) << lpad("CFS", 9) << lpad("InfoGain", 10) << " | "
       << lpad("All", 9) << lpad("CFS", 9) << lpad("InfoGain", 10) << "\n";
    os << std::string(10 + width + 62, '-') << "\n";
    for (auto a : algorithms) {
        bool first = true;
        for (const auto& d : datasets) {
            os << pad(first ? std::string(classify::to_string(a)) : "", 10) << pad(d, width) << "|";
            first = false;
            std::string rec;
            for (auto s : kSelectors) {
                const GridCell* c = nullptr;
                for (const auto& x : g.cells) {
                    if (x.dataset == d && x.selector == s && x.algorithm == a) c = &x;
                }
                const std::size_t w = s == Selector::InfoGain ? 10 : 9;
                if (c == nullptr || c->failed) {
                    os << lpad(c ? "failed" : "-", w);
                    rec += lpad(c ? "failed" : "-", w);
                    continue;
                }
                const std::string mark = c->global_best ? "**" : c->best_for_algorithm ? "*" : "";
                os << lpad(fixed3(c->metrics.weighted_precision) + mark, w);
                rec += lpad(fixed3(c->metrics.weighted_recall), w);
            }
            os << " |" << rec << "\n";
        }
    }
    return os.str();
}

}  // namespace agro::eval
