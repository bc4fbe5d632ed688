#include "agro/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "agro/classify.hpp"
#include "agro/dataset.hpp"
#include "agro/eval.hpp"
#include "agro/featsel.hpp"
#include "agro/paths.hpp"
#include "agro/qschema.hpp"
#include "agro/reports.hpp"

namespace agro::cli {

namespace {

struct FilterFlags {
    std::string project, main_income, state, meso, micro, senar, coffee;
    int year = 0;
    std::vector<std::string> municipalities, basins;

    void add_to(CLI::App* app) {
        app->add_option("--project", project, "Project id");
        app->add_option("--year", year, "Year of the interview");
        app->add_option("--municipality", municipalities, "Municipality (repeatable, any of)")->take_all();
        app->add_option("--basin", basins, "Water basin (repeatable, any of)")->take_all();
        app->add_option("--main-income", main_income, "Main source of income");
        app->add_option("--state", state, "State");
        app->add_option("--meso-region", meso, "Meso-region");
        app->add_option("--micro-region", micro, "Micro-region");
        app->add_option("--senar-region", senar, "SENAR region");
        app->add_option("--coffee-region", coffee, "Coffee region");
    }

    reports::FilterCriteria criteria() const {
        reports::FilterCriteria c;
        auto opt = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<std::string>(s); };
        c.project = opt(project);
        if (year != 0) c.year = year;
        c.main_income = opt(main_income);
        c.state = opt(state);
        c.meso_region = opt(meso);
        c.micro_region = opt(micro);
        c.senar_region = opt(senar);
        c.coffee_region = opt(coffee);
        c.municipalities.insert(municipalities.begin(), municipalities.end());
        c.water_basins.insert(basins.begin(), basins.end());
        return c;
    }
};

// Where a dataset comes from: a CSV file, or the store projected to one of the
// two domain datasets.
struct DataFlags {
    std::string input;
    std::string kind = "indicators";
    std::string store;
    FilterFlags filter;

    void add_to(CLI::App* app) {
        app->add_option("--input", input, "Dataset CSV (default: build from the store)");
        app->add_option("--kind", kind, "Dataset to build from the store")->check(CLI::IsMember({"features", "indicators"}));
        app->add_option("--store", store, "Record store directory (default $AGRO_STORE or ./store)");
        filter.add_to(app);
    }

    std::vector<dataset::Record> records() const {
        reports::Store st(store.empty() ? reports::Store::default_root() : std::filesystem::path(store));
        return reports::filter_records(st.load_records(), filter.criteria());
    }

    dataset::Dataset load() const {
        if (!input.empty()) {
            const std::filesystem::path p(input);
            return dataset::from_csv(read_file(p), p.stem().string());
        }
        const auto recs = records();
        return kind == "features" ? dataset::build_features_ds(recs) : dataset::build_indicators_ds(recs);
    }
};

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
    if (out_path.empty() || out_path == "-") {
        out << text;
    } else {
        write_file_atomic(out_path, text);
    }
}

qschema::Questionnaire read_questionnaire(const std::string& path) {
    return qschema::parse_questionnaire(read_file(path));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sustainability questionnaires: scoring, datasets, mining and reports", "agro"};
    app.require_subcommand(1, 1);
    app.set_help_all_flag("--help-all", "Help for every verb");

    int exit_code = kExitOk;

    // validate ----------------------------------------------------------
    std::vector<std::string> validate_files;
    auto* validate = app.add_subcommand("validate", "Check questionnaire files against the field registry");
    validate->add_option("files", validate_files, "Questionnaire files")->required()->check(CLI::ExistingFile);
    validate->callback([&] {
        for (const auto& f : validate_files) {
            std::vector<qschema::ValidationIssue> issues;
            try {
                issues = qschema::validate(read_questionnaire(f));
            } catch (const qschema::ValidationError& e) {
                issues = e.issues();
            } catch (const ParseError& e) {
                err << f << ": " << e.what() << "\n";
                exit_code = kExitFailure;
                continue;
            }
            for (const auto& i : issues) err << f << ": " << qschema::format_issue(i) << "\n";
            if (qschema::has_errors(issues)) exit_code = kExitFailure;
        }
    });

    // score -------------------------------------------------------------
    std::string score_file, score_out, score_format = "json";
    auto* score = app.add_subcommand("score", "Score one questionnaire and print its property report");
    score->add_option("file", score_file, "Questionnaire file")->required()->check(CLI::ExistingFile);
    score->add_option("--format", score_format, "json or text")->check(CLI::IsMember({"json", "text"}));
    score->add_option("--out", score_out, "Output file (default stdout)");
    score->callback([&] {
        const auto rec = dataset::score_record(read_questionnaire(score_file));
        const auto doc = reports::property_report(rec.q, rec.iv, rec.score);
        emit(score_format == "json" ? doc.dump(2) + "\n" : reports::property_report_text(doc), score_out, out);
    });

    // ingest ------------------------------------------------------------
    std::vector<std::string> ingest_files;
    std::string ingest_store;
    auto* ingest = app.add_subcommand("ingest", "Validate questionnaires and add them to the record store");
    ingest->add_option("files", ingest_files, "Questionnaire files")->required()->check(CLI::ExistingFile);
    ingest->add_option("--store", ingest_store, "Record store directory (default $AGRO_STORE or ./store)");
    ingest->callback([&] {
        reports::Store st(ingest_store.empty() ? reports::Store::default_root() : std::filesystem::path(ingest_store));
        // Everything is parsed and validated before the store is touched.
        std::vector<qschema::Questionnaire> qs;
        for (const auto& f : ingest_files) {
            try {
                auto q = read_questionnaire(f);
                const auto issues = qschema::validate(q);
                for (const auto& i : issues) err << f << ": " << qschema::format_issue(i) << "\n";
                if (qschema::has_errors(issues)) {
                    exit_code = kExitFailure;
                    continue;
                }
                qs.push_back(std::move(q));
            } catch (const qschema::ValidationError& e) {
                for (const auto& i : e.issues()) err << f << ": " << qschema::format_issue(i) << "\n";
                exit_code = kExitFailure;
            } catch (const ParseError& e) {
                err << f << ": " << e.what() << "\n";
                exit_code = kExitFailure;
            }
        }
        if (exit_code != kExitOk) return;
        for (const auto& q : qs) {
            const auto ref = st.put(q);
            out << "stored " << ref.property_code << "/" << ref.year << "\n";
        }
    });

    // dataset -----------------------------------------------------------
    DataFlags ds_flags;
    std::string ds_out;
    auto* dataset_cmd = app.add_subcommand("dataset", "Build FeaturesDS or IndicatorsDS from the store as CSV");
    ds_flags.add_to(dataset_cmd);
    dataset_cmd->add_option("--out", ds_out, "Output CSV (default stdout)");
    dataset_cmd->callback([&] { emit(dataset::to_csv(ds_flags.load()), ds_out, out); });

    // select ------------------------------------------------------------
    DataFlags sel_flags;
    std::string sel_method = "cfs", sel_out;
    std::uint64_t sel_seed = 1;
    int sel_folds = 5;
    auto* select = app.add_subcommand("select", "Attribute selection (CFS best-first or InfoGain ranking)");
    sel_flags.add_to(select);
    select->add_option("--method", sel_method, "cfs or infogain")->check(CLI::IsMember({"cfs", "infogain"}, CLI::ignore_case));
    select->add_option("--seed", sel_seed, "Seed for the fold split");
    select->add_option("--folds", sel_folds, "Folds for fold-wise selection")->check(CLI::Range(1, 100));
    select->add_option("--out", sel_out, "Output JSON (default stdout)");
    select->callback([&] {
        const auto ds = sel_flags.load();
        featsel::SelectionResult res;
        if (CLI::detail::to_lower(sel_method) == "cfs") {
            featsel::CfsOptions o;
            o.folds = sel_folds;
            o.seed = sel_seed;
            res = featsel::best_first_cfs(ds, o);
        } else {
            featsel::RankOptions o;
            o.folds = sel_folds;
            o.seed = sel_seed;
            res = featsel::info_gain_rank(ds, o);
        }
        emit(featsel::to_json(res), sel_out, out);
    });

    // train -------------------------------------------------------------
    DataFlags tr_flags;
    std::string tr_alg, tr_out, tr_selection;
    std::uint64_t tr_seed = 1;
    std::size_t tr_threads = 1;
    int tr_trees = 100, tr_epochs = 500, tr_rounds = 10;
    bool tr_rules = false;
    auto* train = app.add_subcommand("train", "Train one classifier and write the model as JSON");
    tr_flags.add_to(train);
    train->add_option("--algorithm", tr_alg, "NB, Tree, RF, AdaBoost, Ripper or MLP")->required();
    train->add_option("--selection", tr_selection, "Selection JSON to project the dataset onto first");
    train->add_option("--seed", tr_seed, "Learner seed");
    train->add_option("--threads", tr_threads, "Threads for forest training")->check(CLI::Range(1, 256));
    train->add_option("--trees", tr_trees, "RF trees");
    train->add_option("--epochs", tr_epochs, "MLP epochs");
    train->add_option("--rounds", tr_rounds, "AdaBoost rounds");
    train->add_flag("--rules", tr_rules, "Also print the rules of a Ripper model to stdout");
    train->add_option("--out", tr_out, "Output model JSON (default stdout)");

    // evaluate ----------------------------------------------------------
    DataFlags ev_flags;
    std::string ev_alg, ev_selection, ev_out;
    std::uint64_t ev_seed = 1;
    std::size_t ev_threads = 1;
    int ev_folds = 5;
    auto* evaluate = app.add_subcommand("evaluate", "Stratified cross-validation of one classifier");
    ev_flags.add_to(evaluate);
    evaluate->add_option("--algorithm", ev_alg, "NB, Tree, RF, AdaBoost, Ripper or MLP")->required();
    evaluate->add_option("--selection", ev_selection, "Selection JSON to project the dataset onto first");
    evaluate->add_option("--seed", ev_seed, "Seed for folds and learner");
    evaluate->add_option("--folds", ev_folds, "Folds")->check(CLI::Range(1, 100));
    evaluate->add_option("--threads", ev_threads, "Folds trained in parallel")->check(CLI::Range(1, 256));
    evaluate->add_option("--out", ev_out, "Output file (default stdout)");

    auto learner = [](const std::string& alg, std::uint64_t seed, std::size_t threads, int trees, int epochs, int rounds) {
        classify::LearnerConfig cfg;
        cfg.algorithm = classify::parse_algorithm(alg);
        cfg.seed = seed;
        cfg.rf.threads = threads;
        cfg.rf.trees = trees;
        cfg.mlp.epochs = epochs;
        cfg.boost.rounds = rounds;
        cfg.check();
        return cfg;
    };
    auto project = [](dataset::Dataset ds, const std::string& selection) {
        if (selection.empty()) return ds;
        return featsel::apply_selection(ds, featsel::selection_from_json(read_file(selection)));
    };

    train->callback([&] {
        const auto cfg = learner(tr_alg, tr_seed, tr_threads, tr_trees, tr_epochs, tr_rounds);
        const auto model = classify::train(project(tr_flags.load(), tr_selection), cfg);
        emit(classify::model_to_json(model), tr_out, out);
        if (tr_rules && model.algorithm == classify::Algorithm::Ripper) out << classify::rules_to_text(model);
    });

    evaluate->callback([&] {
        const auto cfg = learner(ev_alg, ev_seed, 1, 100, 500, 10);
        const auto ds = project(ev_flags.load(), ev_selection);
        const auto res = eval::cross_validate(cfg, ds, ev_folds, ev_seed, ev_threads);
        std::ostringstream s;
        char buf[128];
        std::snprintf(buf, sizeof buf, "weighted precision %.6f\nweighted recall %.6f\n", res.metrics.weighted_precision,
                      res.metrics.weighted_recall);
        s << buf << "confusion matrix (rows actual, columns predicted)\n";
        for (std::size_t a = 0; a < res.cm.classes.size(); ++a) {
            s << res.cm.classes[a];
            for (auto c : res.cm.counts[a]) s << "\t" << c;
            s << "\n";
        }
        emit(s.str(), ev_out, out);
    });

    // grid --------------------------------------------------------------
    std::string grid_store, grid_out, grid_format = "csv";
    std::uint64_t grid_seed = 42;
    std::size_t grid_threads = 1;
    int grid_folds = 5;
    std::vector<std::string> grid_algs;
    FilterFlags grid_filter;
    auto* grid = app.add_subcommand("grid", "Dataset x selector x algorithm cross-validation grid over the store");
    grid->add_option("--store", grid_store, "Record store directory (default $AGRO_STORE or ./store)");
    grid->add_option("--seed", grid_seed, "Master seed");
    grid->add_option("--threads", grid_threads, "Worker threads")->check(CLI::Range(1, 256));
    grid->add_option("--folds", grid_folds, "Folds")->check(CLI::Range(2, 100));
    grid->add_option("--algorithm", grid_algs, "Restrict to these algorithms (repeatable)")->take_all();
    grid->add_option("--format", grid_format, "csv or table")->check(CLI::IsMember({"csv", "table"}));
    grid->add_option("--out", grid_out, "Output file (default stdout)");
    grid_filter.add_to(grid);
    grid->callback([&] {
        reports::Store st(grid_store.empty() ? reports::Store::default_root() : std::filesystem::path(grid_store));
        const auto recs = reports::filter_records(st.load_records(), grid_filter.criteria());
        eval::GridOptions o;
        o.folds = grid_folds;
        o.threads = grid_threads;
        if (!grid_algs.empty()) {
            o.algorithms.clear();
            for (const auto& a : grid_algs) o.algorithms.push_back(classify::parse_algorithm(a));
        }
        const auto g = eval::run_experiment_grid(recs, grid_seed, o);
        for (const auto& c : g.cells) {
            if (c.failed) {
                err << "cell " << c.dataset << "/" << eval::to_string(c.selector) << "/" << classify::to_string(c.algorithm)
                    << " failed: " << c.error << "\n";
            }
        }
        emit(grid_format == "csv" ? eval::grid_to_csv(g) : eval::grid_to_table(g), grid_out, out);
    });

    // report ------------------------------------------------------------
    auto* report = app.add_subcommand("report", "Chart data, property reports and adequation plans");
    report->require_subcommand(1, 1);

    std::string b_store, b_out, b_model, b_selection, b_x = "I12", b_y = "SI", b_area = "SI", b_stop;
    FilterFlags b_filter;
    auto* bundle = report->add_subcommand("bundle", "Write every chart's data for the filtered records");
    bundle->add_option("--out", b_out, "Output directory")->required();
    bundle->add_option("--store", b_store, "Record store directory (default $AGRO_STORE or ./store)");
    bundle->add_option("--model", b_model, "Ripper model JSON for the Sankey chart")->check(CLI::ExistingFile);
    bundle->add_option("--selection", b_selection, "CFS selection JSON for the bar chart")->check(CLI::ExistingFile);
    bundle->add_option("--x", b_x, "Scatter X (I1..I21, S1..S7, SI)");
    bundle->add_option("--y", b_y, "Scatter Y");
    bundle->add_option("--area-by", b_area, "Score shown on the area chart");
    bundle->add_option("--stop-words", b_stop, "Stop-word list, one per line")->check(CLI::ExistingFile);
    b_filter.add_to(bundle);
    bundle->callback([&] {
        reports::Store st(b_store.empty() ? reports::Store::default_root() : std::filesystem::path(b_store));
        const auto recs = reports::filter_records(st.load_records(), b_filter.criteria());
        reports::BundleOptions o;
        o.scatter_x = b_x;
        o.scatter_y = b_y;
        o.area_id = b_area;
        std::optional<classify::TrainedModel> model;
        std::optional<featsel::SelectionResult> sel;
        if (!b_model.empty()) model = classify::model_from_json(read_file(b_model));
        if (!b_selection.empty()) sel = featsel::selection_from_json(read_file(b_selection));
        o.rules = model ? &*model : nullptr;
        o.selection = sel ? &*sel : nullptr;
        if (!b_stop.empty()) o.stop_words = reports::load_stop_words(b_stop);
        for (const auto& name : reports::write_bundle(b_out, recs, o)) out << (std::filesystem::path(b_out) / name).string() << "\n";
    });

    std::string p_store, p_code, p_format = "json", p_out;
    int p_year = 0;
    auto* property = report->add_subcommand("property", "Report of one stored property");
    property->add_option("--store", p_store, "Record store directory (default $AGRO_STORE or ./store)");
    property->add_option("--property", p_code, "Property code")->required();
    property->add_option("--year", p_year, "Year")->required();
    property->add_option("--format", p_format, "json or text")->check(CLI::IsMember({"json", "text"}));
    property->add_option("--out", p_out, "Output file (default stdout)");
    property->callback([&] {
        reports::Store st(p_store.empty() ? reports::Store::default_root() : std::filesystem::path(p_store));
        const auto rec = dataset::score_record(st.get({p_code, p_year}));
        const auto doc = reports::property_report(rec.q, rec.iv, rec.score);
        emit(p_format == "json" ? doc.dump(2) + "\n" : reports::property_report_text(doc), p_out, out);
    });

    std::string ps_store, ps_file;
    auto* plan_set = report->add_subcommand("plan-set", "Attach an adequation plan (JSON) to a stored questionnaire");
    plan_set->add_option("--store", ps_store, "Record store directory (default $AGRO_STORE or ./store)");
    plan_set->add_option("plan", ps_file, "Plan JSON file")->required()->check(CLI::ExistingFile);
    plan_set->callback([&] {
        reports::Store st(ps_store.empty() ? reports::Store::default_root() : std::filesystem::path(ps_store));
        st.attach_adequation_plan(reports::plan_from_json(read_file(ps_file)));
    });

    std::string pg_store, pg_code, pg_out;
    int pg_year = 0;
    auto* plan_get = report->add_subcommand("plan-get", "Print the adequation plan of a stored questionnaire");
    plan_get->add_option("--store", pg_store, "Record store directory (default $AGRO_STORE or ./store)");
    plan_get->add_option("--property", pg_code, "Property code")->required();
    plan_get->add_option("--year", pg_year, "Year")->required();
    plan_get->add_option("--out", pg_out, "Output file (default stdout)");
    plan_get->callback([&] {
        reports::Store st(pg_store.empty() ? reports::Store::default_root() : std::filesystem::path(pg_store));
        emit(reports::to_json(st.read_adequation_plan({pg_code, pg_year})).dump(2) + "\n", pg_out, out);
    });

    // synth -------------------------------------------------------------
    std::size_t sy_n = 100;
    std::uint64_t sy_seed = 1;
    std::string sy_plant = "default", sy_store, sy_out;
    auto* synth = app.add_subcommand("synth", "Generate synthetic questionnaires with planted rules");
    synth->add_option("--n", sy_n, "Number of questionnaires")->check(CLI::Range(std::size_t{1}, std::size_t{10000000}));
    synth->add_option("--seed", sy_seed, "Generator seed");
    synth->add_option("--plant", sy_plant, "Planted configuration")->check(CLI::IsMember({"default"}));
    synth->add_option("--store", sy_store, "Store to ingest into (default $AGRO_STORE or ./store)");
    synth->add_option("--out", sy_out, "Write .isa files into this directory instead of a store");
    synth->callback([&] {
        const auto cfg = dataset::default_synthetic_config(sy_n, sy_seed);
        const auto qs = dataset::generate_synthetic(cfg);
        if (!sy_out.empty()) {
            for (const auto& q : qs) {
                const auto name = q.header.property_code + "_" + std::to_string(q.header.year()) + ".isa";
                write_file_atomic(std::filesystem::path(sy_out) / name, qschema::serialize(q));
            }
        } else {
            reports::Store st(sy_store.empty() ? reports::Store::default_root() : std::filesystem::path(sy_store));
            for (const auto& q : qs) st.put(q);
        }
        out << "generated " << qs.size() << " questionnaires\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const qschema::ValidationError& e) {
        for (const auto& i : e.issues()) err << qschema::format_issue(i) << "\n";
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return exit_code;
}

}  // namespace agro::cli
