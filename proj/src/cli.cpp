#include "flowsentry/cli.hpp"

#include "flowsentry/dataset.hpp"
#include "flowsentry/errors.hpp"
#include "flowsentry/eval.hpp"
#include "flowsentry/explain.hpp"
#include "flowsentry/featsel.hpp"
#include "flowsentry/firewall.hpp"
#include "flowsentry/learners.hpp"
#include "flowsentry/parallel.hpp"
#include "flowsentry/report.hpp"
#include "flowsentry/resample.hpp"
#include "flowsentry/rng.hpp"
#include "flowsentry/textutil.hpp"
#include "flowsentry/version.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace flowsentry {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// shared option bundles
// ---------------------------------------------------------------------------

struct CommonOpts {
    std::uint64_t seed = 42;
    int threads = 0; // 0 = all logical cores
};

void require_input(const std::string& path) {
    if (!fs::exists(path)) throw DataError("input path '" + path + "' does not exist");
}

std::vector<std::string> expand_inputs(const std::vector<std::string>& inputs) {
    std::vector<std::string> files;
    for (const auto& in : inputs) {
        require_input(in);
        if (fs::is_directory(in)) {
            std::vector<std::string> found;
            for (const auto& entry : fs::directory_iterator(in))
                if (entry.is_regular_file() && entry.path().extension() == ".csv")
                    found.push_back(entry.path().string());
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.push_back(in);
        }
    }
    if (files.empty()) throw DataError("no input files found");
    return files;
}

FeatureSubset load_subset(const std::string& path) {
    const json doc = read_json_file(path);
    FeatureSubset subset;
    if (doc.is_array()) {
        subset.names = doc.get<std::vector<std::string>>();
        subset.provenance = "file:" + path;
    } else {
        subset.names = doc.at("names").get<std::vector<std::string>>();
        subset.provenance = doc.value("provenance", "file:" + path);
    }
    if (subset.names.empty()) throw DataError("subset '" + path + "' is empty");
    return subset;
}

void save_subset(const FeatureSubset& subset, const std::string& path) {
    write_text_atomic(path,
                      json{{"names", subset.names}, {"provenance", subset.provenance}}.dump(2) +
                          "\n");
}

std::vector<LearnerKind> parse_learner_list(const std::string& grid) {
    std::vector<LearnerKind> kinds;
    for (const auto& name : split(grid, ',')) {
        const auto kind = learner_kind_from_name(trim(name));
        if (!kind) throw DataError("unknown learner '" + trim(name) + "'");
        kinds.push_back(*kind);
    }
    if (kinds.empty()) throw DataError("empty learner list");
    return kinds;
}

std::vector<std::size_t> parse_count_list(const std::string& counts) {
    std::vector<std::size_t> out;
    for (const auto& c : split(counts, ',')) {
        const auto v = parse_double(trim(c));
        if (!v || *v < 1 || *v != std::floor(*v))
            throw DataError("bad feature count '" + trim(c) + "'");
        out.push_back(static_cast<std::size_t>(*v));
    }
    if (out.empty()) throw DataError("empty count list");
    return out;
}

// Hyperparameter flags shared by train/evaluate/sweep.
struct LearnerFlags {
    TrainOptions opts;

    void attach(CLI::App* cmd) {
        cmd->add_option("--knn-k", opts.knn.k, "KNN neighbor count");
        cmd->add_option("--nb-smoothing", opts.nb.var_smoothing, "NB variance smoothing");
        cmd->add_option("--l2", opts.logreg.l2, "logistic L2 penalty");
        cmd->add_option("--max-iter", opts.logreg.max_iter, "IRLS iteration cap");
        cmd->add_option("--cart-depth", opts.cart.max_depth, "CART depth cap");
        cmd->add_option("--min-leaf", opts.cart.min_leaf, "CART minimum leaf rows");
        cmd->add_option("--trees", opts.forest.n_trees, "forest size");
        cmd->add_option("--forest-depth", opts.forest.max_depth, "forest depth cap");
        cmd->add_option("--mtry", opts.forest.mtry, "per-split candidate features (0 = sqrt)");
        cmd->add_flag("--no-bootstrap", no_bootstrap, "disable bootstrap sampling");
        cmd->add_option("--ada-rounds", opts.ada.rounds, "AdaBoost rounds");
        cmd->add_option("--gbt-rounds", opts.gbt.rounds, "boosting rounds");
        cmd->add_option("--gbt-depth", opts.gbt.max_depth, "boosted tree depth");
        cmd->add_option("--eta", opts.gbt.eta, "boosting learning rate");
        cmd->add_option("--gbt-lambda", opts.gbt.lambda, "boosting leaf L2");
        cmd->add_option("--gbt-gamma", opts.gbt.gamma, "boosting split penalty");
    }

    TrainOptions resolve(std::uint64_t seed) {
        opts.forest.bootstrap = !no_bootstrap;
        opts.forest.seed = seed;
        return opts;
    }

    json to_json() const {
        return {{"knn_k", opts.knn.k},
                {"l2", opts.logreg.l2},
                {"cart_depth", opts.cart.max_depth},
                {"trees", opts.forest.n_trees},
                {"forest_depth", opts.forest.max_depth},
                {"mtry", opts.forest.mtry},
                {"bootstrap", !no_bootstrap},
                {"ada_rounds", opts.ada.rounds},
                {"gbt_rounds", opts.gbt.rounds},
                {"gbt_depth", opts.gbt.max_depth},
                {"eta", opts.gbt.eta},
                {"gbt_lambda", opts.gbt.lambda},
                {"gbt_gamma", opts.gbt.gamma}};
    }

    bool no_bootstrap = false;
};

json cleaning_report_to_json(const CleaningReport& report) {
    json encodings = json::object();
    for (const auto& [column, codes] : report.categorical_encodings) {
        json col = json::object();
        for (const auto& [category, code] : codes) col[category] = code;
        encodings[column] = std::move(col);
    }
    return {{"rows_dropped_missing", report.rows_dropped_missing},
            {"rows_dropped_nonfinite", report.rows_dropped_nonfinite},
            {"columns_dropped_nearzero", report.columns_dropped_nearzero},
            {"categorical_encodings", std::move(encodings)}};
}

json resample_report_to_json(const ResampleReport& report) {
    return {{"minority_before", report.minority_before},
            {"majority_before", report.majority_before},
            {"synthetic_added", report.synthetic_added},
            {"rows_removed", report.rows_removed},
            {"resulting_fraction", report.resulting_fraction},
            {"minority_label", report.minority_label}};
}

// ---------------------------------------------------------------------------
// subcommand bodies
// ---------------------------------------------------------------------------

int cmd_ingest(const std::vector<std::string>& inputs, const std::string& out_path,
               const std::string& policy_name, const std::string& benign_token,
               const std::string& report_path, std::uint64_t seed) {
    const SchemaPolicy policy =
        policy_name == "strict" ? SchemaPolicy::Strict : SchemaPolicy::Infer;
    const auto files = expand_inputs(inputs);

    std::vector<FlowTable> tables(files.size());
    par::parallel_for(files.size(), 1, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            tables[i] = load_flow_csv(files[i], policy, benign_token);
    });
    FlowTable merged = merge_tables(tables);

    // Pending categorical columns cannot be persisted; encode on the way out.
    CleaningReport encode_report;
    if (!merged.pending_categorical.empty()) {
        std::cerr << "ingest: note: " << merged.pending_categorical.size()
                  << " categorical column(s) will be integer-encoded by 'clean'\n";
    }

    if (merged.pending_categorical.empty()) {
        write_table_auto(merged, out_path);
    } else {
        // Persist via clean() with a no-drop threshold so only encoding runs.
        CleaningPolicy keep_all;
        keep_all.near_zero_threshold = 1.1;
        auto [encoded, rep] = clean(merged, keep_all);
        encode_report = rep;
        write_table_auto(encoded, out_path);
    }

    std::cout << "ingest: " << files.size() << " file(s), " << merged.row_count()
              << " rows, " << merged.col_count() + merged.pending_categorical.size()
              << " feature columns -> " << out_path << "\n";

    if (!report_path.empty()) {
        json vocab = json::array();
        for (const auto& v : merged.label_vocabulary()) vocab.push_back(v);
        const json config{{"command", "ingest"},
                          {"inputs", files},
                          {"out", out_path},
                          {"schema_policy", policy_name},
                          {"benign_token", benign_token}};
        json payload{{"rows", merged.row_count()},
                     {"label_vocabulary", std::move(vocab)},
                     {"row_defects_pending", merged.row_defects.empty()
                                                 ? 0
                                                 : static_cast<std::size_t>(std::count_if(
                                                       merged.row_defects.begin(),
                                                       merged.row_defects.end(),
                                                       [](std::uint8_t d) { return d != 0; }))}};
        if (encode_report.anything_happened())
            payload["encoding"] = cleaning_report_to_json(encode_report);
        write_report(report_path, make_envelope(config, seed, std::move(payload)));
    }
    return 0;
}

int cmd_clean(const std::string& in_path, const std::string& out_path, double threshold,
              const std::string& report_path, std::uint64_t seed) {
    require_input(in_path);
    const FlowTable table = load_table_auto(in_path);
    CleaningPolicy policy;
    policy.near_zero_threshold = threshold;
    auto [cleaned, report] = clean(table, policy);
    write_table_auto(cleaned, out_path);

    std::cout << "clean: dropped " << report.rows_dropped_missing << " missing + "
              << report.rows_dropped_nonfinite << " non-finite rows, "
              << report.columns_dropped_nearzero.size() << " near-zero column(s); "
              << cleaned.row_count() << " rows x " << cleaned.col_count()
              << " columns -> " << out_path << "\n";

    if (!report_path.empty()) {
        const json config{{"command", "clean"},
                          {"in", in_path},
                          {"out", out_path},
                          {"near_zero_threshold", threshold}};
        write_report(report_path,
                     make_envelope(config, seed, cleaning_report_to_json(report)));
    }
    return 0;
}

int cmd_resample(const std::string& in_path, const std::string& out_path,
                 const std::string& method, int k_neighbors, double target_fraction,
                 double keep_fraction, std::uint64_t seed, const std::string& report_path,
                 const std::string& provenance_path) {
    require_input(in_path);
    const FlowTable table = load_table_auto(in_path);

    FlowTable resampled;
    ResampleReport report;
    if (method == "smote") {
        SmoteConfig cfg;
        cfg.k_neighbors = k_neighbors;
        cfg.target_minority_fraction = target_fraction;
        cfg.seed = seed;
        std::tie(resampled, report) = smote(table, cfg);
    } else if (method == "undersample") {
        std::tie(resampled, report) = random_undersample(table, keep_fraction, seed);
    } else {
        throw DataError("resample: unknown method '" + method + "'");
    }
    write_table_auto(resampled, out_path);

    std::cout << "resample(" << method << "): " << report.synthetic_added << " added, "
              << report.rows_removed << " removed, minority fraction now "
              << format_double(report.resulting_fraction, 4) << " -> " << out_path << "\n";

    const json config{{"command", "resample"},   {"in", in_path},
                      {"out", out_path},         {"method", method},
                      {"k_neighbors", k_neighbors}, {"target_fraction", target_fraction},
                      {"keep_fraction", keep_fraction}};
    if (!report_path.empty())
        write_report(report_path,
                     make_envelope(config, seed, resample_report_to_json(report)));
    if (!provenance_path.empty()) {
        json rows = json::array();
        for (const auto& p : report.provenance)
            rows.push_back({p.source_row, p.neighbor_row, p.u});
        write_report(provenance_path,
                     make_envelope(config, seed, json{{"synthetic_rows", std::move(rows)}}));
    }
    return 0;
}

int cmd_select(const std::string& in_path, const std::string& method, std::size_t k,
               double alpha, double pair_threshold, const std::string& out_path,
               const std::string& report_path, bool print_text, std::uint64_t seed,
               LearnerFlags& flags) {
    require_input(in_path);
    const FlowTable table = load_table_auto(in_path);

    FeatureSubset subset;
    json payload;
    if (method == "tree") {
        ForestConfig cfg = flags.resolve(seed).forest;
        const ImportanceRanking ranking = tree_importances(table, cfg);
        subset = select_top_k(ranking, k == 0 ? ranking.feature_names.size() : k);
        json scores = json::object();
        for (std::size_t i = 0; i < ranking.feature_names.size(); ++i)
            scores[ranking.feature_names[i]] = ranking.scores[i];
        payload["importance"] = std::move(scores);
        if (print_text) {
            for (const std::size_t i : ranking.order)
                std::cout << pad_right(ranking.feature_names[i], 30)
                          << format_double(ranking.scores[i], 6) << "\n";
        }
    } else if (method == "anova") {
        const AnovaScores scores = anova_f_scores(table);
        std::vector<std::size_t> order(scores.f_values.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (scores.f_values[a] != scores.f_values[b])
                return scores.f_values[a] > scores.f_values[b];
            return a < b;
        });
        const std::size_t take = k == 0 ? order.size() : std::min(k, order.size());
        for (std::size_t i = 0; i < take; ++i)
            subset.names.push_back(table.feature_names[order[i]]);
        subset.provenance = "anova_f top-" + std::to_string(take);
        json fs_json = json::object();
        for (std::size_t i = 0; i < scores.f_values.size(); ++i)
            fs_json[table.feature_names[i]] =
                scores.infinite_flag[i] ? json("inf") : json(scores.f_values[i]);
        payload["f_scores"] = std::move(fs_json);
        if (print_text) {
            for (const std::size_t i : order)
                std::cout << pad_right(table.feature_names[i], 30)
                          << (scores.infinite_flag[i] ? "inf"
                                                      : format_double(scores.f_values[i], 4))
                          << "\n";
        }
    } else if (method == "corr") {
        const CorrelationMatrix corr = pearson_matrix(table, true);
        const std::size_t m = table.col_count();
        std::vector<double> target_corr(m);
        for (std::size_t i = 0; i < m; ++i) target_corr[i] = corr.at(i, m);
        subset = redundancy_filter(corr, target_corr, pair_threshold);
        if (k > 0 && subset.names.size() > k) subset.names.resize(k);
        json tc = json::object();
        for (std::size_t i = 0; i < m; ++i) tc[table.feature_names[i]] = target_corr[i];
        payload["target_correlation"] = std::move(tc);
    } else if (method == "logit") {
        const auto stats = logit_wald(table);
        subset = eliminate_by_pvalue(stats, alpha);
        if (k > 0 && subset.names.size() > k) subset.names.resize(k);
        json rows = json::array();
        for (const auto& cs : stats) {
            json row{{"feature", cs.feature}, {"coef", cs.coef}};
            auto put = [&](const char* key, const std::optional<double>& v) {
                row[key] = v ? json(*v) : json(nullptr);
            };
            put("std_err", cs.std_err);
            put("z", cs.z);
            put("p_value", cs.p_value);
            put("ci_low", cs.ci_low);
            put("ci_high", cs.ci_high);
            rows.push_back(std::move(row));
        }
        payload["coefficients"] = std::move(rows);
        if (print_text) std::cout << render_coefficient_table(stats);
    } else {
        throw DataError("select: unknown method '" + method + "'");
    }

    payload["subset"] = {{"names", subset.names}, {"provenance", subset.provenance}};
    if (!out_path.empty()) save_subset(subset, out_path);
    std::cout << "select(" << method << "): kept " << subset.names.size() << " feature(s)"
              << (out_path.empty() ? "" : " -> " + out_path) << "\n";

    if (!report_path.empty()) {
        const json config{{"command", "select"},       {"in", in_path},
                          {"method", method},          {"k", k},
                          {"alpha", alpha},            {"pair_threshold", pair_threshold},
                          {"out", out_path}};
        write_report(report_path, make_envelope(config, seed, std::move(payload)));
    }
    return 0;
}

int cmd_train(const std::string& in_path, const std::string& learner,
              const std::string& features_path, const std::string& out_path,
              std::uint64_t seed, LearnerFlags& flags) {
    require_input(in_path);
    const auto kind = learner_kind_from_name(learner);
    if (!kind) throw DataError("train: unknown learner '" + learner + "'");

    FlowTable table = load_table_auto(in_path);
    if (!features_path.empty()) {
        require_input(features_path);
        table = table.select_columns(load_subset(features_path).names);
    }

    const ModelSpec model = train(*kind, table, flags.resolve(seed));
    save_model(model, out_path);
    std::cout << "train(" << learner << "): " << table.row_count() << " rows x "
              << table.col_count() << " features -> " << out_path << "\n";
    return 0;
}

int cmd_evaluate(const std::string& in_path, const std::string& grid, const std::string& k_list,
                 const std::vector<std::string>& subset_paths, double test_fraction,
                 bool use_smote, const std::string& scope_name, int timing_reps,
                 const std::string& out_path, bool print_text, std::uint64_t seed,
                 LearnerFlags& flags) {
    require_input(in_path);
    const FlowTable table = load_table_auto(in_path);
    const auto learners = parse_learner_list(grid);

    std::vector<FeatureSubset> subsets;
    for (const auto& path : subset_paths) {
        require_input(path);
        subsets.push_back(load_subset(path));
    }
    if (!k_list.empty()) {
        ForestConfig rank_cfg = flags.resolve(seed).forest;
        rank_cfg.seed = mix_seed(seed, 0x4a2c, 0);
        const ImportanceRanking ranking = tree_importances(table, rank_cfg);
        for (const std::size_t k : parse_count_list(k_list))
            subsets.push_back(select_top_k(ranking, k));
    }
    if (subsets.empty()) {
        FeatureSubset all;
        all.names = table.feature_names;
        all.provenance = "all features";
        subsets.push_back(std::move(all));
    }

    BenchmarkConfig cfg;
    cfg.split.test_fraction = test_fraction;
    cfg.split.seed = seed;
    cfg.train = flags.resolve(seed);
    cfg.timing_reps = timing_reps;
    cfg.seed = seed;
    if (use_smote) {
        SmoteConfig smote_cfg;
        smote_cfg.seed = seed;
        cfg.smote = smote_cfg;
    }
    if (scope_name == "all")
        cfg.scope = ResampleScope::All;
    else if (scope_name == "none")
        cfg.scope = ResampleScope::None;
    else
        cfg.scope = ResampleScope::TrainOnly;

    const BenchmarkTable bench = run_benchmark(table, learners, subsets, cfg);
    if (print_text || out_path.empty()) std::cout << render_benchmark_text(bench);

    if (!out_path.empty()) {
        const json config{{"command", "evaluate"},
                          {"in", in_path},
                          {"grid", grid},
                          {"k", k_list},
                          {"subsets", subset_paths},
                          {"test_fraction", test_fraction},
                          {"smote", use_smote},
                          {"resample_scope", scope_name},
                          {"timing_reps", timing_reps},
                          {"learner_flags", flags.to_json()}};
        write_report(out_path, make_envelope(config, seed, benchmark_to_json(bench)));
        std::cout << "evaluate: " << bench.cells.size() << " grid cell(s) -> " << out_path
                  << "\n";
    }
    return 0;
}

int cmd_explain_ice(const std::string& model_path, const std::string& in_path,
                    const std::string& feature, int quantiles, std::size_t row_cap,
                    const std::string& out_path, std::uint64_t seed) {
    require_input(model_path);
    require_input(in_path);
    const ModelSpec model = load_model(model_path);
    FlowTable table = load_table_auto(in_path);
    if (table.feature_names != model.feature_names)
        table = table.select_columns(model.feature_names);

    IceConfig cfg;
    cfg.grid.quantiles = quantiles;
    cfg.row_cap = row_cap;
    cfg.seed = seed;
    const IceCurves curves = ice(model, table, feature, cfg);
    const std::string text = render_ice_text(curves);
    if (out_path.empty())
        std::cout << text;
    else
        write_text_atomic(out_path, text);
    std::cout << "explain ice: " << curves.curves.size() << " curve(s) over "
              << curves.grid.size() << " grid points"
              << (out_path.empty() ? "" : " -> " + out_path) << "\n";
    return 0;
}

int cmd_explain_surrogate(const std::string& model_path, const std::string& in_path,
                          int depth, const std::string& out_path,
                          const std::string& report_path, std::uint64_t seed) {
    require_input(model_path);
    require_input(in_path);
    const ModelSpec model = load_model(model_path);
    FlowTable table = load_table_auto(in_path);
    if (table.feature_names != model.feature_names)
        table = table.select_columns(model.feature_names);

    const SurrogateResult result = surrogate_tree(model, table, depth);
    const std::string text = "fidelity " + double_to_string(result.fidelity) + "\n" +
                             render_tree_text(result.tree, result.feature_names);
    if (out_path.empty())
        std::cout << text;
    else
        write_text_atomic(out_path, text);
    std::cout << "explain surrogate: fidelity " << format_double(result.fidelity, 4)
              << (out_path.empty() ? "" : " -> " + out_path) << "\n";

    if (!report_path.empty()) {
        const json config{{"command", "explain surrogate"},
                          {"model", model_path},
                          {"in", in_path},
                          {"depth", depth}};
        json nodes = json::array();
        for (const auto& n : result.tree.nodes)
            nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
        write_report(report_path,
                     make_envelope(config, seed,
                                   json{{"fidelity", result.fidelity},
                                        {"depth_cap", depth},
                                        {"nodes", std::move(nodes)}}));
    }
    return 0;
}

int cmd_simulate(const std::string& model_path, const std::string& stream_path,
                 const std::string& table_path, const std::string& policy_name,
                 std::size_t warmup, const std::string& out_path,
                 const std::string& write_stream_path, std::uint64_t seed) {
    require_input(model_path);
    const ModelSpec model = load_model(model_path);
    FeatureSubset subset;
    subset.names = model.feature_names;
    subset.provenance = "model:" + model_path;
    const CompiledModel compiled = compile(model, subset);

    FlowStream stream;
    if (!stream_path.empty()) {
        require_input(stream_path);
        stream = read_stream(stream_path);
        if (stream.slots() != compiled.feature_names.size())
            throw DataError("simulate: stream has " + std::to_string(stream.slots()) +
                            " slots, model needs " +
                            std::to_string(compiled.feature_names.size()));
    } else if (!table_path.empty()) {
        require_input(table_path);
        const FlowTable table = load_table_auto(table_path);
        stream = FlowStream::from_table(table, model.feature_names, true);
    } else {
        throw DataError("simulate: give --stream or --table");
    }
    if (!write_stream_path.empty()) write_stream(stream, write_stream_path);

    ReplayConfig cfg;
    cfg.policy = policy_name == "log_only" ? ReplayPolicy::LogOnly : ReplayPolicy::Block;
    cfg.warmup = warmup;
    const SimReport report = replay(compiled, stream, cfg);
    std::cout << render_sim_report_text(report);

    if (!out_path.empty()) {
        const json config{{"command", "simulate"}, {"model", model_path},
                          {"stream", stream_path}, {"table", table_path},
                          {"policy", policy_name}, {"warmup", warmup}};
        write_report(out_path, make_envelope(config, seed, sim_report_to_json(report)));
        std::cout << "simulate: report -> " << out_path << "\n";
    }
    return 0;
}

int cmd_sweep(const std::string& in_path, const std::string& learner,
              const std::string& counts, double test_fraction, const std::string& out_path,
              std::uint64_t seed, LearnerFlags& flags) {
    require_input(in_path);
    const auto kind = learner_kind_from_name(learner);
    if (!kind) throw DataError("sweep: unknown learner '" + learner + "'");
    const FlowTable table = load_table_auto(in_path);

    SweepConfig cfg;
    cfg.split.test_fraction = test_fraction;
    cfg.split.seed = seed;
    cfg.train = flags.resolve(seed);
    cfg.ranking_forest = cfg.train.forest;
    cfg.seed = seed;
    const auto rows = feature_count_sweep(table, *kind, parse_count_list(counts), cfg);

    std::cout << pad_right("features", 10) << pad_left("recall", 10)
              << pad_left("accuracy", 10) << pad_left("flows/s", 14) << "\n";
    for (const auto& row : rows) {
        std::cout << pad_right(std::to_string(row.feature_count), 10);
        if (!row.error.empty()) {
            std::cout << "  error: " << row.error << "\n";
            continue;
        }
        std::cout << pad_left(row.recall ? format_double(*row.recall, 4) : "undef", 10)
                  << pad_left(row.accuracy ? format_double(*row.accuracy, 4) : "undef", 10)
                  << pad_left(row.throughput_fps ? format_double(*row.throughput_fps, 0)
                                                 : "undef",
                              14)
                  << "\n";
    }

    if (!out_path.empty()) {
        const json config{{"command", "sweep"},   {"in", in_path},
                          {"learner", learner},   {"counts", counts},
                          {"test_fraction", test_fraction}};
        write_report(out_path, make_envelope(config, seed, sweep_to_json(rows)));
        std::cout << "sweep: report -> " << out_path << "\n";
    }
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{std::string(kToolName) +
                 " - flow-record attack detection and firewall pre-filter toolkit"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);

    CommonOpts common;
    app.add_option("--seed", common.seed, "seed echoed into every artifact")
        ->default_val(42);
    app.add_option("--threads", common.threads, "worker cap (0 = logical cores)")
        ->default_val(0);

    // ingest
    std::vector<std::string> ingest_inputs;
    std::string ingest_out, ingest_policy = "infer", ingest_benign = "BENIGN", ingest_report;
    auto* ingest = app.add_subcommand("ingest", "load and merge flow-record CSV files");
    ingest->add_option("--in", ingest_inputs, "CSV files or directories")->required();
    ingest->add_option("--out", ingest_out, "merged table (.csv or .bin)")->required();
    ingest->add_option("--schema-policy", ingest_policy, "strict|infer")
        ->check(CLI::IsMember({"strict", "infer"}));
    ingest->add_option("--benign-token", ingest_benign, "label treated as benign");
    ingest->add_option("--report", ingest_report, "write an ingest report here");

    // clean
    std::string clean_in, clean_out, clean_report;
    double clean_threshold = 0.95;
    auto* clean_cmd = app.add_subcommand("clean", "drop defective rows, encode, prune columns");
    clean_cmd->add_option("--in", clean_in)->required();
    clean_cmd->add_option("--out", clean_out)->required();
    clean_cmd->add_option("--near-zero-threshold", clean_threshold,
                          "drop columns with zero-fraction >= this");
    clean_cmd->add_option("--report", clean_report);

    // resample
    std::string rs_in, rs_out, rs_method = "smote", rs_report, rs_prov;
    int rs_k = 5;
    double rs_target = 0.5, rs_keep = 0.5;
    auto* rs = app.add_subcommand("resample", "SMOTE oversampling or random undersampling");
    rs->add_option("--in", rs_in)->required();
    rs->add_option("--out", rs_out)->required();
    rs->add_option("--method", rs_method)->check(CLI::IsMember({"smote", "undersample"}));
    rs->add_option("--k-neighbors", rs_k);
    rs->add_option("--target-fraction", rs_target, "minority fraction after SMOTE");
    rs->add_option("--keep-fraction", rs_keep, "majority fraction kept by undersample");
    rs->add_option("--report", rs_report);
    rs->add_option("--provenance", rs_prov, "synthetic-row provenance log");

    // select
    std::string sel_in, sel_method = "tree", sel_out, sel_report;
    std::size_t sel_k = 0;
    double sel_alpha = 0.05, sel_pair = 0.9;
    bool sel_text = false;
    LearnerFlags sel_flags;
    auto* sel = app.add_subcommand("select", "rank and select features");
    sel->add_option("--in", sel_in)->required();
    sel->add_option("--method", sel_method)
        ->check(CLI::IsMember({"tree", "anova", "corr", "logit"}));
    sel->add_option("--k", sel_k, "keep this many features (0 = all that qualify)");
    sel->add_option("--alpha", sel_alpha, "p-value cutoff for logit");
    sel->add_option("--pair-threshold", sel_pair, "correlation redundancy cutoff");
    sel->add_option("--out", sel_out, "subset file");
    sel->add_option("--report", sel_report);
    sel->add_flag("--text", sel_text, "print the full ranking/table");
    sel_flags.attach(sel);

    // train
    std::string tr_in, tr_learner, tr_features, tr_out;
    LearnerFlags tr_flags;
    auto* tr = app.add_subcommand("train", "train one model");
    tr->add_option("--in", tr_in)->required();
    tr->add_option("--learner", tr_learner, "nb|knn|logreg|cart|rf|ada|gbt")->required();
    tr->add_option("--features", tr_features, "subset file; default all columns");
    tr->add_option("--out", tr_out, "model file")->required();
    tr_flags.attach(tr);

    // evaluate
    std::string ev_in, ev_grid = "nb,knn,logreg,cart,rf,ada,gbt", ev_k, ev_scope = "train-only",
                ev_out;
    std::vector<std::string> ev_subsets;
    double ev_fraction = 0.2;
    bool ev_smote = false, ev_text = false;
    int ev_reps = 3;
    LearnerFlags ev_flags;
    auto* ev = app.add_subcommand("evaluate", "benchmark learners x feature subsets");
    ev->add_option("--in", ev_in)->required();
    ev->add_option("--grid", ev_grid, "comma-separated learners");
    ev->add_option("--k", ev_k, "comma-separated feature counts (impurity ranking)");
    ev->add_option("--subsets", ev_subsets, "subset files");
    ev->add_option("--test-fraction", ev_fraction);
    ev->add_flag("--smote", ev_smote, "rebalance with SMOTE");
    ev->add_option("--resample-scope", ev_scope, "train-only|all|none")
        ->check(CLI::IsMember({"train-only", "all", "none"}));
    ev->add_option("--timing-reps", ev_reps);
    ev->add_option("--out", ev_out, "benchmark report");
    ev->add_flag("--text", ev_text, "print the table");
    ev_flags.attach(ev);

    // explain
    auto* ex = app.add_subcommand("explain", "model interpretability");
    ex->require_subcommand(1);
    std::string ice_model, ice_in, ice_feature, ice_out;
    int ice_quantiles = 20;
    std::size_t ice_cap = 10000;
    auto* ex_ice = ex->add_subcommand("ice", "conditional expectation curves + pdp");
    ex_ice->add_option("--model", ice_model)->required();
    ex_ice->add_option("--in", ice_in)->required();
    ex_ice->add_option("--feature", ice_feature)->required();
    ex_ice->add_option("--grid-quantiles", ice_quantiles);
    ex_ice->add_option("--row-cap", ice_cap);
    ex_ice->add_option("--out", ice_out);

    std::string sur_model, sur_in, sur_out, sur_report;
    int sur_depth = 3;
    auto* ex_sur = ex->add_subcommand("surrogate", "distill a shallow decision tree");
    ex_sur->add_option("--model", sur_model)->required();
    ex_sur->add_option("--in", sur_in)->required();
    ex_sur->add_option("--depth", sur_depth);
    ex_sur->add_option("--out", sur_out);
    ex_sur->add_option("--report", sur_report);

    // simulate
    std::string sim_model, sim_stream, sim_table, sim_policy = "block", sim_out, sim_pack;
    std::size_t sim_warmup = 10000;
    auto* sim = app.add_subcommand("simulate", "replay a flow stream through a compiled model");
    sim->add_option("--model", sim_model)->required();
    sim->add_option("--stream", sim_stream, "binary or CSV stream file");
    sim->add_option("--table", sim_table, "labeled table to replay instead of a stream");
    sim->add_option("--policy", sim_policy)->check(CLI::IsMember({"block", "log_only"}));
    sim->add_option("--warmup", sim_warmup);
    sim->add_option("--out", sim_out, "simulation report");
    sim->add_option("--write-stream", sim_pack, "persist the replayed stream");

    // sweep
    std::string sw_in, sw_learner = "cart", sw_counts = "30,20,10,5", sw_out;
    double sw_fraction = 0.2;
    LearnerFlags sw_flags;
    auto* sw = app.add_subcommand("sweep", "recall/throughput across feature counts");
    sw->add_option("--in", sw_in)->required();
    sw->add_option("--learner", sw_learner, "compilable kind: cart|rf|gbt|ada|logreg");
    sw->add_option("--counts", sw_counts);
    sw->add_option("--test-fraction", sw_fraction);
    sw->add_option("--out", sw_out);
    sw_flags.attach(sw);

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back(kToolName);
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForVersion& e) {
        std::cout << app.version() << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help() << "\n";
        return 1;
    }

    if (common.threads > 0) par::set_max_threads(common.threads);

    try {
        if (*ingest)
            return cmd_ingest(ingest_inputs, ingest_out, ingest_policy, ingest_benign,
                              ingest_report, common.seed);
        if (*clean_cmd)
            return cmd_clean(clean_in, clean_out, clean_threshold, clean_report, common.seed);
        if (*rs)
            return cmd_resample(rs_in, rs_out, rs_method, rs_k, rs_target, rs_keep,
                                common.seed, rs_report, rs_prov);
        if (*sel)
            return cmd_select(sel_in, sel_method, sel_k, sel_alpha, sel_pair, sel_out,
                              sel_report, sel_text, common.seed, sel_flags);
        if (*tr)
            return cmd_train(tr_in, tr_learner, tr_features, tr_out, common.seed, tr_flags);
        if (*ev)
            return cmd_evaluate(ev_in, ev_grid, ev_k, ev_subsets, ev_fraction, ev_smote,
                                ev_scope, ev_reps, ev_out, ev_text, common.seed, ev_flags);
        if (*ex) {
            if (*ex_ice)
                return cmd_explain_ice(ice_model, ice_in, ice_feature, ice_quantiles, ice_cap,
                                       ice_out, common.seed);
            return cmd_explain_surrogate(sur_model, sur_in, sur_depth, sur_out, sur_report,
                                         common.seed);
        }
        if (*sim)
            return cmd_simulate(sim_model, sim_stream, sim_table, sim_policy, sim_warmup,
                                sim_out, sim_pack, common.seed);
        if (*sw)
            return cmd_sweep(sw_in, sw_learner, sw_counts, sw_fraction, sw_out, common.seed,
                             sw_flags);
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace flowsentry
