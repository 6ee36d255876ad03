#include "flowsentry/eval.hpp"

#include "flowsentry/errors.hpp"
#include "flowsentry/parallel.hpp"
#include "flowsentry/rng.hpp"
#include "flowsentry/textutil.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace flowsentry {

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split_indices(
    const std::vector<std::uint8_t>& labels, const SplitConfig& cfg) {
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
        throw DataError("stratified_split: test_fraction must be in (0, 1)");

    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t r = 0; r < labels.size(); ++r) by_class[labels[r]].push_back(r);
    for (int c = 0; c < 2; ++c)
        if (by_class[c].size() < 2)
            throw DataError("stratified_split: class " + std::to_string(c) +
                            " has fewer than 2 rows");

    std::vector<std::size_t> train_idx, test_idx;
    for (int c = 0; c < 2; ++c) {
        auto rows = by_class[c];
        SplitMix64 rng(mix_seed(cfg.seed, 0x59117, static_cast<std::uint64_t>(c)));
        rng.shuffle(rows);
        std::size_t n_test = static_cast<std::size_t>(
            std::llround(cfg.test_fraction * static_cast<double>(rows.size())));
        n_test = std::clamp<std::size_t>(n_test, 1, rows.size() - 1);
        test_idx.insert(test_idx.end(), rows.begin(), rows.begin() + n_test);
        train_idx.insert(train_idx.end(), rows.begin() + n_test, rows.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return {std::move(train_idx), std::move(test_idx)};
}

std::pair<FlowTable, FlowTable> stratified_split(const FlowTable& table, const SplitConfig& cfg) {
    auto [train_idx, test_idx] = stratified_split_indices(table.labels, cfg);
    return {table.select_rows(train_idx), table.select_rows(test_idx)};
}

ConfusionMatrix confusion(const std::vector<std::uint8_t>& y_true,
                          const std::vector<std::uint8_t>& y_pred) {
    if (y_true.size() != y_pred.size())
        throw DataError("confusion: length mismatch " + std::to_string(y_true.size()) +
                        " vs " + std::to_string(y_pred.size()));
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_pred[i]) {
            if (y_true[i])
                ++cm.tp;
            else
                ++cm.fp;
        } else {
            if (y_true[i])
                ++cm.fn;
            else
                ++cm.tn;
        }
    }
    return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw DataError("metrics: empty confusion matrix");
    MetricsReport m;
    m.cm = cm;
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    if (cm.tp + cm.fp > 0)
        m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
    if (cm.tp + cm.fn > 0)
        m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    if (m.precision && m.recall && *m.precision + *m.recall > 0.0)
        m.f1 = 2.0 * (*m.precision * *m.recall) / (*m.precision + *m.recall);
    return m;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Median wall time of reps runs of fn; the last result is kept (all runs are
// identical by the determinism contract).
template <typename Fn>
double median_time(int reps, Fn&& fn) {
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(reps));
    for (int i = 0; i < reps; ++i) {
        const auto start = std::chrono::steady_clock::now();
        fn();
        times.push_back(seconds_since(start));
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

} // namespace

BenchmarkTable run_benchmark(const FlowTable& table, const std::vector<LearnerKind>& learners,
                             const std::vector<FeatureSubset>& subsets,
                             const BenchmarkConfig& cfg) {
    for (const auto& subset : subsets)
        for (const auto& name : subset.names)
            if (!table.column_index(name))
                throw DataError("run_benchmark: subset feature '" + name +
                                "' not in the table");

    // One split, shared by every grid cell for comparability.
    const auto [train_idx, test_idx] = stratified_split_indices(table.labels, cfg.split);

    BenchmarkTable out;
    out.cells.resize(subsets.size() * learners.size());

    for (std::size_t s = 0; s < subsets.size(); ++s) {
        const FlowTable projected = table.select_columns(subsets[s].names);
        FlowTable train_part = projected.select_rows(train_idx);
        FlowTable test_part = projected.select_rows(test_idx);

        if (cfg.smote) {
            SmoteConfig smote_cfg = *cfg.smote;
            smote_cfg.seed = mix_seed(cfg.seed, 0x507e3, s);
            if (cfg.scope == ResampleScope::TrainOnly) {
                train_part = smote(train_part, smote_cfg).first;
            } else if (cfg.scope == ResampleScope::All) {
                // Leakage-prone: synthetic rows blend into held-out data.
                // Exposed because the reference workflow resamples first.
                FlowTable whole = smote(projected, smote_cfg).first;
                auto split_cfg = cfg.split;
                auto [tr, te] = stratified_split_indices(whole.labels, split_cfg);
                train_part = whole.select_rows(tr);
                test_part = whole.select_rows(te);
            }
        }

        par::parallel_for(learners.size(), 1, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t l = lo; l < hi; ++l) {
                BenchmarkCell& cell = out.cells[s * learners.size() + l];
                cell.learner = learner_kind_name(learners[l]);
                cell.subset_provenance = subsets[s].provenance;
                cell.feature_count = subsets[s].names.size();
                try {
                    TrainOptions opts = cfg.train;
                    opts.forest.seed = mix_seed(cfg.seed, 0x9b1d, s * learners.size() + l);

                    ModelSpec model;
                    cell.train_seconds = median_time(cfg.timing_reps, [&] {
                        model = train(learners[l], train_part, opts);
                    });
                    std::vector<std::uint8_t> pred;
                    cell.predict_seconds = median_time(cfg.timing_reps, [&] {
                        pred = predict(model, test_part);
                    });
                    cell.metrics = metrics(confusion(test_part.labels, pred));
                } catch (const std::exception& e) {
                    cell.error = e.what();
                }
            }
        });
    }
    return out;
}

std::string render_benchmark_text(const BenchmarkTable& table) {
    constexpr const char* kUndefined = "—";
    auto percent = [&](const std::optional<double>& v) {
        return v ? format_double(*v * 100.0, 5) : std::string(kUndefined);
    };
    auto ratio = [&](const std::optional<double>& v) {
        return v ? format_double(*v, 2) : std::string(kUndefined);
    };

    std::string out;
    out += pad_right("Learner", 10) + pad_right("Features", 10) + pad_left("Accuracy", 12) +
           pad_left("Precision", 11) + pad_left("Recall", 9) + pad_left("FN", 10) +
           pad_left("Train(s)", 11) + pad_left("Predict(s)", 12) + "\n";
    for (const auto& cell : table.cells) {
        out += pad_right(cell.learner, 10);
        out += pad_right(std::to_string(cell.feature_count), 10);
        if (!cell.error.empty()) {
            out += "  error: " + cell.error + "\n";
            continue;
        }
        out += pad_left(percent(cell.metrics.accuracy), 12);
        out += pad_left(ratio(cell.metrics.precision), 11);
        out += pad_left(ratio(cell.metrics.recall), 9);
        out += pad_left(std::to_string(cell.metrics.cm.fn), 10);
        out += pad_left(format_double(cell.train_seconds, 4), 11);
        out += pad_left(format_double(cell.predict_seconds, 4), 12);
        out += '\n';
    }
    return out;
}

nlohmann::ordered_json metrics_to_json(const MetricsReport& m) {
    nlohmann::ordered_json j{{"confusion",
                              {{"tp", m.cm.tp}, {"fp", m.cm.fp}, {"tn", m.cm.tn}, {"fn", m.cm.fn}}}};
    auto put = [&](const char* key, const std::optional<double>& v) {
        j[key] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    put("accuracy", m.accuracy);
    put("precision", m.precision);
    put("recall", m.recall);
    put("f1", m.f1);
    return j;
}

nlohmann::ordered_json benchmark_to_json(const BenchmarkTable& table) {
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& cell : table.cells) {
        nlohmann::ordered_json j{{"learner", cell.learner},
                                 {"feature_count", cell.feature_count},
                                 {"subset", cell.subset_provenance}};
        if (cell.error.empty()) {
            j["metrics"] = metrics_to_json(cell.metrics);
            j["timing"] = {{"train_seconds", cell.train_seconds},
                           {"predict_seconds", cell.predict_seconds}};
        } else {
            j["error"] = cell.error;
        }
        cells.push_back(std::move(j));
    }
    return nlohmann::ordered_json{{"cells", std::move(cells)}};
}

} // namespace flowsentry
