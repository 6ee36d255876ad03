#pragma once

#include "flowsentry/dataset.hpp"
#include "flowsentry/featsel.hpp"
#include "flowsentry/learners.hpp"
#include "flowsentry/resample.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace flowsentry {

struct SplitConfig {
    double test_fraction = 0.2;
    std::uint64_t seed = 42;
};

/// Per-class proportional train/test partition: test takes
/// round(fraction * class size), at least 1 and at most size-1 per class.
/// Disjoint, exhaustive, deterministic by seed; original row order kept.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split_indices(
    const std::vector<std::uint8_t>& labels, const SplitConfig& cfg);

std::pair<FlowTable, FlowTable> stratified_split(const FlowTable& table, const SplitConfig& cfg);

struct ConfusionMatrix {
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::uint64_t total() const { return tp + fp + tn + fn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

/// Positive class is 1 (attack). Lengths must match.
ConfusionMatrix confusion(const std::vector<std::uint8_t>& y_true,
                          const std::vector<std::uint8_t>& y_pred);

/// Zero-denominator metrics come back undefined, never silently 0.
struct MetricsReport {
    std::optional<double> accuracy, precision, recall, f1;
    ConfusionMatrix cm;
};

MetricsReport metrics(const ConfusionMatrix& cm);

enum class ResampleScope { None, TrainOnly, All };

struct BenchmarkConfig {
    SplitConfig split;
    TrainOptions train;
    std::optional<SmoteConfig> smote; // applied per ResampleScope when set
    ResampleScope scope = ResampleScope::TrainOnly;
    int timing_reps = 3; // median wall time over this many repetitions
    std::uint64_t seed = 42;
};

struct BenchmarkCell {
    std::string learner;
    std::string subset_provenance;
    std::size_t feature_count = 0;
    MetricsReport metrics;
    double train_seconds = 0.0;
    double predict_seconds = 0.0;
    std::string error; // nonempty when this cell failed; the grid continues
};

struct BenchmarkTable {
    std::vector<BenchmarkCell> cells; // full grid, subset-major then learner
};

/// One shared stratified split across the whole grid; optional train-only
/// SMOTE per subset; per-cell timings by monotonic clock. Cell errors are
/// captured, never propagated.
BenchmarkTable run_benchmark(const FlowTable& table, const std::vector<LearnerKind>& learners,
                             const std::vector<FeatureSubset>& subsets,
                             const BenchmarkConfig& cfg);

/// Aligned text with the reference column set (Accuracy %, Precision,
/// Recall, FN) plus timings. Undefined metrics render as an em dash.
std::string render_benchmark_text(const BenchmarkTable& table);

nlohmann::ordered_json metrics_to_json(const MetricsReport& m);
nlohmann::ordered_json benchmark_to_json(const BenchmarkTable& table);

} // namespace flowsentry
