#pragma once

#include "flowsentry/dataset.hpp"
#include "flowsentry/eval.hpp"
#include "flowsentry/featsel.hpp"
#include "flowsentry/learners.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace flowsentry {

/// Flattened reduced-feature evaluator. Per-flow evaluation walks
/// preallocated arrays only, no allocation; verdicts are bit-identical to
/// the source ModelSpec because both paths share the same expressions.
struct CompiledModel {
    enum class Kind { Tree, Forest, Gbt, AdaBoost, Linear };
    Kind kind = Kind::Tree;
    std::vector<std::string> feature_names; // slot order of incoming flows

    // tree ensembles: all trees concatenated, one root offset each
    std::vector<TreeNode> nodes;
    std::vector<std::int32_t> roots;
    double eta = 1.0;        // Gbt leaf scale
    double base_score = 0.0; // Gbt intercept

    // linear: weights on the standardized scale plus the training stats
    std::vector<double> weights;
    std::vector<double> means, stds;

    double decision_threshold = 0.5;

    double score(const double* slots) const;
    bool is_attack(const double* slots) const { return score(slots) >= decision_threshold; }
};

/// The model must have been trained on exactly `subset` (same names, same
/// order); otherwise the caller is told to retrain. KNN and naive Bayes do
/// not flatten: tree and linear kinds only.
CompiledModel compile(const ModelSpec& model, const FeatureSubset& subset);

/// Compares compiled vs source verdicts on n random probes drawn from the
/// given per-slot ranges. Returns the number of mismatches (0 expected).
std::size_t verify_equivalence(const ModelSpec& model, const CompiledModel& compiled,
                               std::size_t n_probes, std::uint64_t seed,
                               const std::vector<std::pair<double, double>>& slot_ranges);

/// A replayable flow stream: values for the reduced feature slots, plus an
/// optional true label per flow for scoring.
struct FlowStream {
    std::vector<std::string> feature_names;
    std::vector<double> values; // n x slots, row-major
    std::vector<std::uint8_t> labels;

    std::size_t slots() const { return feature_names.size(); }
    std::size_t size() const { return slots() ? values.size() / slots() : 0; }
    bool has_labels() const { return !labels.empty(); }
    const double* flow(std::size_t i) const { return values.data() + i * slots(); }

    static FlowStream from_table(const FlowTable& table, const std::vector<std::string>& features,
                                 bool with_labels);
};

/// Binary stream format: 16-byte header (magic "FWSTRM01", version,
/// label flag, slot count), then per flow slot doubles (LE) and an optional
/// label byte. CSV files with a header row are accepted as a fallback.
void write_stream(const FlowStream& stream, const std::string& path);
FlowStream read_stream(const std::string& path);

enum class ReplayPolicy { Block, LogOnly };

struct ReplayConfig {
    ReplayPolicy policy = ReplayPolicy::Block;
    std::size_t warmup = 10000; // excluded from throughput; skipped for short streams
};

struct SimReport {
    std::uint64_t flows_processed = 0;
    std::uint64_t allowed = 0;
    std::uint64_t blocked = 0;           // 0 under log_only
    std::uint64_t predicted_attacks = 0; // verdicts, independent of policy
    std::optional<double> throughput_fps;
    std::optional<double> latency_p50_ns;
    std::optional<double> latency_p99_ns;
    std::optional<ConfusionMatrix> confusion; // when the stream is labeled
    std::optional<double> recall;
    std::uint64_t warmup_flows = 0;
    ReplayPolicy policy = ReplayPolicy::Block;
};

/// Single pass over the stream. Verdicts are deterministic; timing is
/// measured with a monotonic clock and excluded from determinism claims.
SimReport replay(const CompiledModel& compiled, const FlowStream& stream,
                 const ReplayConfig& cfg = {});

struct SweepRow {
    std::size_t feature_count = 0;
    FeatureSubset subset;
    std::optional<double> recall;
    std::optional<double> throughput_fps;
    std::optional<double> accuracy;
    std::string error;
};

struct SweepConfig {
    SplitConfig split;
    TrainOptions train;
    ForestConfig ranking_forest; // ranks features once, on the training part
    std::uint64_t seed = 42;
};

/// For each count: top-k features by impurity ranking, retrain the family,
/// compile, replay the held-out rows as a labeled stream.
std::vector<SweepRow> feature_count_sweep(const FlowTable& table, LearnerKind family,
                                          const std::vector<std::size_t>& counts,
                                          const SweepConfig& cfg);

std::string render_sim_report_text(const SimReport& report);
nlohmann::ordered_json sim_report_to_json(const SimReport& report);
nlohmann::ordered_json sweep_to_json(const std::vector<SweepRow>& rows);

} // namespace flowsentry
