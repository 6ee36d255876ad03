#pragma once

#include "flowsentry/dataset.hpp"
#include "flowsentry/learners.hpp"

#include <optional>
#include <string>
#include <vector>

namespace flowsentry {

/// Symmetric Pearson matrix. Constant columns are flagged degenerate and
/// correlate 0 with everything (their diagonal stays 1 only when sensible).
struct CorrelationMatrix {
    std::vector<std::string> feature_names;
    std::vector<double> values; // row-major, n x n
    std::vector<std::uint8_t> degenerate;

    std::size_t size() const { return feature_names.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * size() + j]; }
};

/// When include_target is set, the binary label joins as the last column
/// under the schema's label name, giving each feature's target correlation.
CorrelationMatrix pearson_matrix(const FlowTable& table, bool include_target = false);

struct AnovaScores {
    std::vector<double> f_values;            // +inf sentinel where flagged
    std::vector<std::uint8_t> infinite_flag; // zero within-class variance
};

/// One-way F per feature with binary grouping by label.
AnovaScores anova_f_scores(const FlowTable& table);

struct ImportanceRanking {
    std::vector<std::string> feature_names;
    std::vector<double> scores;      // aligned with feature_names, sums to 1
    std::vector<std::size_t> order;  // indices sorted by score desc, index asc
};

/// Mean decrease in Gini impurity over a seeded forest, normalized to sum 1.
ImportanceRanking tree_importances(const FlowTable& table, const ForestConfig& cfg = {});

/// Per-feature Wald statistics from an unpenalized logistic fit (raw feature
/// scale, ridge jitter for invertibility only). Entries loading on a
/// numerically null direction of the information matrix come back undefined.
struct CoefficientStats {
    std::string feature;
    double coef = 0.0;
    std::optional<double> std_err;
    std::optional<double> z;
    std::optional<double> p_value;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
};

inline constexpr double kZCritical95 = 1.959964;

std::vector<CoefficientStats> logit_wald(const FlowTable& table,
                                         const LogRegConfig& cfg = {});

struct FeatureSubset {
    std::vector<std::string> names;
    std::string provenance;
};

/// Keeps features with a defined p-value below alpha. Undefined entries are
/// excluded and listed in the provenance as questionable.
FeatureSubset eliminate_by_pvalue(const std::vector<CoefficientStats>& stats, double alpha);

/// Greedy pass in descending |target correlation|: keep a feature unless it
/// correlates above pair_threshold with one already kept.
FeatureSubset redundancy_filter(const CorrelationMatrix& corr,
                                const std::vector<double>& target_corr,
                                double pair_threshold = 0.9);

FeatureSubset select_top_k(const ImportanceRanking& ranking, std::size_t k);

// The three methods produce three rankings; combining them is left to the
// operator, with these helpers.
FeatureSubset subset_union(const FeatureSubset& a, const FeatureSubset& b);
FeatureSubset subset_intersection(const FeatureSubset& a, const FeatureSubset& b);

/// Fig-style aligned text: Coef., Std.Err., z, P>|z|, [0.025, 0.975];
/// undefined entries print as nan.
std::string render_coefficient_table(const std::vector<CoefficientStats>& stats);

} // namespace flowsentry
