#pragma once

#include "flowsentry/learners.hpp"
#include "flowsentry/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace flowsentry::detail {

inline constexpr double kMinSplitGain = 1e-12;

inline double gini_impurity(double w1, double wt) {
    if (wt <= 0.0) return 0.0;
    const double p1 = w1 / wt;
    const double p0 = 1.0 - p1;
    return 1.0 - p1 * p1 - p0 * p0;
}

/// Greedy CART on weighted Gini impurity. Candidate thresholds sit at
/// midpoints between consecutive distinct sorted values; x > threshold goes
/// right. Ties in gain resolve to the lower feature index, then the lower
/// threshold. Rows are sorted by (value, row index) so results are bit-stable.
class GiniTreeBuilder {
public:
    struct Params {
        int max_depth = 12;
        std::size_t min_leaf = 1;
        std::size_t min_split = 2;
        std::size_t mtry = 0; // 0 or >= cols means: consider every feature
    };

    GiniTreeBuilder(const double* data, std::size_t cols, const std::uint8_t* labels,
                    const double* weights, Params params, SplitMix64* rng,
                    std::vector<double>* importance)
        : data_(data), cols_(cols), labels_(labels), weights_(weights), params_(params),
          rng_(rng), importance_(importance) {}

    TreeModel build(std::vector<std::size_t> rows);

private:
    struct Best {
        bool found = false;
        std::size_t feature = 0;
        double threshold = 0.0;
        double gain = 0.0;
    };

    std::int32_t build_node(std::vector<std::size_t>& rows, int depth);
    Best best_split(const std::vector<std::size_t>& rows, double node_w, double node_w1);
    void candidate_features(std::vector<std::size_t>& out);

    const double* data_;
    std::size_t cols_;
    const std::uint8_t* labels_;
    const double* weights_;
    Params params_;
    SplitMix64* rng_;
    std::vector<double>* importance_;
    double root_weight_ = 0.0;
    std::vector<TreeNode> nodes_;
    std::vector<std::pair<double, std::size_t>> scratch_; // (value, row)
    std::vector<std::size_t> feature_scratch_;
};

/// Regression tree over per-row gradient/hessian statistics for boosted
/// logistic loss: leaf weight -G/(H+lambda), split gain
/// 0.5*(GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)) - gamma.
class GradTreeBuilder {
public:
    struct Params {
        int max_depth = 6;
        std::size_t min_leaf = 1;
        double lambda = 1.0;
        double gamma = 0.0;
    };

    GradTreeBuilder(const double* data, std::size_t cols, const double* grad,
                    const double* hess, Params params)
        : data_(data), cols_(cols), grad_(grad), hess_(hess), params_(params) {}

    TreeModel build(std::vector<std::size_t> rows);

private:
    struct Best {
        bool found = false;
        std::size_t feature = 0;
        double threshold = 0.0;
        double gain = 0.0;
    };

    std::int32_t build_node(std::vector<std::size_t>& rows, int depth);
    Best best_split(const std::vector<std::size_t>& rows, double g_sum, double h_sum);

    const double* data_;
    std::size_t cols_;
    const double* grad_;
    const double* hess_;
    Params params_;
    std::vector<TreeNode> nodes_;
    std::vector<std::pair<double, std::size_t>> scratch_;
};

} // namespace flowsentry::detail
