#pragma once

#include "flowsentry/learners.hpp"

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace flowsentry::detail {

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + e^z) without overflow.
inline double log1pexp(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

struct KnnVote {
    std::size_t votes1 = 0;
    double dist0 = 0.0, dist1 = 0.0;
    std::uint8_t label = 0;
    double proba = 0.0;
};

KnnVote knn_vote(const KnnModel& model, const double* query_std,
                 std::vector<std::pair<double, std::size_t>>& scratch);

/// Raw (pre-link) scores shared by the model and compiled evaluators so both
/// paths round identically: summation in tree order, division applied last.
inline double forest_proba(const ForestModel& m, const double* row) {
    double sum = 0.0;
    for (const auto& t : m.trees) sum += t.predict_value(row);
    return sum / static_cast<double>(m.trees.size());
}

inline double gbt_raw_score(const GbtModel& m, const double* row) {
    double sum = 0.0;
    for (const auto& t : m.trees) sum += t.predict_value(row);
    return m.base_score + m.eta * sum;
}

inline double adaboost_margin(const AdaBoostModel& m, const double* row) {
    double margin = 0.0;
    for (std::size_t t = 0; t < m.stumps.size(); ++t) {
        const double vote = m.stumps[t].predict_value(row) >= 0.5 ? 1.0 : -1.0;
        margin += m.alphas[t] * vote;
    }
    return margin;
}

inline double logreg_proba(const LogRegModel& m, const double* row) {
    double z = m.weights[0];
    for (std::size_t j = 0; j + 1 < m.weights.size(); ++j)
        z += m.weights[j + 1] * ((row[j] - m.stats.means[j]) / m.stats.std_devs[j]);
    return sigmoid(z);
}

} // namespace flowsentry::detail
