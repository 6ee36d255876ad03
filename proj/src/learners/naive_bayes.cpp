#include "flowsentry/errors.hpp"
#include "flowsentry/learners.hpp"

#include <algorithm>
#include <cmath>

namespace flowsentry {

ModelSpec train_gaussian_nb(const FlowTable& train, const NaiveBayesConfig& cfg) {
    const std::size_t n = train.row_count();
    const std::size_t m = train.col_count();
    if (n == 0) throw DataError("train_gaussian_nb: empty table");

    std::array<std::size_t, 2> counts{0, 0};
    for (const auto y : train.labels) ++counts[y];
    if (counts[0] == 0 || counts[1] == 0)
        throw DataError("train_gaussian_nb: both classes must be present");

    NaiveBayesModel model;
    model.priors = {static_cast<double>(counts[0]) / static_cast<double>(n),
                    static_cast<double>(counts[1]) / static_cast<double>(n)};
    for (int c = 0; c < 2; ++c) {
        model.means[c].assign(m, 0.0);
        model.variances[c].assign(m, 0.0);
    }

    for (std::size_t r = 0; r < n; ++r) {
        const double* row = train.row(r);
        auto& mean = model.means[train.labels[r]];
        for (std::size_t j = 0; j < m; ++j) mean[j] += row[j];
    }
    for (int c = 0; c < 2; ++c)
        for (std::size_t j = 0; j < m; ++j) model.means[c][j] /= static_cast<double>(counts[c]);

    for (std::size_t r = 0; r < n; ++r) {
        const double* row = train.row(r);
        const int c = train.labels[r];
        for (std::size_t j = 0; j < m; ++j) {
            const double d = row[j] - model.means[c][j];
            model.variances[c][j] += d * d;
        }
    }
    for (int c = 0; c < 2; ++c)
        for (std::size_t j = 0; j < m; ++j)
            model.variances[c][j] /= static_cast<double>(counts[c]);

    // Smooth by a fraction of the widest overall feature variance so scoring
    // never divides by zero on constant features.
    double max_var = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) sum += train.at(r, j);
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double d = train.at(r, j) - mean;
            ss += d * d;
        }
        max_var = std::max(max_var, ss / static_cast<double>(n));
    }
    double smoothing = cfg.var_smoothing * max_var;
    if (smoothing <= 0.0) smoothing = cfg.var_smoothing;
    for (int c = 0; c < 2; ++c)
        for (std::size_t j = 0; j < m; ++j) model.variances[c][j] += smoothing;

    ModelSpec spec;
    spec.kind = LearnerKind::NaiveBayes;
    spec.feature_names = train.feature_names;
    spec.hyperparameters = {{"var_smoothing", cfg.var_smoothing}};
    spec.training_digest = table_digest(train);
    spec.model = std::move(model);
    return spec;
}

} // namespace flowsentry
