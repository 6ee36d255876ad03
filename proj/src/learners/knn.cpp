#include "internal.hpp"

#include "flowsentry/errors.hpp"

#include <algorithm>
#include <cmath>

namespace flowsentry {

ModelSpec train_knn(const FlowTable& train, const KnnConfig& cfg) {
    if (cfg.k < 1) throw DataError("train_knn: k must be >= 1");
    if (static_cast<std::size_t>(cfg.k) > train.row_count())
        throw DataError("train_knn: k=" + std::to_string(cfg.k) + " exceeds " +
                        std::to_string(train.row_count()) + " training rows");

    auto [standardized, stats] = standardize(train);

    KnnModel model;
    model.k = cfg.k;
    model.stats = std::move(stats);
    model.cols = train.col_count();
    model.train = std::move(standardized.values);
    model.labels = train.labels;

    ModelSpec spec;
    spec.kind = LearnerKind::Knn;
    spec.feature_names = train.feature_names;
    spec.hyperparameters = {{"k", cfg.k}};
    spec.training_digest = table_digest(train);
    spec.model = std::move(model);
    return spec;
}

namespace detail {

// Majority vote over the k nearest rows by Euclidean distance. Neighbor
// boundary ties resolve by lower row index; an exact vote tie resolves to the
// class with the smaller summed distance, then to the lower label.
KnnVote knn_vote(const KnnModel& model, const double* query_std,
                 std::vector<std::pair<double, std::size_t>>& scratch) {
    const std::size_t n = model.labels.size();
    const std::size_t m = model.cols;
    scratch.clear();
    scratch.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = model.train.data() + r * m;
        double d2 = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double d = query_std[j] - row[j];
            d2 += d * d;
        }
        scratch.emplace_back(d2, r);
    }
    const std::size_t k = static_cast<std::size_t>(model.k);
    std::partial_sort(scratch.begin(), scratch.begin() + k, scratch.end());

    KnnVote vote;
    for (std::size_t i = 0; i < k; ++i) {
        const auto [d2, r] = scratch[i];
        const double dist = std::sqrt(d2);
        if (model.labels[r]) {
            ++vote.votes1;
            vote.dist1 += dist;
        } else {
            vote.dist0 += dist;
        }
    }
    const std::size_t votes0 = k - vote.votes1;
    if (vote.votes1 > votes0)
        vote.label = 1;
    else if (vote.votes1 < votes0)
        vote.label = 0;
    else if (vote.dist1 < vote.dist0)
        vote.label = 1;
    else
        vote.label = 0; // equal sums fall through to the lower label
    vote.proba = static_cast<double>(vote.votes1) / static_cast<double>(k);
    return vote;
}

} // namespace detail
} // namespace flowsentry
