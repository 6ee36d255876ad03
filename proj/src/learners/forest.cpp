#include "tree_builder.hpp"

#include "flowsentry/errors.hpp"
#include "flowsentry/parallel.hpp"
#include "flowsentry/rng.hpp"

#include <cmath>
#include <numeric>

namespace flowsentry {

namespace {
constexpr std::uint64_t kBootstrapStream = 0xb001;
constexpr std::uint64_t kTreeStream = 0x72ee;

std::vector<std::size_t> bootstrap_rows(std::size_t n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = static_cast<std::size_t>(rng.uniform_index(n));
    return rows;
}
} // namespace

ModelSpec train_random_forest(const FlowTable& train, const ForestConfig& cfg) {
    const std::size_t n = train.row_count();
    const std::size_t m = train.col_count();
    if (n == 0) throw DataError("train_random_forest: empty table");
    if (m == 0) throw DataError("train_random_forest: no feature columns");
    if (cfg.n_trees < 1) throw DataError("train_random_forest: need at least one tree");

    const std::size_t mtry =
        cfg.mtry > 0 ? static_cast<std::size_t>(cfg.mtry)
                     : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m))));

    const std::size_t n_trees = static_cast<std::size_t>(cfg.n_trees);
    std::vector<TreeModel> trees(n_trees);
    std::vector<std::vector<double>> importances(n_trees);

    // Each tree owns derived RNG streams, so results are identical for any
    // worker count.
    par::parallel_for(n_trees, 1, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t t = lo; t < hi; ++t) {
            std::vector<std::size_t> rows;
            if (cfg.bootstrap) {
                rows = bootstrap_rows(n, mix_seed(cfg.seed, t, kBootstrapStream));
            } else {
                rows.resize(n);
                std::iota(rows.begin(), rows.end(), 0);
            }
            SplitMix64 tree_rng(mix_seed(cfg.seed, t, kTreeStream));
            importances[t].assign(m, 0.0);
            detail::GiniTreeBuilder::Params params;
            params.max_depth = cfg.max_depth;
            params.min_leaf = cfg.min_leaf;
            params.min_split = cfg.min_split;
            params.mtry = mtry;
            detail::GiniTreeBuilder builder(train.values.data(), m, train.labels.data(),
                                            nullptr, params, &tree_rng, &importances[t]);
            trees[t] = builder.build(std::move(rows));
        }
    });

    ForestModel model;
    model.trees = std::move(trees);
    model.split_importance.assign(m, 0.0);
    for (const auto& imp : importances)
        for (std::size_t j = 0; j < m; ++j) model.split_importance[j] += imp[j];

    if (cfg.bootstrap) {
        // Out-of-bag vote per row, accumulated in tree order.
        std::vector<double> oob_sum(n, 0.0);
        std::vector<std::uint32_t> oob_count(n, 0);
        std::vector<std::uint8_t> in_bag(n);
        for (std::size_t t = 0; t < n_trees; ++t) {
            std::fill(in_bag.begin(), in_bag.end(), 0);
            for (const std::size_t r : bootstrap_rows(n, mix_seed(cfg.seed, t, kBootstrapStream)))
                in_bag[r] = 1;
            for (std::size_t r = 0; r < n; ++r) {
                if (in_bag[r]) continue;
                oob_sum[r] += model.trees[t].predict_value(train.row(r));
                ++oob_count[r];
            }
        }
        std::size_t voted = 0, correct = 0;
        for (std::size_t r = 0; r < n; ++r) {
            if (oob_count[r] == 0) continue;
            ++voted;
            const std::uint8_t pred =
                oob_sum[r] / static_cast<double>(oob_count[r]) >= 0.5 ? 1 : 0;
            if (pred == train.labels[r]) ++correct;
        }
        if (voted > 0)
            model.oob_accuracy = static_cast<double>(correct) / static_cast<double>(voted);
    }

    ModelSpec spec;
    spec.kind = LearnerKind::Forest;
    spec.feature_names = train.feature_names;
    spec.hyperparameters = {{"n_trees", cfg.n_trees}, {"max_depth", cfg.max_depth},
                            {"min_leaf", cfg.min_leaf}, {"min_split", cfg.min_split},
                            {"mtry", mtry},            {"bootstrap", cfg.bootstrap},
                            {"seed", cfg.seed}};
    spec.training_digest = table_digest(train);
    spec.model = std::move(model);
    return spec;
}

} // namespace flowsentry
