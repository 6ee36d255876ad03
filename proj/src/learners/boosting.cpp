#include "internal.hpp"
#include "tree_builder.hpp"

#include "flowsentry/errors.hpp"

#include <cmath>
#include <numeric>

namespace flowsentry {

namespace {
constexpr double kErrClamp = 1e-12;
}

ModelSpec train_adaboost(const FlowTable& train, const AdaBoostConfig& cfg) {
    const std::size_t n = train.row_count();
    if (n == 0) throw DataError("train_adaboost: empty table");
    std::array<std::size_t, 2> counts{0, 0};
    for (const auto y : train.labels) ++counts[y];
    if (counts[0] == 0 || counts[1] == 0)
        throw DataError("train_adaboost: both classes must be present");
    if (cfg.rounds < 1) throw DataError("train_adaboost: rounds must be >= 1");

    std::vector<double> weights(n, 1.0 / static_cast<double>(n));
    AdaBoostModel model;

    detail::GiniTreeBuilder::Params stump_params;
    stump_params.max_depth = 1;
    stump_params.min_leaf = 1;
    stump_params.min_split = 2;

    for (int round = 0; round < cfg.rounds; ++round) {
        detail::GiniTreeBuilder builder(train.values.data(), train.col_count(),
                                        train.labels.data(), weights.data(), stump_params,
                                        nullptr, nullptr);
        std::vector<std::size_t> rows(n);
        std::iota(rows.begin(), rows.end(), 0);
        TreeModel stump = builder.build(std::move(rows));

        double err = 0.0;
        std::vector<std::uint8_t> pred(n);
        for (std::size_t r = 0; r < n; ++r) {
            pred[r] = stump.predict_value(train.row(r)) >= 0.5 ? 1 : 0;
            if (pred[r] != train.labels[r]) err += weights[r];
        }

        if (err >= 0.5) {
            if (round == 0)
                throw NumericError("train_adaboost: first stump error " +
                                   std::to_string(err) + " >= 0.5, unlearnable under stumps");
            break;
        }

        const double clamped = std::max(err, kErrClamp);
        const double alpha = 0.5 * std::log((1.0 - clamped) / clamped);
        model.stumps.push_back(std::move(stump));
        model.alphas.push_back(alpha);
        model.stage_errors.push_back(err);

        if (err <= 0.0) break; // perfect stump; further rounds cannot reweight

        double wsum = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            weights[r] *= pred[r] == train.labels[r] ? std::exp(-alpha) : std::exp(alpha);
            wsum += weights[r];
        }
        for (auto& w : weights) w /= wsum;
    }

    ModelSpec spec;
    spec.kind = LearnerKind::AdaBoost;
    spec.feature_names = train.feature_names;
    spec.hyperparameters = {{"rounds", cfg.rounds}};
    spec.training_digest = table_digest(train);
    spec.model = std::move(model);
    return spec;
}

ModelSpec train_gbt(const FlowTable& train, const GbtConfig& cfg) {
    const std::size_t n = train.row_count();
    if (n == 0) throw DataError("train_gbt: empty table");
    std::array<std::size_t, 2> counts{0, 0};
    for (const auto y : train.labels) ++counts[y];
    if (counts[0] == 0 || counts[1] == 0)
        throw DataError("train_gbt: both classes must be present");
    if (cfg.rounds < 0) throw DataError("train_gbt: rounds must be >= 0");

    GbtModel model;
    model.eta = cfg.eta;
    const double pos_fraction = static_cast<double>(counts[1]) / static_cast<double>(n);
    model.base_score = std::log(pos_fraction / (1.0 - pos_fraction));

    std::vector<double> raw(n, model.base_score);
    std::vector<double> grad(n), hess(n);

    detail::GradTreeBuilder::Params params;
    params.max_depth = cfg.max_depth;
    params.min_leaf = cfg.min_leaf;
    params.lambda = cfg.lambda;
    params.gamma = cfg.gamma;

    for (int round = 0; round < cfg.rounds; ++round) {
        for (std::size_t r = 0; r < n; ++r) {
            const double p = detail::sigmoid(raw[r]);
            grad[r] = p - static_cast<double>(train.labels[r]);
            hess[r] = p * (1.0 - p);
        }
        detail::GradTreeBuilder builder(train.values.data(), train.col_count(), grad.data(),
                                        hess.data(), params);
        std::vector<std::size_t> rows(n);
        std::iota(rows.begin(), rows.end(), 0);
        TreeModel tree = builder.build(std::move(rows));

        double logloss = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            raw[r] += cfg.eta * tree.predict_value(train.row(r));
            logloss += detail::log1pexp(raw[r]) - (train.labels[r] ? raw[r] : 0.0);
        }
        model.trees.push_back(std::move(tree));
        model.round_logloss.push_back(logloss / static_cast<double>(n));
    }

    ModelSpec spec;
    spec.kind = LearnerKind::Gbt;
    spec.feature_names = train.feature_names;
    spec.hyperparameters = {{"rounds", cfg.rounds}, {"max_depth", cfg.max_depth},
                            {"eta", cfg.eta},       {"lambda", cfg.lambda},
                            {"gamma", cfg.gamma},   {"min_leaf", cfg.min_leaf}};
    spec.training_digest = table_digest(train);
    spec.model = std::move(model);
    return spec;
}

} // namespace flowsentry
