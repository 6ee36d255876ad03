#include "internal.hpp"

#include "flowsentry/errors.hpp"
#include "flowsentry/parallel.hpp"

#include <cmath>

namespace flowsentry {

const char* learner_kind_name(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::NaiveBayes: return "nb";
        case LearnerKind::Knn: return "knn";
        case LearnerKind::LogReg: return "logreg";
        case LearnerKind::Cart: return "cart";
        case LearnerKind::Forest: return "rf";
        case LearnerKind::AdaBoost: return "ada";
        case LearnerKind::Gbt: return "gbt";
    }
    return "?";
}

std::optional<LearnerKind> learner_kind_from_name(std::string_view name) {
    if (name == "nb") return LearnerKind::NaiveBayes;
    if (name == "knn") return LearnerKind::Knn;
    if (name == "logreg" || name == "lr") return LearnerKind::LogReg;
    if (name == "cart" || name == "tree") return LearnerKind::Cart;
    if (name == "rf" || name == "forest") return LearnerKind::Forest;
    if (name == "ada" || name == "adaboost") return LearnerKind::AdaBoost;
    if (name == "gbt" || name == "xgb") return LearnerKind::Gbt;
    return std::nullopt;
}

ModelSpec train(LearnerKind kind, const FlowTable& table, const TrainOptions& opts) {
    switch (kind) {
        case LearnerKind::NaiveBayes: return train_gaussian_nb(table, opts.nb);
        case LearnerKind::Knn: return train_knn(table, opts.knn);
        case LearnerKind::LogReg: return train_logreg(table, opts.logreg);
        case LearnerKind::Cart: return train_cart(table, opts.cart);
        case LearnerKind::Forest: return train_random_forest(table, opts.forest);
        case LearnerKind::AdaBoost: return train_adaboost(table, opts.ada);
        case LearnerKind::Gbt: return train_gbt(table, opts.gbt);
    }
    throw DataError("train: unknown learner kind");
}

namespace {

void check_arity(const ModelSpec& model, const FlowTable& rows) {
    if (rows.col_count() == model.feature_names.size()) {
        return;
    }
    std::string expected;
    for (const auto& n : model.feature_names) {
        if (!expected.empty()) expected += ", ";
        expected += n;
    }
    throw DataError("predict: row arity " + std::to_string(rows.col_count()) +
                    " does not match the model's " +
                    std::to_string(model.feature_names.size()) + " features [" + expected +
                    "]");
}

double nb_proba(const NaiveBayesModel& m, const double* row) {
    constexpr double kLog2Pi = 1.8378770664093454835606594728112;
    double log_post[2];
    for (int c = 0; c < 2; ++c) {
        double lp = std::log(m.priors[c]);
        for (std::size_t j = 0; j < m.means[c].size(); ++j) {
            const double var = m.variances[c][j];
            const double d = row[j] - m.means[c][j];
            lp += -0.5 * (kLog2Pi + std::log(var)) - d * d / (2.0 * var);
        }
        log_post[c] = lp;
    }
    // log-sum-exp over the two classes
    const double hi = std::max(log_post[0], log_post[1]);
    const double denom = std::exp(log_post[0] - hi) + std::exp(log_post[1] - hi);
    return std::exp(log_post[1] - hi) / denom;
}

} // namespace

double predict_proba_row(const ModelSpec& model, const double* row) {
    switch (model.kind) {
        case LearnerKind::NaiveBayes:
            return nb_proba(std::get<NaiveBayesModel>(model.model), row);
        case LearnerKind::Knn: {
            const auto& knn = std::get<KnnModel>(model.model);
            std::vector<double> q(knn.cols);
            for (std::size_t j = 0; j < knn.cols; ++j)
                q[j] = (row[j] - knn.stats.means[j]) / knn.stats.std_devs[j];
            std::vector<std::pair<double, std::size_t>> scratch;
            return detail::knn_vote(knn, q.data(), scratch).proba;
        }
        case LearnerKind::LogReg:
            return detail::logreg_proba(std::get<LogRegModel>(model.model), row);
        case LearnerKind::Cart:
            return std::get<TreeModel>(model.model).predict_value(row);
        case LearnerKind::Forest:
            return detail::forest_proba(std::get<ForestModel>(model.model), row);
        case LearnerKind::AdaBoost:
            return detail::sigmoid(2.0 *
                                   detail::adaboost_margin(std::get<AdaBoostModel>(model.model), row));
        case LearnerKind::Gbt:
            return detail::sigmoid(detail::gbt_raw_score(std::get<GbtModel>(model.model), row));
    }
    throw DataError("predict_proba_row: unknown model kind");
}

std::vector<double> predict_proba(const ModelSpec& model, const FlowTable& rows) {
    check_arity(model, rows);
    const std::size_t n = rows.row_count();
    std::vector<double> out(n);
    if (n == 0) return out;

    if (model.kind == LearnerKind::Knn) {
        const auto& knn = std::get<KnnModel>(model.model);
        par::parallel_for(n, 256, [&](std::size_t lo, std::size_t hi) {
            std::vector<double> q(knn.cols);
            std::vector<std::pair<double, std::size_t>> scratch;
            for (std::size_t r = lo; r < hi; ++r) {
                const double* row = rows.row(r);
                for (std::size_t j = 0; j < knn.cols; ++j)
                    q[j] = (row[j] - knn.stats.means[j]) / knn.stats.std_devs[j];
                out[r] = detail::knn_vote(knn, q.data(), scratch).proba;
            }
        });
        return out;
    }

    par::parallel_for(n, 1024, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r) out[r] = predict_proba_row(model, rows.row(r));
    });
    return out;
}

std::vector<std::uint8_t> predict(const ModelSpec& model, const FlowTable& rows) {
    check_arity(model, rows);
    const std::size_t n = rows.row_count();
    std::vector<std::uint8_t> out(n);
    if (n == 0) return out;

    if (model.kind == LearnerKind::Knn) {
        // The vote rule, not plain thresholding: an exact tie (even k) goes to
        // the class with the smaller summed distance, then the lower label.
        const auto& knn = std::get<KnnModel>(model.model);
        par::parallel_for(n, 256, [&](std::size_t lo, std::size_t hi) {
            std::vector<double> q(knn.cols);
            std::vector<std::pair<double, std::size_t>> scratch;
            for (std::size_t r = lo; r < hi; ++r) {
                const double* row = rows.row(r);
                for (std::size_t j = 0; j < knn.cols; ++j)
                    q[j] = (row[j] - knn.stats.means[j]) / knn.stats.std_devs[j];
                out[r] = detail::knn_vote(knn, q.data(), scratch).label;
            }
        });
        return out;
    }

    par::parallel_for(n, 1024, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r)
            out[r] = predict_proba_row(model, rows.row(r)) >= 0.5 ? 1 : 0;
    });
    return out;
}

} // namespace flowsentry
