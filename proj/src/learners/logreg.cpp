#include "internal.hpp"

#include "flowsentry/errors.hpp"
#include "flowsentry/textutil.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace flowsentry {

double logreg_penalized_nll(const FlowTable& table, const std::vector<double>& beta, double l2) {
    const std::size_t n = table.row_count();
    const std::size_t m = table.col_count();
    if (beta.size() != m + 1) throw DataError("logreg nll: beta arity mismatch");
    double nll = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = table.row(r);
        double z = beta[0];
        for (std::size_t j = 0; j < m; ++j) z += beta[j + 1] * row[j];
        nll += detail::log1pexp(z) - (table.labels[r] ? z : 0.0);
    }
    double penalty = 0.0;
    for (std::size_t j = 1; j < beta.size(); ++j) penalty += beta[j] * beta[j];
    return nll + 0.5 * l2 * penalty;
}

std::vector<double> logreg_penalized_gradient(const FlowTable& table,
                                              const std::vector<double>& beta, double l2) {
    const std::size_t n = table.row_count();
    const std::size_t m = table.col_count();
    if (beta.size() != m + 1) throw DataError("logreg gradient: beta arity mismatch");
    std::vector<double> grad(m + 1, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = table.row(r);
        double z = beta[0];
        for (std::size_t j = 0; j < m; ++j) z += beta[j + 1] * row[j];
        const double resid = detail::sigmoid(z) - static_cast<double>(table.labels[r]);
        grad[0] += resid;
        for (std::size_t j = 0; j < m; ++j) grad[j + 1] += resid * row[j];
    }
    for (std::size_t j = 1; j < beta.size(); ++j) grad[j] += l2 * beta[j];
    return grad;
}

std::pair<std::vector<double>, int> irls_fit(const FlowTable& table, const LogRegConfig& cfg) {
    const auto n = static_cast<Eigen::Index>(table.row_count());
    const auto m = static_cast<Eigen::Index>(table.col_count());
    if (n == 0) throw DataError("irls_fit: empty table");

    Eigen::MatrixXd X(n, m + 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        X(r, 0) = 1.0;
        const double* row = table.row(static_cast<std::size_t>(r));
        for (Eigen::Index j = 0; j < m; ++j) X(r, j + 1) = row[j];
        y(r) = static_cast<double>(table.labels[static_cast<std::size_t>(r)]);
    }

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(m + 1);
    Eigen::VectorXd penalty_mask = Eigen::VectorXd::Ones(m + 1);
    penalty_mask(0) = 0.0; // intercept unpenalized

    int iter = 0;
    for (; iter < cfg.max_iter; ++iter) {
        const Eigen::VectorXd z = X * beta;
        Eigen::VectorXd p(n), w(n);
        for (Eigen::Index r = 0; r < n; ++r) {
            p(r) = detail::sigmoid(z(r));
            w(r) = p(r) * (1.0 - p(r));
        }
        const Eigen::VectorXd grad =
            X.transpose() * (y - p) - cfg.l2 * penalty_mask.cwiseProduct(beta);
        Eigen::MatrixXd info = X.transpose() * w.asDiagonal() * X;
        info.diagonal() += cfg.l2 * penalty_mask;
        info.diagonal().array() += cfg.jitter;
        const Eigen::VectorXd step = info.ldlt().solve(grad);
        beta += step;
        if (step.cwiseAbs().maxCoeff() < cfg.tol) {
            ++iter;
            std::vector<double> out(beta.data(), beta.data() + beta.size());
            return {std::move(out), iter};
        }
    }

    std::string last;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        if (j) last += ' ';
        last += double_to_string(beta(j));
    }
    throw NumericError("irls_fit: no convergence after " + std::to_string(cfg.max_iter) +
                       " iterations; last iterate beta = [" + last + "]");
}

ModelSpec train_logreg(const FlowTable& train, const LogRegConfig& cfg) {
    std::array<std::size_t, 2> counts{0, 0};
    for (const auto label : train.labels) ++counts[label];
    if (counts[0] == 0 || counts[1] == 0)
        throw DataError("train_logreg: both classes must be present");

    auto [standardized, stats] = standardize(train);
    auto [beta, iterations] = irls_fit(standardized, cfg);

    LogRegModel model;
    model.stats = std::move(stats);
    model.weights = std::move(beta);
    model.iterations = iterations;

    ModelSpec spec;
    spec.kind = LearnerKind::LogReg;
    spec.feature_names = train.feature_names;
    spec.hyperparameters = {{"l2", cfg.l2},
                            {"jitter", cfg.jitter},
                            {"max_iter", cfg.max_iter},
                            {"tol", cfg.tol}};
    spec.training_digest = table_digest(train);
    spec.model = std::move(model);
    return spec;
}

} // namespace flowsentry
