#include "flowsentry/featsel.hpp"

#include "flowsentry/errors.hpp"
#include "flowsentry/parallel.hpp"
#include "flowsentry/textutil.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

namespace flowsentry {

CorrelationMatrix pearson_matrix(const FlowTable& table, bool include_target) {
    const std::size_t n = table.row_count();
    if (n < 2) throw DataError("pearson_matrix: need at least 2 rows");

    const std::size_t m = table.col_count();
    const std::size_t dims = include_target ? m + 1 : m;

    CorrelationMatrix out;
    out.feature_names = table.feature_names;
    if (include_target) out.feature_names.push_back(table.schema.label_name());
    out.degenerate.assign(dims, 0);
    out.values.assign(dims * dims, 0.0);

    auto value_at = [&](std::size_t r, std::size_t c) -> double {
        return c < m ? table.at(r, c) : static_cast<double>(table.labels[r]);
    };

    std::vector<double> means(dims, 0.0), sds(dims, 0.0);
    for (std::size_t c = 0; c < dims; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) sum += value_at(r, c);
        means[c] = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double d = value_at(r, c) - means[c];
            ss += d * d;
        }
        sds[c] = std::sqrt(ss / static_cast<double>(n));
        if (sds[c] == 0.0) out.degenerate[c] = 1;
    }

    par::parallel_for(dims, 1, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            out.values[i * dims + i] = 1.0;
            for (std::size_t j = i + 1; j < dims; ++j) {
                double r_ij = 0.0;
                if (!out.degenerate[i] && !out.degenerate[j]) {
                    double cov = 0.0;
                    for (std::size_t r = 0; r < n; ++r)
                        cov += (value_at(r, i) - means[i]) * (value_at(r, j) - means[j]);
                    cov /= static_cast<double>(n);
                    r_ij = cov / (sds[i] * sds[j]);
                    r_ij = std::clamp(r_ij, -1.0, 1.0);
                }
                out.values[i * dims + j] = r_ij;
                out.values[j * dims + i] = r_ij;
            }
        }
    });
    return out;
}

AnovaScores anova_f_scores(const FlowTable& table) {
    const std::size_t n = table.row_count();
    const std::size_t m = table.col_count();
    std::array<std::size_t, 2> counts{0, 0};
    for (const auto y : table.labels) ++counts[y];
    if (counts[0] < 2 || counts[1] < 2)
        throw DataError("anova_f_scores: each class needs at least 2 rows");

    AnovaScores out;
    out.f_values.assign(m, 0.0);
    out.infinite_flag.assign(m, 0);

    par::parallel_for(m, 4, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t c = lo; c < hi; ++c) {
            double sum[2] = {0.0, 0.0};
            for (std::size_t r = 0; r < n; ++r) sum[table.labels[r]] += table.at(r, c);
            const double mean0 = sum[0] / static_cast<double>(counts[0]);
            const double mean1 = sum[1] / static_cast<double>(counts[1]);
            const double grand = (sum[0] + sum[1]) / static_cast<double>(n);

            double ss_within = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                const double d = table.at(r, c) - (table.labels[r] ? mean1 : mean0);
                ss_within += d * d;
            }
            const double ss_between =
                static_cast<double>(counts[0]) * (mean0 - grand) * (mean0 - grand) +
                static_cast<double>(counts[1]) * (mean1 - grand) * (mean1 - grand);

            if (ss_between == 0.0) {
                out.f_values[c] = 0.0; // no between-class variance at all
            } else if (ss_within == 0.0) {
                out.f_values[c] = std::numeric_limits<double>::infinity();
                out.infinite_flag[c] = 1;
            } else {
                const double ms_between = ss_between; // df = 2 - 1
                const double ms_within = ss_within / static_cast<double>(n - 2);
                out.f_values[c] = ms_between / ms_within;
            }
        }
    });
    return out;
}

ImportanceRanking tree_importances(const FlowTable& table, const ForestConfig& cfg) {
    std::array<std::size_t, 2> counts{0, 0};
    for (const auto y : table.labels) ++counts[y];
    if (counts[0] == 0 || counts[1] == 0)
        throw DataError("tree_importances: both classes must be present");

    const ModelSpec forest = train_random_forest(table, cfg);
    const auto& model = std::get<ForestModel>(forest.model);

    ImportanceRanking out;
    out.feature_names = table.feature_names;
    out.scores.resize(table.col_count());
    double total = 0.0;
    for (std::size_t j = 0; j < out.scores.size(); ++j) {
        out.scores[j] = model.split_importance[j] / static_cast<double>(model.trees.size());
        total += out.scores[j];
    }
    if (total <= 0.0)
        throw DataError("tree_importances: the forest made no informative splits");
    for (auto& s : out.scores) s /= total;

    out.order.resize(out.scores.size());
    std::iota(out.order.begin(), out.order.end(), 0);
    std::stable_sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) {
        if (out.scores[a] != out.scores[b]) return out.scores[a] > out.scores[b];
        return a < b;
    });
    return out;
}

std::vector<CoefficientStats> logit_wald(const FlowTable& table, const LogRegConfig& cfg) {
    std::array<std::size_t, 2> counts{0, 0};
    for (const auto y : table.labels) ++counts[y];
    if (counts[0] == 0 || counts[1] == 0)
        throw DataError("logit_wald: both classes must be present");

    LogRegConfig wald_cfg = cfg;
    wald_cfg.l2 = 0.0; // Wald statistics come from the unpenalized likelihood
    const auto [beta, iterations] = irls_fit(table, wald_cfg);
    (void)iterations;

    const auto n = static_cast<Eigen::Index>(table.row_count());
    const auto m = static_cast<Eigen::Index>(table.col_count());

    // Observed information at the fit, without jitter.
    Eigen::MatrixXd X(n, m + 1);
    for (Eigen::Index r = 0; r < n; ++r) {
        X(r, 0) = 1.0;
        const double* row = table.row(static_cast<std::size_t>(r));
        for (Eigen::Index j = 0; j < m; ++j) X(r, j + 1) = row[j];
    }
    Eigen::VectorXd w(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        double z = beta[0];
        const double* row = table.row(static_cast<std::size_t>(r));
        for (Eigen::Index j = 0; j < m; ++j) z += beta[static_cast<std::size_t>(j) + 1] * row[j];
        const double p = 1.0 / (1.0 + std::exp(-z));
        w(r) = p * (1.0 - p);
    }
    const Eigen::MatrixXd info = X.transpose() * w.asDiagonal() * X;

    // Eigendecomposition splits the information into a well-conditioned part
    // and a numerically null part. Coefficients loading on the null part get
    // undefined statistics; the rest use the pseudo-inverse variance.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
    if (eig.info() != Eigen::Success) throw NumericError("logit_wald: eigendecomposition failed");
    const Eigen::VectorXd evals = eig.eigenvalues();
    const Eigen::MatrixXd evecs = eig.eigenvectors();
    const double lambda_max = evals.cwiseAbs().maxCoeff();
    const double cutoff = lambda_max * 1e-12;
    constexpr double kNullLoading = 1e-8;

    std::vector<CoefficientStats> out;
    out.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index j = 1; j <= m; ++j) {
        CoefficientStats cs;
        cs.feature = table.feature_names[static_cast<std::size_t>(j - 1)];
        cs.coef = beta[static_cast<std::size_t>(j)];

        double var = 0.0, null_loading = 0.0;
        for (Eigen::Index k = 0; k < evals.size(); ++k) {
            const double q = evecs(j, k);
            if (evals(k) <= cutoff)
                null_loading += q * q;
            else
                var += q * q / evals(k);
        }
        if (null_loading <= kNullLoading && var > 0.0 && std::isfinite(var)) {
            const double se = std::sqrt(var);
            cs.std_err = se;
            cs.z = cs.coef / se;
            cs.p_value = std::erfc(std::abs(*cs.z) / std::numbers::sqrt2);
            cs.ci_low = cs.coef - kZCritical95 * se;
            cs.ci_high = cs.coef + kZCritical95 * se;
        }
        out.push_back(std::move(cs));
    }
    return out;
}

FeatureSubset eliminate_by_pvalue(const std::vector<CoefficientStats>& stats, double alpha) {
    if (stats.empty()) throw DataError("eliminate_by_pvalue: no statistics given");
    FeatureSubset out;
    std::vector<std::string> questionable;
    for (const auto& cs : stats) {
        if (cs.p_value && *cs.p_value < alpha)
            out.names.push_back(cs.feature);
        else if (!cs.p_value)
            questionable.push_back(cs.feature);
    }
    if (out.names.empty())
        throw DataError("eliminate_by_pvalue: no feature passes alpha=" +
                        double_to_string(alpha));
    out.provenance = "wald_elimination alpha=" + double_to_string(alpha);
    if (!questionable.empty()) {
        out.provenance += "; questionable(undefined p):";
        for (const auto& q : questionable) out.provenance += " " + q;
    }
    return out;
}

FeatureSubset redundancy_filter(const CorrelationMatrix& corr,
                                const std::vector<double>& target_corr,
                                double pair_threshold) {
    const std::size_t m = target_corr.size();
    if (m > corr.size()) throw DataError("redundancy_filter: matrix smaller than candidates");

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ta = std::abs(target_corr[a]);
        const double tb = std::abs(target_corr[b]);
        if (ta != tb) return ta > tb;
        return a < b;
    });

    FeatureSubset out;
    std::vector<std::size_t> kept;
    for (const std::size_t i : order) {
        bool redundant = false;
        for (const std::size_t k : kept) {
            if (std::abs(corr.at(i, k)) > pair_threshold) {
                redundant = true;
                break;
            }
        }
        if (!redundant) {
            kept.push_back(i);
            out.names.push_back(corr.feature_names[i]);
        }
    }
    out.provenance = "correlation_filter pair_threshold=" + double_to_string(pair_threshold);
    return out;
}

FeatureSubset select_top_k(const ImportanceRanking& ranking, std::size_t k) {
    if (k == 0 || k > ranking.order.size())
        throw DataError("select_top_k: k=" + std::to_string(k) + " out of range (1.." +
                        std::to_string(ranking.order.size()) + ")");
    FeatureSubset out;
    out.names.reserve(k);
    for (std::size_t i = 0; i < k; ++i)
        out.names.push_back(ranking.feature_names[ranking.order[i]]);
    out.provenance = "tree_importances top-" + std::to_string(k);
    return out;
}

FeatureSubset subset_union(const FeatureSubset& a, const FeatureSubset& b) {
    FeatureSubset out;
    std::set<std::string> seen;
    for (const auto& n : a.names)
        if (seen.insert(n).second) out.names.push_back(n);
    for (const auto& n : b.names)
        if (seen.insert(n).second) out.names.push_back(n);
    out.provenance = "union(" + a.provenance + "; " + b.provenance + ")";
    return out;
}

FeatureSubset subset_intersection(const FeatureSubset& a, const FeatureSubset& b) {
    FeatureSubset out;
    const std::set<std::string> in_b(b.names.begin(), b.names.end());
    for (const auto& n : a.names)
        if (in_b.count(n)) out.names.push_back(n);
    out.provenance = "intersection(" + a.provenance + "; " + b.provenance + ")";
    return out;
}

std::string render_coefficient_table(const std::vector<CoefficientStats>& stats) {
    std::size_t name_width = 8;
    for (const auto& cs : stats) name_width = std::max(name_width, cs.feature.size());
    auto cell = [](const std::optional<double>& v) {
        return v ? format_double(*v, 4) : std::string("nan");
    };

    std::string out = pad_right("", name_width);
    for (const char* h : {"Coef.", "Std.Err.", "z", "P>|z|", "[0.025", "0.975]"})
        out += pad_left(h, 16);
    out += '\n';
    for (const auto& cs : stats) {
        out += pad_right(cs.feature, name_width);
        out += pad_left(format_double(cs.coef, 4), 16);
        out += pad_left(cell(cs.std_err), 16);
        out += pad_left(cell(cs.z), 16);
        out += pad_left(cell(cs.p_value), 16);
        out += pad_left(cell(cs.ci_low), 16);
        out += pad_left(cell(cs.ci_high), 16);
        out += '\n';
    }
    return out;
}

} // namespace flowsentry
