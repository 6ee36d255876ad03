#pragma once

#include "flowsentry/dataset.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace flowsentry {

// ---------------------------------------------------------------------------
// Model structures
// ---------------------------------------------------------------------------

/// One node of a binary decision tree stored as a flat array (root at 0).
/// Interior nodes route x[feature] > threshold to `right`, else `left`.
/// Leaves have feature == -1 and carry the payload in `value`: the class-1
/// fraction for classification trees, an additive weight for boosted trees.
struct TreeNode {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct TreeModel {
    std::vector<TreeNode> nodes;

    double predict_value(const double* row) const {
        std::int32_t i = 0;
        while (!nodes[i].is_leaf())
            i = row[nodes[i].feature] > nodes[i].threshold ? nodes[i].right : nodes[i].left;
        return nodes[i].value;
    }
    int depth() const;
    bool operator==(const TreeModel&) const = default;
};

struct NaiveBayesModel {
    std::array<double, 2> priors{};                 // empirical class frequencies
    std::array<std::vector<double>, 2> means;       // per class, per feature
    std::array<std::vector<double>, 2> variances;   // smoothed, strictly positive
};

struct KnnModel {
    int k = 5;
    StandardizeStats stats;
    std::size_t cols = 0;
    std::vector<double> train;          // standardized, row-major
    std::vector<std::uint8_t> labels;
};

struct LogRegModel {
    StandardizeStats stats;
    std::vector<double> weights;        // weights[0] = intercept, then per feature
    int iterations = 0;
};

struct ForestModel {
    std::vector<TreeModel> trees;
    std::optional<double> oob_accuracy;     // set when bootstrap was on
    std::vector<double> split_importance;   // summed Gini decrease per feature
};

struct AdaBoostModel {
    std::vector<TreeModel> stumps;
    std::vector<double> alphas;         // stage weights
    std::vector<double> stage_errors;   // weighted stump error per round
};

struct GbtModel {
    std::vector<TreeModel> trees;
    double eta = 0.3;
    double base_score = 0.0;            // logit of the training class-1 fraction
    std::vector<double> round_logloss;  // training logloss after each round
};

enum class LearnerKind { NaiveBayes, Knn, LogReg, Cart, Forest, AdaBoost, Gbt };

const char* learner_kind_name(LearnerKind kind);
std::optional<LearnerKind> learner_kind_from_name(std::string_view name);

/// A trained model of any kind plus the feature subset it was trained on.
struct ModelSpec {
    LearnerKind kind;
    std::vector<std::string> feature_names;
    nlohmann::ordered_json hyperparameters;
    std::uint64_t training_digest = 0;
    std::variant<NaiveBayesModel, KnnModel, LogRegModel, TreeModel, ForestModel,
                 AdaBoostModel, GbtModel>
        model;
};

// ---------------------------------------------------------------------------
// Training configuration. The source material fixes none of these; the
// defaults are conventional and recorded in every saved model.
// ---------------------------------------------------------------------------

struct NaiveBayesConfig {
    double var_smoothing = 1e-9; // times the largest per-feature variance
};

struct KnnConfig {
    int k = 5;
};

struct LogRegConfig {
    double l2 = 1e-8;     // on slope weights, never the intercept
    double jitter = 1e-8; // ridge on the information matrix, invertibility only
    int max_iter = 50;
    double tol = 1e-8;    // convergence: max |delta beta| below this
};

struct CartConfig {
    int max_depth = 12;
    std::size_t min_leaf = 1;
    std::size_t min_split = 2;
};

struct ForestConfig {
    int n_trees = 100;
    int max_depth = 12;
    std::size_t min_leaf = 1;
    std::size_t min_split = 2;
    int mtry = 0;          // per-split candidate features; 0 = ceil(sqrt(m))
    bool bootstrap = true;
    std::uint64_t seed = 42;
};

struct AdaBoostConfig {
    int rounds = 50;
};

struct GbtConfig {
    int rounds = 100;
    int max_depth = 6;
    double eta = 0.3;
    double lambda = 1.0; // L2 on leaf weights
    double gamma = 0.0;  // split gain penalty
    std::size_t min_leaf = 1;
};

/// Bundle of per-learner settings for grid runs.
struct TrainOptions {
    NaiveBayesConfig nb;
    KnnConfig knn;
    LogRegConfig logreg;
    CartConfig cart;
    ForestConfig forest;
    AdaBoostConfig ada;
    GbtConfig gbt;
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

ModelSpec train_gaussian_nb(const FlowTable& train, const NaiveBayesConfig& cfg = {});
ModelSpec train_knn(const FlowTable& train, const KnnConfig& cfg = {});
ModelSpec train_logreg(const FlowTable& train, const LogRegConfig& cfg = {});
ModelSpec train_cart(const FlowTable& train, const CartConfig& cfg = {});
ModelSpec train_random_forest(const FlowTable& train, const ForestConfig& cfg = {});
ModelSpec train_adaboost(const FlowTable& train, const AdaBoostConfig& cfg = {});
ModelSpec train_gbt(const FlowTable& train, const GbtConfig& cfg = {});

ModelSpec train(LearnerKind kind, const FlowTable& table, const TrainOptions& opts);

// ---------------------------------------------------------------------------
// Inference. predict is thresholded predict_proba: P >= 0.5 maps to attack.
// KNN refines an exact 0.5 vote tie by summed neighbor distance, then lower
// label (possible only for even k).
// ---------------------------------------------------------------------------

std::vector<double> predict_proba(const ModelSpec& model, const FlowTable& rows);
std::vector<std::uint8_t> predict(const ModelSpec& model, const FlowTable& rows);

/// Single-row probability; `row` must carry exactly the model's features.
double predict_proba_row(const ModelSpec& model, const double* row);

// ---------------------------------------------------------------------------
// Logistic objective, exposed so the gradient can be checked against finite
// differences. beta[0] is the intercept; the table is used as given.
// ---------------------------------------------------------------------------

double logreg_penalized_nll(const FlowTable& table, const std::vector<double>& beta, double l2);
std::vector<double> logreg_penalized_gradient(const FlowTable& table,
                                              const std::vector<double>& beta, double l2);

/// Iteratively reweighted least squares on the table as given (no internal
/// standardization). Returns (beta, iterations). Throws NumericError with the
/// last iterate embedded when max_iter passes without convergence.
std::pair<std::vector<double>, int> irls_fit(const FlowTable& table, const LogRegConfig& cfg);

// ---------------------------------------------------------------------------
// Serialization: versioned JSON document with stable key order; floats use
// shortest round-trip decimals. Loading verifies version and feature arity.
// ---------------------------------------------------------------------------

nlohmann::ordered_json model_to_json(const ModelSpec& model);
ModelSpec model_from_json(const nlohmann::ordered_json& doc);
void save_model(const ModelSpec& model, const std::string& path);
ModelSpec load_model(const std::string& path);

/// Provenance digest over the training table and settings (FNV-1a 64).
std::uint64_t table_digest(const FlowTable& table);

} // namespace flowsentry
