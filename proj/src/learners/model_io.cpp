#include "flowsentry/learners.hpp"

#include "flowsentry/errors.hpp"
#include "flowsentry/report.hpp"
#include "flowsentry/version.hpp"

#include <fstream>

namespace flowsentry {

using json = nlohmann::ordered_json;

std::uint64_t table_digest(const FlowTable& table) {
    std::uint64_t h = kFnvOffset;
    for (const auto& name : table.feature_names) h = fnv1a64(name.data(), name.size(), h);
    h = fnv1a64(table.values.data(), table.values.size() * sizeof(double), h);
    h = fnv1a64(table.labels.data(), table.labels.size(), h);
    return h;
}

namespace {

json tree_to_json(const TreeModel& tree) {
    json nodes = json::array();
    for (const auto& n : tree.nodes)
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    return nodes;
}

TreeModel tree_from_json(const json& doc) {
    TreeModel tree;
    for (const auto& n : doc) {
        TreeNode node;
        node.feature = n.at(0).get<std::int32_t>();
        node.threshold = n.at(1).get<double>();
        node.left = n.at(2).get<std::int32_t>();
        node.right = n.at(3).get<std::int32_t>();
        node.value = n.at(4).get<double>();
        tree.nodes.push_back(node);
    }
    if (tree.nodes.empty()) throw DataError("model: empty tree");
    // child indices must stay in bounds and point forward (acyclic)
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& n = tree.nodes[i];
        if (n.is_leaf()) continue;
        const auto size = static_cast<std::int32_t>(tree.nodes.size());
        if (n.left <= static_cast<std::int32_t>(i) || n.left >= size ||
            n.right <= static_cast<std::int32_t>(i) || n.right >= size)
            throw DataError("model: malformed tree node " + std::to_string(i));
    }
    return tree;
}

json stats_to_json(const StandardizeStats& s) {
    return {{"means", s.means}, {"std_devs", s.std_devs}, {"clamped", s.clamped}};
}

StandardizeStats stats_from_json(const json& doc) {
    StandardizeStats s;
    s.means = doc.at("means").get<std::vector<double>>();
    s.std_devs = doc.at("std_devs").get<std::vector<double>>();
    s.clamped = doc.at("clamped").get<std::vector<std::uint8_t>>();
    return s;
}

} // namespace

json model_to_json(const ModelSpec& model) {
    json params;
    switch (model.kind) {
        case LearnerKind::NaiveBayes: {
            const auto& m = std::get<NaiveBayesModel>(model.model);
            params = {{"priors", m.priors},
                      {"means", {m.means[0], m.means[1]}},
                      {"variances", {m.variances[0], m.variances[1]}}};
            break;
        }
        case LearnerKind::Knn: {
            const auto& m = std::get<KnnModel>(model.model);
            params = {{"k", m.k},
                      {"stats", stats_to_json(m.stats)},
                      {"cols", m.cols},
                      {"train", m.train},
                      {"labels", m.labels}};
            break;
        }
        case LearnerKind::LogReg: {
            const auto& m = std::get<LogRegModel>(model.model);
            params = {{"stats", stats_to_json(m.stats)},
                      {"weights", m.weights},
                      {"iterations", m.iterations}};
            break;
        }
        case LearnerKind::Cart:
            params = {{"nodes", tree_to_json(std::get<TreeModel>(model.model))}};
            break;
        case LearnerKind::Forest: {
            const auto& m = std::get<ForestModel>(model.model);
            json trees = json::array();
            for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
            params = {{"trees", std::move(trees)},
                      {"split_importance", m.split_importance}};
            if (m.oob_accuracy) params["oob_accuracy"] = *m.oob_accuracy;
            break;
        }
        case LearnerKind::AdaBoost: {
            const auto& m = std::get<AdaBoostModel>(model.model);
            json stumps = json::array();
            for (const auto& t : m.stumps) stumps.push_back(tree_to_json(t));
            params = {{"stumps", std::move(stumps)},
                      {"alphas", m.alphas},
                      {"stage_errors", m.stage_errors}};
            break;
        }
        case LearnerKind::Gbt: {
            const auto& m = std::get<GbtModel>(model.model);
            json trees = json::array();
            for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
            params = {{"trees", std::move(trees)},
                      {"eta", m.eta},
                      {"base_score", m.base_score},
                      {"round_logloss", m.round_logloss}};
            break;
        }
    }

    return json{{"format_version", kModelFormatVersion},
                {"learner_kind", learner_kind_name(model.kind)},
                {"feature_names", model.feature_names},
                {"hyperparameters", model.hyperparameters},
                {"parameters", std::move(params)},
                {"training_digest", model.training_digest}};
}

ModelSpec model_from_json(const json& doc) {
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion)
        throw DataError("model: unsupported format_version " + std::to_string(version));
    const auto kind_name = doc.at("learner_kind").get<std::string>();
    const auto kind = learner_kind_from_name(kind_name);
    if (!kind) throw DataError("model: unknown learner_kind '" + kind_name + "'");

    ModelSpec spec;
    spec.kind = *kind;
    spec.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    spec.hyperparameters = doc.at("hyperparameters");
    spec.training_digest = doc.at("training_digest").get<std::uint64_t>();
    const json& params = doc.at("parameters");
    const std::size_t arity = spec.feature_names.size();

    auto check = [&](std::size_t got, const char* what) {
        if (got != arity)
            throw DataError(std::string("model: ") + what + " arity " + std::to_string(got) +
                            " does not match " + std::to_string(arity) + " feature names");
    };

    switch (*kind) {
        case LearnerKind::NaiveBayes: {
            NaiveBayesModel m;
            const auto priors = params.at("priors").get<std::vector<double>>();
            m.priors = {priors.at(0), priors.at(1)};
            for (int c = 0; c < 2; ++c) {
                m.means[c] = params.at("means").at(c).get<std::vector<double>>();
                m.variances[c] = params.at("variances").at(c).get<std::vector<double>>();
                check(m.means[c].size(), "mean");
                check(m.variances[c].size(), "variance");
                for (const double v : m.variances[c])
                    if (!(v > 0.0)) throw DataError("model: non-positive NB variance");
            }
            spec.model = std::move(m);
            break;
        }
        case LearnerKind::Knn: {
            KnnModel m;
            m.k = params.at("k").get<int>();
            m.stats = stats_from_json(params.at("stats"));
            m.cols = params.at("cols").get<std::size_t>();
            m.train = params.at("train").get<std::vector<double>>();
            m.labels = params.at("labels").get<std::vector<std::uint8_t>>();
            check(m.cols, "column");
            if (m.train.size() != m.labels.size() * m.cols)
                throw DataError("model: KNN matrix shape mismatch");
            spec.model = std::move(m);
            break;
        }
        case LearnerKind::LogReg: {
            LogRegModel m;
            m.stats = stats_from_json(params.at("stats"));
            m.weights = params.at("weights").get<std::vector<double>>();
            m.iterations = params.at("iterations").get<int>();
            check(m.weights.size() - 1, "weight");
            spec.model = std::move(m);
            break;
        }
        case LearnerKind::Cart:
            spec.model = tree_from_json(params.at("nodes"));
            break;
        case LearnerKind::Forest: {
            ForestModel m;
            for (const auto& t : params.at("trees")) m.trees.push_back(tree_from_json(t));
            if (m.trees.empty()) throw DataError("model: empty forest");
            m.split_importance = params.at("split_importance").get<std::vector<double>>();
            if (params.contains("oob_accuracy"))
                m.oob_accuracy = params.at("oob_accuracy").get<double>();
            spec.model = std::move(m);
            break;
        }
        case LearnerKind::AdaBoost: {
            AdaBoostModel m;
            for (const auto& t : params.at("stumps")) m.stumps.push_back(tree_from_json(t));
            m.alphas = params.at("alphas").get<std::vector<double>>();
            m.stage_errors = params.at("stage_errors").get<std::vector<double>>();
            if (m.alphas.size() != m.stumps.size())
                throw DataError("model: AdaBoost stage count mismatch");
            for (const double a : m.alphas)
                if (!std::isfinite(a)) throw DataError("model: non-finite AdaBoost alpha");
            spec.model = std::move(m);
            break;
        }
        case LearnerKind::Gbt: {
            GbtModel m;
            for (const auto& t : params.at("trees")) m.trees.push_back(tree_from_json(t));
            m.eta = params.at("eta").get<double>();
            m.base_score = params.at("base_score").get<double>();
            m.round_logloss = params.at("round_logloss").get<std::vector<double>>();
            spec.model = std::move(m);
            break;
        }
    }
    return spec;
}

void save_model(const ModelSpec& model, const std::string& path) {
    write_text_atomic(path, model_to_json(model).dump(2) + "\n");
}

ModelSpec load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("model '" + path + "': " + e.what());
    }
    return model_from_json(doc);
}

} // namespace flowsentry
