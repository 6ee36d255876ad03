#include "tree_builder.hpp"

#include "flowsentry/errors.hpp"

#include <algorithm>
#include <numeric>

namespace flowsentry {

int TreeModel::depth() const {
    // Iterative depth over the flat array: depth of a leaf-only tree is 0.
    int max_depth = 0;
    std::vector<std::pair<std::int32_t, int>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        if (nodes[i].is_leaf()) {
            max_depth = std::max(max_depth, d);
        } else {
            stack.push_back({nodes[i].left, d + 1});
            stack.push_back({nodes[i].right, d + 1});
        }
    }
    return max_depth;
}

namespace detail {

void GiniTreeBuilder::candidate_features(std::vector<std::size_t>& out) {
    out.clear();
    const std::size_t mtry =
        (params_.mtry == 0 || params_.mtry >= cols_) ? cols_ : params_.mtry;
    if (mtry == cols_) {
        out.resize(cols_);
        std::iota(out.begin(), out.end(), 0);
        return; // all features, rng untouched: a 1-tree forest equals plain CART
    }
    if (feature_scratch_.size() != cols_) {
        feature_scratch_.resize(cols_);
        std::iota(feature_scratch_.begin(), feature_scratch_.end(), 0);
    }
    // Partial Fisher-Yates, then sorted so the lower-index tie rule holds.
    for (std::size_t i = 0; i < mtry; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng_->uniform_index(cols_ - i));
        std::swap(feature_scratch_[i], feature_scratch_[j]);
    }
    out.assign(feature_scratch_.begin(), feature_scratch_.begin() + mtry);
    std::sort(out.begin(), out.end());
}

GiniTreeBuilder::Best GiniTreeBuilder::best_split(const std::vector<std::size_t>& rows,
                                                  double node_w, double node_w1) {
    Best best;
    const double parent_impurity = gini_impurity(node_w1, node_w);
    std::vector<std::size_t> feats;
    candidate_features(feats);

    for (const std::size_t f : feats) {
        scratch_.clear();
        for (const std::size_t r : rows) scratch_.emplace_back(data_[r * cols_ + f], r);
        std::sort(scratch_.begin(), scratch_.end());

        double wl = 0.0, wl1 = 0.0;
        for (std::size_t i = 0; i + 1 < scratch_.size(); ++i) {
            const std::size_t r = scratch_[i].second;
            const double w = weights_ ? weights_[r] : 1.0;
            wl += w;
            wl1 += labels_[r] ? w : 0.0;
            if (scratch_[i].first == scratch_[i + 1].first) continue;
            const std::size_t left_count = i + 1;
            const std::size_t right_count = scratch_.size() - left_count;
            if (left_count < params_.min_leaf || right_count < params_.min_leaf) continue;
            const double wr = node_w - wl;
            const double wr1 = node_w1 - wl1;
            const double after = (wl * gini_impurity(wl1, wl) + wr * gini_impurity(wr1, wr)) /
                                 node_w;
            const double gain = parent_impurity - after;
            if (gain > best.gain) {
                best.found = true;
                best.feature = f;
                best.threshold = scratch_[i].first + 0.5 * (scratch_[i + 1].first - scratch_[i].first);
                best.gain = gain;
            }
        }
    }
    if (best.found && best.gain <= kMinSplitGain) best.found = false;
    return best;
}

std::int32_t GiniTreeBuilder::build_node(std::vector<std::size_t>& rows, int depth) {
    const std::int32_t idx = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();

    double node_w = 0.0, node_w1 = 0.0;
    std::size_t count1 = 0;
    for (const std::size_t r : rows) {
        const double w = weights_ ? weights_[r] : 1.0;
        node_w += w;
        if (labels_[r]) {
            node_w1 += w;
            ++count1;
        }
    }
    const bool pure = count1 == 0 || count1 == rows.size();

    Best best;
    if (!pure && depth < params_.max_depth && rows.size() >= params_.min_split)
        best = best_split(rows, node_w, node_w1);

    if (!best.found) {
        nodes_[idx].value = node_w > 0.0 ? node_w1 / node_w : 0.0;
        return idx;
    }

    if (importance_) (*importance_)[best.feature] += (node_w / root_weight_) * best.gain;

    std::vector<std::size_t> left_rows, right_rows;
    left_rows.reserve(rows.size());
    for (const std::size_t r : rows) {
        if (data_[r * cols_ + best.feature] > best.threshold)
            right_rows.push_back(r);
        else
            left_rows.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes_[idx].feature = static_cast<std::int32_t>(best.feature);
    nodes_[idx].threshold = best.threshold;
    const std::int32_t left = build_node(left_rows, depth + 1);
    const std::int32_t right = build_node(right_rows, depth + 1);
    nodes_[idx].left = left;
    nodes_[idx].right = right;
    return idx;
}

TreeModel GiniTreeBuilder::build(std::vector<std::size_t> rows) {
    nodes_.clear();
    root_weight_ = 0.0;
    for (const std::size_t r : rows) root_weight_ += weights_ ? weights_[r] : 1.0;
    build_node(rows, 0);
    return TreeModel{std::move(nodes_)};
}

GradTreeBuilder::Best GradTreeBuilder::best_split(const std::vector<std::size_t>& rows,
                                                  double g_sum, double h_sum) {
    Best best;
    const double lambda = params_.lambda;
    const double parent_score = g_sum * g_sum / (h_sum + lambda);

    for (std::size_t f = 0; f < cols_; ++f) {
        scratch_.clear();
        for (const std::size_t r : rows) scratch_.emplace_back(data_[r * cols_ + f], r);
        std::sort(scratch_.begin(), scratch_.end());

        double gl = 0.0, hl = 0.0;
        for (std::size_t i = 0; i + 1 < scratch_.size(); ++i) {
            const std::size_t r = scratch_[i].second;
            gl += grad_[r];
            hl += hess_[r];
            if (scratch_[i].first == scratch_[i + 1].first) continue;
            const std::size_t left_count = i + 1;
            const std::size_t right_count = scratch_.size() - left_count;
            if (left_count < params_.min_leaf || right_count < params_.min_leaf) continue;
            const double gr = g_sum - gl;
            const double hr = h_sum - hl;
            const double gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                                       parent_score) -
                                params_.gamma;
            if (gain > best.gain) {
                best.found = true;
                best.feature = f;
                best.threshold = scratch_[i].first + 0.5 * (scratch_[i + 1].first - scratch_[i].first);
                best.gain = gain;
            }
        }
    }
    if (best.found && best.gain <= kMinSplitGain) best.found = false;
    return best;
}

std::int32_t GradTreeBuilder::build_node(std::vector<std::size_t>& rows, int depth) {
    const std::int32_t idx = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();

    double g_sum = 0.0, h_sum = 0.0;
    for (const std::size_t r : rows) {
        g_sum += grad_[r];
        h_sum += hess_[r];
    }

    Best best;
    if (depth < params_.max_depth && rows.size() >= 2 * params_.min_leaf)
        best = best_split(rows, g_sum, h_sum);

    if (!best.found) {
        nodes_[idx].value = -g_sum / (h_sum + params_.lambda);
        return idx;
    }

    std::vector<std::size_t> left_rows, right_rows;
    left_rows.reserve(rows.size());
    for (const std::size_t r : rows) {
        if (data_[r * cols_ + best.feature] > best.threshold)
            right_rows.push_back(r);
        else
            left_rows.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes_[idx].feature = static_cast<std::int32_t>(best.feature);
    nodes_[idx].threshold = best.threshold;
    const std::int32_t left = build_node(left_rows, depth + 1);
    const std::int32_t right = build_node(right_rows, depth + 1);
    nodes_[idx].left = left;
    nodes_[idx].right = right;
    return idx;
}

TreeModel GradTreeBuilder::build(std::vector<std::size_t> rows) {
    nodes_.clear();
    build_node(rows, 0);
    return TreeModel{std::move(nodes_)};
}

} // namespace detail

ModelSpec train_cart(const FlowTable& train, const CartConfig& cfg) {
    if (train.row_count() == 0) throw DataError("train_cart: empty table");
    if (train.col_count() == 0) throw DataError("train_cart: no feature columns");

    detail::GiniTreeBuilder::Params params;
    params.max_depth = cfg.max_depth;
    params.min_leaf = cfg.min_leaf;
    params.min_split = cfg.min_split;

    detail::GiniTreeBuilder builder(train.values.data(), train.col_count(),
                                    train.labels.data(), nullptr, params, nullptr, nullptr);
    std::vector<std::size_t> rows(train.row_count());
    std::iota(rows.begin(), rows.end(), 0);
    TreeModel tree = builder.build(std::move(rows));

    ModelSpec spec;
    spec.kind = LearnerKind::Cart;
    spec.feature_names = train.feature_names;
    spec.hyperparameters = {{"max_depth", cfg.max_depth},
                            {"min_leaf", cfg.min_leaf},
                            {"min_split", cfg.min_split}};
    spec.training_digest = table_digest(train);
    spec.model = std::move(tree);
    return spec;
}

} // namespace flowsentry
