#include "flowsentry/explain.hpp"

#include "flowsentry/errors.hpp"
#include "flowsentry/parallel.hpp"
#include "flowsentry/rng.hpp"
#include "flowsentry/textutil.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flowsentry {

namespace {

std::vector<double> build_grid(const FlowTable& table, std::size_t col, const GridSpec& spec) {
    if (spec.explicit_values) {
        auto grid = *spec.explicit_values;
        if (grid.empty()) throw DataError("ice: explicit grid is empty");
        if (!std::is_sorted(grid.begin(), grid.end()) ||
            std::adjacent_find(grid.begin(), grid.end()) != grid.end())
            throw DataError("ice: explicit grid must be strictly ascending");
        return grid;
    }

    std::vector<double> values(table.row_count());
    for (std::size_t r = 0; r < table.row_count(); ++r) values[r] = table.at(r, col);
    std::sort(values.begin(), values.end());

    const bool binary = std::all_of(values.begin(), values.end(),
                                    [](double v) { return v == 0.0 || v == 1.0; });
    if (binary) return {0.0, 1.0};

    const int q = std::max(spec.quantiles, 2);
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i) {
        // type-7 quantile: linear interpolation between order statistics
        const double h = static_cast<double>(i) / static_cast<double>(q - 1) *
                         static_cast<double>(values.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double frac = h - std::floor(h);
        grid.push_back(values[lo] + frac * (values[hi] - values[lo]));
    }
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

} // namespace

IceCurves ice(const ModelSpec& model, const FlowTable& table, const std::string& feature,
              const IceConfig& cfg) {
    const auto col = table.column_index(feature);
    if (!col) throw DataError("ice: unknown feature '" + feature + "'");
    if (table.col_count() != model.feature_names.size())
        throw DataError("ice: table columns do not match the model's features");
    if (table.row_count() == 0) throw DataError("ice: empty table");

    IceCurves out;
    out.feature = feature;
    out.grid = build_grid(table, *col, cfg.grid);

    // Desk-scale cap: sample instances without replacement, original order.
    std::vector<std::size_t> rows(table.row_count());
    std::iota(rows.begin(), rows.end(), 0);
    if (rows.size() > cfg.row_cap) {
        SplitMix64 rng(mix_seed(cfg.seed, 0x1ce, 0));
        rng.shuffle(rows);
        rows.resize(cfg.row_cap);
        std::sort(rows.begin(), rows.end());
    }

    const std::size_t g = out.grid.size();
    out.curves.assign(rows.size(), std::vector<double>(g, 0.0));
    par::parallel_for(rows.size(), 64, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> probe(table.col_count());
        for (std::size_t i = lo; i < hi; ++i) {
            const double* src = table.row(rows[i]);
            std::copy(src, src + table.col_count(), probe.begin());
            for (std::size_t j = 0; j < g; ++j) {
                probe[*col] = out.grid[j];
                out.curves[i][j] = predict_proba_row(model, probe.data());
            }
        }
    });

    out.pdp.assign(g, 0.0);
    for (const auto& curve : out.curves)
        for (std::size_t j = 0; j < g; ++j) out.pdp[j] += curve[j];
    for (auto& v : out.pdp) v /= static_cast<double>(out.curves.size());
    return out;
}

SurrogateResult surrogate_tree(const ModelSpec& model, const FlowTable& table, int depth_cap) {
    if (table.row_count() == 0) throw DataError("surrogate_tree: empty table");

    const std::vector<std::uint8_t> black_box = predict(model, table);
    FlowTable distill = table;
    distill.labels = black_box;

    CartConfig cfg;
    cfg.max_depth = depth_cap;
    const ModelSpec cart = train_cart(distill, cfg);

    SurrogateResult out;
    out.tree = std::get<TreeModel>(cart.model);
    out.feature_names = table.feature_names;
    out.depth_cap = depth_cap;

    std::size_t agree = 0;
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        const std::uint8_t pred = out.tree.predict_value(table.row(r)) >= 0.5 ? 1 : 0;
        if (pred == black_box[r]) ++agree;
    }
    out.fidelity = static_cast<double>(agree) / static_cast<double>(table.row_count());
    return out;
}

std::string render_ice_text(const IceCurves& curves) {
    std::string out = "grid";
    for (std::size_t i = 0; i < curves.curves.size(); ++i)
        out += " curve_" + std::to_string(i);
    out += " pdp\n";
    for (std::size_t j = 0; j < curves.grid.size(); ++j) {
        out += double_to_string(curves.grid[j]);
        for (const auto& curve : curves.curves) {
            out += ' ';
            out += double_to_string(curve[j]);
        }
        out += ' ';
        out += double_to_string(curves.pdp[j]);
        out += '\n';
    }
    return out;
}

namespace {
void render_node(const TreeModel& tree, const std::vector<std::string>& names,
                 std::int32_t idx, int indent, std::string& out) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(idx)];
    out.append(static_cast<std::size_t>(indent) * 2, ' ');
    if (n.is_leaf()) {
        out += "leaf p(attack)=" + double_to_string(n.value) + "\n";
        return;
    }
    out += names[static_cast<std::size_t>(n.feature)] + " > " +
           double_to_string(n.threshold) + "?\n";
    out.append(static_cast<std::size_t>(indent) * 2 + 2, ' ');
    out += "no:\n";
    render_node(tree, names, n.left, indent + 2, out);
    out.append(static_cast<std::size_t>(indent) * 2 + 2, ' ');
    out += "yes:\n";
    render_node(tree, names, n.right, indent + 2, out);
}
} // namespace

std::string render_tree_text(const TreeModel& tree, const std::vector<std::string>& names) {
    std::string out;
    render_node(tree, names, 0, 0, out);
    return out;
}

} // namespace flowsentry
