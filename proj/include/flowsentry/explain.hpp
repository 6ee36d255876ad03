#pragma once

#include "flowsentry/dataset.hpp"
#include "flowsentry/learners.hpp"

#include <optional>
#include <string>
#include <vector>

namespace flowsentry {

struct GridSpec {
    std::optional<std::vector<double>> explicit_values; // ascending when given
    int quantiles = 20;
};

struct IceConfig {
    GridSpec grid;
    std::size_t row_cap = 10000; // instances beyond this are subsampled
    std::uint64_t seed = 42;
};

/// One curve per instance: the feature swept over the grid, everything else
/// held fixed, P(attack) recorded. pdp is the per-grid-point mean curve.
struct IceCurves {
    std::string feature;
    std::vector<double> grid;                // strictly ascending
    std::vector<std::vector<double>> curves; // instances x grid
    std::vector<double> pdp;
};

/// Default grid: 20 quantiles of the feature's empirical distribution,
/// deduplicated; a {0,1}-valued feature uses exactly {0,1}.
IceCurves ice(const ModelSpec& model, const FlowTable& table, const std::string& feature,
              const IceConfig& cfg = {});

struct SurrogateResult {
    TreeModel tree;
    std::vector<std::string> feature_names;
    double fidelity = 0.0; // agreement with the black box on the distillation set
    int depth_cap = 0;
};

/// Distills the model's hard labels into a depth-capped CART.
SurrogateResult surrogate_tree(const ModelSpec& model, const FlowTable& table, int depth_cap);

/// Plain-text columns: grid value, one column per instance, then pdp.
std::string render_ice_text(const IceCurves& curves);

std::string render_tree_text(const TreeModel& tree, const std::vector<std::string>& names);

} // namespace flowsentry
