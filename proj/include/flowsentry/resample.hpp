#pragma once

#include "flowsentry/dataset.hpp"

#include <cstdint>
#include <vector>

namespace flowsentry {

struct SmoteConfig {
    int k_neighbors = 5;
    double target_minority_fraction = 0.5; // in (0, 0.5]
    std::uint64_t seed = 42;
    bool standardized_space = false; // neighbor search in standardized coordinates
};

/// Where each synthetic row came from: s = x[source] + u * (x[neighbor] - x[source]).
struct SyntheticProvenance {
    std::size_t source_row;
    std::size_t neighbor_row;
    double u;
};

struct ResampleReport {
    std::size_t minority_before = 0;
    std::size_t majority_before = 0;
    std::size_t synthetic_added = 0;
    std::size_t rows_removed = 0;
    double resulting_fraction = 0.0;
    int minority_label = 0;
    std::vector<SyntheticProvenance> provenance; // one entry per synthetic row
};

/// Synthetic minority oversampling: each new row interpolates between a
/// minority row and one of its k nearest minority neighbors (Euclidean),
/// with u drawn uniformly from [0,1) on a per-row derived stream. Original
/// rows are preserved verbatim and come first; synthetic rows follow in
/// (source row, replica) order, so output is identical for any thread count.
std::pair<FlowTable, ResampleReport> smote(const FlowTable& table, const SmoteConfig& cfg);

/// Keeps a uniform majority subset (without replacement) of the given
/// fraction; minority rows are untouched. Row order is preserved.
std::pair<FlowTable, ResampleReport> random_undersample(const FlowTable& table,
                                                        double majority_keep_fraction,
                                                        std::uint64_t seed);

} // namespace flowsentry
