#include "flowsentry/resample.hpp"

#include "flowsentry/errors.hpp"
#include "flowsentry/parallel.hpp"
#include "flowsentry/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace flowsentry {

namespace {

constexpr std::uint64_t kSmoteStream = 0x5307e;

// k nearest minority neighbors (excluding self) by squared Euclidean
// distance, ties by lower row position.
std::vector<std::vector<std::size_t>> minority_neighbors(const std::vector<double>& coords,
                                                         std::size_t count, std::size_t dims,
                                                         std::size_t k) {
    std::vector<std::vector<std::size_t>> out(count);
    par::parallel_for(count, 64, [&](std::size_t lo, std::size_t hi) {
        std::vector<std::pair<double, std::size_t>> dist;
        for (std::size_t i = lo; i < hi; ++i) {
            dist.clear();
            const double* xi = coords.data() + i * dims;
            for (std::size_t j = 0; j < count; ++j) {
                if (j == i) continue;
                const double* xj = coords.data() + j * dims;
                double d2 = 0.0;
                for (std::size_t c = 0; c < dims; ++c) {
                    const double d = xi[c] - xj[c];
                    d2 += d * d;
                }
                dist.emplace_back(d2, j);
            }
            std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
            out[i].reserve(k);
            for (std::size_t t = 0; t < k; ++t) out[i].push_back(dist[t].second);
        }
    });
    return out;
}

} // namespace

std::pair<FlowTable, ResampleReport> smote(const FlowTable& table, const SmoteConfig& cfg) {
    const std::size_t n = table.row_count();
    const std::size_t m = table.col_count();
    if (cfg.k_neighbors < 1) throw DataError("smote: k_neighbors must be >= 1");
    if (!(cfg.target_minority_fraction > 0.0 && cfg.target_minority_fraction <= 0.5))
        throw DataError("smote: target_minority_fraction must be in (0, 0.5]");

    std::array<std::size_t, 2> counts{0, 0};
    for (const auto y : table.labels) ++counts[y];
    if (counts[0] == 0 || counts[1] == 0)
        throw DataError("smote: both classes must be present");

    const int minority_label = counts[1] <= counts[0] ? 1 : 0;
    const std::size_t minority = counts[minority_label];
    const std::size_t majority = n - minority;
    if (minority <= static_cast<std::size_t>(cfg.k_neighbors))
        throw DataError("smote: minority count " + std::to_string(minority) +
                        " must exceed k_neighbors " + std::to_string(cfg.k_neighbors) +
                        "; use a smaller k");

    // Synthetic rows needed so minority/(total) lands on the target:
    // s = (f*(m+M) - m) / (1 - f), rounded to the nearest whole row.
    const double f = cfg.target_minority_fraction;
    const double exact =
        (f * static_cast<double>(n) - static_cast<double>(minority)) / (1.0 - f);
    const std::size_t synth =
        exact <= 0.0 ? 0 : static_cast<std::size_t>(std::llround(exact));

    std::vector<std::size_t> minority_rows;
    minority_rows.reserve(minority);
    for (std::size_t r = 0; r < n; ++r)
        if (table.labels[r] == minority_label) minority_rows.push_back(r);

    ResampleReport report;
    report.minority_before = minority;
    report.majority_before = majority;
    report.minority_label = minority_label;
    report.synthetic_added = synth;

    FlowTable out = table;
    if (synth > 0) {
        // Neighbor search among minority rows only, on raw features by
        // default (classical SMOTE), optionally in standardized space.
        std::vector<double> coords(minority * m);
        if (cfg.standardized_space) {
            auto [std_table, stats] = standardize(table);
            for (std::size_t i = 0; i < minority; ++i)
                std::copy(std_table.row(minority_rows[i]), std_table.row(minority_rows[i]) + m,
                          coords.data() + i * m);
        } else {
            for (std::size_t i = 0; i < minority; ++i)
                std::copy(table.row(minority_rows[i]), table.row(minority_rows[i]) + m,
                          coords.data() + i * m);
        }
        const auto neighbors = minority_neighbors(coords, minority, m,
                                                  static_cast<std::size_t>(cfg.k_neighbors));

        // Replicas spread round-robin over minority rows: source i gets
        // base+1 replicas while i < remainder, base afterwards.
        const std::size_t base = synth / minority;
        const std::size_t remainder = synth % minority;
        std::vector<std::size_t> offset(minority + 1, 0);
        for (std::size_t i = 0; i < minority; ++i)
            offset[i + 1] = offset[i] + base + (i < remainder ? 1 : 0);

        out.values.resize((n + synth) * m);
        out.labels.resize(n + synth, static_cast<std::uint8_t>(minority_label));
        if (!out.raw_labels.empty())
            out.raw_labels.resize(n + synth, minority_label ? "SMOTE_ATTACK" : "SMOTE_BENIGN");
        report.provenance.resize(synth);

        par::parallel_for(minority, 64, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                for (std::size_t rep = offset[i]; rep < offset[i + 1]; ++rep) {
                    SplitMix64 rng(mix_seed(cfg.seed ^ kSmoteStream, i, rep - offset[i]));
                    const auto& nn = neighbors[i];
                    const std::size_t pick =
                        static_cast<std::size_t>(rng.uniform_index(nn.size()));
                    const double u = rng.uniform();
                    const std::size_t src_row = minority_rows[i];
                    const std::size_t nn_row = minority_rows[nn[pick]];
                    const double* x = table.row(src_row);
                    const double* xn = table.row(nn_row);
                    double* dst = out.values.data() + (n + rep) * m;
                    for (std::size_t c = 0; c < m; ++c) dst[c] = x[c] + u * (xn[c] - x[c]);
                    report.provenance[rep] = {src_row, nn_row, u};
                }
            }
        });
    }

    const std::size_t total = n + synth;
    report.resulting_fraction =
        static_cast<double>(minority + synth) / static_cast<double>(total);
    return {std::move(out), std::move(report)};
}

std::pair<FlowTable, ResampleReport> random_undersample(const FlowTable& table,
                                                        double majority_keep_fraction,
                                                        std::uint64_t seed) {
    if (!(majority_keep_fraction > 0.0 && majority_keep_fraction <= 1.0))
        throw DataError("random_undersample: keep fraction must be in (0, 1]");

    const std::size_t n = table.row_count();
    std::array<std::size_t, 2> counts{0, 0};
    for (const auto y : table.labels) ++counts[y];
    if (counts[0] == 0 || counts[1] == 0)
        throw DataError("random_undersample: both classes must be present");

    const int majority_label = counts[1] > counts[0] ? 1 : 0;
    const std::size_t majority = counts[majority_label];
    const std::size_t keep_count = static_cast<std::size_t>(
        std::llround(majority_keep_fraction * static_cast<double>(majority)));
    if (keep_count == 0)
        throw DataError("random_undersample: fraction would leave zero majority rows");

    std::vector<std::size_t> majority_rows;
    majority_rows.reserve(majority);
    for (std::size_t r = 0; r < n; ++r)
        if (table.labels[r] == majority_label) majority_rows.push_back(r);

    SplitMix64 rng(mix_seed(seed, 0xdec1ca7e, 0));
    rng.shuffle(majority_rows);
    majority_rows.resize(keep_count);
    std::sort(majority_rows.begin(), majority_rows.end());

    std::vector<std::size_t> keep;
    keep.reserve(n - majority + keep_count);
    std::size_t next_kept = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (table.labels[r] != majority_label) {
            keep.push_back(r);
        } else if (next_kept < majority_rows.size() && majority_rows[next_kept] == r) {
            keep.push_back(r);
            ++next_kept;
        }
    }

    ResampleReport report;
    report.minority_before = n - majority;
    report.majority_before = majority;
    report.rows_removed = majority - keep_count;
    report.minority_label = 1 - majority_label;
    report.resulting_fraction =
        static_cast<double>(n - majority) / static_cast<double>(keep.size());
    return {table.select_rows(keep), std::move(report)};
}

} // namespace flowsentry
