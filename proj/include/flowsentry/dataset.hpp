#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flowsentry {

enum class ColumnKind : std::uint8_t { Numeric, Categorical, Label };

/// Column layout of a source file: every column name (whitespace-trimmed,
/// unique), with exactly one label column.
struct ColumnSchema {
    std::vector<std::string> names;
    std::vector<ColumnKind> kinds;
    std::size_t label_index = 0;

    const std::string& label_name() const { return names[label_index]; }
    bool operator==(const ColumnSchema&) const = default;
};

/// A categorical column awaiting integer encoding. Values stay out of the
/// numeric matrix until clean() assigns first-appearance codes.
struct PendingCategorical {
    std::string name;
    std::vector<std::string> values; // one per row
    bool operator==(const PendingCategorical&) const = default;
};

// Row defect flags recorded at load time so clean() can report missing and
// non-finite drops separately.
inline constexpr std::uint8_t kDefectMissing = 1;
inline constexpr std::uint8_t kDefectNonFinite = 2;

/// Dense numeric table: rows = flows, columns = features, plus the binary
/// target. Between load and clean the matrix may hold non-finite values and
/// categorical columns may be pending; afterwards every value is finite.
/// Immutable by convention once built; safe to share across threads.
struct FlowTable {
    ColumnSchema schema;                            // source layout, provenance only
    std::vector<std::string> feature_names;         // matrix columns
    std::vector<double> values;                     // row-major, rows x cols
    std::vector<std::uint8_t> labels;               // 0 = benign, 1 = attack
    std::vector<std::string> raw_labels;            // source label strings; may be empty
    std::vector<PendingCategorical> pending_categorical;
    std::vector<std::uint8_t> row_defects;          // empty == no recorded defects

    std::size_t row_count() const { return labels.size(); }
    std::size_t col_count() const { return feature_names.size(); }

    double at(std::size_t r, std::size_t c) const { return values[r * col_count() + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * col_count() + c]; }
    const double* row(std::size_t r) const { return values.data() + r * col_count(); }

    std::optional<std::size_t> column_index(std::string_view name) const;

    /// Projection onto the named columns, in the given order. Labels kept.
    FlowTable select_columns(const std::vector<std::string>& names) const;
    FlowTable select_rows(const std::vector<std::size_t>& rows) const;

    /// Distinct raw label strings in first-appearance order.
    std::vector<std::string> label_vocabulary() const;
};

enum class SchemaPolicy {
    Strict, // every non-label column must parse as numeric; stray text = missing cell
    Infer,  // columns with non-numeric text become categorical, encoded by clean()
};

/// Reads one flow-record CSV: first row is the header, names are trimmed,
/// the label column is found by trimmed name "Label" and binarized against
/// benign_token. Rows with defects are kept (flagged) for clean() to drop.
FlowTable load_flow_csv(const std::string& path, SchemaPolicy policy = SchemaPolicy::Infer,
                        const std::string& benign_token = "BENIGN");

/// Writes header + rows; finite doubles round-trip bit-exactly. Rows whose
/// raw label is unknown are written as BENIGN/ATTACK.
void write_flow_csv(const FlowTable& table, const std::string& path);

// Binary table format (magic "FWTBL", little-endian); exact and compact.
void write_flow_binary(const FlowTable& table, const std::string& path);
FlowTable load_flow_binary(const std::string& path);

/// Dispatch on extension: ".bin" binary, anything else CSV.
FlowTable load_table_auto(const std::string& path, SchemaPolicy policy = SchemaPolicy::Infer);
void write_table_auto(const FlowTable& table, const std::string& path);

/// Concatenates rows in input order. All schemas must match after trimming;
/// the error names the first differing column.
FlowTable merge_tables(const std::vector<FlowTable>& tables);

/// benign_token (case-insensitive, trimmed) -> 0; anything else -> 1.
std::vector<std::uint8_t> binarize_labels(const std::vector<std::string>& raw_labels,
                                          const std::string& benign_token);

struct CleaningPolicy {
    double near_zero_threshold = 0.95; // drop column when zero-fraction >= this
};

struct CleaningReport {
    std::size_t rows_dropped_missing = 0;
    std::size_t rows_dropped_nonfinite = 0;
    std::vector<std::string> columns_dropped_nearzero;
    // per categorical column: category string -> first-appearance code
    std::map<std::string, std::map<std::string, int>> categorical_encodings;

    bool anything_happened() const {
        return rows_dropped_missing || rows_dropped_nonfinite ||
               !columns_dropped_nearzero.empty() || !categorical_encodings.empty();
    }
};

/// Drops defective rows, integer-encodes pending categorical columns
/// (appended after the numeric columns in original order), then removes
/// columns that are mostly zero. Idempotent: a second pass reports nothing.
std::pair<FlowTable, CleaningReport> clean(const FlowTable& table,
                                           const CleaningPolicy& policy = {});

struct StandardizeStats {
    std::vector<double> means;
    std::vector<double> std_devs;      // population (1/N), floored at kStdFloor
    std::vector<std::uint8_t> clamped; // 1 where the floor kicked in
};

inline constexpr double kStdFloor = 1e-12;

/// Column-wise (x - mean) / std. Without stats, computes them from the
/// table; pass training stats to transform test data consistently.
std::pair<FlowTable, StandardizeStats> standardize(
    const FlowTable& table, const std::optional<StandardizeStats>& stats = std::nullopt);

/// Inverse transform: x * std + mean.
FlowTable unstandardize(const FlowTable& table, const StandardizeStats& stats);

} // namespace flowsentry
