#include "flowsentry/dataset.hpp"

#include "flowsentry/errors.hpp"
#include "flowsentry/textutil.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace flowsentry {

std::optional<std::size_t> FlowTable::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < feature_names.size(); ++i)
        if (feature_names[i] == name) return i;
    return std::nullopt;
}

FlowTable FlowTable::select_columns(const std::vector<std::string>& names) const {
    std::vector<std::size_t> cols;
    cols.reserve(names.size());
    for (const auto& n : names) {
        const auto idx = column_index(n);
        if (!idx) throw DataError("select_columns: unknown column '" + n + "'");
        cols.push_back(*idx);
    }
    FlowTable out;
    out.schema = schema;
    out.feature_names = names;
    out.labels = labels;
    out.raw_labels = raw_labels;
    out.row_defects = row_defects;
    out.values.resize(row_count() * cols.size());
    for (std::size_t r = 0; r < row_count(); ++r) {
        const double* src = row(r);
        double* dst = out.values.data() + r * cols.size();
        for (std::size_t j = 0; j < cols.size(); ++j) dst[j] = src[cols[j]];
    }
    return out;
}

FlowTable FlowTable::select_rows(const std::vector<std::size_t>& rows) const {
    FlowTable out;
    out.schema = schema;
    out.feature_names = feature_names;
    const std::size_t m = col_count();
    out.values.resize(rows.size() * m);
    out.labels.reserve(rows.size());
    if (!raw_labels.empty()) out.raw_labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t r = rows[i];
        std::copy(row(r), row(r) + m, out.values.data() + i * m);
        out.labels.push_back(labels[r]);
        if (!raw_labels.empty()) out.raw_labels.push_back(raw_labels[r]);
        if (!row_defects.empty()) out.row_defects.push_back(row_defects[r]);
    }
    for (const auto& pc : pending_categorical) {
        PendingCategorical sel{pc.name, {}};
        sel.values.reserve(rows.size());
        for (std::size_t r : rows) sel.values.push_back(pc.values[r]);
        out.pending_categorical.push_back(std::move(sel));
    }
    return out;
}

std::vector<std::string> FlowTable::label_vocabulary() const {
    std::vector<std::string> vocab;
    std::unordered_set<std::string> seen;
    for (const auto& s : raw_labels)
        if (seen.insert(s).second) vocab.push_back(s);
    return vocab;
}

std::vector<std::uint8_t> binarize_labels(const std::vector<std::string>& raw_labels,
                                          const std::string& benign_token) {
    const std::string benign = to_lower(trim(benign_token));
    std::vector<std::uint8_t> out;
    out.reserve(raw_labels.size());
    for (const auto& s : raw_labels)
        out.push_back(to_lower(trim(s)) == benign ? 0 : 1);
    return out;
}

namespace {

bool is_missing_token(const std::string& trimmed) { return trimmed.empty(); }

} // namespace

FlowTable load_flow_csv(const std::string& path, SchemaPolicy policy,
                        const std::string& benign_token) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": missing header row");
    auto header = split_csv_line(line);
    for (auto& h : header) h = trim(h);
    if (header.size() == 1 && header[0].empty())
        throw DataError(path + ": missing header row");

    ColumnSchema schema;
    schema.names = header;
    {
        std::unordered_set<std::string> seen;
        for (const auto& n : header)
            if (!seen.insert(n).second)
                throw DataError(path + ": duplicate column name '" + n + "' after trimming");
    }
    std::optional<std::size_t> label_idx;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == "Label") label_idx = i;
    if (!label_idx) throw DataError(path + ": no 'Label' column in header");
    schema.label_index = *label_idx;

    const std::size_t ncols = header.size();
    // Per-column cell storage; kinds resolved after the full scan.
    std::vector<std::vector<std::string>> cells(ncols);
    std::size_t nrows = 0;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != ncols)
            throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(ncols) + " fields, got " +
                            std::to_string(fields.size()));
        for (std::size_t c = 0; c < ncols; ++c) cells[c].push_back(trim(fields[c]));
        ++nrows;
    }

    // Column kinds: a non-label column is categorical (under Infer) when any
    // non-empty cell fails to parse as a double.
    schema.kinds.assign(ncols, ColumnKind::Numeric);
    schema.kinds[schema.label_index] = ColumnKind::Label;
    if (policy == SchemaPolicy::Infer) {
        for (std::size_t c = 0; c < ncols; ++c) {
            if (c == schema.label_index) continue;
            for (const auto& cell : cells[c]) {
                if (is_missing_token(cell)) continue;
                if (!parse_double(cell)) {
                    schema.kinds[c] = ColumnKind::Categorical;
                    break;
                }
            }
        }
    }

    FlowTable table;
    table.schema = schema;
    table.raw_labels = std::move(cells[schema.label_index]);
    table.labels = binarize_labels(table.raw_labels, benign_token);

    for (std::size_t c = 0; c < ncols; ++c) {
        if (schema.kinds[c] == ColumnKind::Numeric) table.feature_names.push_back(header[c]);
    }
    const std::size_t m = table.feature_names.size();
    table.values.assign(nrows * m, 0.0);
    table.row_defects.assign(nrows, 0);

    std::size_t out_col = 0;
    for (std::size_t c = 0; c < ncols; ++c) {
        if (schema.kinds[c] == ColumnKind::Label) continue;
        if (schema.kinds[c] == ColumnKind::Categorical) {
            PendingCategorical pc{header[c], std::move(cells[c])};
            for (std::size_t r = 0; r < nrows; ++r)
                if (is_missing_token(pc.values[r])) table.row_defects[r] |= kDefectMissing;
            table.pending_categorical.push_back(std::move(pc));
            continue;
        }
        for (std::size_t r = 0; r < nrows; ++r) {
            const std::string& cell = cells[c][r];
            if (is_missing_token(cell)) {
                table.values[r * m + out_col] = std::nan("");
                table.row_defects[r] |= kDefectMissing;
                continue;
            }
            const auto v = parse_double(cell);
            if (!v) {
                // Strict policy: stray text in a numeric column = missing cell.
                table.values[r * m + out_col] = std::nan("");
                table.row_defects[r] |= kDefectMissing;
            } else {
                table.values[r * m + out_col] = *v;
                if (!std::isfinite(*v)) table.row_defects[r] |= kDefectNonFinite;
            }
        }
        ++out_col;
    }
    return table;
}

void write_flow_csv(const FlowTable& table, const std::string& path) {
    if (!table.pending_categorical.empty())
        throw DataError("write_flow_csv: clean() the table first (categorical columns pending)");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    for (const auto& n : table.feature_names) out << n << ',';
    out << "Label\n";
    const bool have_raw = table.raw_labels.size() == table.row_count();
    std::string buf;
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        buf.clear();
        const double* row = table.row(r);
        for (std::size_t c = 0; c < table.col_count(); ++c) {
            buf += double_to_string(row[c]);
            buf += ',';
        }
        buf += have_raw ? table.raw_labels[r] : (table.labels[r] ? "ATTACK" : "BENIGN");
        buf += '\n';
        out << buf;
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

namespace {

constexpr char kTableMagic[6] = {'F', 'W', 'T', 'B', 'L', '1'};

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw DataError("truncated binary table");
    return v;
}

void put_string(std::ostream& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
    const auto n = get<std::uint32_t>(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw DataError("truncated binary table");
    return s;
}

} // namespace

void write_flow_binary(const FlowTable& table, const std::string& path) {
    if (!table.pending_categorical.empty())
        throw DataError("write_flow_binary: clean() the table first (categorical columns pending)");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out.write(kTableMagic, sizeof kTableMagic);
    put<std::uint16_t>(out, 1); // version
    const bool have_raw = table.raw_labels.size() == table.row_count();
    put<std::uint8_t>(out, have_raw ? 1 : 0);
    put<std::uint8_t>(out, 0);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(table.col_count()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(table.row_count()));
    for (const auto& n : table.feature_names) put_string(out, n);
    out.write(reinterpret_cast<const char*>(table.values.data()),
              static_cast<std::streamsize>(table.values.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(table.labels.data()),
              static_cast<std::streamsize>(table.labels.size()));
    if (have_raw)
        for (const auto& s : table.raw_labels) put_string(out, s);
    if (!out) throw DataError("write failed for '" + path + "'");
}

FlowTable load_flow_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    char magic[sizeof kTableMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kTableMagic, sizeof magic) != 0)
        throw DataError(path + ": not a binary flow table");
    const auto version = get<std::uint16_t>(in);
    if (version != 1)
        throw DataError(path + ": unsupported table version " + std::to_string(version));
    const bool have_raw = get<std::uint8_t>(in) != 0;
    (void)get<std::uint8_t>(in);
    const auto cols = get<std::uint32_t>(in);
    const auto rows = get<std::uint64_t>(in);

    FlowTable table;
    table.feature_names.reserve(cols);
    for (std::uint32_t c = 0; c < cols; ++c) table.feature_names.push_back(get_string(in));
    table.schema.names = table.feature_names;
    table.schema.names.push_back("Label");
    table.schema.kinds.assign(cols, ColumnKind::Numeric);
    table.schema.kinds.push_back(ColumnKind::Label);
    table.schema.label_index = cols;

    table.values.resize(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(table.values.data()),
            static_cast<std::streamsize>(table.values.size() * sizeof(double)));
    table.labels.resize(static_cast<std::size_t>(rows));
    in.read(reinterpret_cast<char*>(table.labels.data()),
            static_cast<std::streamsize>(table.labels.size()));
    if (!in) throw DataError(path + ": truncated binary table");
    if (have_raw) {
        table.raw_labels.reserve(static_cast<std::size_t>(rows));
        for (std::uint64_t r = 0; r < rows; ++r) table.raw_labels.push_back(get_string(in));
    }
    return table;
}

namespace {
bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}
} // namespace

FlowTable load_table_auto(const std::string& path, SchemaPolicy policy) {
    return has_suffix(path, ".bin") ? load_flow_binary(path) : load_flow_csv(path, policy);
}

void write_table_auto(const FlowTable& table, const std::string& path) {
    if (has_suffix(path, ".bin"))
        write_flow_binary(table, path);
    else
        write_flow_csv(table, path);
}

FlowTable merge_tables(const std::vector<FlowTable>& tables) {
    if (tables.empty()) throw DataError("merge_tables: nothing to merge");
    const FlowTable& first = tables.front();
    for (std::size_t t = 1; t < tables.size(); ++t) {
        const auto& a = first.schema.names;
        const auto& b = tables[t].schema.names;
        const std::size_t n = std::min(a.size(), b.size());
        for (std::size_t i = 0; i < n; ++i)
            if (a[i] != b[i])
                throw DataError("merge_tables: schema mismatch at column '" + a[i] +
                                "' vs '" + b[i] + "' (input " + std::to_string(t) + ")");
        if (a.size() != b.size())
            throw DataError("merge_tables: schema mismatch at column '" +
                            (a.size() > n ? a[n] : b[n]) + "' (input " + std::to_string(t) + ")");
        if (first.feature_names != tables[t].feature_names)
            throw DataError("merge_tables: feature column mismatch (input " +
                            std::to_string(t) + ")");
    }

    FlowTable out;
    out.schema = first.schema;
    out.feature_names = first.feature_names;
    const bool any_defects =
        std::any_of(tables.begin(), tables.end(),
                    [](const FlowTable& t) { return !t.row_defects.empty(); });
    const bool all_raw =
        std::all_of(tables.begin(), tables.end(), [](const FlowTable& t) {
            return t.raw_labels.size() == t.row_count();
        });
    for (const auto& pc : first.pending_categorical)
        out.pending_categorical.push_back({pc.name, {}});

    for (const auto& t : tables) {
        out.values.insert(out.values.end(), t.values.begin(), t.values.end());
        out.labels.insert(out.labels.end(), t.labels.begin(), t.labels.end());
        if (all_raw)
            out.raw_labels.insert(out.raw_labels.end(), t.raw_labels.begin(),
                                  t.raw_labels.end());
        if (any_defects) {
            if (t.row_defects.empty())
                out.row_defects.insert(out.row_defects.end(), t.row_count(), 0);
            else
                out.row_defects.insert(out.row_defects.end(), t.row_defects.begin(),
                                       t.row_defects.end());
        }
        for (std::size_t p = 0; p < out.pending_categorical.size(); ++p) {
            if (p >= t.pending_categorical.size() ||
                t.pending_categorical[p].name != out.pending_categorical[p].name)
                throw DataError("merge_tables: categorical column mismatch");
            auto& dst = out.pending_categorical[p].values;
            const auto& src = t.pending_categorical[p].values;
            dst.insert(dst.end(), src.begin(), src.end());
        }
    }
    return out;
}

std::pair<FlowTable, CleaningReport> clean(const FlowTable& table, const CleaningPolicy& policy) {
    CleaningReport report;
    const std::size_t n = table.row_count();
    const std::size_t m = table.col_count();

    // Row defects: recorded flags plus a fresh scan for non-finite values,
    // so synthetic tables without load-time flags are handled too.
    std::vector<std::uint8_t> defects(n, 0);
    if (!table.row_defects.empty())
        defects = table.row_defects;
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = table.row(r);
        for (std::size_t c = 0; c < m; ++c) {
            if (!std::isfinite(row[c])) {
                // NaN written for a missing cell is already flagged as missing.
                if (!(defects[r] & kDefectMissing)) defects[r] |= kDefectNonFinite;
                break;
            }
        }
    }

    std::vector<std::size_t> keep;
    keep.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        if (defects[r] & kDefectMissing)
            ++report.rows_dropped_missing;
        else if (defects[r] & kDefectNonFinite)
            ++report.rows_dropped_nonfinite;
        else
            keep.push_back(r);
    }
    if (keep.empty()) throw DataError("clean: every row was dropped (empty table)");

    // Surviving rows, with categorical columns encoded and appended after
    // the numeric ones in their original relative order.
    const std::size_t out_rows = keep.size();
    std::vector<std::string> out_names = table.feature_names;
    std::vector<std::vector<double>> encoded;
    for (const auto& pc : table.pending_categorical) {
        std::map<std::string, int> codes;
        std::vector<double> col;
        col.reserve(out_rows);
        int next_code = 0;
        for (std::size_t i = 0; i < out_rows; ++i) {
            const std::string& cat = pc.values[keep[i]];
            auto it = codes.find(cat);
            if (it == codes.end()) it = codes.emplace(cat, next_code++).first;
            col.push_back(static_cast<double>(it->second));
        }
        report.categorical_encodings[pc.name] = std::move(codes);
        encoded.push_back(std::move(col));
        out_names.push_back(pc.name);
    }

    const std::size_t out_cols = out_names.size();
    if (out_cols == 0) throw DataError("clean: table has no feature columns");
    std::vector<double> matrix(out_rows * out_cols);
    for (std::size_t i = 0; i < out_rows; ++i) {
        const double* src = table.row(keep[i]);
        double* dst = matrix.data() + i * out_cols;
        std::copy(src, src + m, dst);
        for (std::size_t e = 0; e < encoded.size(); ++e) dst[m + e] = encoded[e][i];
    }

    // Near-zero columns: zero-fraction >= threshold.
    std::vector<std::size_t> keep_cols;
    for (std::size_t c = 0; c < out_cols; ++c) {
        std::size_t zeros = 0;
        for (std::size_t r = 0; r < out_rows; ++r)
            if (matrix[r * out_cols + c] == 0.0) ++zeros;
        const double frac = static_cast<double>(zeros) / static_cast<double>(out_rows);
        if (frac >= policy.near_zero_threshold)
            report.columns_dropped_nearzero.push_back(out_names[c]);
        else
            keep_cols.push_back(c);
    }
    if (keep_cols.empty())
        throw DataError("clean: every feature column was dropped (degenerate table)");

    FlowTable out;
    out.schema = table.schema;
    for (std::size_t c : keep_cols) out.feature_names.push_back(out_names[c]);
    out.values.resize(out_rows * keep_cols.size());
    for (std::size_t r = 0; r < out_rows; ++r) {
        const double* src = matrix.data() + r * out_cols;
        double* dst = out.values.data() + r * keep_cols.size();
        for (std::size_t j = 0; j < keep_cols.size(); ++j) dst[j] = src[keep_cols[j]];
    }
    out.labels.reserve(out_rows);
    const bool have_raw = table.raw_labels.size() == n;
    for (std::size_t r : keep) {
        out.labels.push_back(table.labels[r]);
        if (have_raw) out.raw_labels.push_back(table.raw_labels[r]);
    }
    return {std::move(out), std::move(report)};
}

std::pair<FlowTable, StandardizeStats> standardize(const FlowTable& table,
                                                   const std::optional<StandardizeStats>& stats) {
    const std::size_t n = table.row_count();
    const std::size_t m = table.col_count();
    if (n == 0) throw DataError("standardize: empty table");

    StandardizeStats s;
    if (stats) {
        if (stats->means.size() != m || stats->std_devs.size() != m)
            throw DataError("standardize: stats arity " + std::to_string(stats->means.size()) +
                            " does not match table columns " + std::to_string(m));
        s = *stats;
    } else {
        s.means.assign(m, 0.0);
        s.std_devs.assign(m, 0.0);
        s.clamped.assign(m, 0);
        for (std::size_t c = 0; c < m; ++c) {
            double sum = 0.0;
            for (std::size_t r = 0; r < n; ++r) sum += table.at(r, c);
            const double mean = sum / static_cast<double>(n);
            double ss = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                const double d = table.at(r, c) - mean;
                ss += d * d;
            }
            double sd = std::sqrt(ss / static_cast<double>(n));
            if (sd < kStdFloor) {
                sd = kStdFloor;
                s.clamped[c] = 1;
            }
            s.means[c] = mean;
            s.std_devs[c] = sd;
        }
    }

    FlowTable out = table;
    for (std::size_t r = 0; r < n; ++r) {
        double* row = out.values.data() + r * m;
        for (std::size_t c = 0; c < m; ++c) row[c] = (row[c] - s.means[c]) / s.std_devs[c];
    }
    return {std::move(out), std::move(s)};
}

FlowTable unstandardize(const FlowTable& table, const StandardizeStats& stats) {
    if (stats.means.size() != table.col_count())
        throw DataError("unstandardize: stats arity mismatch");
    FlowTable out = table;
    const std::size_t m = table.col_count();
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        double* row = out.values.data() + r * m;
        for (std::size_t c = 0; c < m; ++c) row[c] = row[c] * stats.std_devs[c] + stats.means[c];
    }
    return out;
}

} // namespace flowsentry
