#include "flowsentry/firewall.hpp"

#include "flowsentry/errors.hpp"
#include "flowsentry/rng.hpp"
#include "flowsentry/textutil.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>

namespace flowsentry {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double tree_sum(const std::vector<TreeNode>& nodes, const std::vector<std::int32_t>& roots,
                const double* slots) {
    double sum = 0.0;
    for (const std::int32_t root : roots) {
        std::int32_t i = root;
        while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
            const TreeNode& n = nodes[static_cast<std::size_t>(i)];
            i = slots[n.feature] > n.threshold ? n.right : n.left;
        }
        sum += nodes[static_cast<std::size_t>(i)].value;
    }
    return sum;
}

} // namespace

double CompiledModel::score(const double* slots) const {
    switch (kind) {
        case Kind::Tree:
            return tree_sum(nodes, roots, slots);
        case Kind::Forest:
            return tree_sum(nodes, roots, slots) / static_cast<double>(roots.size());
        case Kind::Gbt:
            return sigmoid(base_score + eta * tree_sum(nodes, roots, slots));
        case Kind::AdaBoost:
            // stump leaves were rewritten to +/- alpha at compile time
            return sigmoid(2.0 * tree_sum(nodes, roots, slots));
        case Kind::Linear: {
            double z = weights[0];
            for (std::size_t j = 0; j + 1 < weights.size(); ++j)
                z += weights[j + 1] * ((slots[j] - means[j]) / stds[j]);
            return sigmoid(z);
        }
    }
    return 0.0;
}

namespace {

void append_tree(CompiledModel& out, const TreeModel& tree) {
    const auto offset = static_cast<std::int32_t>(out.nodes.size());
    out.roots.push_back(offset);
    for (const TreeNode& n : tree.nodes) {
        TreeNode copy = n;
        if (!n.is_leaf()) {
            copy.left += offset;
            copy.right += offset;
        }
        out.nodes.push_back(copy);
    }
}

} // namespace

CompiledModel compile(const ModelSpec& model, const FeatureSubset& subset) {
    if (model.feature_names != subset.names)
        throw DataError(
            "compile: the model was not trained on the requested subset; retrain it on "
            "exactly these features first");

    CompiledModel out;
    out.feature_names = subset.names;

    switch (model.kind) {
        case LearnerKind::Cart:
            out.kind = CompiledModel::Kind::Tree;
            append_tree(out, std::get<TreeModel>(model.model));
            break;
        case LearnerKind::Forest: {
            out.kind = CompiledModel::Kind::Forest;
            for (const auto& t : std::get<ForestModel>(model.model).trees) append_tree(out, t);
            break;
        }
        case LearnerKind::Gbt: {
            const auto& gbt = std::get<GbtModel>(model.model);
            out.kind = CompiledModel::Kind::Gbt;
            out.eta = gbt.eta;
            out.base_score = gbt.base_score;
            for (const auto& t : gbt.trees) append_tree(out, t);
            break;
        }
        case LearnerKind::AdaBoost: {
            const auto& ada = std::get<AdaBoostModel>(model.model);
            out.kind = CompiledModel::Kind::AdaBoost;
            for (std::size_t t = 0; t < ada.stumps.size(); ++t) {
                TreeModel stump = ada.stumps[t];
                for (auto& n : stump.nodes)
                    if (n.is_leaf())
                        n.value = n.value >= 0.5 ? ada.alphas[t] : -ada.alphas[t];
                append_tree(out, stump);
            }
            break;
        }
        case LearnerKind::LogReg: {
            const auto& lr = std::get<LogRegModel>(model.model);
            out.kind = CompiledModel::Kind::Linear;
            out.weights = lr.weights;
            out.means = lr.stats.means;
            out.stds = lr.stats.std_devs;
            break;
        }
        case LearnerKind::Knn:
        case LearnerKind::NaiveBayes:
            throw DataError(std::string("compile: ") + learner_kind_name(model.kind) +
                            " is not compilable, use tree/linear kinds");
    }
    return out;
}

std::size_t verify_equivalence(const ModelSpec& model, const CompiledModel& compiled,
                               std::size_t n_probes, std::uint64_t seed,
                               const std::vector<std::pair<double, double>>& slot_ranges) {
    const std::size_t slots = compiled.feature_names.size();
    if (slot_ranges.size() != slots)
        throw DataError("verify_equivalence: range arity mismatch");

    std::size_t mismatches = 0;
    std::vector<double> probe(slots);
    SplitMix64 rng(mix_seed(seed, 0xe901, 0));
    for (std::size_t i = 0; i < n_probes; ++i) {
        for (std::size_t j = 0; j < slots; ++j)
            probe[j] = rng.uniform(slot_ranges[j].first, slot_ranges[j].second);
        const bool a = compiled.is_attack(probe.data());
        const bool b = predict_proba_row(model, probe.data()) >= 0.5;
        if (a != b) ++mismatches;
    }
    return mismatches;
}

FlowStream FlowStream::from_table(const FlowTable& table,
                                  const std::vector<std::string>& features, bool with_labels) {
    const FlowTable projected = table.select_columns(features);
    FlowStream stream;
    stream.feature_names = features;
    stream.values = projected.values;
    if (with_labels) stream.labels = projected.labels;
    return stream;
}

namespace {
constexpr char kStreamMagic[8] = {'F', 'W', 'S', 'T', 'R', 'M', '0', '1'};
}

void write_stream(const FlowStream& stream, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    // 16-byte header: magic, version, label flag, reserved, slot count
    out.write(kStreamMagic, sizeof kStreamMagic);
    const std::uint8_t version = 1;
    const std::uint8_t has_labels = stream.has_labels() ? 1 : 0;
    const std::uint16_t reserved = 0;
    const auto slot_count = static_cast<std::uint32_t>(stream.slots());
    out.write(reinterpret_cast<const char*>(&version), 1);
    out.write(reinterpret_cast<const char*>(&has_labels), 1);
    out.write(reinterpret_cast<const char*>(&reserved), 2);
    out.write(reinterpret_cast<const char*>(&slot_count), 4);

    const std::size_t n = stream.size();
    for (std::size_t i = 0; i < n; ++i) {
        out.write(reinterpret_cast<const char*>(stream.flow(i)),
                  static_cast<std::streamsize>(stream.slots() * sizeof(double)));
        if (has_labels) out.write(reinterpret_cast<const char*>(&stream.labels[i]), 1);
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

namespace {

FlowStream read_stream_csv(std::ifstream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty stream file");
    auto header = split_csv_line(line);
    for (auto& h : header) h = trim(h);

    FlowStream stream;
    bool labeled = false;
    if (!header.empty() && header.back() == "Label") {
        labeled = true;
        header.pop_back();
    }
    stream.feature_names = header;

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        const auto fields = split_csv_line(line);
        const std::size_t expected = header.size() + (labeled ? 1 : 0);
        if (fields.size() != expected)
            throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(expected) + " fields, got " +
                            std::to_string(fields.size()));
        for (std::size_t j = 0; j < header.size(); ++j) {
            const auto v = parse_double(trim(fields[j]));
            if (!v || !std::isfinite(*v))
                throw DataError(path + ":" + std::to_string(lineno) +
                                ": non-numeric stream value '" + fields[j] + "'");
            stream.values.push_back(*v);
        }
        if (labeled) {
            const std::string raw = trim(fields.back());
            stream.labels.push_back(raw == "0" || iequals(raw, "BENIGN") ? 0 : 1);
        }
    }
    return stream;
}

} // namespace

FlowStream read_stream(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");

    char magic[sizeof kStreamMagic];
    in.read(magic, sizeof magic);
    if (in.gcount() == sizeof magic && std::memcmp(magic, kStreamMagic, sizeof magic) == 0) {
        std::uint8_t version = 0, has_labels = 0;
        std::uint16_t reserved = 0;
        std::uint32_t slot_count = 0;
        in.read(reinterpret_cast<char*>(&version), 1);
        in.read(reinterpret_cast<char*>(&has_labels), 1);
        in.read(reinterpret_cast<char*>(&reserved), 2);
        in.read(reinterpret_cast<char*>(&slot_count), 4);
        if (!in || version != 1)
            throw DataError(path + ": unsupported stream version");
        if (slot_count == 0) throw DataError(path + ": stream has zero slots");

        FlowStream stream;
        stream.feature_names.resize(slot_count);
        for (std::uint32_t j = 0; j < slot_count; ++j)
            stream.feature_names[j] = "slot_" + std::to_string(j);

        const std::size_t record = slot_count * sizeof(double) + (has_labels ? 1 : 0);
        std::vector<char> buf(record);
        std::size_t index = 0;
        for (;; ++index) {
            in.read(buf.data(), static_cast<std::streamsize>(record));
            if (in.gcount() == 0) break;
            if (static_cast<std::size_t>(in.gcount()) != record)
                throw DataError(path + ": truncated record at flow " + std::to_string(index));
            const auto* vals = reinterpret_cast<const double*>(buf.data());
            stream.values.insert(stream.values.end(), vals, vals + slot_count);
            if (has_labels)
                stream.labels.push_back(static_cast<std::uint8_t>(buf[record - 1]) ? 1 : 0);
        }
        return stream;
    }

    // no magic: CSV fallback
    in.close();
    std::ifstream text(path);
    if (!text) throw DataError("cannot open '" + path + "'");
    return read_stream_csv(text, path);
}

SimReport replay(const CompiledModel& compiled, const FlowStream& stream,
                 const ReplayConfig& cfg) {
    if (stream.size() > 0 && stream.slots() != compiled.feature_names.size())
        throw DataError("replay: stream arity " + std::to_string(stream.slots()) +
                        " does not match the compiled model's " +
                        std::to_string(compiled.feature_names.size()) + " slots");

    SimReport report;
    report.policy = cfg.policy;
    const std::size_t n = stream.size();
    report.flows_processed = n;
    if (n == 0) return report; // zero counts, throughput left undefined

    // Warm-up is skipped for short streams so they still get a measurement.
    const std::size_t warmup = n > 2 * cfg.warmup ? cfg.warmup : 0;
    report.warmup_flows = warmup;

    std::vector<std::uint8_t> verdicts(n);
    std::vector<std::int64_t> latencies;
    latencies.reserve(n - warmup);

    using clock = std::chrono::steady_clock;
    for (std::size_t i = 0; i < warmup; ++i)
        verdicts[i] = compiled.is_attack(stream.flow(i)) ? 1 : 0;

    const auto pass_start = clock::now();
    for (std::size_t i = warmup; i < n; ++i) {
        const auto t0 = clock::now();
        verdicts[i] = compiled.is_attack(stream.flow(i)) ? 1 : 0;
        const auto t1 = clock::now();
        latencies.push_back(
            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    }
    const double elapsed =
        std::chrono::duration<double>(clock::now() - pass_start).count();

    for (std::size_t i = 0; i < n; ++i) {
        if (verdicts[i]) ++report.predicted_attacks;
    }
    if (cfg.policy == ReplayPolicy::Block) {
        report.blocked = report.predicted_attacks;
        report.allowed = n - report.blocked;
    } else {
        report.allowed = n;
    }

    if (elapsed > 0.0 && n > warmup)
        report.throughput_fps = static_cast<double>(n - warmup) / elapsed;
    if (!latencies.empty()) {
        std::sort(latencies.begin(), latencies.end());
        report.latency_p50_ns = static_cast<double>(latencies[latencies.size() / 2]);
        report.latency_p99_ns =
            static_cast<double>(latencies[latencies.size() * 99 / 100]);
    }

    if (stream.has_labels()) {
        report.confusion = confusion(stream.labels, verdicts);
        const auto& cm = *report.confusion;
        if (cm.tp + cm.fn > 0)
            report.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    }
    return report;
}

std::vector<SweepRow> feature_count_sweep(const FlowTable& table, LearnerKind family,
                                          const std::vector<std::size_t>& counts,
                                          const SweepConfig& cfg) {
    auto [train_part, test_part] = stratified_split(table, cfg.split);

    ForestConfig ranking_cfg = cfg.ranking_forest;
    ranking_cfg.seed = mix_seed(cfg.seed, 0xa41, 0);
    const ImportanceRanking ranking = tree_importances(train_part, ranking_cfg);

    std::vector<SweepRow> rows;
    for (const std::size_t k : counts) {
        SweepRow row;
        row.feature_count = k;
        try {
            row.subset = select_top_k(ranking, k);
            const FlowTable train_k = train_part.select_columns(row.subset.names);
            const ModelSpec model = train(family, train_k, cfg.train);
            const CompiledModel compiled = compile(model, row.subset);
            const FlowStream stream =
                FlowStream::from_table(test_part, row.subset.names, true);
            const SimReport report = replay(compiled, stream, {});
            row.recall = report.recall;
            row.throughput_fps = report.throughput_fps;
            if (report.confusion) {
                const auto& cm = *report.confusion;
                row.accuracy =
                    static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string render_sim_report_text(const SimReport& report) {
    auto line = [](const std::string& key, const std::string& value) {
        return pad_right(key, 22) + value + "\n";
    };
    auto opt = [](const std::optional<double>& v, int decimals) {
        return v ? format_double(*v, decimals) : std::string("undefined");
    };
    std::string out;
    out += line("policy", report.policy == ReplayPolicy::Block ? "block" : "log_only");
    out += line("flows_processed", std::to_string(report.flows_processed));
    out += line("allowed", std::to_string(report.allowed));
    out += line("blocked", std::to_string(report.blocked));
    out += line("predicted_attacks", std::to_string(report.predicted_attacks));
    out += line("warmup_flows", std::to_string(report.warmup_flows));
    out += line("throughput_flows_s", opt(report.throughput_fps, 0));
    out += line("latency_p50_ns", opt(report.latency_p50_ns, 0));
    out += line("latency_p99_ns", opt(report.latency_p99_ns, 0));
    if (report.confusion) {
        const auto& cm = *report.confusion;
        out += line("confusion",
                    "tp=" + std::to_string(cm.tp) + " fp=" + std::to_string(cm.fp) +
                        " tn=" + std::to_string(cm.tn) + " fn=" + std::to_string(cm.fn));
        out += line("detection_recall", opt(report.recall, 6));
    }
    return out;
}

nlohmann::ordered_json sim_report_to_json(const SimReport& report) {
    nlohmann::ordered_json j{
        {"policy", report.policy == ReplayPolicy::Block ? "block" : "log_only"},
        {"flows_processed", report.flows_processed},
        {"allowed", report.allowed},
        {"blocked", report.blocked},
        {"predicted_attacks", report.predicted_attacks},
        {"warmup_flows", report.warmup_flows}};
    auto put = [&](const char* key, const std::optional<double>& v) {
        j[key] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    put("throughput_flows_s", report.throughput_fps);
    put("latency_p50_ns", report.latency_p50_ns);
    put("latency_p99_ns", report.latency_p99_ns);
    if (report.confusion) {
        const auto& cm = *report.confusion;
        j["confusion"] = {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
    } else {
        j["confusion"] = nullptr;
    }
    put("detection_recall", report.recall);
    return j;
}

nlohmann::ordered_json sweep_to_json(const std::vector<SweepRow>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        nlohmann::ordered_json j{{"feature_count", row.feature_count},
                                 {"features", row.subset.names}};
        if (row.error.empty()) {
            j["recall"] = row.recall ? nlohmann::ordered_json(*row.recall)
                                     : nlohmann::ordered_json(nullptr);
            j["accuracy"] = row.accuracy ? nlohmann::ordered_json(*row.accuracy)
                                         : nlohmann::ordered_json(nullptr);
            j["throughput_flows_s"] = row.throughput_fps
                                          ? nlohmann::ordered_json(*row.throughput_fps)
                                          : nlohmann::ordered_json(nullptr);
        } else {
            j["error"] = row.error;
        }
        arr.push_back(std::move(j));
    }
    return nlohmann::ordered_json{{"rows", std::move(arr)}};
}

} // namespace flowsentry
