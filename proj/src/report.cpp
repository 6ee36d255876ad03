#include "flowsentry/report.hpp"

#include "flowsentry/errors.hpp"
#include "flowsentry/version.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <unistd.h>

namespace flowsentry {

using json = nlohmann::ordered_json;

std::string config_digest(const json& config) {
    const std::string dump = config.dump();
    const std::uint64_t h = fnv1a64(dump.data(), dump.size());
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string iso8601_timestamp() {
    std::time_t t = std::time(nullptr);
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        const long long v = std::strtoll(epoch, &end, 10);
        if (end && *end == '\0') t = static_cast<std::time_t>(v);
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path dir = target.parent_path();
    if (dir.empty()) dir = ".";

    std::error_code ec;
    fs::create_directories(dir, ec);

    const fs::path tmp =
        dir / (target.filename().string() + ".tmp." + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw DataError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw DataError("cannot move report into place at '" + path + "'");
    }
}

json make_envelope(const json& config, std::uint64_t seed, json payload) {
    return json{{"format_version", kReportFormatVersion},
                {"tool", std::string(kToolName) + " " + kToolVersion},
                {"timestamp", iso8601_timestamp()},
                {"seed", seed},
                {"config", config},
                {"config_digest", config_digest(config)},
                {"payload", std::move(payload)}};
}

void write_report(const std::string& path, const json& envelope) {
    write_text_atomic(path, envelope.dump(2) + "\n");
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("'" + path + "': " + e.what());
    }
}

} // namespace flowsentry
