#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <json.hpp>

namespace flowsentry {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Hex digest of a config document's canonical dump. Stable under
/// payload-preserving reserialization because only the config is hashed and
/// ordered_json keeps insertion order.
std::string config_digest(const nlohmann::ordered_json& config);

/// ISO-8601 UTC. Honors SOURCE_DATE_EPOCH for reproducible artifacts.
std::string iso8601_timestamp();

/// Every artifact goes through a temp file + rename in the target directory.
void write_text_atomic(const std::string& path, const std::string& content);

/// Wraps a payload with format version, tool version, timestamp, seed and
/// config digest, so every artifact is self-describing.
nlohmann::ordered_json make_envelope(const nlohmann::ordered_json& config,
                                     std::uint64_t seed, nlohmann::ordered_json payload);

void write_report(const std::string& path, const nlohmann::ordered_json& envelope);
nlohmann::ordered_json read_json_file(const std::string& path);

} // namespace flowsentry
