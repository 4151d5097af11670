#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "prolonet/core.hpp"

namespace prolonet {

inline constexpr const char* kProLoNetFormat = "prolonet-v1";
inline constexpr const char* kMlpFormat = "mlp-v1";

nlohmann::json to_json(const ProLoNet& net);
nlohmann::json to_json(const MlpPolicy& net);

/// Throws InvalidInput on a missing or mismatched "format" field or on a
/// structurally invalid network.
ProLoNet prolonet_from_json(const nlohmann::json& doc);
MlpPolicy mlp_from_json(const nlohmann::json& doc);

/// Non-negative integer setting; throws InvalidInput naming `key` otherwise.
std::uint64_t json_count(const nlohmann::json& value, const std::string& key);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace prolonet
