#pragma once

#include <optional>
#include <string_view>

#include <json.hpp>

namespace svoa {

/// Pulls the JSON object out of a chat-model reply. Handles markdown code
/// fences and prose before/after the object. Returns nullopt when no JSON
/// object can be recovered.
std::optional<nlohmann::json> parse_json_payload(std::string_view text);

}  // namespace svoa
