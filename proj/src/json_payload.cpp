#include "svoa/json_payload.hpp"

#include <string>

#include "svoa/core.hpp"

namespace svoa {
namespace {

std::optional<nlohmann::json> try_parse_object(std::string_view text) {
  auto parsed = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded() || !parsed.is_object()) return std::nullopt;
  return parsed;
}

// Content of the first ``` fenced block, without the info string line.
std::optional<std::string_view> fenced_block(std::string_view text) {
  const auto open = text.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto body_start = text.find('\n', open);
  if (body_start == std::string_view::npos) return std::nullopt;
  ++body_start;
  const auto close = text.find("```", body_start);
  if (close == std::string_view::npos) return text.substr(body_start);
  return text.substr(body_start, close - body_start);
}

// Scans for a balanced {...} span starting at `start`, honoring strings.
std::optional<std::string_view> balanced_object(std::string_view text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return text.substr(start, i - start + 1);
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<nlohmann::json> parse_json_payload(std::string_view text) {
  const std::string trimmed = trim(text);
  std::string_view view = trimmed;
  if (auto parsed = try_parse_object(view)) return parsed;

  if (auto block = fenced_block(view)) {
    if (auto parsed = try_parse_object(*block)) return parsed;
    view = *block;
  }

  for (std::size_t pos = view.find('{'); pos != std::string_view::npos;
       pos = view.find('{', pos + 1)) {
    if (auto span = balanced_object(view, pos)) {
      if (auto parsed = try_parse_object(*span)) return parsed;
    }
  }
  return std::nullopt;
}

}  // namespace svoa
