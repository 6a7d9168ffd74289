#include "svoa/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace svoa {

void validate(const ConversationRecord& conv) {
  if (conv.conv_id.empty()) {
    throw ContractViolation("conversation has an empty conv_id");
  }
  if (conv.messages.empty()) {
    throw ContractViolation("conversation '" + conv.conv_id + "' has no messages");
  }
  for (std::size_t i = 0; i < conv.messages.size(); ++i) {
    const Message& m = conv.messages[i];
    if (m.index != i) {
      throw ContractViolation("conversation '" + conv.conv_id + "': message at position " +
                              std::to_string(i) + " has index " + std::to_string(m.index));
    }
    if (trim(m.role).empty()) {
      throw ContractViolation("conversation '" + conv.conv_id + "': message " +
                              std::to_string(i) + " has an empty role");
    }
    if (trim(m.text).empty()) {
      throw ContractViolation("conversation '" + conv.conv_id + "': message " +
                              std::to_string(i) + " has empty text");
    }
  }
}

std::string_view to_string(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::Conversation:
      return "conv";
    case ComponentKind::Message:
      return "msg";
    case ComponentKind::SV:
      return "sv";
    case ComponentKind::SVO:
      return "svo";
    case ComponentKind::SVOA:
      return "svoa";
  }
  return "unknown";
}

ComponentKind parse_component_kind(std::string_view name) {
  const std::string lower = to_lower(trim(name));
  if (lower == "conv" || lower == "conversation") return ComponentKind::Conversation;
  if (lower == "msg" || lower == "message") return ComponentKind::Message;
  if (lower == "sv") return ComponentKind::SV;
  if (lower == "svo") return ComponentKind::SVO;
  if (lower == "svoa") return ComponentKind::SVOA;
  throw ContractViolation("unknown component kind '" + std::string(name) +
                          "' (expected conv, msg, sv, svo or svoa)");
}

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  norm_ = std::sqrt(dot(values_, values_));
}

EmbeddingVector EmbeddingVector::zeros(std::size_t dimension) {
  return EmbeddingVector(std::vector<double>(dimension, 0.0));
}

bool EmbeddingVector::is_normalized() const {
  return norm_ == 0.0 || std::abs(norm_ - 1.0) <= 1e-6;
}

double dot(std::span<const double> a, std::span<const double> b) {
  // Four independent accumulators let the compiler pipeline the FMAs without
  // reassociating a single floating-point chain.
  const std::size_t n = std::min(a.size(), b.size());
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    throw ContractViolation("dimension mismatch: " + std::to_string(a.dimension()) + " vs " +
                            std::to_string(b.dimension()));
  }
  return dot(a.values(), b.values());
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    throw ContractViolation("cosine_similarity: dimension mismatch: " +
                            std::to_string(a.dimension()) + " vs " +
                            std::to_string(b.dimension()));
  }
  if (a.is_zero() || b.is_zero()) return 0.0;
  const double c = dot(a.values(), b.values()) / (a.norm() * b.norm());
  return std::clamp(c, -1.0, 1.0);
}

EmbeddingVector l2_normalize(const EmbeddingVector& v) {
  if (v.is_zero()) return v;
  std::vector<double> out(v.values().begin(), v.values().end());
  const double n = v.norm();
  for (double& x : out) x /= n;
  return EmbeddingVector(std::move(out));
}

void validate(const ComponentInstance& instance) {
  const bool is_conv = instance.kind == ComponentKind::Conversation;
  if (is_conv == instance.source_message_index.has_value()) {
    throw ContractViolation("component instance '" + instance.text +
                            "': source_message_index must be absent exactly for kind conv");
  }
  const bool is_semantic = instance.kind == ComponentKind::SV ||
                           instance.kind == ComponentKind::SVO ||
                           instance.kind == ComponentKind::SVOA;
  if (is_semantic != instance.quadruplet_ref.has_value()) {
    throw ContractViolation("component instance '" + instance.text +
                            "': quadruplet_ref must be present exactly for sv/svo/svoa");
  }
}

std::string render_component_text(const SvoaQuadruplet& q, ComponentKind kind) {
  std::string out = q.subject + " " + q.verb;
  switch (kind) {
    case ComponentKind::SV:
      return out;
    case ComponentKind::SVO:
      return out + " " + q.object;
    case ComponentKind::SVOA:
      out += " " + q.object;
      if (q.adjunct) out += " " + *q.adjunct;
      return out;
    default:
      throw ContractViolation("render_component_text: kind must be sv, svo or svoa, got " +
                              std::string(to_string(kind)));
  }
}

std::string render_message_text(const Message& m) { return m.role + ": " + m.text; }

std::string render_conversation_text(const ConversationRecord& conv) {
  std::string out;
  for (const Message& m : conv.messages) {
    if (!out.empty()) out += '\n';
    out += render_message_text(m);
  }
  return out;
}

std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && is_space(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && is_space(static_cast<unsigned char>(s[end - 1]))) --end;
  return std::string(s.substr(begin, end - begin));
}

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

bool istarts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

}  // namespace svoa
