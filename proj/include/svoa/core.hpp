#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace svoa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition or type invariant was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

struct Message {
  std::size_t index = 0;
  std::string role;
  std::string text;

  bool operator==(const Message&) const = default;
};

struct ConversationRecord {
  std::string conv_id;
  std::vector<Message> messages;

  bool operator==(const ConversationRecord&) const = default;
};

/// Throws ContractViolation unless the record has a non-empty id, at least
/// one message, contiguous 0-based indices, non-empty roles and texts.
void validate(const ConversationRecord& conv);

/// Subject-verb-object triplet produced by the first extraction step.
struct SvoTriplet {
  std::string subject;
  std::string verb;
  std::string object;
  std::size_t source_message_index = 0;

  bool operator==(const SvoTriplet&) const = default;
};

/// One semantic index. The subject is always the speaker role of the source
/// message; an absent adjunct means the backend had nothing to add.
struct SvoaQuadruplet {
  std::string subject;
  std::string verb;
  std::string object;
  std::optional<std::string> adjunct;
  std::size_t source_message_index = 0;

  bool operator==(const SvoaQuadruplet&) const = default;
};

enum class ComponentKind { Conversation = 0, Message = 1, SV = 2, SVO = 3, SVOA = 4 };

inline constexpr std::size_t kComponentKindCount = 5;
inline constexpr std::array<ComponentKind, kComponentKindCount> kAllComponentKinds = {
    ComponentKind::Conversation, ComponentKind::Message, ComponentKind::SV, ComponentKind::SVO,
    ComponentKind::SVOA};

constexpr std::size_t to_index(ComponentKind kind) { return static_cast<std::size_t>(kind); }

/// Short names used on the wire and in combination labels: conv, msg, sv, svo, svoa.
std::string_view to_string(ComponentKind kind);
/// Accepts the short names above plus "conversation" and "message".
ComponentKind parse_component_kind(std::string_view name);

/// Dense embedding. The L2 norm is computed once at construction so the
/// retrieval hot path only pays for the dot product.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values);

  static EmbeddingVector zeros(std::size_t dimension);

  std::size_t dimension() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double norm() const { return norm_; }
  bool is_zero() const { return norm_ == 0.0; }
  /// Unit norm within 1e-6, or all-zero.
  bool is_normalized() const;

  bool operator==(const EmbeddingVector& other) const { return values_ == other.values_; }

 private:
  std::vector<double> values_;
  double norm_ = 0.0;
};

double dot(std::span<const double> a, std::span<const double> b);
double dot(const EmbeddingVector& a, const EmbeddingVector& b);

/// Cosine similarity; 0.0 when either vector has zero norm.
/// Throws ContractViolation on dimension mismatch.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

EmbeddingVector l2_normalize(const EmbeddingVector& v);

struct ComponentInstance {
  ComponentKind kind = ComponentKind::Conversation;
  std::string text;
  EmbeddingVector embedding;
  std::optional<std::size_t> source_message_index;
  std::optional<std::string> quadruplet_ref;

  bool operator==(const ComponentInstance&) const = default;
};

/// Throws ContractViolation if the kind/optional-field pairing is wrong.
void validate(const ComponentInstance& instance);

/// Renders a quadruplet as SV, SVO or SVOA text (single-space joined).
/// SVOA without an adjunct renders identically to SVO.
std::string render_component_text(const SvoaQuadruplet& q, ComponentKind kind);

/// "role: text"
std::string render_message_text(const Message& m);

/// Newline-joined "role: text" lines in message order.
std::string render_conversation_text(const ConversationRecord& conv);

// String helpers shared across modules.
std::string trim(std::string_view s);
/// Trims and collapses internal whitespace runs to a single space.
std::string normalize_whitespace(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view s, std::string_view prefix);

}  // namespace svoa
