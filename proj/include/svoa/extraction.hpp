#pragma once

#include <cstddef>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "svoa/core.hpp"
#include "svoa/prompts.hpp"

namespace svoa {

/// Transport-level failure talking to a chat or embedding backend.
/// Parse failures are not BackendErrors; they are handled per message.
class BackendError : public Error {
 public:
  using Error::Error;
};

struct ChatRequest {
  std::string system_prompt;
  std::vector<ChatTurn> few_shot;
  std::string user_message;
  double temperature = 0.0;
  int max_tokens = 1024;
};

/// Chat-completion backend. Implementations must tolerate concurrent calls.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  /// Returns the first text content of the reply, verbatim.
  virtual std::string complete(const ChatRequest& request) = 0;
};

enum class ExtractionMode { TwoStep, SingleStep };

std::string_view to_string(ExtractionMode mode);
/// Accepts "two-step" / "single-step".
ExtractionMode parse_extraction_mode(std::string_view name);

struct ExtractionConfig {
  std::size_t context_window_k = 2;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::size_t max_parse_retries = 2;
  ExtractionMode mode = ExtractionMode::TwoStep;
  /// Messages of one conversation extracted concurrently.
  std::size_t message_workers = 1;
};

struct ExtractionWarning {
  std::string conv_id;
  std::size_t msg_index = 0;
  std::string stage;  // "triplets", "adjuncts" or "single_step"
  std::string reason;
  std::string raw_text;

  bool operator==(const ExtractionWarning&) const = default;
};

/// Thread-safe warning collector.
class WarningLog {
 public:
  void add(ExtractionWarning warning);
  std::vector<ExtractionWarning> snapshot() const;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::vector<ExtractionWarning> warnings_;
};

/// "role: text" lines of the k messages preceding msg_index.
std::string build_context_window(const ConversationRecord& conv, std::size_t msg_index,
                                  std::size_t k);

/// Step 1: SVO triplets for one message. On repeated parse failure the
/// message yields no triplets and a warning is logged.
std::vector<SvoTriplet> extract_triplets(const ConversationRecord& conv, std::size_t msg_index,
                                         const ExtractionConfig& cfg, ChatBackend& backend,
                                         WarningLog& warnings,
                                         const PromptSet& prompts = default_prompts());

/// Step 2: attaches adjuncts to the given triplets. Always returns one
/// quadruplet per triplet, in order; parse failure leaves adjuncts absent.
std::vector<SvoaQuadruplet> augment_adjuncts(const ConversationRecord& conv,
                                             std::size_t msg_index,
                                             std::span<const SvoTriplet> triplets,
                                             const ExtractionConfig& cfg, ChatBackend& backend,
                                             WarningLog& warnings,
                                             const PromptSet& prompts = default_prompts());

/// Ablation path: one call with a merged prompt.
std::vector<SvoaQuadruplet> extract_single_step(const ConversationRecord& conv,
                                                std::size_t msg_index,
                                                const ExtractionConfig& cfg,
                                                ChatBackend& backend, WarningLog& warnings,
                                                const PromptSet& prompts = default_prompts());

/// Dispatches on cfg.mode for a single message.
std::vector<SvoaQuadruplet> extract_message(const ConversationRecord& conv, std::size_t msg_index,
                                            const ExtractionConfig& cfg, ChatBackend& backend,
                                            WarningLog& warnings,
                                            const PromptSet& prompts = default_prompts());

/// All messages of a conversation, concatenated in message order.
std::vector<SvoaQuadruplet> extract_conversation(const ConversationRecord& conv,
                                                 const ExtractionConfig& cfg,
                                                 ChatBackend& backend, WarningLog& warnings,
                                                 const PromptSet& prompts = default_prompts());

/// The Step-2 {{$info_list}} value: one "subject verb object" line per triplet.
std::string render_info_list(std::span<const SvoTriplet> triplets);

}  // namespace svoa
