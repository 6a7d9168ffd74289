#pragma once

#include <atomic>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "svoa/core.hpp"
#include "svoa/extraction.hpp"

namespace svoa {

/// Rule-based stand-in for an LLM extractor, fully deterministic.
///
/// Verb is taken from the first matching rule:
///   text ends with '?'                  -> "asks"
///   first token thanks/thank            -> "thanks"
///   first token sorry/apologies         -> "apologizes"
///   first token hi/hello/hey            -> "greets"
///   otherwise                           -> "mentions"
/// Object is the most frequent non-stopword token of three or more
/// characters (earliest wins ties), falling back to "person" for the
/// social verbs and "message" otherwise. Adjunct is the first preposition
/// from {about, for, with, because of, regarding, due to, during, after,
/// without, over} plus up to three following words within the same clause.
std::vector<SvoaQuadruplet> mock_extract(const ConversationRecord& conv, std::size_t msg_index);

/// Same rules on a bare (role, text) pair.
SvoaQuadruplet mock_extract_text(std::string_view role, std::string_view text,
                                 std::size_t msg_index = 0);

/// ChatBackend that answers the triplet, adjunct and single-step prompts by
/// recovering the role and message from the user turn and applying
/// mock_extract_text.
class MockChatBackend : public ChatBackend {
 public:
  std::string complete(const ChatRequest& request) override;

  std::size_t calls() const { return calls_.load(); }

 private:
  std::atomic<std::size_t> calls_{0};
};

}  // namespace svoa
