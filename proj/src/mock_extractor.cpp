#include "svoa/mock_extractor.hpp"

#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <unordered_set>

#include <json.hpp>

namespace svoa {
namespace {

struct Word {
  std::string token;  // lowercase alphanumeric core
  bool ends_clause = false;
};

std::vector<Word> split_words(std::string_view text) {
  std::vector<Word> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (start == i) break;
    const std::string_view raw = text.substr(start, i - start);
    Word w;
    for (char c : raw) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        w.token += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
    }
    const char last = raw.back();
    w.ends_clause = last == '.' || last == ',' || last == '!' || last == '?' || last == ';' ||
                    last == ':';
    if (!w.token.empty()) {
      words.push_back(std::move(w));
    } else if (!words.empty() && w.ends_clause) {
      words.back().ends_clause = true;
    }
  }
  return words;
}

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> words = {
      "the",    "and",     "for",    "are",    "but",    "not",    "you",    "your",   "yours",
      "all",    "any",     "can",    "had",    "has",    "have",   "her",    "his",    "him",
      "was",    "one",     "our",    "out",    "get",    "got",    "she",    "they",   "them",
      "their",  "what",    "when",   "where",  "which",  "who",    "whom",   "why",    "how",
      "this",   "that",    "these",  "those",  "with",   "from",   "into",   "onto",   "about",
      "over",   "under",   "after",  "before", "during", "without", "because", "due",
      "regarding", "than", "then",   "there",  "here",   "just",   "also",   "very",   "really",
      "like",   "likes",   "liked",  "would",  "could",  "should", "will",   "shall",  "might",
      "must",   "does",    "did",    "doing",  "done",   "been",   "being",  "were",   "let",
      "its",    "it's",    "i'm",    "yes",    "yeah",   "okay",   "sure",   "thanks", "thank",
      "please", "hello",   "hey",    "sorry",  "apologies", "some", "more",  "most",   "much",
      "many",   "know",    "think",  "want",   "wants",  "need",   "needs",  "tell",   "say",
      "said",   "make",    "made",   "well",   "good",   "great",  "too",    "now",    "only",
      "other",  "such",    "each",   "both",   "own",    "same",   "again",  "ever",   "never",
      "something", "anything", "everything", "nothing", "myself", "yourself", "dont", "don",
      "cant",   "im",      "ive",    "youre",  "thats",  "whats",  "lot",    "lots",   "way",
      "things", "thing",   "maybe",  "still",  "even",   "going",  "gonna",  "mine",   "ours",
  };
  return words;
}

constexpr std::array<std::string_view, 10> kPrepositions = {
    "about", "for", "with", "because", "regarding", "due", "during", "after", "without", "over"};

bool is_preposition(std::string_view token) {
  for (auto p : kPrepositions) {
    if (token == p) return true;
  }
  return false;
}

std::string choose_verb(std::string_view text, const std::vector<Word>& words) {
  const std::string trimmed = trim(text);
  if (!trimmed.empty() && trimmed.back() == '?') return "asks";
  const std::string first = words.empty() ? std::string() : words.front().token;
  if (first == "thanks" || first == "thank") return "thanks";
  if (first == "sorry" || first == "apologies") return "apologizes";
  if (first == "hi" || first == "hello" || first == "hey") return "greets";
  return "mentions";
}

std::string choose_object(const std::vector<Word>& words, std::string_view verb) {
  std::map<std::string, std::pair<int, std::size_t>> counts;  // token -> (count, first pos)
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string& t = words[i].token;
    if (t.size() < 3 || stopwords().count(t)) continue;
    bool all_digits = true;
    for (char c : t) all_digits = all_digits && std::isdigit(static_cast<unsigned char>(c));
    if (all_digits) continue;
    auto [it, inserted] = counts.try_emplace(t, 0, i);
    ++it->second.first;
  }
  const std::string* best = nullptr;
  std::pair<int, std::size_t> best_score{0, 0};
  for (const auto& [token, score] : counts) {
    if (!best || score.first > best_score.first ||
        (score.first == best_score.first && score.second < best_score.second)) {
      best = &token;
      best_score = score;
    }
  }
  if (best) return *best;
  if (verb == "thanks" || verb == "greets" || verb == "apologizes") return "person";
  return "message";
}

std::optional<std::string> choose_adjunct(const std::vector<Word>& words) {
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!is_preposition(words[i].token) || words[i].ends_clause) continue;
    std::string tail = words[i].token;
    std::size_t j = i + 1;
    if ((words[i].token == "because" || words[i].token == "due") && j < words.size() &&
        (words[j].token == "of" || words[j].token == "to")) {
      tail += " " + words[j].token;
      if (words[j].ends_clause) continue;
      ++j;
    }
    std::size_t taken = 0;
    for (; j < words.size() && taken < 3; ++j, ++taken) {
      tail += " " + words[j].token;
      if (words[j].ends_clause) {
        ++taken;
        break;
      }
    }
    if (taken > 0) return tail;
  }
  return std::nullopt;
}

struct RecoveredMessage {
  std::string role;
  std::string text;
};

// Recovers "role: text" from the [$message$] block of a rendered user turn.
std::optional<RecoveredMessage> recover_message(std::string_view user_turn) {
  constexpr std::string_view kMarker = "[$message$]\n";
  const auto pos = user_turn.rfind(kMarker);
  if (pos == std::string_view::npos) return std::nullopt;
  const auto start = pos + kMarker.size();
  auto end = user_turn.find("\n\n", start);
  if (end == std::string_view::npos) end = user_turn.size();
  const std::string_view line = user_turn.substr(start, end - start);
  const auto sep = line.find(": ");
  if (sep == std::string_view::npos) return std::nullopt;
  return RecoveredMessage{std::string(line.substr(0, sep)), std::string(line.substr(sep + 2))};
}

std::vector<std::string> recover_info_list(std::string_view user_turn) {
  constexpr std::string_view kMarker = "[$information list$]\n";
  std::vector<std::string> lines;
  const auto pos = user_turn.rfind(kMarker);
  if (pos == std::string_view::npos) return lines;
  const auto start = pos + kMarker.size();
  auto end = user_turn.find("\n\n", start);
  if (end == std::string_view::npos) end = user_turn.size();
  std::string_view block = user_turn.substr(start, end - start);
  while (!block.empty()) {
    const auto nl = block.find('\n');
    const std::string line = trim(block.substr(0, nl));
    if (!line.empty()) lines.push_back(line);
    if (nl == std::string_view::npos) break;
    block.remove_prefix(nl + 1);
  }
  return lines;
}

}  // namespace

SvoaQuadruplet mock_extract_text(std::string_view role, std::string_view text,
                                 std::size_t msg_index) {
  const auto words = split_words(text);
  SvoaQuadruplet q;
  q.subject = std::string(role);
  q.verb = choose_verb(text, words);
  q.object = choose_object(words, q.verb);
  q.adjunct = choose_adjunct(words);
  q.source_message_index = msg_index;
  return q;
}

std::vector<SvoaQuadruplet> mock_extract(const ConversationRecord& conv, std::size_t msg_index) {
  const Message& m = conv.messages.at(msg_index);
  return {mock_extract_text(m.role, m.text, msg_index)};
}

std::string MockChatBackend::complete(const ChatRequest& request) {
  ++calls_;
  using nlohmann::json;
  const auto msg = recover_message(request.user_message);
  if (!msg) return "I could not find a message to analyze.";
  const SvoaQuadruplet q = mock_extract_text(msg->role, msg->text);
  const std::string detail = q.adjunct.value_or("no information");

  if (request.user_message.find("[$information list$]") != std::string::npos) {
    json items = json::array();
    for (const auto& line : recover_info_list(request.user_message)) {
      items.push_back(json{{line, detail}});
    }
    return json{{"detailed_information", items}}.dump();
  }
  const std::string key = q.subject + " " + q.verb;
  if (request.system_prompt.find("information_quadruplet") != std::string::npos) {
    json items = json::array({json{{key, json::array({q.object, detail})}}});
    return json{{"information_quadruplet", items}}.dump();
  }
  json items = json::array({json{{key, q.object}}});
  return json{{"information_triplet", items}}.dump();
}

}  // namespace svoa
