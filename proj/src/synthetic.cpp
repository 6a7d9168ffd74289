#include "svoa/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

namespace svoa {
namespace {

using Rng = std::mt19937_64;

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

const std::vector<std::string> kUserTopicTemplates = {
    "Can you tell me about the {T} for {Q}?",
    "I keep reading about {T} during {Q} and want details.",
    "What do you know about {T} with {Q}?",
    "My friend asked me about {T} regarding {Q} yesterday.",
    "Is the {T} still useful after {Q}?",
};
const std::vector<std::string> kAssistantTopicTemplates = {
    "Sure, the {T} is often discussed together with {Q}.",
    "Many people ask about {T} and {Q}, so here are some details.",
    "Here are a few notes on {T} related to {Q}.",
};
const std::vector<std::string> kUserFillerTemplates = {
    "How is your day going?",
    "I went to the {B} yesterday and it was fine.",
    "Do you think the {B} will be open tomorrow?",
    "Okay, that sounds good.",
    "Thanks for the {B} suggestion!",
    "Sorry, I was busy with the {B} earlier.",
    "Hello again, I am back.",
};
const std::vector<std::string> kAssistantFillerTemplates = {
    "I'm glad to hear that.",
    "Let me know if you need anything else about the {B}.",
    "That makes sense, the {B} can be tricky.",
    "Hello! How can I help you today?",
    "You are welcome.",
};
const std::vector<std::string> kQueryTemplates = {
    "user asks about {T} {Q}",
    "conversations where the user wants details on {T} and {Q}",
    "questions about {T} for {Q}",
    "user talks about {T} regarding {Q}",
};

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::string pseudo_word(Rng& rng) {
  std::string w;
  for (int s = 0; s < 3; ++s) {
    w += kConsonants[uniform_index(rng, kConsonants.size())];
    w += kVowels[uniform_index(rng, kVowels.size())];
  }
  return w;
}

std::string fill(const std::string& tmpl, const std::string& t, const std::string& q,
                 const std::string& b) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '{' && i + 2 < tmpl.size() && tmpl[i + 2] == '}') {
      const char key = tmpl[i + 1];
      out += key == 'T' ? t : key == 'Q' ? q : b;
      i += 2;
    } else {
      out += tmpl[i];
    }
  }
  return out;
}

// Draws per-item counts in [lo, hi] and nudges them until they sum to `total`.
std::vector<std::size_t> counts_with_total(Rng& rng, std::size_t n, std::size_t lo, std::size_t hi,
                                           std::size_t total) {
  std::vector<std::size_t> counts(n);
  std::size_t sum = 0;
  for (auto& c : counts) {
    c = lo + uniform_index(rng, hi - lo + 1);
    sum += c;
  }
  total = std::clamp(total, lo * n, hi * n);
  while (sum < total) {
    auto& c = counts[uniform_index(rng, n)];
    if (c < hi) {
      ++c;
      ++sum;
    }
  }
  while (sum > total) {
    auto& c = counts[uniform_index(rng, n)];
    if (c > lo) {
      --c;
      --sum;
    }
  }
  return counts;
}

std::string padded(std::string_view prefix, std::size_t i, std::size_t n) {
  std::ostringstream os;
  os << prefix << std::setw(static_cast<int>(std::to_string(std::max<std::size_t>(n, 1)).size()))
     << std::setfill('0') << i;
  return os.str();
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticOptions& options) {
  if (options.conversations == 0 || options.queries == 0) {
    throw ContractViolation("synthetic corpus sizes must be positive");
  }
  if (!(options.utterances_per_conversation >= 1.0) || !(options.relevants_per_query >= 1.0)) {
    throw ContractViolation("synthetic means must be >= 1");
  }
  Rng rng(options.seed);
  const std::size_t n_conv = options.conversations;
  const std::size_t n_query = options.queries;

  std::set<std::string> used;
  auto fresh_word = [&] {
    for (;;) {
      std::string w = pseudo_word(rng);
      if (used.insert(w).second) return w;
    }
  };
  SyntheticDataset data;
  for (std::size_t i = 0; i < n_query; ++i) data.query_topics.push_back({fresh_word(), fresh_word()});
  std::vector<std::string> background;
  for (int i = 0; i < 300; ++i) background.push_back(fresh_word());

  const auto base_u = static_cast<std::size_t>(std::llround(options.utterances_per_conversation));
  const auto utterances = counts_with_total(
      rng, n_conv, std::max<std::size_t>(1, base_u > 3 ? base_u - 3 : 1), base_u + 3,
      static_cast<std::size_t>(std::llround(options.utterances_per_conversation * n_conv)));

  const auto base_r = static_cast<std::size_t>(std::llround(options.relevants_per_query));
  const std::size_t r_hi = std::min(n_conv, base_r + 5);
  const std::size_t r_lo = std::min(r_hi, std::max<std::size_t>(1, base_r > 5 ? base_r - 5 : 1));
  const auto relevant_counts = counts_with_total(
      rng, n_query, r_lo, r_hi,
      static_cast<std::size_t>(std::llround(options.relevants_per_query * n_query)));

  std::vector<std::vector<std::size_t>> conv_topics(n_conv);
  std::vector<std::size_t> pool(n_conv);
  for (std::size_t qi = 0; qi < n_query; ++qi) {
    for (std::size_t i = 0; i < n_conv; ++i) pool[i] = i;
    QueryRecord q;
    q.query_id = padded("q-", qi, n_query);
    const auto& topic = data.query_topics[qi];
    q.text = fill(kQueryTemplates[uniform_index(rng, kQueryTemplates.size())], topic[0], topic[1], "");
    std::vector<std::size_t> chosen;
    for (std::size_t r = 0; r < relevant_counts[qi]; ++r) {
      const std::size_t pick = r + uniform_index(rng, n_conv - r);
      std::swap(pool[r], pool[pick]);
      chosen.push_back(pool[r]);
    }
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t c : chosen) {
      conv_topics[c].push_back(qi);
      q.relevant_conv_ids.push_back(padded("conv-", c, n_conv));
    }
    data.queries.push_back(std::move(q));
  }

  for (std::size_t c = 0; c < n_conv; ++c) {
    ConversationRecord conv;
    conv.conv_id = padded("conv-", c, n_conv);
    const std::size_t n_msg = utterances[c];
    std::vector<std::size_t> user_slots;
    for (std::size_t m = 0; m < n_msg; m += 2) user_slots.push_back(m);
    std::shuffle(user_slots.begin(), user_slots.end(), rng);

    std::vector<std::vector<std::size_t>> slot_topics(n_msg);
    for (std::size_t t = 0; t < conv_topics[c].size(); ++t) {
      slot_topics[user_slots[t % user_slots.size()]].push_back(conv_topics[c][t]);
    }

    for (std::size_t m = 0; m < n_msg; ++m) {
      const bool is_user = m % 2 == 0;
      const std::string& b = background[uniform_index(rng, background.size())];
      std::string text;
      if (is_user && !slot_topics[m].empty()) {
        for (std::size_t qi : slot_topics[m]) {
          const auto& topic = data.query_topics[qi];
          if (!text.empty()) text += ' ';
          text += fill(kUserTopicTemplates[uniform_index(rng, kUserTopicTemplates.size())],
                       topic[0], topic[1], b);
        }
      } else if (!is_user && !slot_topics[m - 1].empty()) {
        const auto& topic = data.query_topics[slot_topics[m - 1].front()];
        text = fill(kAssistantTopicTemplates[uniform_index(rng, kAssistantTopicTemplates.size())],
                    topic[0], topic[1], b);
      } else {
        const auto& pool_t = is_user ? kUserFillerTemplates : kAssistantFillerTemplates;
        text = fill(pool_t[uniform_index(rng, pool_t.size())], "", "", b);
      }
      conv.messages.push_back({m, is_user ? "user" : "assistant", std::move(text)});
    }
    data.corpus.push_back(std::move(conv));
  }
  return data;
}

}  // namespace svoa
