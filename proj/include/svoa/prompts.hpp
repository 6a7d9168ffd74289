#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace svoa {

struct ChatTurn {
  std::string role;  // "user" or "assistant"
  std::string content;

  bool operator==(const ChatTurn&) const = default;
};

/// Substitutes {{$name}} placeholders in one left-to-right pass. Substituted
/// values are never rescanned; unknown placeholders are left verbatim.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// A system prompt, a user-turn template and pre-rendered few-shot turns.
struct PromptTemplate {
  std::string system;
  std::string user;
  std::vector<ChatTurn> few_shot;
};

struct PromptSet {
  PromptTemplate triplets;
  PromptTemplate adjuncts;
  PromptTemplate single_step;
};

/// The prompts compiled in from prompts/.
const PromptSet& default_prompts();

/// Raw access to one embedded prompt file by name (e.g. "triplet_user.txt").
const std::string& embedded_prompt_file(const std::string& name);

}  // namespace svoa
