#include "svoa/prompts.hpp"

#include <json.hpp>

#include "svoa/core.hpp"

namespace svoa {
namespace detail {
const std::map<std::string, std::string>& embedded_prompt_files();
}  // namespace detail

namespace {

constexpr std::string_view kOpen = "{{$";
constexpr std::string_view kClose = "}}";

std::vector<ChatTurn> render_few_shot(const std::string& json_text, const std::string& user_tmpl) {
  const auto doc = nlohmann::json::parse(json_text);
  std::vector<ChatTurn> turns;
  for (const auto& ex : doc.at("examples")) {
    std::map<std::string, std::string> vars = {
        {"role", ex.at("role").get<std::string>()},
        {"context", ex.at("context").get<std::string>()},
        {"message", ex.at("message").get<std::string>()},
    };
    if (ex.contains("info_list")) {
      std::string lines;
      for (const auto& item : ex.at("info_list")) {
        if (!lines.empty()) lines += '\n';
        lines += item.get<std::string>();
      }
      vars["info_list"] = lines;
    }
    turns.push_back({"user", fill_template(user_tmpl, vars)});
    turns.push_back({"assistant", ex.at("answer").dump()});
  }
  return turns;
}

PromptTemplate load_template(const std::string& stem) {
  PromptTemplate t;
  t.system = embedded_prompt_file(stem + "_system.txt");
  t.user = embedded_prompt_file(stem + "_user.txt");
  t.few_shot = render_few_shot(embedded_prompt_file(stem + "_fewshot.json"), t.user);
  return t;
}

}  // namespace

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find(kOpen, pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    const auto close = tmpl.find(kClose, open + kOpen.size());
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, open - pos));
    const std::string name(tmpl.substr(open + kOpen.size(), close - open - kOpen.size()));
    if (auto it = vars.find(name); it != vars.end()) {
      out += it->second;
    } else {
      out.append(tmpl.substr(open, close + kClose.size() - open));
    }
    pos = close + kClose.size();
  }
  return out;
}

const std::string& embedded_prompt_file(const std::string& name) {
  const auto& files = detail::embedded_prompt_files();
  auto it = files.find(name);
  if (it == files.end()) throw Error("no embedded prompt file named '" + name + "'");
  return it->second;
}

const PromptSet& default_prompts() {
  static const PromptSet prompts = {
      load_template("triplet"),
      load_template("adjunct"),
      load_template("single_step"),
  };
  return prompts;
}

}  // namespace svoa
