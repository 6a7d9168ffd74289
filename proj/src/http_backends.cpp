#include "svoa/http_backends.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

namespace svoa {
namespace {

using nlohmann::json;

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  SplitUrl out;
  if (path_start == std::string::npos) {
    out.origin = url;
  } else {
    out.origin = url.substr(0, path_start);
    out.prefix = url.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  }
  return out;
}

std::string post_json(const HttpEndpoint& endpoint, const std::string& route,
                      const std::string& body) {
  const SplitUrl url = split_url(endpoint.base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(endpoint.timeout_seconds, 0);
  client.set_read_timeout(endpoint.timeout_seconds, 0);
  client.set_write_timeout(endpoint.timeout_seconds, 0);

  httplib::Headers headers;
  if (!endpoint.api_key_env.empty()) {
    const char* key = std::getenv(endpoint.api_key_env.c_str());
    if (!key || !*key) {
      throw BackendError("environment variable " + endpoint.api_key_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  auto res = client.Post(url.prefix + route, headers, body, "application/json");
  if (!res) {
    throw BackendError("POST " + endpoint.base_url + route +
                       " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendError("POST " + endpoint.base_url + route + " returned HTTP " +
                       std::to_string(res->status) + ": " + res->body.substr(0, 300));
  }
  return res->body;
}

}  // namespace

HttpChatBackend::HttpChatBackend(HttpEndpoint endpoint, std::string model)
    : endpoint_(std::move(endpoint)), model_(std::move(model)) {}

std::string HttpChatBackend::request_body(const ChatRequest& request) const {
  json messages = json::array();
  messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  for (const auto& turn : request.few_shot) {
    messages.push_back({{"role", turn.role}, {"content", turn.content}});
  }
  messages.push_back({{"role", "user"}, {"content", request.user_message}});
  return json{{"model", model_},
              {"messages", messages},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}}
      .dump();
}

std::string HttpChatBackend::complete(const ChatRequest& request) {
  const std::string body = post_json(endpoint_, "/chat/completions", request_body(request));
  const auto doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw BackendError("chat backend returned a non-JSON body");
  }
  if (auto choices = doc.find("choices"); choices != doc.end() && choices->is_array() &&
                                          !choices->empty()) {
    const auto& msg = (*choices)[0].value("message", json::object());
    if (msg.contains("content") && msg["content"].is_string()) {
      return msg["content"].get<std::string>();
    }
  }
  if (auto content = doc.find("content"); content != doc.end() && content->is_array()) {
    for (const auto& block : *content) {
      if (block.is_object() && block.contains("text") && block["text"].is_string()) {
        return block["text"].get<std::string>();
      }
    }
  }
  throw BackendError("chat backend reply has no text content");
}

HttpEmbeddingBackend::HttpEmbeddingBackend(HttpEndpoint endpoint, std::string model,
                                           std::size_t dimension, std::string instruction_prefix)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      dimension_(dimension),
      prefix_(std::move(instruction_prefix)) {}

std::string HttpEmbeddingBackend::model_id() const {
  return prefix_.empty() ? model_ : model_ + "|prefix:" + prefix_;
}

std::vector<EmbeddingVector> HttpEmbeddingBackend::embed_batch(
    std::span<const std::string> texts) {
  json input = json::array();
  for (const auto& t : texts) input.push_back(prefix_ + t);
  const std::string body =
      post_json(endpoint_, "/embeddings", json{{"model", model_}, {"input", input}}.dump());
  const auto doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw BackendError("embedding backend returned a non-JSON body");

  json arrays = json::array();
  if (doc.is_array()) {
    arrays = doc;
  } else if (doc.is_object() && doc.contains("data") && doc["data"].is_array()) {
    for (const auto& item : doc["data"]) {
      if (!item.is_object() || !item.contains("embedding")) {
        throw BackendError("embedding backend item lacks \"embedding\"");
      }
      arrays.push_back(item["embedding"]);
    }
  } else {
    throw BackendError("unrecognized embedding response shape");
  }

  std::vector<EmbeddingVector> out;
  out.reserve(arrays.size());
  try {
    for (const auto& a : arrays) out.emplace_back(a.get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed embedding vector: ") + e.what());
  }
  return out;
}

}  // namespace svoa
