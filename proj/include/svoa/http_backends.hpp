#pragma once

#include <string>

#include "svoa/embedding.hpp"
#include "svoa/extraction.hpp"

namespace svoa {

struct HttpEndpoint {
  /// e.g. "https://api.openai.com/v1" or "http://127.0.0.1:8080". Any path
  /// component is used as a prefix for the request route.
  std::string base_url;
  /// Name of the environment variable holding the bearer token; empty for none.
  std::string api_key_env;
  int timeout_seconds = 60;
};

/// OpenAI-compatible chat completions client (POST {base}/chat/completions).
/// The reply's first text content is returned verbatim: choices[0].message
/// .content, or content[0].text for Messages-style payloads.
class HttpChatBackend : public ChatBackend {
 public:
  HttpChatBackend(HttpEndpoint endpoint, std::string model);

  std::string complete(const ChatRequest& request) override;

  /// Request body sent for `request`; exposed for tests.
  std::string request_body(const ChatRequest& request) const;

 private:
  HttpEndpoint endpoint_;
  std::string model_;
};

/// Embedding client (POST {base}/embeddings) with body {"model", "input"}.
/// Accepts either a bare list of float arrays or {"data":[{"embedding":[...]}]}.
/// A non-empty instruction prefix is prepended to every text and folded into
/// model_id() so cached vectors never mix prefixed and unprefixed inputs.
class HttpEmbeddingBackend : public EmbeddingBackend {
 public:
  HttpEmbeddingBackend(HttpEndpoint endpoint, std::string model, std::size_t dimension,
                       std::string instruction_prefix = {});

  std::string model_id() const override;
  std::size_t dimension() const override { return dimension_; }
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override;

 private:
  HttpEndpoint endpoint_;
  std::string model_;
  std::size_t dimension_;
  std::string prefix_;
};

}  // namespace svoa
