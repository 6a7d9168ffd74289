#include "svoa/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace svoa {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> hash_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      current += static_cast<char>(c >= 0x80 ? c : std::tolower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

EmbeddingVector hashed_embed(std::string_view text, std::size_t dimension, std::uint64_t seed) {
  if (dimension < 2) throw ContractViolation("hashed_embed: dimension must be >= 2");
  std::vector<double> values(dimension, 0.0);
  for (const auto& token : hash_tokens(text)) {
    const std::uint64_t h = splitmix64(fnv1a64(token) ^ seed);
    values[h % dimension] += (h >> 63) ? -1.0 : 1.0;
  }
  return l2_normalize(EmbeddingVector(std::move(values)));
}

HashedEmbeddingBackend::HashedEmbeddingBackend(std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension < 2) throw ContractViolation("hashed backend dimension must be >= 2");
}

std::string HashedEmbeddingBackend::model_id() const {
  return "hashed-bow-d" + std::to_string(dimension_) + "-s" + std::to_string(seed_);
}

std::vector<EmbeddingVector> HashedEmbeddingBackend::embed_batch(
    std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(hashed_embed(t, dimension_, seed_));
  return out;
}

std::size_t EmbeddingCache::KeyHash::operator()(const Key& k) const {
  return std::hash<std::string>{}(k.model_id) * 31 + std::hash<std::string>{}(k.text);
}

EmbeddingCache::EmbeddingCache(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(*path_)) {
    std::ifstream in(*path_);
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      auto rec = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
      // A torn final append is skipped; the entry is simply recomputed.
      if (rec.is_discarded() || !rec.is_object() || !rec.contains("vector")) continue;
      entries_.insert_or_assign(
          Key{rec.at("model_id").get<std::string>(), rec.at("text").get<std::string>()},
          EmbeddingVector(rec.at("vector").get<std::vector<double>>()));
    }
  }
  out_.open(*path_, std::ios::app);
  if (!out_) throw Error("cannot open embedding cache file " + path_->string());
}

std::optional<EmbeddingVector> EmbeddingCache::lookup(const std::string& model_id,
                                                      const std::string& text) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(Key{model_id, text});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::insert(const std::string& model_id, const std::string& text,
                            const EmbeddingVector& vector) {
  std::unique_lock lock(mutex_);
  entries_.insert_or_assign(Key{model_id, text}, vector);
  if (out_.is_open()) {
    nlohmann::json rec = {
        {"model_id", model_id},
        {"text_hash", hex64(fnv1a64(text))},
        {"text", text},
        {"vector", std::vector<double>(vector.values().begin(), vector.values().end())},
    };
    out_ << rec.dump() << '\n';
    out_.flush();
  }
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts,
                                         EmbeddingBackend& backend, EmbeddingCache* cache,
                                         const EmbedOptions& options) {
  const std::string model = backend.model_id();
  const std::size_t dim = backend.dimension();
  std::vector<EmbeddingVector> out(texts.size());

  std::vector<std::string> miss_texts;
  std::unordered_map<std::string, std::vector<std::size_t>> miss_positions;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const std::string& t = texts[i];
    if (t.empty()) {
      out[i] = EmbeddingVector::zeros(dim);
      continue;
    }
    if (cache) {
      if (auto hit = cache->lookup(model, t)) {
        out[i] = std::move(*hit);
        continue;
      }
    }
    auto& positions = miss_positions[t];
    if (positions.empty()) miss_texts.push_back(t);
    positions.push_back(i);
  }

  const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
  std::vector<std::size_t> failed;
  std::string last_error;
  for (std::size_t begin = 0; begin < miss_texts.size(); begin += batch_size) {
    const std::size_t end = std::min(miss_texts.size(), begin + batch_size);
    std::span<const std::string> batch(miss_texts.data() + begin, end - begin);

    std::optional<std::vector<EmbeddingVector>> result;
    auto backoff = options.initial_backoff;
    for (int attempt = 0; attempt < std::max(1, options.max_attempts); ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
      try {
        auto vectors = backend.embed_batch(batch);
        if (vectors.size() != batch.size()) {
          throw BackendError("embedding backend returned " + std::to_string(vectors.size()) +
                             " vectors for " + std::to_string(batch.size()) + " texts");
        }
        for (const auto& v : vectors) {
          if (v.dimension() != dim) {
            throw BackendError("embedding backend returned dimension " +
                               std::to_string(v.dimension()) + ", expected " +
                               std::to_string(dim));
          }
        }
        result = std::move(vectors);
        break;
      } catch (const BackendError& e) {
        last_error = e.what();
      }
    }

    if (!result) {
      for (std::size_t j = begin; j < end; ++j) {
        const auto& positions = miss_positions[miss_texts[j]];
        failed.insert(failed.end(), positions.begin(), positions.end());
      }
      continue;
    }
    for (std::size_t j = 0; j < batch.size(); ++j) {
      EmbeddingVector v = l2_normalize((*result)[j]);
      if (cache) cache->insert(model, batch[j], v);
      for (std::size_t pos : miss_positions[batch[j]]) out[pos] = v;
    }
  }

  if (!failed.empty()) {
    std::sort(failed.begin(), failed.end());
    throw EmbeddingError("embedding failed for " + std::to_string(failed.size()) +
                             " text(s) after retries: " + last_error,
                         std::move(failed));
  }
  return out;
}

}  // namespace svoa
