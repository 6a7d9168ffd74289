#include <gtest/gtest.h>

#include <fstream>

#include "svoa/config.hpp"
#include "svoa/ingest_runner.hpp"
#include "svoa/service.hpp"
#include "svoa/synthetic.hpp"
#include "test_support.hpp"

using namespace svoa;
using nlohmann::json;
using svoa::testing::make_conv;
using svoa::testing::mock_index;
using svoa::testing::TempDir;

namespace {

std::vector<ConversationRecord> tiny_corpus() {
  return {make_conv("a", {{"user", "Tell me about trains for kids."},
                          {"assistant", "Trains run on rails across the country."}}),
          make_conv("b", {{"user", "What movies do you like?"}, {"assistant", "I like comedies."}}),
          make_conv("c", {{"user", "My garden soil is dry."}, {"user", "Thanks!"}})};
}

AppConfig config_for(std::size_t dim) {
  AppConfig cfg;
  cfg.embedding.dimension = dim;
  return cfg;
}

QueryService make_service(SemanticIndexStore store, std::size_t dim) {
  return QueryService(std::move(store), std::make_unique<HashedEmbeddingBackend>(dim),
                      config_for(dim));
}

// Fails every request after the first `allowed` ones.
class LimitedChatBackend : public ChatBackend {
 public:
  explicit LimitedChatBackend(int allowed) : allowed_(allowed) {}
  std::string complete(const ChatRequest& request) override {
    if (allowed_-- <= 0) throw BackendError("rate limited");
    return inner_.complete(request);
  }

 private:
  int allowed_;
  MockChatBackend inner_;
};

}  // namespace

TEST(Config, RoundTripAndDefaults) {
  AppConfig cfg;
  cfg.chat.backend = "http";
  cfg.embedding.dimension = 3072;
  cfg.scoring.combination = "svoa_conv_msg";
  cfg.scoring.weights[to_index(ComponentKind::SVOA)] = 0.5;
  cfg.scoring.bm25_weight = 0.3;
  cfg.paths.index = "/tmp/x.jsonl";
  cfg.workers = 4;
  const AppConfig back = config_from_json(config_to_json(cfg));
  EXPECT_EQ(config_to_json(back), config_to_json(cfg));

  const AppConfig d = config_from_json(json::object());
  EXPECT_EQ(d.chat.model, "gpt-3.5-turbo");
  EXPECT_EQ(d.chat.temperature, 0.0);
  EXPECT_EQ(d.extraction.context_window_k, 2u);
  EXPECT_EQ(d.scoring_config().active, ComponentSet::all());
  EXPECT_EQ(d.scoring_config().bm25_weight, 0.0);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(config_from_json({{"colour", 1}}), Error);
  EXPECT_THROW(config_from_json({{"chat", {{"modle", "x"}}}}), Error);
  EXPECT_THROW(config_from_json({{"chat", {{"backend", "carrier-pigeon"}}}}), Error);
  EXPECT_THROW(config_from_json({{"scoring", {{"combination", "bogus"}}}}), Error);
  EXPECT_THROW(config_from_json({{"embedding", {{"dimension", "many"}}}}), Error);
  EXPECT_THROW(load_config("/nonexistent/config.json"), Error);
}

TEST(Config, BackendForIndexReadsHashedModelId) {
  IndexManifest m;
  m.model_id = "hashed-bow-d48-s7";
  m.dimension = 48;
  auto backend = make_embedding_backend_for(EmbeddingConfig{}, m);
  EXPECT_EQ(backend->model_id(), m.model_id);
  EXPECT_EQ(backend->dimension(), 48u);
  m.model_id = "someone-elses-model";
  EXPECT_THROW(make_embedding_backend_for(EmbeddingConfig{}, m), Error);
}

TEST(Service, QueryMatchesDirectRanking) {
  const auto store = mock_index(tiny_corpus(), 64);
  auto service = make_service(store, 64);
  const auto r = service.handle_query(R"({"text":"trains for children","top_k":3})");
  ASSERT_EQ(r.status, 200) << r.body.dump();
  const auto& results = r.body["results"];
  ASSERT_EQ(results.size(), 3u);

  HashedEmbeddingBackend backend(64);
  const auto q = backend.embed_batch(std::vector<std::string>{"trains for children"}).front();
  RankOptions o;
  o.top_k = 3;
  const auto direct = rank_conversations(l2_normalize(q), store, ScoringConfig{}, o);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(results[i]["conv_id"], direct[i].conv_id);
    EXPECT_NEAR(results[i]["total"].get<double>(), direct[i].total, 1e-12);
  }
  EXPECT_EQ(results[0]["conv_id"], "a");
  EXPECT_EQ(results[0]["scores"].size(), 5u);
  EXPECT_FALSE(results[0]["best_svoa"].get<std::string>().empty());
}

TEST(Service, BestSvoaReportedWhenSvoaInactive) {
  auto service = make_service(mock_index(tiny_corpus(), 64), 64);
  const auto r = service.handle_query(R"({"text":"movies","combination":"sv_svo","top_k":1})");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["results"][0]["scores"].size(), 2u);
  EXPECT_FALSE(r.body["results"][0]["best_svoa"].get<std::string>().empty());
}

TEST(Service, BadRequestsGet400) {
  auto service = make_service(mock_index(tiny_corpus(), 64), 64);
  for (const char* body : {"not json", R"({"text":""})", R"({"text":"x","top_k":0})",
                           R"({"text":"x","extra":1})", R"({"text":"x","combination":"bogus"})",
                           R"({"text":"x","weights":{"conv":-1}})", R"([1,2])"}) {
    EXPECT_EQ(service.handle_query(body).status, 400) << body;
  }
}

TEST(Service, BackendFailureGets502) {
  AppConfig cfg;
  cfg.embedding.batch_size = 1;
  QueryService service(SemanticIndexStore{}, std::make_unique<svoa::testing::FailingEmbeddingBackend>(8),
                       cfg);
  const auto r = service.handle_query(R"({"text":"hello"})");
  EXPECT_EQ(r.status, 502) << r.body.dump();
}

TEST(Service, ConversationStatsAndRemoval) {
  auto service = make_service(mock_index(tiny_corpus(), 64), 64);
  const auto conv = service.handle_conversation("c");
  ASSERT_EQ(conv.status, 200);
  EXPECT_EQ(conv.body["conv_id"], "c");
  EXPECT_FALSE(conv.body["instances"].empty());
  EXPECT_FALSE(conv.body.dump().find("vector") != std::string::npos);
  EXPECT_EQ(service.handle_conversation("zzz").status, 404);

  const auto before = service.handle_stats();
  ASSERT_EQ(before.status, 200);
  EXPECT_EQ(before.body["conversations"], 3);
  EXPECT_EQ(before.body["model_id"], "hashed-bow-d64-s0");
  const auto quads = before.body["quadruplets"].get<int>();

  EXPECT_EQ(service.handle_remove(R"({"quadruplet_ref":"c#0"})").status, 200);
  EXPECT_EQ(service.handle_stats().body["quadruplets"].get<int>(), quads - 1);
  EXPECT_EQ(service.handle_remove(R"({"quadruplet_ref":"c#0"})").status, 404);
  EXPECT_EQ(service.handle_remove(R"({"ref":"c#1"})").status, 400);
  EXPECT_EQ(service.handle_remove("{").status, 400);
}

TEST(Service, EmptyIndexAndReloading) {
  IndexManifest m;
  m.model_id = "hashed-bow-d16-s0";
  m.dimension = 16;
  auto service = make_service(SemanticIndexStore(m), 16);
  const auto s = service.handle_stats();
  ASSERT_EQ(s.status, 200);
  EXPECT_EQ(s.body["conversations"], 0);
  EXPECT_EQ(s.body["quadruplets"], 0);
  const auto q = service.handle_query(R"({"text":"anything"})");
  ASSERT_EQ(q.status, 200);
  EXPECT_TRUE(q.body["results"].empty());

  service.set_reloading(true);
  EXPECT_EQ(service.handle_healthz().status, 503);
  EXPECT_EQ(service.handle_query(R"({"text":"x"})").status, 503);
  EXPECT_EQ(service.handle_stats().status, 503);
  service.set_reloading(false);
  service.reload(mock_index(tiny_corpus(), 16));
  EXPECT_EQ(service.handle_healthz().status, 200);
  EXPECT_EQ(service.handle_stats().body["conversations"], 3);
}

TEST(IngestRunner, WritesLoadableIndexWithoutWarnings) {
  TempDir dir;
  SyntheticOptions so;
  so.conversations = 10;
  so.queries = 2;
  so.relevants_per_query = 3;
  const auto data = generate_synthetic(so);
  MockChatBackend chat;
  HashedEmbeddingBackend embedder(64);
  const auto summary = run_ingest(data.corpus, dir / "i.jsonl", {}, chat, embedder, nullptr);
  EXPECT_EQ(summary.conversations, 10u);
  EXPECT_EQ(summary.ingested, 10u);
  EXPECT_EQ(summary.warnings, 0u);
  EXPECT_GT(summary.embedding_batches, 0u);
  EXPECT_FALSE(std::filesystem::exists(progress_path(dir / "i.jsonl")));
  const auto store = load(dir / "i.jsonl");
  EXPECT_EQ(store.size(), 10u);
  EXPECT_EQ(store, mock_index(data.corpus, 64));
}

TEST(IngestRunner, WarmCacheSkipsEmbeddingCalls) {
  TempDir dir;
  const auto corpus = tiny_corpus();
  MockChatBackend chat;
  HashedEmbeddingBackend embedder(32);
  EmbeddingCache cache(dir / "cache.jsonl");
  run_ingest(corpus, dir / "a.jsonl", {}, chat, embedder, &cache);
  const auto warm = run_ingest(corpus, dir / "b.jsonl", {}, chat, embedder, &cache);
  EXPECT_EQ(warm.embedding_batches, 0u);
  EXPECT_EQ(warm.embedded_texts, 0u);
  EXPECT_EQ(load(dir / "a.jsonl"), load(dir / "b.jsonl"));
}

TEST(IngestRunner, FailureKeepsProgressAndResumeSkipsDoneWork) {
  TempDir dir;
  const auto corpus = tiny_corpus();
  const auto out = dir / "i.jsonl";
  HashedEmbeddingBackend embedder(32);
  // Conversation "a" needs four chat calls (two messages, two steps).
  LimitedChatBackend flaky(4);
  EXPECT_THROW(run_ingest(corpus, out, {}, flaky, embedder, nullptr), BackendError);
  EXPECT_FALSE(std::filesystem::exists(out));
  ASSERT_TRUE(std::filesystem::exists(progress_path(out)));

  MockChatBackend chat;
  const auto summary = run_ingest(corpus, out, {}, chat, embedder, nullptr);
  EXPECT_EQ(summary.resumed, 1u);
  EXPECT_EQ(summary.ingested, 2u);
  EXPECT_EQ(load(out), mock_index(corpus, 32));
}

TEST(IngestRunner, ParallelEqualsSerial) {
  TempDir dir;
  SyntheticOptions so;
  so.conversations = 12;
  so.queries = 2;
  so.relevants_per_query = 2;
  const auto data = generate_synthetic(so);
  MockChatBackend chat;
  HashedEmbeddingBackend embedder(32);
  IngestRunOptions parallel;
  parallel.workers = 4;
  run_ingest(data.corpus, dir / "s.jsonl", {}, chat, embedder, nullptr);
  run_ingest(data.corpus, dir / "p.jsonl", parallel, chat, embedder, nullptr);
  std::ifstream a(dir / "s.jsonl"), b(dir / "p.jsonl");
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}),
            std::string(std::istreambuf_iterator<char>(b), {}));
}
