#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <random>
#include <sstream>

#include "svoa/analysis.hpp"
#include "test_support.hpp"

using namespace svoa;
using nlohmann::json;
using svoa::testing::TempDir;

namespace {

struct CommandResult {
  int status = -1;
  std::string out;
};

// Runs the CLI with stderr discarded and returns stdout.
CommandResult run_cli(const std::string& args) {
  const std::string cmd = std::string(SVOA_CLI_PATH) + " " + args + " 2>/dev/null";
  CommandResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string quoted(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST(Cli, GenerateIngestQueryEval) {
  TempDir dir;
  const auto corpus = dir / "corpus.jsonl";
  const auto queries = dir / "queries.jsonl";
  const auto index = dir / "index.jsonl";
  ASSERT_EQ(run_cli("generate --corpus " + quoted(corpus) + " --queries " + quoted(queries) +
                    " --conversations 80 --query-count 10 --seed 4")
                .status,
            0);

  const auto ingest = run_cli("ingest --corpus " + quoted(corpus) + " --out " + quoted(index));
  ASSERT_EQ(ingest.status, 0);
  const auto summary = json::parse(ingest.out);
  EXPECT_EQ(summary["conversations"], 80);
  EXPECT_EQ(summary["warnings"], 0);
  EXPECT_EQ(load(index).size(), 80u);

  const auto query = run_cli("query --index " + quoted(index) + " --text 'garden soil' --top-k 3 --json");
  ASSERT_EQ(query.status, 0);
  EXPECT_EQ(json::parse(query.out)["results"].size(), 3u);

  const auto eval = run_cli("eval --index " + quoted(index) + " --queries " + quoted(queries));
  ASSERT_EQ(eval.status, 0);
  EXPECT_NE(eval.out.find("acc@1"), std::string::npos);
  EXPECT_NE(eval.out.find("ms/query"), std::string::npos);
  EXPECT_NE(eval.out.find("0.4085"), std::string::npos);
  EXPECT_NE(eval.out.find("0.3198"), std::string::npos);

  EXPECT_NE(run_cli("query --index " + quoted(index) + " --text x --combination bogus").status, 0);
  EXPECT_NE(run_cli("eval --index " + quoted(dir / "missing.jsonl") + " --queries " + quoted(queries))
                .status,
            0);
}

TEST(Cli, ClusterDefaultsToFifteenGroups) {
  EXPECT_EQ(KMeansOptions{}.k, 15u);

  // Varied SV vectors so fifteen distinct clusters can form.
  TempDir dir;
  std::mt19937_64 rng(15);
  IndexManifest m;
  m.model_id = HashedEmbeddingBackend(16).model_id();
  m.dimension = 16;
  SemanticIndexStore store(m);
  for (int c = 0; c < 20; ++c) {
    std::vector<EmbeddingVector> sv;
    for (int i = 0; i < 3; ++i) sv.push_back(svoa::testing::random_vector(rng, 16));
    store.add(svoa::testing::make_entry("c" + std::to_string(c),
                                        svoa::testing::random_vector(rng, 16), {}, sv, {}, {}));
  }
  persist(store, dir / "index.jsonl");

  const auto as_json = run_cli("cluster --index " + quoted(dir / "index.jsonl") + " --kind sv --json");
  ASSERT_EQ(as_json.status, 0);
  const auto report = json::parse(as_json.out);
  EXPECT_EQ(report["k"], 15);
  EXPECT_EQ(report["clusters"].size(), 15u);
  EXPECT_EQ(report["instance_count"], 60);

  const auto table =
      run_cli("cluster --index " + quoted(dir / "index.jsonl") + " --kind sv --k 15");
  ASSERT_EQ(table.status, 0);
  EXPECT_EQ(count_lines(table.out), 16u);  // header + one row per cluster
}
