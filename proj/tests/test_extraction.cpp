#include <gtest/gtest.h>

#include "svoa/extraction.hpp"
#include "svoa/mock_extractor.hpp"
#include "test_support.hpp"

using namespace svoa;
using svoa::testing::make_conv;
using svoa::testing::ScriptedChatBackend;

namespace {

ConversationRecord four_messages() {
  return make_conv("c1", {{"user", "m0"}, {"assistant", "m1"}, {"user", "m2"}, {"assistant", "m3"}});
}

ConversationRecord climate() {
  return make_conv("c2", {{"user", "Can I ask a few questions about climate change?"}});
}

}  // namespace

TEST(ContextWindow, Bounds) {
  const auto conv = four_messages();
  EXPECT_EQ(build_context_window(conv, 0, 2), "");
  EXPECT_EQ(build_context_window(conv, 3, 2), "assistant: m1\nuser: m2");
  EXPECT_EQ(build_context_window(conv, 1, 2), "user: m0");
  EXPECT_EQ(build_context_window(conv, 3, 0), "");
  EXPECT_THROW(build_context_window(conv, 4, 2), ContractViolation);
}

TEST(Triplets, ParsesRoleVerbKey) {
  ScriptedChatBackend backend({R"({"information_triplet":[{"user asks":"questions"}]})"});
  WarningLog warnings;
  const auto t = extract_triplets(climate(), 0, {}, backend, warnings);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0], (SvoTriplet{"user", "asks", "questions", 0}));
  EXPECT_EQ(warnings.size(), 0u);
}

TEST(Triplets, DropsForeignRoleKeepsOthers) {
  ScriptedChatBackend backend(
      {R"({"information_triplet":[{"assistant says":"hello"},{"user asks":"questions"},{"username wants":"x"}]})"});
  WarningLog warnings;
  const auto t = extract_triplets(climate(), 0, {}, backend, warnings);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].verb, "asks");
}

TEST(Triplets, FencedResponse) {
  ScriptedChatBackend backend(
      {"Here you go:\n```json\n{\"information_triplet\":[{\"user asks\":\"questions\"}]}\n```"});
  WarningLog warnings;
  EXPECT_EQ(extract_triplets(climate(), 0, {}, backend, warnings).size(), 1u);
}

TEST(Triplets, ArrayValuesAndCaseInsensitiveDedup) {
  ScriptedChatBackend backend(
      {R"({"information_triplet":[{"User asks":["questions","Questions","weather"]},{"user  asks":"weather"}]})"});
  WarningLog warnings;
  const auto t = extract_triplets(climate(), 0, {}, backend, warnings);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].object, "questions");
  EXPECT_EQ(t[1].object, "weather");
  for (const auto& x : t) EXPECT_EQ(x.subject, "user");
}

TEST(Triplets, RetriesThenWarns) {
  ScriptedChatBackend backend({"not json", "still not", "nope", "never reached"});
  WarningLog warnings;
  ExtractionConfig cfg;
  cfg.max_parse_retries = 2;
  EXPECT_TRUE(extract_triplets(climate(), 0, cfg, backend, warnings).empty());
  EXPECT_EQ(backend.requests.size(), 3u);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_EQ(warnings.snapshot()[0].stage, "triplets");
  EXPECT_EQ(warnings.snapshot()[0].raw_text, "nope");
  // Retries resend the identical request.
  EXPECT_EQ(backend.requests[0].user_message, backend.requests[2].user_message);
}

TEST(Triplets, RecoversOnRetry) {
  ScriptedChatBackend backend({"oops", R"({"information_triplet":[{"user asks":"questions"}]})"});
  WarningLog warnings;
  EXPECT_EQ(extract_triplets(climate(), 0, {}, backend, warnings).size(), 1u);
  EXPECT_EQ(warnings.size(), 0u);
}

TEST(Triplets, RequestCarriesDefaultSettings) {
  ScriptedChatBackend backend({R"({"information_triplet":[]})"});
  WarningLog warnings;
  const auto conv = four_messages();
  extract_triplets(conv, 3, {}, backend, warnings);
  const auto& req = backend.requests.at(0);
  EXPECT_EQ(req.temperature, 0.0);
  EXPECT_EQ(req.max_tokens, 1024);
  EXPECT_NE(req.user_message.find("assistant: m1\nuser: m2"), std::string::npos);
  EXPECT_NE(req.user_message.find("assistant: m3"), std::string::npos);
  EXPECT_EQ(req.user_message.find("user: m0"), std::string::npos);
  EXPECT_NE(req.system_prompt.find("assistant"), std::string::npos);
  EXPECT_EQ(req.system_prompt.find("{{$role}}"), std::string::npos);
}

TEST(Adjuncts, AttachesDetail) {
  ScriptedChatBackend backend(
      {R"({"detailed_information":[{"user asks questions":"about climate change"}]})"});
  WarningLog warnings;
  const SvoTriplet t{"user", "asks", "questions", 0};
  const auto q = augment_adjuncts(climate(), 0, std::span(&t, 1), {}, backend, warnings);
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q[0].adjunct, "about climate change");
  EXPECT_NE(backend.requests[0].user_message.find("user asks questions"), std::string::npos);
}

TEST(Adjuncts, NoInformationAndMissingKeysAreAbsent) {
  ScriptedChatBackend backend(
      {R"({"detailed_information":[{"user asks questions":"No information."},{"USER WANTS ANSWERS":"for school"}]})"});
  WarningLog warnings;
  const std::vector<SvoTriplet> ts = {{"user", "asks", "questions", 0},
                                      {"user", "wants", "answers", 0},
                                      {"user", "likes", "cats", 0}};
  const auto q = augment_adjuncts(climate(), 0, ts, {}, backend, warnings);
  ASSERT_EQ(q.size(), 3u);
  EXPECT_FALSE(q[0].adjunct.has_value());
  EXPECT_EQ(q[1].adjunct, "for school");
  EXPECT_FALSE(q[2].adjunct.has_value());
  EXPECT_EQ(warnings.size(), 0u);
}

TEST(Adjuncts, ParseFailureKeepsTriplets) {
  ScriptedChatBackend backend({"I cannot help with that."});
  WarningLog warnings;
  const std::vector<SvoTriplet> ts = {{"user", "asks", "questions", 0},
                                      {"user", "wants", "answers", 0}};
  const auto q = augment_adjuncts(climate(), 0, ts, {}, backend, warnings);
  ASSERT_EQ(q.size(), 2u);
  for (std::size_t i = 0; i < q.size(); ++i) {
    EXPECT_EQ(q[i].verb, ts[i].verb);
    EXPECT_EQ(q[i].object, ts[i].object);
    EXPECT_FALSE(q[i].adjunct.has_value());
  }
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_EQ(warnings.snapshot()[0].stage, "adjuncts");
}

TEST(Adjuncts, NoTripletsNoCall) {
  ScriptedChatBackend backend({"{}"});
  WarningLog warnings;
  EXPECT_TRUE(augment_adjuncts(climate(), 0, {}, {}, backend, warnings).empty());
  EXPECT_TRUE(backend.requests.empty());
}

TEST(SingleStep, ParsesObjectAndDetail) {
  ScriptedChatBackend backend(
      {R"({"information_quadruplet":[{"user asks":["questions","about climate change"]},{"user mentions":["weather","no information"]}]})"});
  WarningLog warnings;
  ExtractionConfig cfg;
  cfg.mode = ExtractionMode::SingleStep;
  const auto q = extract_single_step(climate(), 0, cfg, backend, warnings);
  ASSERT_EQ(q.size(), 2u);
  EXPECT_EQ(q[0].adjunct, "about climate change");
  EXPECT_FALSE(q[1].adjunct.has_value());
  EXPECT_EQ(backend.requests.size(), 1u);
}

TEST(SingleStep, KeepsRedundantVariations) {
  const auto conv = make_conv("k", {{"teacher", "I teach kids at the kindergarten."}});
  ScriptedChatBackend backend(
      {R"({"information_quadruplet":[{"teacher teaches":["kids","at kindergarten"]},{"teacher teaches":["children","in kindergarten"]}]})"});
  WarningLog warnings;
  ExtractionConfig cfg;
  cfg.mode = ExtractionMode::SingleStep;
  EXPECT_EQ(extract_single_step(conv, 0, cfg, backend, warnings).size(), 2u);
}

TEST(SingleStep, RequiresMode) {
  ScriptedChatBackend backend({"{}"});
  WarningLog warnings;
  EXPECT_THROW(extract_single_step(climate(), 0, {}, backend, warnings), ContractViolation);
}

TEST(ExtractionMode, Names) {
  EXPECT_EQ(parse_extraction_mode("two-step"), ExtractionMode::TwoStep);
  EXPECT_EQ(parse_extraction_mode("single-step"), ExtractionMode::SingleStep);
  EXPECT_THROW(parse_extraction_mode("three-step"), ContractViolation);
}

TEST(Mock, RuleTable) {
  const auto movies = mock_extract_text("user", "What movies do you like?");
  EXPECT_EQ(movies.verb, "asks");
  EXPECT_EQ(movies.object, "movies");
  EXPECT_FALSE(movies.adjunct.has_value());

  const auto thanks = mock_extract_text("user", "Thanks!");
  EXPECT_EQ(thanks.verb, "thanks");
  EXPECT_EQ(thanks.object, "person");
  EXPECT_FALSE(thanks.adjunct.has_value());

  const auto help = mock_extract_text("assistant", "I can help with your garden soil today.");
  EXPECT_EQ(help.verb, "mentions");
  EXPECT_EQ(help.object, "help");
  EXPECT_EQ(help.adjunct, "with your garden soil");

  const auto clause = mock_extract_text("user", "Sorry about that, the printer jammed.");
  EXPECT_EQ(clause.verb, "apologizes");
  EXPECT_EQ(clause.adjunct, "about that");

  EXPECT_EQ(mock_extract_text("user", "Hello there"), mock_extract_text("user", "Hello there"));
}

TEST(Mock, BackendAgreesWithRulesAndKeepsSubject) {
  const auto conv = make_conv("m", {{"user", "Can you tell me about the weather for Paris?"},
                                    {"assistant", "Sure, the weather is mild during spring."},
                                    {"user", "Thanks!"}});
  for (auto mode : {ExtractionMode::TwoStep, ExtractionMode::SingleStep}) {
    MockChatBackend backend;
    WarningLog warnings;
    ExtractionConfig cfg;
    cfg.mode = mode;
    const auto qs = extract_conversation(conv, cfg, backend, warnings);
    ASSERT_EQ(qs.size(), conv.messages.size());
    for (const auto& q : qs) {
      EXPECT_EQ(q.subject, conv.messages[q.source_message_index].role);
      const auto direct = mock_extract(conv, q.source_message_index).front();
      EXPECT_EQ(q.verb, direct.verb);
      EXPECT_EQ(q.object, direct.object);
      EXPECT_EQ(q.adjunct, direct.adjunct);
    }
    EXPECT_EQ(warnings.size(), 0u);
    EXPECT_EQ(backend.calls(), mode == ExtractionMode::TwoStep ? 6u : 3u);
  }
}

TEST(Mock, ParallelMessagesMatchSerial) {
  const auto conv = make_conv("p", {{"user", "Tell me about trains for kids."},
                                    {"assistant", "Trains with steam engines are fun."},
                                    {"user", "What about buses?"},
                                    {"assistant", "Buses over bridges are common."}});
  MockChatBackend a;
  MockChatBackend b;
  WarningLog wa;
  WarningLog wb;
  ExtractionConfig serial;
  ExtractionConfig parallel;
  parallel.message_workers = 4;
  EXPECT_EQ(extract_conversation(conv, serial, a, wa), extract_conversation(conv, parallel, b, wb));
}
