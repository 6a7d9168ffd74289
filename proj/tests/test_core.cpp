#include <gtest/gtest.h>

#include <random>

#include "svoa/core.hpp"
#include "svoa/json_payload.hpp"
#include "svoa/prompts.hpp"
#include "test_support.hpp"

using namespace svoa;
using svoa::testing::vec;

TEST(Cosine, IdentityOrthogonalAndHandComputed) {
  EXPECT_DOUBLE_EQ(cosine_similarity(vec({1, 0, 0}), vec({1, 0, 0})), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(vec({1, 0}), vec({0, 1})), 0.0);
  // 24 / (5 * 5)
  EXPECT_NEAR(cosine_similarity(vec({3, 4}), vec({4, 3})), 24.0 / 25.0, 1e-15);
}

TEST(Cosine, ZeroVectorScoresZero) {
  EXPECT_EQ(cosine_similarity(vec({0, 0}), vec({1, 2})), 0.0);
}

TEST(Cosine, DimensionMismatchThrows) {
  EXPECT_THROW(cosine_similarity(vec({1, 0}), vec({1, 0, 0})), ContractViolation);
}

TEST(Cosine, SymmetricAndBounded) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto a = svoa::testing::random_vector(rng, 12);
    const auto b = svoa::testing::random_vector(rng, 12);
    const double ab = cosine_similarity(a, b);
    EXPECT_EQ(ab, cosine_similarity(b, a));
    EXPECT_LE(ab, 1.0);
    EXPECT_GE(ab, -1.0);
  }
}

TEST(Normalize, Cases) {
  const auto n = l2_normalize(vec({3, 4}));
  EXPECT_NEAR(n.values()[0], 0.6, 1e-15);
  EXPECT_NEAR(n.values()[1], 0.8, 1e-15);
  EXPECT_EQ(l2_normalize(vec({0, 0})), vec({0, 0}));
  EXPECT_EQ(l2_normalize(vec({1, 0})), vec({1, 0}));
  EXPECT_TRUE(n.is_normalized());
}

TEST(Render, ComponentTexts) {
  const SvoaQuadruplet asks{"user", "asks", "questions", "about climate change", 0};
  EXPECT_EQ(render_component_text(asks, ComponentKind::SVOA),
            "user asks questions about climate change");
  const SvoaQuadruplet christmas{"user", "mentions", "Christmas", std::nullopt, 0};
  EXPECT_EQ(render_component_text(christmas, ComponentKind::SVOA), "user mentions Christmas");
  EXPECT_EQ(render_component_text(christmas, ComponentKind::SVO), "user mentions Christmas");
  const SvoaQuadruplet advice{"assistant", "offers", "advice", "regarding data protection", 0};
  EXPECT_EQ(render_component_text(advice, ComponentKind::SV), "assistant offers");
  EXPECT_THROW(render_component_text(advice, ComponentKind::Message), ContractViolation);
}

TEST(Render, ConversationText) {
  auto one = svoa::testing::make_conv("c", {{"user", "hi"}});
  EXPECT_EQ(render_conversation_text(one), "user: hi");
  auto two = svoa::testing::make_conv("c", {{"user", "hi"}, {"assistant", "hello"}});
  EXPECT_EQ(render_conversation_text(two), "user: hi\nassistant: hello");
}

TEST(Validate, RejectsBrokenRecords) {
  auto ok = svoa::testing::make_conv("c", {{"user", "hi"}});
  EXPECT_NO_THROW(validate(ok));
  auto empty_role = ok;
  empty_role.messages[0].role = "";
  EXPECT_THROW(validate(empty_role), ContractViolation);
  auto no_messages = ok;
  no_messages.messages.clear();
  EXPECT_THROW(validate(no_messages), ContractViolation);
  auto gap = svoa::testing::make_conv("c", {{"user", "a"}, {"user", "b"}});
  gap.messages[1].index = 5;
  EXPECT_THROW(validate(gap), ContractViolation);
}

TEST(Validate, InstanceFieldPairing) {
  ComponentInstance msg{ComponentKind::Message, "user: hi", vec({1, 0}), std::nullopt, {}};
  EXPECT_THROW(validate(msg), ContractViolation);
  msg.source_message_index = 0;
  EXPECT_NO_THROW(validate(msg));
  ComponentInstance sv{ComponentKind::SV, "user asks", vec({1, 0}), 0, std::nullopt};
  EXPECT_THROW(validate(sv), ContractViolation);
}

TEST(ComponentKindNames, RoundTrip) {
  for (ComponentKind k : kAllComponentKinds) {
    EXPECT_EQ(parse_component_kind(to_string(k)), k);
  }
  EXPECT_EQ(parse_component_kind("conversation"), ComponentKind::Conversation);
  EXPECT_THROW(parse_component_kind("verb"), ContractViolation);
}

TEST(Strings, Helpers) {
  EXPECT_EQ(normalize_whitespace("  a \t b\n c "), "a b c");
  EXPECT_TRUE(iequals("User", "uSER"));
  EXPECT_TRUE(istarts_with("User asks", "user"));
  EXPECT_EQ(to_lower("ABC"), "abc");
}

TEST(JsonPayload, PlainFencedAndProse) {
  EXPECT_EQ(parse_json_payload(R"({"a":1})")->at("a"), 1);
  EXPECT_EQ(parse_json_payload("```json\n{\"a\":2}\n```")->at("a"), 2);
  EXPECT_EQ(parse_json_payload("Sure! Here it is: {\"a\":3} Hope that helps.")->at("a"), 3);
  EXPECT_EQ(parse_json_payload("note {not json} then {\"a\":4}")->at("a"), 4);
  EXPECT_FALSE(parse_json_payload("no braces here").has_value());
  EXPECT_FALSE(parse_json_payload("[1,2,3]").has_value());
  EXPECT_FALSE(parse_json_payload("{\"a\": ").has_value());
}

TEST(Prompts, FillTemplateSinglePass) {
  EXPECT_EQ(fill_template("{{$role}}: {{$message}}", {{"role", "user"}, {"message", "{{$role}}"}}),
            "user: {{$role}}");
  EXPECT_EQ(fill_template("keep {{$unknown}}", {}), "keep {{$unknown}}");
}

TEST(Prompts, DefaultsAreEmbedded) {
  const PromptSet& p = default_prompts();
  EXPECT_NE(p.triplets.system.find("information_triplet"), std::string::npos);
  EXPECT_NE(p.adjuncts.user.find("{{$info_list}}"), std::string::npos);
  EXPECT_EQ(p.triplets.few_shot.size(), 10u);
  EXPECT_EQ(p.adjuncts.few_shot.size(), 10u);
}
