// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "sqlpref/dpomath.hpp"
#include "sqlpref/error.hpp"
#include "sqlpref/util.hpp"

namespace sqlpref {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::InvalidArgument;
}

TokenSequenceLogprobs seq(const std::string& id, std::vector<double> policy, std::vector<double> ref) {
    std::vector<std::string> tokens(policy.size(), "tok");
    return {id, tokens, std::move(policy), std::move(ref)};
}

TEST(DpoMath, SoftplusAndSigmoidExtremes) {
    EXPECT_DOUBLE_EQ(softplus(0), std::log(2.0));
    EXPECT_DOUBLE_EQ(softplus(800), 800);
    EXPECT_GT(softplus(-800), 0.0 - 1e-300);
    EXPECT_TRUE(std::isfinite(softplus(-800)));
    EXPECT_DOUBLE_EQ(sigmoid(0), 0.5);
    EXPECT_DOUBLE_EQ(sigmoid(800), 1.0);
    EXPECT_DOUBLE_EQ(sigmoid(-800), 0.0);
    for (double x = -40; x <= 40; x += 0.5) EXPECT_NEAR(sigmoid(x) + sigmoid(-x), 1.0, 1e-15);
}

TEST(DpoMath, HandComputedPair) {
    // Chosen log-ratio 1.5, rejected log-ratio -0.5, margin 2.
    const DpoPairRecord p{"p", seq("c", {-1.0, -0.5}, {-2.0, -1.0}), seq("r", {-3.0}, {-2.5}), 0.1};
    const auto r = dpo_loss(p);
    EXPECT_DOUBLE_EQ(r.margin, 2.0);
    EXPECT_NEAR(r.loss, std::log1p(std::exp(-0.2)), 1e-15);
    EXPECT_NEAR(r.d_loss_d_margin, -0.1 / (1 + std::exp(0.2)), 1e-15);
    EXPECT_NEAR(r.reward_chosen, 0.15, 1e-15);
    EXPECT_NEAR(r.reward_rejected, -0.05, 1e-15);
    EXPECT_TRUE(r.classified_correct);
    EXPECT_GT(r.loss, 0.0);
    EXPECT_NEAR(dpo_loss_with_sft(p, 0.5), r.loss + 0.5 * 0.75, 1e-15);
    EXPECT_DOUBLE_EQ(mean_nll(p.chosen), 0.75);
}

TEST(DpoMath, ClassifiedCorrectMatchesRewardOrder) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> lp(-5, 0);
    for (int i = 0; i < 500; ++i) {
        auto mk = [&](const char* id) {
            const std::size_t n = 1 + rng() % 10;
            std::vector<double> a(n), b(n);
            for (std::size_t k = 0; k < n; ++k) a[k] = lp(rng), b[k] = lp(rng);
            return seq(id, a, b);
        };
        const DpoPairRecord p{"p", mk("c"), mk("r"), 0.05 + (rng() % 10) * 0.05};
        const auto r = dpo_loss(p);
        EXPECT_EQ(r.classified_correct, r.reward_chosen > r.reward_rejected);
        EXPECT_GT(r.loss, 0.0);
    }
}

TEST(DpoMath, TieIsNotCorrect) {
    const DpoPairRecord p{"p", seq("c", {-1}, {-1}), seq("r", {-2}, {-2}), 0.1};
    EXPECT_FALSE(dpo_loss(p).classified_correct);
}

TEST(DpoMath, Validation) {
    EXPECT_EQ(code_of([] { seq("a", {}, {}).validate(); }), ErrorCode::EmptySequence);
    EXPECT_EQ(code_of([] { seq("a", {-1, -2}, {-1}).validate(); }), ErrorCode::LengthMismatch);
    EXPECT_EQ(code_of([] { seq("a", {std::nan("")}, {-1}).validate(); }), ErrorCode::NonFinite);
    EXPECT_EQ(code_of([] { implicit_reward(seq("a", {-1}, {-1}), 0.0); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { classification_accuracy(std::vector<DpoPairRecord>{}); }), ErrorCode::EmptySet);
    EXPECT_EQ(code_of([] { self_reward(std::vector<TokenSequenceLogprobs>{}, 0.1); }), ErrorCode::EmptySet);
}

TEST(DpoMath, CreditsAndSelfReward) {
    const auto s = seq("s", {-0.1, -2.0, -0.3}, {-0.2, -0.5, -0.3});
    const auto credits = token_credits(s, 0.5);
    ASSERT_EQ(credits.size(), 3u);
    EXPECT_NEAR(credits[0].credit, 0.05, 1e-15);
    EXPECT_NEAR(credits[1].credit, -0.75, 1e-15);
    EXPECT_NEAR(credits[2].credit, 0.0, 1e-15);
    EXPECT_NEAR(implicit_reward(s, 0.5), -0.7, 1e-15);
    const std::vector<TokenSequenceLogprobs> dumps = {s, seq("t", {-1}, {-2})};
    EXPECT_NEAR(self_reward(dumps, 0.5), (-0.7 + 0.5) / 2, 1e-15);
    const auto j = token_credits_to_json(s, 0.5);
    EXPECT_EQ(j["sequence_id"], "s");
    EXPECT_EQ(j["tokens"].size(), 3u);
}

TEST(DpoMath, DumpLoading) {
    testing::TempDir tmp;
    write_file(tmp / "d.jsonl",
               "{\"sequence_id\":\"a\",\"tokens\":[\"SELECT\",\" 1\"],\"policy_logprobs\":[-0.1,-0.2],"
               "\"ref_logprobs\":[-0.3,-0.4]}\n");
    const auto d = load_dumps(tmp / "d.jsonl");
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].tokens[1], " 1");
    write_file(tmp / "bad.jsonl",
               "{\"sequence_id\":\"a\",\"tokens\":[\"x\"],\"policy_logprobs\":[-0.1,-0.2],\"ref_logprobs\":[-0.3]}\n");
    EXPECT_EQ(code_of([&] { load_dumps(tmp / "bad.jsonl"); }), ErrorCode::LengthMismatch);
    write_file(tmp / "dup.jsonl",
               "{\"sequence_id\":\"a\",\"tokens\":[\"x\"],\"policy_logprobs\":[-0.1],\"ref_logprobs\":[-0.3]}\n"
               "{\"sequence_id\":\"a\",\"tokens\":[\"x\"],\"policy_logprobs\":[-0.1],\"ref_logprobs\":[-0.3]}\n");
    EXPECT_EQ(code_of([&] { load_dumps(tmp / "dup.jsonl"); }), ErrorCode::DuplicateId);
}

} // namespace
} // namespace sqlpref
