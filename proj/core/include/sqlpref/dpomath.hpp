// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sqlpref {

enum class Model { Policy, Ref };

/// Per-token log-probabilities of one sequence under the policy and the reference
/// model, which share a tokenizer.
struct TokenSequenceLogprobs {
    std::string sequence_id;
    std::vector<std::string> tokens;
    std::vector<double> policy_logprobs;
    std::vector<double> ref_logprobs;

    /// Throws EMPTY_SEQUENCE, LENGTH_MISMATCH, NON_FINITE.
    void validate() const;
};

struct DpoPairRecord {
    std::string pair_id;
    TokenSequenceLogprobs chosen;
    TokenSequenceLogprobs rejected;
    double beta = 0.1;
};

struct DpoPairResult {
    std::string pair_id;
    double margin = 0;  // log-ratio of chosen minus log-ratio of rejected
    double loss = 0;
    double d_loss_d_margin = 0;
    double reward_chosen = 0;
    double reward_rejected = 0;
    bool classified_correct = false;
};

struct TokenCredit {
    std::string token;
    double credit = 0;
};

/// log(1 + e^x), branching at |x| > 30.
double softplus(double x);
/// 1 / (1 + e^-x) without overflow.
double sigmoid(double x);

/// Sum of one model's token log-probabilities.
double sequence_logprob(const TokenSequenceLogprobs& seq, Model model);
/// -sequence_logprob(seq, Policy) / length.
double mean_nll(const TokenSequenceLogprobs& seq);

/// beta * (policy sum - ref sum). Throws INVALID_ARGUMENT unless beta > 0.
double implicit_reward(const TokenSequenceLogprobs& seq, double beta);
/// credit_t = beta * (policy_t - ref_t); the credits add up to implicit_reward.
std::vector<TokenCredit> token_credits(const TokenSequenceLogprobs& seq, double beta);

/// loss = softplus(-beta * margin); d_loss/d_margin = -beta * sigmoid(-beta * margin).
/// classified_correct depends only on the sign of the margin (ties are wrong).
DpoPairResult dpo_loss(const DpoPairRecord& pair);
/// dpo_loss + lambda_sft * mean_nll(chosen).
double dpo_loss_with_sft(const DpoPairRecord& pair, double lambda_sft);

/// Fraction of pairs whose chosen implicit reward beats the rejected one. Throws EMPTY_SET.
double classification_accuracy(std::span<const DpoPairRecord> pairs);

/// Mean implicit reward over one checkpoint's sampled responses. Throws EMPTY_SET.
double self_reward(std::span<const TokenSequenceLogprobs> dumps, double beta);

/// Logprob dump JSONL: sequence_id, tokens, policy_logprobs, ref_logprobs.
/// Every record is validated. Throws MALFORMED_RECORD, DUPLICATE_ID and the
/// validation errors above.
std::vector<TokenSequenceLogprobs> load_dumps(const std::filesystem::path& path);
std::vector<TokenSequenceLogprobs> parse_dumps(const std::vector<nlohmann::json>& records, const std::string& source);

/// pair_id, margin, loss, reward_chosen, reward_rejected, classified_correct,
/// d_loss_d_margin, loss_with_sft.
nlohmann::ordered_json pair_result_to_json(const DpoPairResult& r, double loss_with_sft);

/// Heat-map rows: {"sequence_id", "tokens": [{"token", "credit"}, ...], "total"}.
nlohmann::ordered_json token_credits_to_json(const TokenSequenceLogprobs& seq, double beta);

} // namespace sqlpref
