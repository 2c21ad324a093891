// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include "sqlpref/dpomath.hpp"

#include <cmath>
#include <set>

#include "sqlpref/error.hpp"
#include "sqlpref/util.hpp"

namespace sqlpref {

namespace {

void check_beta(double beta) {
    if (!(beta > 0) || !std::isfinite(beta)) {
        throw Error(ErrorCode::InvalidArgument, "beta must be a finite number > 0");
    }
}

double log_ratio(const TokenSequenceLogprobs& seq) {
    return sequence_logprob(seq, Model::Policy) - sequence_logprob(seq, Model::Ref);
}

} // namespace

void TokenSequenceLogprobs::validate() const {
    if (policy_logprobs.empty()) throw Error(ErrorCode::EmptySequence, "sequence '" + sequence_id + "' is empty");
    if (policy_logprobs.size() != ref_logprobs.size() || policy_logprobs.size() != tokens.size()) {
        throw Error(ErrorCode::LengthMismatch,
                    "sequence '" + sequence_id + "': " + std::to_string(tokens.size()) + " tokens, " +
                        std::to_string(policy_logprobs.size()) + " policy and " + std::to_string(ref_logprobs.size()) +
                        " reference logprobs");
    }
    for (std::size_t i = 0; i < policy_logprobs.size(); ++i) {
        if (!std::isfinite(policy_logprobs[i]) || !std::isfinite(ref_logprobs[i])) {
            throw Error(ErrorCode::NonFinite,
                        "sequence '" + sequence_id + "' has a non-finite logprob at token " + std::to_string(i));
        }
    }
}

double softplus(double x) {
    if (x > 30) return x + std::log1p(std::exp(-x));
    if (x < -30) return std::exp(x);
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double sequence_logprob(const TokenSequenceLogprobs& seq, Model model) {
    seq.validate();
    return pairwise_sum(model == Model::Policy ? seq.policy_logprobs : seq.ref_logprobs);
}

double mean_nll(const TokenSequenceLogprobs& seq) {
    return -sequence_logprob(seq, Model::Policy) / static_cast<double>(seq.policy_logprobs.size());
}

double implicit_reward(const TokenSequenceLogprobs& seq, double beta) {
    check_beta(beta);
    return beta * log_ratio(seq);
}

std::vector<TokenCredit> token_credits(const TokenSequenceLogprobs& seq, double beta) {
    check_beta(beta);
    seq.validate();
    std::vector<TokenCredit> out;
    out.reserve(seq.tokens.size());
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
        out.push_back({seq.tokens[i], beta * (seq.policy_logprobs[i] - seq.ref_logprobs[i])});
    }
    return out;
}

DpoPairResult dpo_loss(const DpoPairRecord& pair) {
    check_beta(pair.beta);
    const double rc = log_ratio(pair.chosen);
    const double rr = log_ratio(pair.rejected);
    DpoPairResult r;
    r.pair_id = pair.pair_id;
    r.margin = rc - rr;
    const double z = pair.beta * r.margin;
    r.loss = softplus(-z);
    r.d_loss_d_margin = -pair.beta * sigmoid(-z);
    r.reward_chosen = pair.beta * rc;
    r.reward_rejected = pair.beta * rr;
    r.classified_correct = rc > rr;
    return r;
}

double dpo_loss_with_sft(const DpoPairRecord& pair, double lambda_sft) {
    if (!(lambda_sft >= 0) || !std::isfinite(lambda_sft)) {
        throw Error(ErrorCode::InvalidArgument, "lambda_sft must be a finite number >= 0");
    }
    const double loss = dpo_loss(pair).loss;
    return lambda_sft == 0 ? loss : loss + lambda_sft * mean_nll(pair.chosen);
}

double classification_accuracy(std::span<const DpoPairRecord> pairs) {
    if (pairs.empty()) throw Error(ErrorCode::EmptySet, "no pairs to classify");
    std::size_t correct = 0;
    for (const auto& p : pairs) correct += dpo_loss(p).classified_correct;
    return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

double self_reward(std::span<const TokenSequenceLogprobs> dumps, double beta) {
    if (dumps.empty()) throw Error(ErrorCode::EmptySet, "no rollout dumps");
    std::vector<double> rewards;
    rewards.reserve(dumps.size());
    for (const auto& d : dumps) rewards.push_back(implicit_reward(d, beta));
    return pairwise_sum(rewards) / static_cast<double>(rewards.size());
}

std::vector<TokenSequenceLogprobs> parse_dumps(const std::vector<nlohmann::json>& records, const std::string& source) {
    std::vector<TokenSequenceLogprobs> out;
    out.reserve(records.size());
    std::set<std::string> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& j = records[i];
        TokenSequenceLogprobs s;
        try {
            s.sequence_id = j.at("sequence_id").is_string() ? j.at("sequence_id").get<std::string>()
                                                            : std::to_string(j.at("sequence_id").get<std::int64_t>());
            s.tokens = j.at("tokens").get<std::vector<std::string>>();
            // JSON has no NaN/inf literals; null marks a value the producer could not encode.
            for (const char* field : {"policy_logprobs", "ref_logprobs"}) {
                auto& dst = std::string_view(field) == "policy_logprobs" ? s.policy_logprobs : s.ref_logprobs;
                for (const auto& v : j.at(field)) dst.push_back(v.is_null() ? NAN : v.get<double>());
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::MalformedRecord, source + " record " + std::to_string(i) + ": " + e.what());
        }
        s.validate();
        if (!seen.insert(s.sequence_id).second) {
            throw Error(ErrorCode::DuplicateId, source + ": sequence_id '" + s.sequence_id + "' repeats");
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<TokenSequenceLogprobs> load_dumps(const std::filesystem::path& path) {
    return parse_dumps(read_jsonl(path), path.string());
}

nlohmann::ordered_json pair_result_to_json(const DpoPairResult& r, double loss_with_sft) {
    nlohmann::ordered_json j;
    j["pair_id"] = r.pair_id;
    j["margin"] = r.margin;
    j["loss"] = r.loss;
    j["reward_chosen"] = r.reward_chosen;
    j["reward_rejected"] = r.reward_rejected;
    j["classified_correct"] = r.classified_correct;
    j["d_loss_d_margin"] = r.d_loss_d_margin;
    j["loss_with_sft"] = loss_with_sft;
    return j;
}

nlohmann::ordered_json token_credits_to_json(const TokenSequenceLogprobs& seq, double beta) {
    nlohmann::ordered_json j;
    j["sequence_id"] = seq.sequence_id;
    auto tokens = nlohmann::ordered_json::array();
    for (const auto& c : token_credits(seq, beta)) {
        nlohmann::ordered_json t;
        t["token"] = c.token;
        t["credit"] = c.credit;
        tokens.push_back(std::move(t));
    }
    j["tokens"] = std::move(tokens);
    j["total"] = implicit_reward(seq, beta);
    return j;
}

} // namespace sqlpref
