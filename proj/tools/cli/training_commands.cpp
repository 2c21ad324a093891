// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include <set>

#include <spdlog/spdlog.h>

#include "cli.hpp"
#include "context.hpp"
#include "sqlpref/dpomath.hpp"
#include "sqlpref/preference.hpp"
#include "sqlpref/util.hpp"

namespace sqlpref::cli {

namespace {

struct PairRef {
    std::string pair_id;
    std::string chosen_id;
    std::string rejected_id;
};

/// DPO pair index JSONL: pair_id, chosen_id, rejected_id (sequence ids in the dumps).
std::vector<PairRef> load_pair_refs(const std::filesystem::path& path) {
    std::vector<PairRef> out;
    std::set<std::string> seen;
    const auto records = read_jsonl(path);
    for (std::size_t i = 0; i < records.size(); ++i) {
        PairRef p;
        try {
            p.pair_id = records[i].at("pair_id").get<std::string>();
            p.chosen_id = records[i].at("chosen_id").get<std::string>();
            p.rejected_id = records[i].at("rejected_id").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::MalformedRecord, path.string() + " record " + std::to_string(i) + ": " + e.what());
        }
        if (!seen.insert(p.pair_id).second) {
            throw Error(ErrorCode::DuplicateId, path.string() + ": pair_id '" + p.pair_id + "' repeats");
        }
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace

void add_pairs_command(CLI::App& app, Context& ctx) {
    struct Opts {
        std::filesystem::path rollouts;
        std::optional<std::filesystem::path> verdicts;
        std::optional<std::filesystem::path> rollouts_b;
        std::optional<std::filesystem::path> verdicts_b;
        std::optional<std::string> checkpoint_tag;
        std::size_t pairs_per_item = 1;
        std::filesystem::path out;
        std::optional<std::filesystem::path> sql_out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("pairs", "Build (correct, incorrect) preference pairs from judged rollouts");
    sub->add_option("--rollouts", o->rollouts, "rollouts JSONL")->required()->check(CLI::ExistingFile);
    sub->add_option("--verdicts", o->verdicts, "judge verdicts for --rollouts")->check(CLI::ExistingFile);
    auto* rb = sub->add_option("--rollouts-b", o->rollouts_b, "second model's rollouts; pairs only items mixed in both")
                   ->check(CLI::ExistingFile);
    sub->add_option("--verdicts-b", o->verdicts_b, "judge verdicts for --rollouts-b")
        ->check(CLI::ExistingFile)
        ->needs(rb);
    sub->add_option("--checkpoint-tag", o->checkpoint_tag, "use only rollouts with this tag");
    sub->add_option("--pairs-per-item", o->pairs_per_item, "distinct pairs drawn per item")
        ->check(CLI::PositiveNumber);
    ctx.add_pipeline_option(*sub, "seed", "--seed", ctx.cfg.seed, "pair selection seed");
    sub->add_option("--out", o->out, "pairs JSONL")->required();
    sub->add_option("--sql-out", o->sql_out, "SQL-only pairs JSONL");
    sub->callback([&ctx, o] {
        ctx.action = [&ctx, o] {
            const PairOptions opts{ctx.cfg.seed, o->pairs_per_item, o->checkpoint_tag};
            const auto a = load_judged_rollouts(o->rollouts, o->verdicts);
            EvalPairs pairs;
            if (o->rollouts_b) {
                pairs = build_eval_pairs(a, load_judged_rollouts(*o->rollouts_b, o->verdicts_b), opts);
            } else {
                pairs.pairs = build_pairs(a, opts);
                if (o->sql_out) {
                    // Same selection as the text pairs: pair the run with itself.
                    pairs.sql_pairs = build_eval_pairs(a, a, opts).sql_pairs;
                }
            }
            write_file(o->out, pairs_to_jsonl(pairs.pairs));
            if (o->sql_out) write_file(*o->sql_out, sql_pairs_to_jsonl(pairs.sql_pairs));
            spdlog::info("wrote {} pairs (seed {}) to {}", pairs.pairs.size(), ctx.cfg.seed, o->out.string());
            return kExitOk;
        };
    });
}

void add_dpo_metrics_command(CLI::App& app, Context& ctx) {
    struct Opts {
        std::filesystem::path dumps;
        std::optional<std::filesystem::path> pairs;
        std::optional<std::filesystem::path> out;
        std::optional<std::filesystem::path> summary_out;
        std::optional<std::filesystem::path> credits_out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("dpo-metrics", "DPO losses, implicit rewards, and token credits from logprob dumps");
    sub->add_option("--dumps", o->dumps, "logprob dump JSONL")->required()->check(CLI::ExistingFile);
    auto* pairs = sub->add_option("--pairs", o->pairs, "pair index JSONL: pair_id, chosen_id, rejected_id")
                      ->check(CLI::ExistingFile);
    ctx.add_pipeline_option(*sub, "beta", "--beta", ctx.cfg.beta, "DPO beta")->check(CLI::PositiveNumber);
    ctx.add_pipeline_option(*sub, "lambda_sft", "--lambda-sft", ctx.cfg.lambda_sft, "weight of the SFT term")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--out", o->out, "pair results JSONL")->needs(pairs);
    sub->add_option("--summary-out", o->summary_out, "summary JSON");
    sub->add_option("--credits-out", o->credits_out, "per-token credits JSONL");
    sub->callback([&ctx, o] {
        ctx.action = [&ctx, o] {
            if (!o->out && !o->summary_out && !o->credits_out) {
                throw UsageError("nothing to write: pass --out, --summary-out or --credits-out");
            }
            if (o->pairs && !o->out) throw UsageError("--pairs requires --out");
            const auto dumps = load_dumps(o->dumps);
            const double beta = ctx.cfg.beta;

            nlohmann::ordered_json summary;
            summary["beta"] = beta;
            summary["lambda_sft"] = ctx.cfg.lambda_sft;
            summary["n_sequences"] = dumps.size();
            summary["self_reward"] = dumps.empty() ? nlohmann::ordered_json(nullptr)
                                                   : nlohmann::ordered_json(self_reward(dumps, beta));

            if (o->pairs) {
                std::map<std::string, const TokenSequenceLogprobs*> by_id;
                for (const auto& d : dumps) by_id.emplace(d.sequence_id, &d);
                const auto lookup = [&](const std::string& id, const std::string& pair_id) {
                    const auto it = by_id.find(id);
                    if (it == by_id.end()) {
                        throw Error(ErrorCode::MalformedRecord,
                                    "pair '" + pair_id + "' names sequence '" + id + "' missing from the dumps");
                    }
                    return *it->second;
                };
                std::vector<DpoPairRecord> records;
                for (const auto& ref : load_pair_refs(*o->pairs)) {
                    records.push_back(
                        {ref.pair_id, lookup(ref.chosen_id, ref.pair_id), lookup(ref.rejected_id, ref.pair_id), beta});
                }
                std::vector<nlohmann::ordered_json> lines;
                std::vector<double> losses;
                std::vector<double> sft_losses;
                for (const auto& rec : records) {
                    const auto r = dpo_loss(rec);
                    const double with_sft = dpo_loss_with_sft(rec, ctx.cfg.lambda_sft);
                    losses.push_back(r.loss);
                    sft_losses.push_back(with_sft);
                    lines.push_back(pair_result_to_json(r, with_sft));
                }
                write_file(*o->out, to_jsonl(lines));
                summary["n_pairs"] = records.size();
                if (!records.empty()) {
                    const double n = static_cast<double>(records.size());
                    summary["mean_loss"] = pairwise_sum(losses) / n;
                    summary["mean_loss_with_sft"] = pairwise_sum(sft_losses) / n;
                    summary["classification_accuracy"] = classification_accuracy(records);
                }
            }
            if (o->credits_out) {
                std::vector<nlohmann::ordered_json> lines;
                lines.reserve(dumps.size());
                for (const auto& d : dumps) lines.push_back(token_credits_to_json(d, beta));
                write_file(*o->credits_out, to_jsonl(lines));
            }
            if (o->summary_out) write_file(*o->summary_out, summary.dump(2) + "\n");
            return kExitOk;
        };
    });
}

} // namespace sqlpref::cli
