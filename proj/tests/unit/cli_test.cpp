// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "context.hpp"
#include "fixtures.hpp"
#include "sqlpref/corpus.hpp"
#include "sqlpref/preference.hpp"
#include "sqlpref/rollouts.hpp"
#include "sqlpref/util.hpp"

namespace sqlpref {
namespace {

using nlohmann::json;

const testing::FixturePair& pair_named(const std::string& name) {
    for (const auto& p : testing::fixture_pairs()) {
        if (p.name == name) return p;
    }
    throw std::runtime_error("no fixture pair " + name);
}

std::string fenced(const std::string& sql) { return "Reasoning first.\n```sql\n" + sql + "\n```\n"; }

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        testing::write_fixture_databases(db_root());
        for (const char* name : {"self_match", "entity_mismatch", "count_star_vs_count_column", "region_value_format"}) {
            items_.push_back(testing::item_for(pair_named(name)));
        }
        write_file(path("items.jsonl"), items_to_jsonl(items_));
        // sft: sample 0 is the fixture prediction, sample 1 the gold. dpo: gold only.
        std::vector<Rollout> sft;
        std::vector<Rollout> dpo;
        for (const auto& item : items_) {
            const auto& p = pair_named(item.item_id);
            sft.push_back({item.item_id, "sft", 0, fenced(p.pred), std::nullopt, std::nullopt});
            sft.push_back({item.item_id, "sft", 1, fenced(p.gold), std::nullopt, std::nullopt});
            dpo.push_back({item.item_id, "dpo", 0, fenced(p.gold), std::nullopt, std::nullopt});
        }
        for (auto& r : sft) r.extracted_sql = extract_sql(r.text);
        for (auto& r : dpo) r.extracted_sql = extract_sql(r.text);
        write_file(path("sft.jsonl"), rollouts_to_jsonl(sft));
        write_file(path("dpo.jsonl"), rollouts_to_jsonl(dpo));
    }

    std::filesystem::path db_root() const { return tmp_ / "db"; }
    std::string path(const std::string& rel) const { return (tmp_ / rel).string(); }

    int run(std::vector<std::string> args) {
        args.push_back("--log-level");
        args.push_back("off");
        return cli::run(args);
    }

    int judge(const std::string& rollouts, const std::string& tag) {
        return run({"judge", "--items", path("items.jsonl"), "--rollouts", path(rollouts), "--db-root",
                    db_root().string(), "--workers", "2", "--out", path(tag + "_verdicts.jsonl"), "--outcomes-out",
                    path(tag + "_outcomes.jsonl")});
    }

    json read_json(const std::string& rel) const { return json::parse(read_file(tmp_ / rel)); }

    testing::TempDir tmp_;
    std::vector<DatasetItem> items_;
};

TEST_F(CliTest, JudgePairsEval) {
    ASSERT_EQ(judge("sft.jsonl", "sft"), cli::kExitOk);
    const auto verdicts = load_verdicts(path("sft_verdicts.jsonl"));
    ASSERT_EQ(verdicts.size(), 8u);
    std::map<std::string, std::string> by_key;
    for (const auto& v : verdicts) by_key[rollout_key(v.item_id, v.checkpoint_tag, v.sample_index)] = v.verdict;
    EXPECT_EQ(by_key["self_match/sft/0"], "CORRECT");
    EXPECT_EQ(by_key["entity_mismatch/sft/0"], "INCORRECT");
    EXPECT_EQ(by_key["region_value_format/sft/0"], "INCORRECT");
    EXPECT_EQ(by_key["region_value_format/sft/1"], "CORRECT");

    ASSERT_EQ(run({"pairs", "--rollouts", path("sft.jsonl"), "--verdicts", path("sft_verdicts.jsonl"), "--seed", "3",
                   "--out", path("pairs.jsonl"), "--sql-out", path("sql_pairs.jsonl")}),
              cli::kExitOk);
    const auto pairs = load_pairs(path("pairs.jsonl"));
    ASSERT_EQ(pairs.size(), 2u);
    EXPECT_EQ(pairs[0].item_id, "entity_mismatch");
    EXPECT_EQ(pairs[0].chosen_index, 1);
    EXPECT_EQ(pairs[0].seed, 3u);
    EXPECT_EQ(read_jsonl(tmp_ / "sql_pairs.jsonl").size(), 2u);

    ASSERT_EQ(run({"eval", "--strategy", "pass1", "--k", "2", "--rollouts", path("sft.jsonl"), "--verdicts",
                   path("sft_verdicts.jsonl"), "--out", path("pass1.json")}),
              cli::kExitOk);
    EXPECT_DOUBLE_EQ(read_json("pass1.json")["pass_at_1_mean"].get<double>(), 0.75);

    ASSERT_EQ(run({"eval", "--strategy", "majk", "--k", "2", "--outcomes", path("sft_outcomes.jsonl"), "--out",
                   path("majk.json"), "--per-item-out", path("votes.jsonl")}),
              cli::kExitOk);
    EXPECT_DOUBLE_EQ(read_json("majk.json")["maj_at_k"].get<double>(), 0.5);
    EXPECT_EQ(read_jsonl(tmp_ / "votes.jsonl").size(), 4u);

    ASSERT_EQ(judge("dpo.jsonl", "dpo"), cli::kExitOk);
    ASSERT_EQ(run({"eval", "--strategy", "greedy", "--rollouts", path("dpo.jsonl"), "--verdicts",
                   path("dpo_verdicts.jsonl"), "--items", path("items.jsonl"), "--out", path("greedy.json")}),
              cli::kExitOk);
    EXPECT_DOUBLE_EQ(read_json("greedy.json")["ex_greedy"].get<double>(), 1.0);
    // Greedy evaluation needs exactly one rollout per item.
    EXPECT_EQ(run({"eval", "--strategy", "greedy", "--rollouts", path("sft.jsonl"), "--verdicts",
                   path("sft_verdicts.jsonl"), "--out", path("bad.json")}),
              cli::kExitValidation);
}

TEST_F(CliTest, AnalyzeWithManualLabels) {
    ASSERT_EQ(judge("sft.jsonl", "sft"), cli::kExitOk);
    ASSERT_EQ(judge("dpo.jsonl", "dpo"), cli::kExitOk);
    write_file(tmp_ / "labels.jsonl", "{\"item_id\":\"entity_mismatch\",\"checkpoint_tag\":\"sft\",\"category\":\"B1\"}\n");
    ASSERT_EQ(run({"analyze", "--before", path("sft_outcomes.jsonl"), "--after", path("dpo_outcomes.jsonl"),
                   "--items", path("items.jsonl"), "--db-root", db_root().string(), "--labels",
                   path("labels.jsonl"), "--out", path("analysis")}),
              cli::kExitOk);
    std::map<std::string, std::string> display;
    for (const auto& r : read_json("analysis/fix_rates.json")) display[r["category"]] = r["display"];
    EXPECT_EQ(display["B1"], "100.0 (1/1)");
    EXPECT_EQ(display["UNCLASSIFIED"], "100.0 (1/1)");
    EXPECT_EQ(display["F1"], "-");
    EXPECT_EQ(read_jsonl(tmp_ / "analysis/labels.jsonl").size(), 8u);
    EXPECT_TRUE(std::filesystem::exists(tmp_ / "analysis/transitions.csv"));
    EXPECT_TRUE(std::filesystem::exists(tmp_ / "analysis/fix_rates.md"));
    const auto stats = read_json("analysis/output_stats.json");
    ASSERT_EQ(stats.size(), 2u);
    EXPECT_EQ(stats[0]["checkpoint_tag"], "sft");
}

TEST_F(CliTest, PromptAndStubSynthesis) {
    ASSERT_EQ(run({"prompt", "--items", path("items.jsonl"), "--db-root", db_root().string(), "--out",
                   path("prompts.jsonl")}),
              cli::kExitOk);
    const auto prompts = read_jsonl(tmp_ / "prompts.jsonl");
    ASSERT_EQ(prompts.size(), 4u);
    EXPECT_EQ(prompts[0]["item_id"], "self_match");
    EXPECT_NE(prompts[0]["prompt"].get<std::string>().find("Table drivers, columns = ["), std::string::npos);

    ASSERT_EQ(run({"synthesize", "--items", path("items.jsonl"), "--db-root", db_root().string(), "--stub", "--k",
                   "2", "--verify", "--out", path("cot.jsonl")}),
              cli::kExitOk);
    const auto cot = read_jsonl(tmp_ / "cot.jsonl");
    ASSERT_EQ(cot.size(), 8u);
    for (const auto& line : cot) {
        EXPECT_EQ(line["status"], "ok");
        EXPECT_EQ(line["checkpoint_tag"], "synth");
    }
}

TEST_F(CliTest, SynthesisWithoutEndpointIsUsageError) {
    ::unsetenv("SQLPREF_COMPLETIONS_URL");
    EXPECT_EQ(run({"synthesize", "--items", path("items.jsonl"), "--db-root", db_root().string(), "--out",
                   path("cot.jsonl")}),
              cli::kExitValidation);
}

TEST_F(CliTest, UnreachableEndpointIsRuntimeError) {
    ::setenv("SQLPREF_COMPLETIONS_URL", "http://127.0.0.1:1/v1/chat/completions", 1);
    const int rc = run({"synthesize", "--items", path("items.jsonl"), "--db-root", db_root().string(), "--k", "1",
                        "--out", path("cot.jsonl")});
    ::unsetenv("SQLPREF_COMPLETIONS_URL");
    EXPECT_EQ(rc, cli::kExitRuntime);
}

TEST_F(CliTest, DpoMetrics) {
    write_file(tmp_ / "dumps.jsonl",
               "{\"sequence_id\":\"c\",\"tokens\":[\"a\",\"b\"],\"policy_logprobs\":[-1.0,-0.5],"
               "\"ref_logprobs\":[-2.0,-1.0]}\n"
               "{\"sequence_id\":\"r\",\"tokens\":[\"a\"],\"policy_logprobs\":[-3.0],\"ref_logprobs\":[-2.5]}\n");
    write_file(tmp_ / "pair_index.jsonl", "{\"pair_id\":\"p0\",\"chosen_id\":\"c\",\"rejected_id\":\"r\"}\n");
    ASSERT_EQ(run({"dpo-metrics", "--dumps", path("dumps.jsonl"), "--pairs", path("pair_index.jsonl"), "--beta", "0.1",
                   "--out", path("pair_results.jsonl"), "--summary-out", path("summary.json"), "--credits-out",
                   path("credits.jsonl")}),
              cli::kExitOk);
    const auto summary = read_json("summary.json");
    EXPECT_EQ(summary["n_pairs"], 1);
    EXPECT_DOUBLE_EQ(summary["classification_accuracy"].get<double>(), 1.0);
    EXPECT_NEAR(summary["self_reward"].get<double>(), (0.15 - 0.05) / 2, 1e-12);
    EXPECT_NEAR(summary["mean_loss"].get<double>(), std::log1p(std::exp(-0.2)), 1e-12);
    const auto results = read_jsonl(tmp_ / "pair_results.jsonl");
    ASSERT_EQ(results.size(), 1u);
    EXPECT_DOUBLE_EQ(results[0]["margin"].get<double>(), 2.0);
    EXPECT_EQ(read_jsonl(tmp_ / "credits.jsonl").size(), 2u);

    write_file(tmp_ / "pair_index_bad.jsonl", "{\"pair_id\":\"p0\",\"chosen_id\":\"c\",\"rejected_id\":\"zz\"}\n");
    EXPECT_EQ(run({"dpo-metrics", "--dumps", path("dumps.jsonl"), "--pairs", path("pair_index_bad.jsonl"), "--out",
                   path("x.jsonl")}),
              cli::kExitValidation);
}

TEST_F(CliTest, ReportTable) {
    const auto report = [&](const std::string& name, const std::string& tag, double greedy, double maj) {
        write_file(tmp_ / "reports" / name,
                   "{\"checkpoint_tag\":\"" + tag + "\",\"n_items\":10,\"ex_greedy\":" + std::to_string(greedy) +
                       ",\"maj_at_k\":" + std::to_string(maj) + ",\"k\":16}");
    };
    report("v_sft.json", "v-sft", 0.5, 0.55);
    report("v_dpo.json", "v-dpo", 0.52, 0.54);
    report("c_sft.json", "c-sft", 0.49, 0.56);
    report("c_dpo.json", "c-dpo", 0.55, 0.60);
    write_file(tmp_ / "reports/table.jsonl",
               "{\"setting\":\"Vanilla\",\"model\":\"M\",\"sft\":\"v_sft.json\",\"dpo\":\"v_dpo.json\"}\n"
               "{\"setting\":\"Syn CoT\",\"model\":\"M\",\"sft\":[\"c_sft.json\"],\"dpo\":\"c_dpo.json\"}\n");
    ASSERT_EQ(run({"report", "--table", path("reports/table.jsonl"), "--out", path("report_out")}), cli::kExitOk);
    const auto md = read_file(tmp_ / "report_out/table.md");
    EXPECT_NE(md.find("| Vanilla | M | 50.0 | 52.0 (+2.0) | - | - | 55.0 | 54.0 (-1.0) | - |"), std::string::npos)
        << md;
    EXPECT_NE(md.find("| Syn CoT | M | 49.0 | 55.0 (+6.0) | - | - | 56.0 | 60.0 (+4.0) | 55.0 -> 60.0 (+5.0) |"),
              std::string::npos)
        << md;
    EXPECT_NE(md.find("Maj@16 SFT"), std::string::npos);
}

TEST_F(CliTest, ConfigFileSuppliesSharedFlags) {
    write_file(tmp_ / "pipeline.cfg", "# shared settings\ndb_root = " + db_root().string() + "\nworkers = 2\n");
    EXPECT_EQ(run({"judge", "--config", path("pipeline.cfg"), "--items", path("items.jsonl"), "--rollouts",
                   path("dpo.jsonl"), "--out", path("v.jsonl")}),
              cli::kExitOk);
    EXPECT_EQ(load_verdicts(path("v.jsonl")).size(), 4u);

    write_file(tmp_ / "bad.cfg", "db_rot = /x\n");
    EXPECT_EQ(run({"judge", "--config", path("bad.cfg"), "--items", path("items.jsonl"), "--rollouts",
                   path("dpo.jsonl"), "--out", path("v.jsonl")}),
              cli::kExitValidation);
    write_file(tmp_ / "bad_value.cfg", "workers = many\n");
    EXPECT_EQ(run({"judge", "--config", path("bad_value.cfg"), "--db-root", db_root().string(), "--items",
                   path("items.jsonl"), "--rollouts", path("dpo.jsonl"), "--out", path("v.jsonl")}),
              cli::kExitValidation);
}

TEST(CliConfig, Parsing) {
    testing::TempDir tmp;
    write_file(tmp / "a.cfg", "beta = 0.2  # inline comment\n\n  seed=7\n");
    const auto v = cli::read_config(tmp / "a.cfg");
    EXPECT_EQ(v.at("beta"), "0.2");
    EXPECT_EQ(v.at("seed"), "7");
    write_file(tmp / "dup.cfg", "seed = 1\nseed = 2\n");
    EXPECT_THROW(cli::read_config(tmp / "dup.cfg"), cli::UsageError);
    write_file(tmp / "noeq.cfg", "seed 1\n");
    EXPECT_THROW(cli::read_config(tmp / "noeq.cfg"), cli::UsageError);
}

TEST(CliExitCodes, UsageErrors) {
    EXPECT_EQ(cli::run(std::vector<std::string>{}), cli::kExitValidation);
    EXPECT_EQ(cli::run(std::vector<std::string>{"--help"}), cli::kExitOk);
    EXPECT_EQ(cli::run(std::vector<std::string>{"frobnicate"}), cli::kExitValidation);
    EXPECT_EQ(cli::run(std::vector<std::string>{"judge", "--items", "/nonexistent.jsonl"}), cli::kExitValidation);
}

} // namespace
} // namespace sqlpref
