// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include <spdlog/spdlog.h>

#include "cli.hpp"
#include "context.hpp"
#include "sqlpref/synth.hpp"
#include "sqlpref/util.hpp"

namespace sqlpref::cli {

namespace {

/// Per-item schema selection: {"item_id", "tables": [...], "columns": ["t.c", ...]}.
std::map<std::string, SchemaSelection> load_linking(const std::filesystem::path& path) {
    std::map<std::string, SchemaSelection> out;
    const auto records = read_jsonl(path);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& j = records[i];
        SchemaSelection sel;
        std::string item_id;
        try {
            item_id = j.at("item_id").get<std::string>();
            sel.tables = j.at("tables").get<std::vector<std::string>>();
            for (const auto& c : j.value("columns", std::vector<std::string>{})) {
                const auto dot = c.find('.');
                if (dot == std::string::npos) {
                    throw Error(ErrorCode::MalformedRecord,
                                path.string() + " record " + std::to_string(i) + ": column '" + c + "' is not t.c");
                }
                sel.columns.push_back({c.substr(0, dot), c.substr(dot + 1)});
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::MalformedRecord, path.string() + " record " + std::to_string(i) + ": " + e.what());
        }
        if (!out.emplace(item_id, std::move(sel)).second) {
            throw Error(ErrorCode::DuplicateId, path.string() + ": item_id '" + item_id + "' repeats");
        }
    }
    return out;
}

} // namespace

void add_prompt_command(CLI::App& app, Context& ctx) {
    struct Opts {
        std::filesystem::path items;
        std::filesystem::path corpus;
        std::string format = "bird";
        std::optional<std::filesystem::path> linking;
        std::optional<std::filesystem::path> items_out;
        std::size_t value_budget = 2;
        std::size_t max_chars = 0;
        std::filesystem::path out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("prompt", "Render database prompts for items");
    auto* items = sub->add_option("--items", o->items, "items.jsonl")->check(CLI::ExistingFile);
    auto* corpus = sub->add_option("--corpus", o->corpus, "Bird/Spider JSON array")->check(CLI::ExistingFile);
    items->excludes(corpus);
    sub->add_option("--format", o->format, "corpus format")->check(CLI::IsMember({"bird", "spider"}));
    ctx.add_pipeline_option(*sub, "db_root", "--db-root", ctx.cfg.db_root, "database root")
        ->check(CLI::ExistingDirectory);
    sub->add_option("--linking", o->linking, "per-item schema selection JSONL")->check(CLI::ExistingFile);
    sub->add_option("--value-budget", o->value_budget, "example values per column");
    sub->add_option("--max-chars", o->max_chars, "prompt character budget, 0 for none");
    sub->add_option("--items-out", o->items_out, "also write the loaded items as items.jsonl");
    sub->add_option("--out", o->out, "prompts JSONL")->required();
    sub->callback([&ctx, o] {
        ctx.action = [&ctx, o] {
            require_path(ctx.cfg.db_root, "--db-root");
            if (o->items.empty() && o->corpus.empty()) throw UsageError("one of --items or --corpus is required");
            const auto items = o->items.empty() ? load_corpus(o->corpus, parse_corpus_format(o->format))
                                                : load_items_jsonl(o->items);
            const auto linking = o->linking ? load_linking(*o->linking) : std::map<std::string, SchemaSelection>{};
            CatalogCache catalogs(ctx.cfg.db_root, o->value_budget);
            std::vector<nlohmann::ordered_json> lines;
            lines.reserve(items.size());
            for (const auto& item : items) {
                const auto& full = catalogs.get(item.db_id);
                const auto sel = linking.find(item.item_id);
                const auto catalog = sel == linking.end() ? full : filter_catalog(full, sel->second);
                nlohmann::ordered_json j;
                j["item_id"] = item.item_id;
                j["db_id"] = item.db_id;
                j["prompt"] = build_database_prompt(catalog, item.question, item.evidence, {o->max_chars});
                lines.push_back(std::move(j));
            }
            write_file(o->out, to_jsonl(lines));
            if (o->items_out) write_file(*o->items_out, items_to_jsonl(items));
            spdlog::info("wrote {} prompts to {}", lines.size(), o->out.string());
            return kExitOk;
        };
    });
}

void add_judge_command(CLI::App& app, Context& ctx) {
    struct Opts {
        std::filesystem::path items;
        std::filesystem::path rollouts;
        std::filesystem::path out;
        std::optional<std::filesystem::path> outcomes_out;
        double tol = 1e-6;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("judge", "Execute rollouts and write EX/TS verdicts");
    sub->add_option("--items", o->items, "items.jsonl")->required()->check(CLI::ExistingFile);
    sub->add_option("--rollouts", o->rollouts, "rollouts JSONL")->required()->check(CLI::ExistingFile);
    ctx.add_pipeline_option(*sub, "db_root", "--db-root", ctx.cfg.db_root, "database root")
        ->check(CLI::ExistingDirectory);
    ctx.add_pipeline_option(*sub, "suite_root", "--suite-root", ctx.cfg.suite_root,
                            "test-suite root; enables TS verdicts")
        ->check(CLI::ExistingDirectory);
    ctx.add_pipeline_option(*sub, "timeout_ms", "--timeout-ms", ctx.cfg.timeout_ms, "per-statement timeout")
        ->check(CLI::PositiveNumber);
    ctx.add_pipeline_option(*sub, "workers", "--workers", ctx.cfg.workers, "worker threads")
        ->check(CLI::PositiveNumber);
    sub->add_option("--tol", o->tol, "absolute tolerance for real cells")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", o->out, "verdicts JSONL")->required();
    sub->add_option("--outcomes-out", o->outcomes_out, "execution outcomes JSONL for eval majk and analyze");
    sub->callback([&ctx, o] {
        ctx.action = [&ctx, o] {
            require_path(ctx.cfg.db_root, "--db-root");
            const auto items = index_items(load_items_jsonl(o->items));
            const auto rollouts = load_rollouts(o->rollouts);
            const Executor executor(ctx.cfg.db_root, exec_config(ctx.cfg, o->tol));

            std::map<std::string, std::vector<std::filesystem::path>> suites;
            std::vector<JudgeJob> jobs;
            jobs.reserve(rollouts.size());
            for (const auto& r : rollouts) {
                const auto it = items.find(r.item_id);
                if (it == items.end()) {
                    throw Error(ErrorCode::MissingItem, "rollout " + rollout_key(r.item_id, r.checkpoint_tag,
                                                                                 r.sample_index) +
                                                            " names an item missing from " + o->items.string());
                }
                JudgeJob job{it->second, r.extracted_sql, {}};
                if (ctx.cfg.suite_root) {
                    auto [s, inserted] = suites.try_emplace(it->second.db_id);
                    if (inserted) s->second = suite_instances(*ctx.cfg.suite_root, it->second.db_id);
                    if (s->second.empty()) {
                        throw Error(ErrorCode::InvalidArgument, "no suite instances for database '" +
                                                                    it->second.db_id + "' under " +
                                                                    ctx.cfg.suite_root->string());
                    }
                    job.suite = s->second;
                }
                jobs.push_back(std::move(job));
            }

            const auto results = executor.judge_batch(jobs);
            std::vector<VerdictRecord> verdicts;
            std::vector<OutcomeRecord> outcomes;
            std::size_t harness_errors = 0;
            for (std::size_t i = 0; i < results.size(); ++i) {
                const auto& r = rollouts[i];
                const auto& res = results[i];
                verdicts.push_back({r.item_id, r.checkpoint_tag, r.sample_index, res.verdict_label(), res.error_msg,
                                    res.elapsed_ms});
                if (!res.verdict) {
                    ++harness_errors;
                    continue;
                }
                outcomes.push_back({r.item_id, r.checkpoint_tag, r.sample_index, *res.verdict, r.extracted_sql,
                                    res.order_sensitive, res.gold, res.pred});
            }
            write_file(o->out, verdicts_to_jsonl(verdicts));
            if (o->outcomes_out) write_file(*o->outcomes_out, outcomes_to_jsonl(outcomes));
            if (harness_errors > 0) {
                spdlog::warn("{} of {} rollouts could not be judged; see the verdict file", harness_errors,
                             results.size());
            }
            spdlog::info("judged {} rollouts into {}", results.size(), o->out.string());
            return kExitOk;
        };
    });
}

void add_synthesize_command(CLI::App& app, Context& ctx) {
    struct Opts {
        std::filesystem::path items;
        std::filesystem::path out;
        SamplingParams sampling;
        std::string model = "default";
        bool verify = false;
        bool stub = false;
        std::size_t max_in_flight = 4;
        std::size_t value_budget = 2;
        std::size_t max_chars = 0;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("synthesize", "Generate CoT solutions conditioned on gold SQL");
    sub->add_option("--items", o->items, "items.jsonl")->required()->check(CLI::ExistingFile);
    ctx.add_pipeline_option(*sub, "db_root", "--db-root", ctx.cfg.db_root, "database root")
        ->check(CLI::ExistingDirectory);
    sub->add_option("--k", o->sampling.k, "completions per item")->check(CLI::PositiveNumber);
    sub->add_option("--temperature", o->sampling.temperature, "sampling temperature")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--top-k", o->sampling.top_k, "top-k sampling")->check(CLI::PositiveNumber);
    sub->add_option("--model", o->model, "model name sent to the endpoint");
    sub->add_flag("--verify", o->verify, "keep only completions whose SQL is EX-correct");
    sub->add_flag("--stub", o->stub, "use the built-in deterministic endpoint");
    sub->add_option("--max-in-flight", o->max_in_flight, "concurrent endpoint requests")
        ->check(CLI::PositiveNumber);
    ctx.add_pipeline_option(*sub, "timeout_ms", "--timeout-ms", ctx.cfg.timeout_ms, "verification timeout")
        ->check(CLI::PositiveNumber);
    ctx.add_pipeline_option(*sub, "workers", "--workers", ctx.cfg.workers, "verification workers")
        ->check(CLI::PositiveNumber);
    sub->add_option("--value-budget", o->value_budget, "example values per column");
    sub->add_option("--max-chars", o->max_chars, "prompt character budget, 0 for none");
    sub->add_option("--out", o->out, "CoT JSONL")->required();
    sub->callback([&ctx, o] {
        ctx.action = [&ctx, o] {
            require_path(ctx.cfg.db_root, "--db-root");
            const auto items = load_items_jsonl(o->items);
            CatalogCache catalogs(ctx.cfg.db_root, o->value_budget);
            std::vector<SynthesisRequest> requests;
            requests.reserve(items.size());
            for (const auto& item : items) {
                requests.push_back(build_request(item, catalogs.get(item.db_id), o->sampling, {o->max_chars}));
            }

            std::unique_ptr<CompletionEndpoint> endpoint;
            if (o->stub) {
                endpoint = std::make_unique<StubEndpoint>();
            } else {
                auto http = HttpEndpointOptions::from_env();
                if (http.url.empty()) throw UsageError("SQLPREF_COMPLETIONS_URL is not set (or pass --stub)");
                http.model = o->model;
                endpoint = std::make_unique<HttpEndpoint>(std::move(http));
            }
            const auto results = synthesize(requests, *endpoint, o->max_in_flight);

            std::optional<Executor> executor;
            if (o->verify) executor.emplace(ctx.cfg.db_root, exec_config(ctx.cfg));
            std::vector<Rollout> out;
            std::vector<std::string> status;
            std::size_t failed = 0;
            std::size_t dropped = 0;
            for (std::size_t i = 0; i < results.size(); ++i) {
                if (results[i].error) {
                    spdlog::error("{}", *results[i].error);
                    ++failed;
                    continue;
                }
                auto completions = results[i].completions;
                if (o->verify) {
                    auto kept = verify_synth(items[i], completions, *executor);
                    dropped += completions.size() - kept.size();
                    completions = std::move(kept);
                }
                std::int64_t index = 0;
                for (auto& text : completions) {
                    auto sql = extract_sql(text);
                    status.push_back(sql ? "ok" : "unextractable");
                    out.push_back({items[i].item_id, "synth", index++, std::move(text), std::move(sql), {}});
                }
            }
            std::vector<nlohmann::ordered_json> lines;
            lines.reserve(out.size());
            for (std::size_t i = 0; i < out.size(); ++i) {
                nlohmann::ordered_json j;
                j["item_id"] = out[i].item_id;
                j["checkpoint_tag"] = out[i].checkpoint_tag;
                j["sample_index"] = out[i].sample_index;
                j["text"] = out[i].text;
                j["extracted_sql"] = out[i].extracted_sql ? nlohmann::ordered_json(*out[i].extracted_sql)
                                                          : nlohmann::ordered_json(nullptr);
                j["status"] = status[i];
                lines.push_back(std::move(j));
            }
            write_file(o->out, to_jsonl(lines));
            spdlog::info("wrote {} completions to {} ({} dropped by verification)", out.size(), o->out.string(),
                         dropped);
            if (failed > 0) {
                spdlog::error("{} of {} requests failed", failed, results.size());
                return kExitRuntime;
            }
            return kExitOk;
        };
    });
}

} // namespace sqlpref::cli
