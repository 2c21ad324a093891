// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <spdlog/spdlog.h>

#include "cli.hpp"
#include "context.hpp"
#include "sqlpref/analysis.hpp"
#include "sqlpref/evalstrat.hpp"
#include "sqlpref/util.hpp"

namespace sqlpref::cli {

namespace {

std::size_t distinct_items(const auto& records) {
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.item_id);
    return ids.size();
}

std::optional<double> opt_number(const nlohmann::ordered_json& j) {
    if (j.is_number()) return j.get<double>();
    return std::nullopt;
}

} // namespace

void add_eval_command(CLI::App& app, Context& ctx) {
    struct Opts {
        std::string strategy;
        std::optional<std::filesystem::path> rollouts;
        std::optional<std::filesystem::path> verdicts;
        std::optional<std::filesystem::path> outcomes;
        std::optional<std::filesystem::path> items;
        std::optional<std::string> checkpoint_tag;
        double tol = 1e-6;
        std::filesystem::path out;
        std::optional<std::filesystem::path> per_item_out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("eval", "Greedy EX, Pass@1, or Maj@K over judged rollouts");
    sub->add_option("--strategy", o->strategy, "greedy, pass1, or majk")
        ->required()
        ->check(CLI::IsMember({"greedy", "pass1", "majk"}));
    ctx.add_pipeline_option(*sub, "k_majority", "--k", ctx.cfg.k_majority, "samples per item (pass1 repeats, majk K)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--rollouts", o->rollouts, "rollouts JSONL (greedy, pass1)")->check(CLI::ExistingFile);
    sub->add_option("--verdicts", o->verdicts, "judge verdicts for --rollouts")->check(CLI::ExistingFile);
    sub->add_option("--outcomes", o->outcomes, "judge outcomes JSONL (majk)")->check(CLI::ExistingFile);
    sub->add_option("--items", o->items, "items.jsonl; greedy requires every listed item")->check(CLI::ExistingFile);
    sub->add_option("--checkpoint-tag", o->checkpoint_tag, "use only records with this tag");
    sub->add_option("--tol", o->tol, "real tolerance for majk grouping")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", o->out, "report JSON")->required();
    sub->add_option("--per-item-out", o->per_item_out, "majk per-item votes JSONL");
    sub->callback([&ctx, o] {
        ctx.action = [&ctx, o] {
            EvalReport report;
            if (o->strategy == "majk") {
                if (!o->outcomes) throw UsageError("--strategy majk requires --outcomes");
                auto outcomes = load_outcomes(*o->outcomes);
                report.checkpoint_tag = select_checkpoint(outcomes, o->checkpoint_tag);
                report.n_items = distinct_items(outcomes);
                const auto maj = maj_at_k(outcomes, ctx.cfg.k_majority, o->tol);
                report.maj_at_k = maj.score;
                report.k = ctx.cfg.k_majority;
                if (o->per_item_out) {
                    std::vector<nlohmann::ordered_json> lines;
                    for (const auto& v : maj.per_item) {
                        nlohmann::ordered_json j;
                        j["item_id"] = v.item_id;
                        j["chosen_index"] = v.chosen_index;
                        j["group_size"] = v.group_size;
                        j["correct"] = v.correct;
                        lines.push_back(std::move(j));
                    }
                    write_file(*o->per_item_out, to_jsonl(lines));
                }
            } else {
                if (!o->rollouts) throw UsageError("--strategy " + o->strategy + " requires --rollouts");
                auto rollouts = load_judged_rollouts(*o->rollouts, o->verdicts);
                report.checkpoint_tag = select_checkpoint(rollouts, o->checkpoint_tag);
                report.n_items = distinct_items(rollouts);
                if (o->strategy == "greedy") {
                    std::vector<std::string> expected;
                    if (o->items) {
                        for (const auto& item : load_items_jsonl(*o->items)) expected.push_back(item.item_id);
                    }
                    report.ex_greedy = greedy_ex(rollouts, expected);
                } else {
                    report.pass_at_1_mean = pass_at_1(rollouts, ctx.cfg.k_majority);
                    report.k = ctx.cfg.k_majority;
                }
            }
            write_file(o->out, eval_report_to_json(report).dump(2) + "\n");
            return kExitOk;
        };
    });
}

void add_analyze_command(CLI::App& app, Context& ctx) {
    struct Opts {
        std::filesystem::path before;
        std::filesystem::path after;
        std::filesystem::path items;
        std::optional<std::filesystem::path> labels;
        double tol = 1e-6;
        std::filesystem::path out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("analyze", "Error taxonomy, fix rates, transitions, and output statistics");
    sub->add_option("--before", o->before, "judge outcomes of the earlier checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--after", o->after, "judge outcomes of the later checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--items", o->items, "items.jsonl")->required()->check(CLI::ExistingFile);
    ctx.add_pipeline_option(*sub, "db_root", "--db-root", ctx.cfg.db_root, "database root")
        ->check(CLI::ExistingDirectory);
    sub->add_option("--labels", o->labels, "manual labels JSONL")->check(CLI::ExistingFile);
    sub->add_option("--tol", o->tol, "real tolerance for column matching")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", o->out, "report directory")->required();
    sub->callback([&ctx, o] {
        ctx.action = [&ctx, o] {
            require_path(ctx.cfg.db_root, "--db-root");
            const auto items = index_items(load_items_jsonl(o->items));
            CatalogCache catalogs(ctx.cfg.db_root, 0);
            const auto manual = o->labels ? ingest_manual_labels(*o->labels) : std::map<LabelKey, ErrorCategory>{};

            std::vector<LabelRecord> all_labels;
            nlohmann::ordered_json stats = nlohmann::ordered_json::array();
            std::array<ItemLabels, 2> per_checkpoint;
            const std::array<const std::filesystem::path*, 2> inputs = {&o->before, &o->after};
            for (std::size_t side = 0; side < 2; ++side) {
                auto outcomes = load_outcomes(*inputs[side]);
                const std::string tag = select_checkpoint(outcomes, std::nullopt);
                // An item is labeled by its lowest-index sample.
                std::map<std::string, const OutcomeRecord*> first;
                for (const auto& r : outcomes) {
                    auto& slot = first[r.item_id];
                    if (slot == nullptr || r.sample_index < slot->sample_index) slot = &r;
                }
                std::vector<LabelRecord> labels;
                for (const auto& [item_id, rec] : first) {
                    const auto it = items.find(item_id);
                    if (it == items.end()) {
                        throw Error(ErrorCode::MissingItem, "outcome for unknown item '" + item_id + "'");
                    }
                    labels.push_back({item_id, tag, auto_label(*rec, catalogs.get(it->second.db_id), o->tol)});
                }
                const auto overridden = apply_manual_labels(labels, manual);
                spdlog::info("checkpoint '{}': {} items, {} manual labels applied", tag, labels.size(), overridden);
                for (const auto& l : labels) per_checkpoint[side][l.item_id] = l.label.category;
                all_labels.insert(all_labels.end(), labels.begin(), labels.end());

                std::vector<Rollout> rollouts;
                rollouts.reserve(outcomes.size());
                for (const auto& r : outcomes) {
                    rollouts.push_back({r.item_id, r.checkpoint_tag, r.sample_index, {}, r.extracted_sql, r.verdict});
                }
                stats.push_back(output_stats_to_json(output_stats(rollouts)));
            }

            const auto rates = fix_rates(per_checkpoint[0], per_checkpoint[1]);
            nlohmann::ordered_json rates_json = nlohmann::ordered_json::array();
            for (const auto& r : rates) {
                nlohmann::ordered_json j;
                j["category"] = category_name(r.category);
                j["fixed"] = r.fixed;
                j["total"] = r.total;
                j["rate"] = r.rate ? nlohmann::ordered_json(*r.rate) : nlohmann::ordered_json(nullptr);
                j["display"] = format_fix_rate(r.fixed, r.total);
                rates_json.push_back(std::move(j));
            }
            write_file(o->out / "labels.jsonl", labels_to_jsonl(all_labels));
            write_file(o->out / "fix_rates.md", fix_rate_table_markdown(rates));
            write_file(o->out / "fix_rates.json", rates_json.dump(2) + "\n");
            write_file(o->out / "transitions.csv",
                       transition_matrix_csv(transition_matrix(per_checkpoint[0], per_checkpoint[1])));
            write_file(o->out / "output_stats.json", stats.dump(2) + "\n");
            spdlog::info("wrote analysis to {}", o->out.string());
            return kExitOk;
        };
    });
}

namespace {

struct TableRow {
    std::string setting;
    std::string model;
    EvalReport sft;
    EvalReport dpo;
};

std::string pct(std::optional<double> v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *v);
    return buf;
}

std::string signed_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+.1f", 100.0 * v);
    return buf;
}

std::string with_delta(std::optional<double> sft, std::optional<double> dpo) {
    if (!dpo) return "-";
    if (!sft) return pct(dpo);
    return pct(dpo) + " (" + signed_pct(*dpo - *sft) + ")";
}

std::optional<double> best_of(const EvalReport& r) {
    std::optional<double> best;
    for (const auto& v : {r.ex_greedy, r.pass_at_1_mean, r.maj_at_k}) {
        if (v && (!best || *v > *best)) best = v;
    }
    return best;
}

/// Merges eval reports of one checkpoint; each file contributes its strategies.
EvalReport merge_reports(const std::vector<std::filesystem::path>& paths) {
    EvalReport merged;
    for (const auto& p : paths) {
        const auto r = eval_report_from_json(nlohmann::json::parse(read_file(p)));
        if (!merged.checkpoint_tag.empty() && r.checkpoint_tag != merged.checkpoint_tag) {
            throw Error(ErrorCode::InvalidArgument, p.string() + " reports checkpoint '" + r.checkpoint_tag +
                                                        "', expected '" + merged.checkpoint_tag + "'");
        }
        merged.checkpoint_tag = r.checkpoint_tag;
        merged.n_items = std::max(merged.n_items, r.n_items);
        if (r.ex_greedy) merged.ex_greedy = r.ex_greedy;
        if (r.pass_at_1_mean) merged.pass_at_1_mean = r.pass_at_1_mean;
        if (r.maj_at_k) {
            merged.maj_at_k = r.maj_at_k;
            merged.k = r.k;
        }
    }
    return merged;
}

std::vector<std::filesystem::path> resolve_paths(const nlohmann::json& j, const std::string& key,
                                                 const std::filesystem::path& base) {
    std::vector<std::filesystem::path> out;
    const auto& v = j.at(key);
    const auto add = [&](const std::string& s) {
        std::filesystem::path p(s);
        out.push_back(p.is_absolute() ? p : base / p);
    };
    if (v.is_string()) {
        add(v.get<std::string>());
    } else {
        for (const auto& s : v) add(s.get<std::string>());
    }
    return out;
}

} // namespace

void add_report_command(CLI::App& app, Context& ctx) {
    struct Opts {
        std::optional<std::filesystem::path> table;
        std::optional<std::filesystem::path> series;
        std::optional<std::string> baseline;
        std::filesystem::path out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("report", "SFT/DPO comparison table and reward-vs-accuracy series");
    sub->add_option("--table", o->table,
                    "JSONL rows: setting, model, sft, dpo (eval report paths, a string or a list)")
        ->check(CLI::ExistingFile);
    sub->add_option("--series", o->series, "JSONL points: epoch, dpo_summary, eval_report")->check(CLI::ExistingFile);
    sub->add_option("--baseline-setting", o->baseline, "setting whose SFT row anchors the EX delta (default: first)");
    sub->add_option("--out", o->out, "report directory")->required();
    sub->callback([&ctx, o] {
        ctx.action = [o] {
            if (!o->table && !o->series) throw UsageError("pass --table and/or --series");
            nlohmann::ordered_json report;
            if (o->table) {
                const auto base = o->table->parent_path();
                std::vector<TableRow> rows;
                const auto records = read_jsonl(*o->table);
                for (std::size_t i = 0; i < records.size(); ++i) {
                    const auto& j = records[i];
                    try {
                        rows.push_back({j.at("setting").get<std::string>(), j.at("model").get<std::string>(),
                                        merge_reports(resolve_paths(j, "sft", base)),
                                        merge_reports(resolve_paths(j, "dpo", base))});
                    } catch (const nlohmann::json::exception& e) {
                        throw Error(ErrorCode::MalformedRecord,
                                    o->table->string() + " record " + std::to_string(i) + ": " + e.what());
                    }
                }
                const std::string baseline = o->baseline.value_or(rows.empty() ? "" : rows.front().setting);
                std::string k_label = "Maj@K";
                for (const auto& r : rows) {
                    if (r.sft.k && r.sft.maj_at_k) k_label = "Maj@" + std::to_string(*r.sft.k);
                }
                std::string md = "| Setting | Model | Greedy SFT | Greedy DPO | Pass@1 SFT | Pass@1 DPO | " + k_label +
                                 " SFT | " + k_label + " DPO | ΔEX |\n";
                md += "|---|---|---|---|---|---|---|---|---|\n";
                auto rows_json = nlohmann::ordered_json::array();
                for (const auto& r : rows) {
                    std::string delta = "-";
                    nlohmann::ordered_json delta_json = nullptr;
                    if (r.setting != baseline) {
                        for (const auto& b : rows) {
                            if (b.setting != baseline || b.model != r.model) continue;
                            const auto from = best_of(b.sft);
                            const auto to = best_of(r.dpo);
                            if (from && to) {
                                delta = pct(from) + " -> " + pct(to) + " (" + signed_pct(*to - *from) + ")";
                                delta_json = *to - *from;
                            }
                            break;
                        }
                    }
                    md += "| " + r.setting + " | " + r.model + " | " + pct(r.sft.ex_greedy) + " | " +
                          with_delta(r.sft.ex_greedy, r.dpo.ex_greedy) + " | " + pct(r.sft.pass_at_1_mean) + " | " +
                          with_delta(r.sft.pass_at_1_mean, r.dpo.pass_at_1_mean) + " | " + pct(r.sft.maj_at_k) +
                          " | " + with_delta(r.sft.maj_at_k, r.dpo.maj_at_k) + " | " + delta + " |\n";
                    nlohmann::ordered_json row;
                    row["setting"] = r.setting;
                    row["model"] = r.model;
                    row["sft"] = eval_report_to_json(r.sft);
                    row["dpo"] = eval_report_to_json(r.dpo);
                    row["delta_ex"] = delta_json;
                    rows_json.push_back(std::move(row));
                }
                write_file(o->out / "table.md", md);
                report["table"] = std::move(rows_json);
            }
            if (o->series) {
                const auto base = o->series->parent_path();
                struct Point {
                    double epoch;
                    std::optional<double> self_reward;
                    std::optional<double> pass_at_1;
                };
                std::vector<Point> points;
                const auto records = read_jsonl(*o->series);
                for (std::size_t i = 0; i < records.size(); ++i) {
                    const auto& j = records[i];
                    try {
                        Point p{j.at("epoch").get<double>(), std::nullopt, std::nullopt};
                        const auto summary =
                            nlohmann::ordered_json::parse(read_file(resolve_paths(j, "dpo_summary", base).at(0)));
                        p.self_reward = opt_number(summary.value("self_reward", nlohmann::ordered_json()));
                        p.pass_at_1 = merge_reports(resolve_paths(j, "eval_report", base)).pass_at_1_mean;
                        points.push_back(p);
                    } catch (const nlohmann::json::exception& e) {
                        throw Error(ErrorCode::MalformedRecord,
                                    o->series->string() + " record " + std::to_string(i) + ": " + e.what());
                    }
                }
                std::stable_sort(points.begin(), points.end(),
                                 [](const Point& a, const Point& b) { return a.epoch < b.epoch; });
                std::string csv = "epoch,self_reward,pass_at_1\n";
                auto series_json = nlohmann::ordered_json::array();
                for (const auto& p : points) {
                    csv += format_real(p.epoch) + "," + (p.self_reward ? format_real(*p.self_reward) : "") + "," +
                           (p.pass_at_1 ? format_real(*p.pass_at_1) : "") + "\n";
                    nlohmann::ordered_json j;
                    j["epoch"] = p.epoch;
                    j["self_reward"] = p.self_reward ? nlohmann::ordered_json(*p.self_reward) : nlohmann::ordered_json(nullptr);
                    j["pass_at_1"] = p.pass_at_1 ? nlohmann::ordered_json(*p.pass_at_1) : nlohmann::ordered_json(nullptr);
                    series_json.push_back(std::move(j));
                }
                write_file(o->out / "series.csv", csv);
                report["series"] = std::move(series_json);
            }
            write_file(o->out / "report.json", report.dump(2) + "\n");
            return kExitOk;
        };
    });
}

} // namespace sqlpref::cli
