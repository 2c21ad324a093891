// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include "sqlpref/rollouts.hpp"

#include <map>
#include <set>
#include <tuple>

#include "sqlpref/sql_parser.hpp"
#include "sqlpref/util.hpp"

namespace sqlpref {

namespace {

struct Fence {
    std::string tag;  // folded first word of the info string
    std::string body;
};

std::size_t leading_backticks(std::string_view s) {
    std::size_t n = 0;
    while (n < s.size() && s[n] == '`') ++n;
    return n;
}

std::string first_word(std::string_view s) {
    s = trim(s);
    const auto end = s.find_first_of(" \t");
    return fold_case(s.substr(0, end));
}

bool sql_tag(const std::string& tag) { return tag == "sql" || tag == "sqlite"; }

// Closed fenced blocks in order. `saw_fence` reports whether any fence opened.
std::vector<Fence> fenced_blocks(std::string_view text, bool& saw_fence) {
    std::vector<Fence> out;
    saw_fence = false;
    std::optional<Fence> open;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = nl + 1;

        const std::string_view lt = trim(line);
        if (!open) {
            const std::size_t ticks = leading_backticks(lt);
            if (ticks < 3) continue;
            saw_fence = true;
            std::string_view rest = lt.substr(ticks);
            const auto close = rest.find("```");
            if (close != std::string_view::npos) {
                // One-line block: ```sql SELECT 1```
                std::string_view inner = trim(rest.substr(0, close));
                Fence f;
                const std::string w = first_word(inner);
                if (sql_tag(w)) {
                    f.tag = w;
                    inner = trim(inner.substr(std::min(inner.size(), w.size())));
                }
                f.body = std::string(inner);
                out.push_back(std::move(f));
                continue;
            }
            open = Fence{first_word(rest), {}};
            continue;
        }
        const std::size_t ticks = leading_backticks(lt);
        if (ticks >= 3 && ticks == lt.size()) {
            out.push_back(std::move(*open));
            open.reset();
            continue;
        }
        if (lt.size() >= 3 && lt.substr(lt.size() - 3) == "```") {
            // Closing fence glued to the last code line.
            std::string_view head = line.substr(0, line.rfind("```"));
            open->body.append(head);
            out.push_back(std::move(*open));
            open.reset();
            continue;
        }
        open->body.append(line);
        open->body.push_back('\n');
    }
    return out;  // an unclosed block is dropped
}

} // namespace

std::optional<std::string> extract_sql(std::string_view text) {
    bool saw_fence = false;
    const auto blocks = fenced_blocks(text, saw_fence);
    const Fence* tagged = nullptr;
    const Fence* any = nullptr;
    for (const auto& b : blocks) {
        if (trim(b.body).empty()) continue;
        any = &b;
        if (sql_tag(b.tag)) tagged = &b;
    }
    if (const Fence* pick = tagged ? tagged : any) return std::string(trim(pick->body));
    if (!saw_fence) {
        const std::string_view bare = trim(text);
        if (!bare.empty() && parse_sql(bare).ok()) return std::string(bare);
    }
    return std::nullopt;
}

std::string rollout_key(const std::string& item_id, const std::string& checkpoint_tag, std::int64_t sample_index) {
    return item_id + "/" + checkpoint_tag + "/" + std::to_string(sample_index);
}

namespace {

template <typename T>
T required(const nlohmann::json& j, const char* field, const std::string& where) {
    if (!j.is_object() || !j.contains(field)) {
        throw Error(ErrorCode::MalformedRecord, where + ": missing field '" + field + "'");
    }
    try {
        return j.at(field).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::MalformedRecord, where + ": field '" + field + "' has the wrong type");
    }
}

std::string id_field(const nlohmann::json& j, const char* field, const std::string& where) {
    if (j.is_object() && j.contains(field) && j.at(field).is_number_integer()) {
        return std::to_string(j.at(field).get<std::int64_t>());
    }
    return required<std::string>(j, field, where);
}

} // namespace

std::vector<Rollout> parse_rollouts(const std::vector<nlohmann::json>& records, const std::string& source) {
    std::vector<Rollout> out;
    out.reserve(records.size());
    std::set<std::tuple<std::string, std::string, std::int64_t>> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& j = records[i];
        const std::string where = source + " record " + std::to_string(i);
        Rollout r;
        r.item_id = id_field(j, "item_id", where);
        r.checkpoint_tag = required<std::string>(j, "checkpoint_tag", where);
        r.sample_index = required<std::int64_t>(j, "sample_index", where);
        if (r.sample_index < 0) throw Error(ErrorCode::MalformedRecord, where + ": negative sample_index");
        r.text = required<std::string>(j, "text", where);
        if (j.contains("extracted_sql")) {
            const auto& e = j.at("extracted_sql");
            if (e.is_string() && !e.get<std::string>().empty()) r.extracted_sql = e.get<std::string>();
            else if (!e.is_null() && !e.is_string()) {
                throw Error(ErrorCode::MalformedRecord, where + ": field 'extracted_sql' has the wrong type");
            }
        } else {
            r.extracted_sql = extract_sql(r.text);
        }
        if (j.contains("verdict") && !j.at("verdict").is_null()) {
            const auto v = required<std::string>(j, "verdict", where);
            r.verdict = parse_verdict(v);
            if (!r.verdict) throw Error(ErrorCode::MalformedRecord, where + ": unknown verdict '" + v + "'");
        }
        if (!seen.emplace(r.item_id, r.checkpoint_tag, r.sample_index).second) {
            throw Error(ErrorCode::DuplicateKey,
                        "rollout " + rollout_key(r.item_id, r.checkpoint_tag, r.sample_index) + " repeats");
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<Rollout> load_rollouts(const std::filesystem::path& path) {
    return parse_rollouts(read_jsonl(path), path.string());
}

std::string rollouts_to_jsonl(std::span<const Rollout> rollouts) {
    std::vector<nlohmann::ordered_json> lines;
    lines.reserve(rollouts.size());
    for (const auto& r : rollouts) {
        nlohmann::ordered_json j;
        j["item_id"] = r.item_id;
        j["checkpoint_tag"] = r.checkpoint_tag;
        j["sample_index"] = r.sample_index;
        j["text"] = r.text;
        j["extracted_sql"] = r.extracted_sql ? nlohmann::ordered_json(*r.extracted_sql) : nlohmann::ordered_json(nullptr);
        if (r.verdict) j["verdict"] = verdict_name(*r.verdict);
        lines.push_back(std::move(j));
    }
    return to_jsonl(lines);
}

std::vector<VerdictRecord> load_verdicts(const std::filesystem::path& path) {
    std::vector<VerdictRecord> out;
    const auto records = read_jsonl(path);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& j = records[i];
        const std::string where = path.string() + " record " + std::to_string(i);
        VerdictRecord v;
        v.item_id = id_field(j, "item_id", where);
        v.checkpoint_tag = j.value("checkpoint_tag", std::string());
        v.sample_index = required<std::int64_t>(j, "sample_index", where);
        v.verdict = required<std::string>(j, "verdict", where);
        if (j.contains("error_msg") && j.at("error_msg").is_string()) v.error_msg = j.at("error_msg").get<std::string>();
        v.elapsed_ms = j.value("elapsed_ms", 0.0);
        out.push_back(std::move(v));
    }
    return out;
}

std::string verdicts_to_jsonl(std::span<const VerdictRecord> verdicts) {
    std::vector<nlohmann::ordered_json> lines;
    lines.reserve(verdicts.size());
    for (const auto& v : verdicts) {
        nlohmann::ordered_json j;
        j["item_id"] = v.item_id;
        j["checkpoint_tag"] = v.checkpoint_tag;
        j["sample_index"] = v.sample_index;
        j["verdict"] = v.verdict;
        j["error_msg"] = v.error_msg;
        j["elapsed_ms"] = v.elapsed_ms;
        lines.push_back(std::move(j));
    }
    return to_jsonl(lines);
}

std::vector<OutcomeRecord> load_outcomes(const std::filesystem::path& path) {
    std::vector<OutcomeRecord> out;
    const auto records = read_jsonl(path);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& j = records[i];
        const std::string where = path.string() + " record " + std::to_string(i);
        OutcomeRecord o;
        o.item_id = id_field(j, "item_id", where);
        o.checkpoint_tag = j.value("checkpoint_tag", std::string());
        o.sample_index = required<std::int64_t>(j, "sample_index", where);
        const auto v = required<std::string>(j, "verdict", where);
        const auto verdict = parse_verdict(v);
        if (!verdict) continue;  // harness failures carry no outcome
        o.verdict = *verdict;
        if (j.contains("extracted_sql") && j.at("extracted_sql").is_string()) {
            o.extracted_sql = j.at("extracted_sql").get<std::string>();
        }
        o.order_sensitive = j.value("order_sensitive", false);
        if (j.contains("gold") && !j.at("gold").is_null()) o.gold = outcome_from_json(j.at("gold"));
        if (j.contains("pred") && !j.at("pred").is_null()) o.pred = outcome_from_json(j.at("pred"));
        out.push_back(std::move(o));
    }
    return out;
}

std::string outcomes_to_jsonl(std::span<const OutcomeRecord> outcomes) {
    std::vector<nlohmann::ordered_json> lines;
    lines.reserve(outcomes.size());
    for (const auto& o : outcomes) {
        nlohmann::ordered_json j;
        j["item_id"] = o.item_id;
        j["checkpoint_tag"] = o.checkpoint_tag;
        j["sample_index"] = o.sample_index;
        j["verdict"] = verdict_name(o.verdict);
        j["extracted_sql"] = o.extracted_sql ? nlohmann::ordered_json(*o.extracted_sql) : nlohmann::ordered_json(nullptr);
        j["order_sensitive"] = o.order_sensitive;
        j["gold"] = o.gold ? nlohmann::ordered_json(outcome_to_json(*o.gold)) : nlohmann::ordered_json(nullptr);
        j["pred"] = o.pred ? nlohmann::ordered_json(outcome_to_json(*o.pred)) : nlohmann::ordered_json(nullptr);
        lines.push_back(std::move(j));
    }
    return to_jsonl(lines);
}

std::vector<Rollout> attach_verdicts(std::vector<Rollout> rollouts, std::span<const VerdictRecord> verdicts) {
    std::map<std::tuple<std::string, std::string, std::int64_t>, const VerdictRecord*> index;
    for (const auto& v : verdicts) {
        if (!index.emplace(std::make_tuple(v.item_id, v.checkpoint_tag, v.sample_index), &v).second) {
            throw Error(ErrorCode::DuplicateKey,
                        "verdict " + rollout_key(v.item_id, v.checkpoint_tag, v.sample_index) + " repeats");
        }
    }
    for (auto& r : rollouts) {
        if (!r.extracted_sql) {
            r.verdict = Verdict::Nonexecutable;
            continue;
        }
        const auto it = index.find(std::make_tuple(r.item_id, r.checkpoint_tag, r.sample_index));
        if (it == index.end()) {
            throw Error(ErrorCode::MissingVerdict,
                        "no verdict for rollout " + rollout_key(r.item_id, r.checkpoint_tag, r.sample_index));
        }
        const VerdictRecord& v = *it->second;
        r.verdict = parse_verdict(v.verdict);
        if (!r.verdict) {
            const auto code = parse_error_code(v.verdict).value_or(ErrorCode::MalformedRecord);
            throw Error(code, "rollout " + rollout_key(r.item_id, r.checkpoint_tag, r.sample_index) +
                                  " was not judged: " + v.verdict + (v.error_msg.empty() ? "" : " (" + v.error_msg + ")"));
        }
    }
    return rollouts;
}

} // namespace sqlpref
