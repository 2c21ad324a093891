// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include "sqlpref/evalstrat.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "sqlpref/util.hpp"

namespace sqlpref {

namespace {

Verdict judged(const Rollout& r) {
    if (!r.verdict) {
        throw Error(ErrorCode::UnjudgedRollout,
                    "rollout " + rollout_key(r.item_id, r.checkpoint_tag, r.sample_index) + " has no verdict");
    }
    return *r.verdict;
}

double ratio(std::size_t num, std::size_t den) { return static_cast<double>(num) / static_cast<double>(den); }

bool rows_less(const std::vector<Row>& a, const std::vector<Row>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), row_less);
}

} // namespace

double greedy_ex(std::span<const Rollout> greedy, std::span<const std::string> expected_items) {
    std::map<std::string, Verdict> by_item;
    for (const auto& r : greedy) {
        if (!by_item.emplace(r.item_id, judged(r)).second) {
            throw Error(ErrorCode::ExtraSample, "item " + r.item_id + " has more than one greedy rollout");
        }
    }
    if (!expected_items.empty()) {
        const std::set<std::string> expected(expected_items.begin(), expected_items.end());
        for (const auto& id : expected) {
            if (!by_item.count(id)) throw Error(ErrorCode::MissingItem, "no greedy rollout for item " + id);
        }
        for (const auto& [id, _] : by_item) {
            if (!expected.count(id)) throw Error(ErrorCode::ExtraSample, "rollout for unlisted item " + id);
        }
    }
    if (by_item.empty()) throw Error(ErrorCode::EmptyEval, "no items to evaluate");
    std::size_t correct = 0;
    for (const auto& [_, v] : by_item) correct += v == Verdict::Correct;
    return ratio(correct, by_item.size());
}

double pass_at_1(std::span<const Rollout> samples, std::size_t n_repeats) {
    if (n_repeats == 0) throw Error(ErrorCode::InvalidArgument, "n_repeats must be >= 1");
    std::map<std::string, std::vector<const Rollout*>> by_item;
    for (const auto& r : samples) {
        judged(r);
        by_item[r.item_id].push_back(&r);
    }
    if (by_item.empty()) throw Error(ErrorCode::EmptyEval, "no items to evaluate");
    std::vector<std::size_t> correct_at(n_repeats, 0);
    for (auto& [id, rs] : by_item) {
        if (rs.size() != n_repeats) {
            throw Error(ErrorCode::RaggedSamples, "item " + id + " has " + std::to_string(rs.size()) +
                                                      " samples, expected " + std::to_string(n_repeats));
        }
        std::sort(rs.begin(), rs.end(), [](auto* a, auto* b) { return a->sample_index < b->sample_index; });
        for (std::size_t r = 0; r < n_repeats; ++r) correct_at[r] += *rs[r]->verdict == Verdict::Correct;
    }
    std::vector<double> per_repeat;
    per_repeat.reserve(n_repeats);
    for (std::size_t c : correct_at) per_repeat.push_back(ratio(c, by_item.size()));
    return pairwise_sum(per_repeat) / static_cast<double>(n_repeats);
}

std::vector<Row> canonical_rows(const ExecutionOutcome& outcome, bool order_sensitive, double tol) {
    std::vector<Row> rows;
    rows.reserve(outcome.rows.size());
    for (const auto& r : outcome.rows) {
        Row snapped;
        snapped.reserve(r.size());
        for (const auto& c : r) snapped.push_back(snap_to_grid(c, tol));
        rows.push_back(std::move(snapped));
    }
    if (!order_sensitive) std::sort(rows.begin(), rows.end(), row_less);
    return rows;
}

MajResult maj_at_k(std::span<const OutcomeRecord> samples, std::size_t k, double tol) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    std::map<std::string, std::vector<const OutcomeRecord*>> by_item;
    for (const auto& s : samples) by_item[s.item_id].push_back(&s);
    if (by_item.empty()) throw Error(ErrorCode::EmptyEval, "no items to evaluate");

    MajResult result;
    std::size_t correct = 0;
    for (auto& [id, recs] : by_item) {
        if (recs.size() < k) {
            throw Error(ErrorCode::InsufficientSamples,
                        "item " + id + " has " + std::to_string(recs.size()) + " samples, need " + std::to_string(k));
        }
        std::sort(recs.begin(), recs.end(), [](auto* a, auto* b) { return a->sample_index < b->sample_index; });
        recs.resize(k);

        struct Group {
            std::size_t size = 0;
            std::size_t first = 0;  // position of the lowest-index member
        };
        std::map<std::vector<Row>, Group, decltype(&rows_less)> groups(&rows_less);
        for (std::size_t i = 0; i < k; ++i) {
            const OutcomeRecord& s = *recs[i];
            if (s.verdict == Verdict::Nonexecutable) continue;
            if (!s.pred) {
                throw Error(ErrorCode::MissingOutcome,
                            "no execution outcome for " + rollout_key(s.item_id, s.checkpoint_tag, s.sample_index));
            }
            if (s.pred->status != ExecStatus::Rows) continue;
            // Width is part of the key so empty results of different arity stay apart.
            auto key = canonical_rows(*s.pred, s.order_sensitive, tol);
            key.insert(key.begin(), Row{Cell(static_cast<std::int64_t>(s.pred->arity()))});
            auto [it, inserted] = groups.try_emplace(std::move(key), Group{0, i});
            ++it->second.size;
        }
        MajVote vote;
        vote.item_id = id;
        std::size_t chosen = 0;
        const Group* best = nullptr;
        for (const auto& [_, g] : groups) {
            if (!best || g.size > best->size || (g.size == best->size && g.first < best->first)) best = &g;
        }
        if (best) {
            chosen = best->first;
            vote.group_size = best->size;
        }
        vote.chosen_index = recs[chosen]->sample_index;
        vote.correct = recs[chosen]->verdict == Verdict::Correct;
        correct += vote.correct;
        result.per_item.push_back(std::move(vote));
    }
    result.score = ratio(correct, by_item.size());
    return result;
}

nlohmann::ordered_json eval_report_to_json(const EvalReport& r) {
    auto opt = [](const auto& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr); };
    nlohmann::ordered_json j;
    j["checkpoint_tag"] = r.checkpoint_tag;
    j["n_items"] = r.n_items;
    j["ex_greedy"] = opt(r.ex_greedy);
    j["pass_at_1_mean"] = opt(r.pass_at_1_mean);
    j["maj_at_k"] = opt(r.maj_at_k);
    j["k"] = opt(r.k);
    return j;
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
    auto opt_double = [&](const char* f) -> std::optional<double> {
        if (!j.contains(f) || j.at(f).is_null()) return std::nullopt;
        return j.at(f).get<double>();
    };
    try {
        EvalReport r;
        r.checkpoint_tag = j.at("checkpoint_tag").get<std::string>();
        r.n_items = j.at("n_items").get<std::size_t>();
        r.ex_greedy = opt_double("ex_greedy");
        r.pass_at_1_mean = opt_double("pass_at_1_mean");
        r.maj_at_k = opt_double("maj_at_k");
        if (j.contains("k") && !j.at("k").is_null()) r.k = j.at("k").get<std::size_t>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedRecord, std::string("eval report: ") + e.what());
    }
}

} // namespace sqlpref
