// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include "sqlpref/preference.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "sqlpref/util.hpp"

namespace sqlpref {

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Unbiased draw in [0, n) by rejection; independent of the standard library's
// distribution implementation so output is stable across toolchains.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - (max % n + 1) % n;
    for (;;) {
        const std::uint64_t r = rng();
        if (r <= limit) return r % n;
    }
}

struct ItemGroup {
    std::vector<const Rollout*> correct;
    std::vector<const Rollout*> incorrect;
    bool mixed() const { return !correct.empty() && !incorrect.empty(); }
};

std::map<std::string, ItemGroup> group_rollouts(std::span<const Rollout> rollouts, const PairOptions& opts) {
    std::map<std::string, ItemGroup> groups;
    std::optional<std::string> tag;
    for (const auto& r : rollouts) {
        if (opts.checkpoint_tag && r.checkpoint_tag != *opts.checkpoint_tag) continue;
        if (!opts.checkpoint_tag) {
            if (!tag) tag = r.checkpoint_tag;
            else if (*tag != r.checkpoint_tag) {
                throw Error(ErrorCode::InvalidArgument, "rollouts mix checkpoint tags '" + *tag + "' and '" +
                                                            r.checkpoint_tag + "'; select one");
            }
        }
        if (!r.verdict) {
            throw Error(ErrorCode::UnjudgedRollout,
                        "rollout " + rollout_key(r.item_id, r.checkpoint_tag, r.sample_index) + " has no verdict");
        }
        auto& g = groups[r.item_id];
        (*r.verdict == Verdict::Correct ? g.correct : g.incorrect).push_back(&r);
    }
    auto by_index = [](const Rollout* a, const Rollout* b) { return a->sample_index < b->sample_index; };
    for (auto& [_, g] : groups) {
        std::sort(g.correct.begin(), g.correct.end(), by_index);
        std::sort(g.incorrect.begin(), g.incorrect.end(), by_index);
    }
    return groups;
}

std::vector<std::pair<const Rollout*, const Rollout*>> select_pairs(const std::string& item_id, const ItemGroup& g,
                                                                    const PairOptions& opts) {
    std::mt19937_64 rng(splitmix64(opts.seed ^ splitmix64(fnv1a(item_id))));
    const std::uint64_t total = static_cast<std::uint64_t>(g.correct.size()) * g.incorrect.size();
    const std::uint64_t want = std::min<std::uint64_t>(opts.pairs_per_item, total);
    std::vector<std::pair<const Rollout*, const Rollout*>> out;
    std::set<std::uint64_t> taken;
    while (out.size() < want) {
        const std::uint64_t k = draw_below(rng, total);
        if (!taken.insert(k).second) continue;
        out.emplace_back(g.correct[k / g.incorrect.size()], g.incorrect[k % g.incorrect.size()]);
    }
    return out;
}

PreferencePair make_pair(const std::string& item_id, const Rollout& chosen, const Rollout& rejected,
                         std::uint64_t seed) {
    return {item_id, chosen.sample_index, rejected.sample_index, chosen.text, rejected.text, seed};
}

void check_options(const PairOptions& opts) {
    if (opts.pairs_per_item == 0) throw Error(ErrorCode::InvalidArgument, "pairs_per_item must be >= 1");
}

} // namespace

std::vector<PreferencePair> build_pairs(std::span<const Rollout> rollouts, const PairOptions& opts) {
    check_options(opts);
    std::vector<PreferencePair> out;
    for (const auto& [item_id, g] : group_rollouts(rollouts, opts)) {
        if (!g.mixed()) continue;
        for (const auto& [c, r] : select_pairs(item_id, g, opts)) out.push_back(make_pair(item_id, *c, *r, opts.seed));
    }
    return out;
}

EvalPairs build_eval_pairs(std::span<const Rollout> rollouts_a, std::span<const Rollout> rollouts_b,
                           const PairOptions& opts) {
    check_options(opts);
    PairOptions b_opts = opts;
    b_opts.checkpoint_tag.reset();
    const auto groups_a = group_rollouts(rollouts_a, opts);
    const auto groups_b = group_rollouts(rollouts_b, b_opts);
    EvalPairs out;
    for (const auto& [item_id, g] : groups_a) {
        const auto it = groups_b.find(item_id);
        if (!g.mixed() || it == groups_b.end() || !it->second.mixed()) continue;
        for (const auto& [c, r] : select_pairs(item_id, g, opts)) {
            out.pairs.push_back(make_pair(item_id, *c, *r, opts.seed));
            out.sql_pairs.push_back(
                {item_id, c->sample_index, r->sample_index, c->extracted_sql, r->extracted_sql, opts.seed});
        }
    }
    return out;
}

std::string pairs_to_jsonl(std::span<const PreferencePair> pairs) {
    std::vector<nlohmann::ordered_json> lines;
    lines.reserve(pairs.size());
    for (const auto& p : pairs) {
        nlohmann::ordered_json j;
        j["item_id"] = p.item_id;
        j["chosen_index"] = p.chosen_index;
        j["rejected_index"] = p.rejected_index;
        j["chosen_text"] = p.chosen_text;
        j["rejected_text"] = p.rejected_text;
        j["seed"] = p.seed;
        lines.push_back(std::move(j));
    }
    return to_jsonl(lines);
}

std::vector<PreferencePair> load_pairs(const std::filesystem::path& path) {
    std::vector<PreferencePair> out;
    const auto records = read_jsonl(path);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& j = records[i];
        try {
            PreferencePair p;
            p.item_id = j.at("item_id").is_string() ? j.at("item_id").get<std::string>()
                                                    : std::to_string(j.at("item_id").get<std::int64_t>());
            p.chosen_index = j.at("chosen_index").get<std::int64_t>();
            p.rejected_index = j.at("rejected_index").get<std::int64_t>();
            p.chosen_text = j.at("chosen_text").get<std::string>();
            p.rejected_text = j.at("rejected_text").get<std::string>();
            p.seed = j.at("seed").get<std::uint64_t>();
            out.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::MalformedRecord, path.string() + " record " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

std::string sql_pairs_to_jsonl(std::span<const SqlPreferencePair> pairs) {
    std::vector<nlohmann::ordered_json> lines;
    lines.reserve(pairs.size());
    for (const auto& p : pairs) {
        nlohmann::ordered_json j;
        j["item_id"] = p.item_id;
        j["chosen_index"] = p.chosen_index;
        j["rejected_index"] = p.rejected_index;
        j["chosen_sql"] = p.chosen_sql ? nlohmann::ordered_json(*p.chosen_sql) : nlohmann::ordered_json(nullptr);
        j["rejected_sql"] = p.rejected_sql ? nlohmann::ordered_json(*p.rejected_sql) : nlohmann::ordered_json(nullptr);
        j["seed"] = p.seed;
        lines.push_back(std::move(j));
    }
    return to_jsonl(lines);
}

} // namespace sqlpref
