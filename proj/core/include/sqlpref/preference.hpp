// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqlpref/rollouts.hpp"

namespace sqlpref {

/// One DPO training record: a CORRECT and a non-CORRECT sample of the same item.
struct PreferencePair {
    std::string item_id;
    std::int64_t chosen_index = 0;
    std::int64_t rejected_index = 0;
    std::string chosen_text;
    std::string rejected_text;
    std::uint64_t seed = 0;

    friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

/// SQL-only view of a pair, for scoring a model trained without CoT.
struct SqlPreferencePair {
    std::string item_id;
    std::int64_t chosen_index = 0;
    std::int64_t rejected_index = 0;
    std::optional<std::string> chosen_sql;
    std::optional<std::string> rejected_sql;
    std::uint64_t seed = 0;
};

struct PairOptions {
    std::uint64_t seed = 0;
    /// Distinct (chosen, rejected) combinations drawn per item, capped by availability.
    std::size_t pairs_per_item = 1;
    /// Only rollouts with this tag are used. Without a filter, mixed tags are rejected.
    std::optional<std::string> checkpoint_tag;
};

/// One pair per item that has at least one CORRECT and one non-CORRECT rollout,
/// drawn uniformly from CORRECT x non-CORRECT with a generator seeded from
/// (seed, item_id). Output is sorted by item_id. Throws UNJUDGED_ROLLOUT and
/// INVALID_ARGUMENT (mixed checkpoint tags, pairs_per_item == 0).
std::vector<PreferencePair> build_pairs(std::span<const Rollout> rollouts, const PairOptions& opts);

struct EvalPairs {
    std::vector<PreferencePair> pairs;        // texts from model A
    std::vector<SqlPreferencePair> sql_pairs; // same selection, SQL only
};

/// Pairs for items where both models have mixed verdicts; content from model A.
EvalPairs build_eval_pairs(std::span<const Rollout> rollouts_a, std::span<const Rollout> rollouts_b,
                           const PairOptions& opts);

/// Pairs JSONL: item_id, chosen_index, rejected_index, chosen_text, rejected_text, seed.
std::string pairs_to_jsonl(std::span<const PreferencePair> pairs);
std::vector<PreferencePair> load_pairs(const std::filesystem::path& path);
/// item_id, chosen_index, rejected_index, chosen_sql, rejected_sql, seed (null when unextractable).
std::string sql_pairs_to_jsonl(std::span<const SqlPreferencePair> pairs);

} // namespace sqlpref
