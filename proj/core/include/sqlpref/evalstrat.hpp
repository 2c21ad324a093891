// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqlpref/rollouts.hpp"

namespace sqlpref {

/// Fraction of items whose single greedy rollout is CORRECT. When `expected_items`
/// is non-empty every listed item must be present. Throws EMPTY_EVAL,
/// MISSING_ITEM, EXTRA_SAMPLE (two rollouts for one item, or an unlisted item),
/// UNJUDGED_ROLLOUT.
double greedy_ex(std::span<const Rollout> greedy, std::span<const std::string> expected_items = {});

/// Mean over repeats of per-repeat EX; repeat r is each item's r-th sample by
/// sample_index. Throws RAGGED_SAMPLES unless every item has exactly n_repeats
/// samples, EMPTY_EVAL, UNJUDGED_ROLLOUT.
double pass_at_1(std::span<const Rollout> samples, std::size_t n_repeats);

struct MajVote {
    std::string item_id;
    std::int64_t chosen_index = 0;
    std::size_t group_size = 0;  // 0 when no sample executed
    bool correct = false;
};

struct MajResult {
    double score = 0;
    std::vector<MajVote> per_item;  // sorted by item_id
};

/// Rows of an outcome with reals snapped to the `tol` grid, sorted unless
/// order_sensitive. Two outcomes vote together iff their canonical forms are equal.
std::vector<Row> canonical_rows(const ExecutionOutcome& outcome, bool order_sensitive, double tol);

/// Majority vote over each item's first k samples (by sample_index). Executable
/// samples are grouped by canonical result; the largest group wins, ties go to the
/// group with the smallest sample index, and the chosen prediction is that group's
/// lowest-index member. With no executable sample the chosen prediction is the
/// first sample. Throws INSUFFICIENT_SAMPLES, MISSING_OUTCOME, EMPTY_EVAL.
MajResult maj_at_k(std::span<const OutcomeRecord> samples, std::size_t k, double tol);

struct EvalReport {
    std::string checkpoint_tag;
    std::size_t n_items = 0;
    std::optional<double> ex_greedy;
    std::optional<double> pass_at_1_mean;
    std::optional<double> maj_at_k;
    std::optional<std::size_t> k;
};

nlohmann::ordered_json eval_report_to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);

} // namespace sqlpref
