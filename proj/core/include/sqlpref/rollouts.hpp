// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sqlpref/executor.hpp"

namespace sqlpref {

/// One sampled model output for one item.
struct Rollout {
    std::string item_id;
    std::string checkpoint_tag;
    std::int64_t sample_index = 0;
    std::string text;
    std::optional<std::string> extracted_sql;
    std::optional<Verdict> verdict;
};

/// SQL from a model response: the last non-empty fenced block tagged `sql` or
/// `sqlite` (case-insensitive), else the last non-empty fenced block of any tag.
/// A response with no fence is taken as bare SQL when it parses as one statement.
std::optional<std::string> extract_sql(std::string_view text);

/// Rollout JSONL: item_id, checkpoint_tag, sample_index, text, and optionally
/// extracted_sql and verdict. When the extracted_sql key is missing it is computed
/// from text. Throws MALFORMED_RECORD and DUPLICATE_KEY.
std::vector<Rollout> load_rollouts(const std::filesystem::path& path);
std::vector<Rollout> parse_rollouts(const std::vector<nlohmann::json>& records, const std::string& source);
std::string rollouts_to_jsonl(std::span<const Rollout> rollouts);

/// One line of the judge's verdict file.
struct VerdictRecord {
    std::string item_id;
    std::string checkpoint_tag;
    std::int64_t sample_index = 0;
    std::string verdict;  // CORRECT / INCORRECT / NONEXECUTABLE, or a harness error name
    std::string error_msg;
    double elapsed_ms = 0;
};

std::vector<VerdictRecord> load_verdicts(const std::filesystem::path& path);
std::string verdicts_to_jsonl(std::span<const VerdictRecord> verdicts);

/// Joins verdicts onto rollouts by (item_id, checkpoint_tag, sample_index).
/// Rollouts without extracted SQL are NONEXECUTABLE regardless of the file.
/// Throws MISSING_VERDICT naming the first uncovered key, DUPLICATE_KEY for a
/// repeated verdict key, and GOLD_FAILED (or the recorded harness error) when
/// the judge could not decide a rollout.
std::vector<Rollout> attach_verdicts(std::vector<Rollout> rollouts, std::span<const VerdictRecord> verdicts);

/// Judge-side execution record for one rollout, consumed by Maj@K voting and
/// error labeling. JSONL fields: item_id, checkpoint_tag, sample_index, verdict,
/// extracted_sql, order_sensitive, gold, pred (outcome objects or null).
struct OutcomeRecord {
    std::string item_id;
    std::string checkpoint_tag;
    std::int64_t sample_index = 0;
    Verdict verdict = Verdict::Nonexecutable;
    std::optional<std::string> extracted_sql;
    bool order_sensitive = false;
    std::optional<ExecutionOutcome> gold;
    std::optional<ExecutionOutcome> pred;
};

std::vector<OutcomeRecord> load_outcomes(const std::filesystem::path& path);
std::string outcomes_to_jsonl(std::span<const OutcomeRecord> outcomes);

/// "item_id/checkpoint_tag/sample_index", used in messages.
std::string rollout_key(const std::string& item_id, const std::string& checkpoint_tag, std::int64_t sample_index);

} // namespace sqlpref
