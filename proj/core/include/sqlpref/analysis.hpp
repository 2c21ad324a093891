// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqlpref/corpus.hpp"
#include "sqlpref/executor.hpp"
#include "sqlpref/rollouts.hpp"

namespace sqlpref {

/// Error taxonomy. G marks a correct prediction; UNCLASSIFIED collects wrong
/// predictions that no automatic rule decides.
enum class ErrorCategory {
    G, A1, B1, B2, B3, B4, B5, B6, C1, C2, D1, D2, D3, E1, E2, E3, E4, F1, Unclassified
};

inline constexpr std::size_t kCategoryCount = 19;

/// All categories in table order: G, A1, B1..B6, C1, C2, D1..D3, E1..E4, F1, UNCLASSIFIED.
const std::array<ErrorCategory, kCategoryCount>& all_categories();
std::string_view category_name(ErrorCategory c);
/// "[B6] NULL/DISTINCT"; G and UNCLASSIFIED return their bare names.
std::string_view category_title(ErrorCategory c);
std::optional<ErrorCategory> parse_category(std::string_view name);

enum class Provenance { Auto, Manual };
std::string_view provenance_name(Provenance p);

struct ErrorLabel {
    ErrorCategory category = ErrorCategory::Unclassified;
    Provenance provenance = Provenance::Auto;
    friend bool operator==(const ErrorLabel&, const ErrorLabel&) = default;
};

/// Widest result for which column permutations / projections are searched.
inline constexpr std::size_t kMaxPermutationWidth = 8;

/// Mechanical labeling ladder, first match wins:
///   CORRECT -> G; unresolved identifier -> B4; NONEXECUTABLE -> F1;
///   rows equal under a non-identity column permutation -> E2;
///   one side a strict column projection of the other -> E1;
///   equal after DISTINCT on both sides, or after dropping NULL-bearing rows on
///   exactly one side -> B6; otherwise UNCLASSIFIED.
/// Throws MISSING_OUTCOME when an executable wrong prediction lacks outcomes.
ErrorLabel auto_label(const OutcomeRecord& record, const SchemaCatalog& catalog, double real_abs_tol);

struct LabelRecord {
    std::string item_id;
    std::string checkpoint_tag;
    ErrorLabel label;
};

using LabelKey = std::pair<std::string, std::string>;  // (item_id, checkpoint_tag)

/// Labels JSONL: item_id, checkpoint_tag, category, provenance. Every category
/// except G is accepted; G or an unknown name throws UNKNOWN_CATEGORY.
std::map<LabelKey, ErrorCategory> ingest_manual_labels(const std::filesystem::path& path);

/// Manual labels replace automatic ones for the same key. Throws LABEL_ON_CORRECT
/// when the automatic label is G. Returns how many labels were overridden.
std::size_t apply_manual_labels(std::vector<LabelRecord>& labels, const std::map<LabelKey, ErrorCategory>& manual);

std::string labels_to_jsonl(std::span<const LabelRecord> labels);

/// item_id -> category at one checkpoint.
using ItemLabels = std::map<std::string, ErrorCategory>;

struct FixRate {
    ErrorCategory category = ErrorCategory::Unclassified;
    std::size_t fixed = 0;
    std::size_t total = 0;
    std::optional<double> rate;  // percent; absent when total == 0
};

/// One entry per non-G category in table order. Throws ITEM_SET_MISMATCH.
std::vector<FixRate> fix_rates(const ItemLabels& before, const ItemLabels& after);

/// "40.0 (12/30)"; "-" when total is 0. Percent rounded half away from zero.
std::string format_fix_rate(std::size_t fixed, std::size_t total);

using TransitionMatrix = std::array<std::array<std::size_t, kCategoryCount>, kCategoryCount>;

/// M[a][b] = items labeled a before and b after. Throws ITEM_SET_MISMATCH.
TransitionMatrix transition_matrix(const ItemLabels& before, const ItemLabels& after);
std::string transition_matrix_csv(const TransitionMatrix& m);

/// Markdown table in the fix-rate layout: group, description, type, fix rate.
std::string fix_rate_table_markdown(std::span<const FixRate> rates);

struct OutputStats {
    std::string checkpoint_tag;
    std::size_t n_rollouts = 0;
    double mean_sql_chars = 0;     // code points; unextractable SQL counts as 0
    double nonexecutable_pct = 0;  // 0..100
};

/// Throws EMPTY_SET and UNJUDGED_ROLLOUT.
OutputStats output_stats(std::span<const Rollout> rollouts);
nlohmann::ordered_json output_stats_to_json(const OutputStats& s);

/// Number of Unicode code points in UTF-8 text.
std::size_t utf8_length(std::string_view s);

} // namespace sqlpref
