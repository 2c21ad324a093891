// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sqlpref/corpus.hpp"
#include "sqlpref/error.hpp"
#include "sqlpref/executor.hpp"
#include "sqlpref/rollouts.hpp"

namespace sqlpref::cli {

/// Settings shared by several subcommands. A config file supplies them as
/// `key = value` lines; flags given on the command line win.
struct PipelineConfig {
    std::filesystem::path db_root;
    std::optional<std::filesystem::path> suite_root;
    double beta = 0.1;
    std::uint64_t seed = 0;
    std::int64_t timeout_ms = 30000;
    std::size_t workers = ExecConfig::default_workers();
    std::size_t k_majority = 16;
    double lambda_sft = 0;
};

/// Keys accepted in a config file.
const std::vector<std::string>& config_keys();

/// Parses `key = value` lines; '#' starts a comment. Throws UsageError for
/// unknown keys and malformed lines.
std::map<std::string, std::string> read_config(const std::filesystem::path& path);

/// Bad invocation: exit code 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Context {
    PipelineConfig cfg;
    std::optional<std::filesystem::path> config_file;
    /// Config key -> flag that mirrors it, for the subcommands registered so far.
    std::multimap<std::string, std::pair<const CLI::App*, CLI::Option*>> bindings;
    std::function<int()> action;

    /// Registers the flag for a config key and binds it to `target`.
    template <typename T>
    CLI::Option* add_pipeline_option(CLI::App& sub, const std::string& key, const std::string& flag, T& target,
                                     const std::string& help) {
        auto* opt = sub.add_option(flag, target, help);
        bindings.emplace(key, std::make_pair(&sub, opt));
        return opt;
    }
};

void add_prompt_command(CLI::App& app, Context& ctx);
void add_judge_command(CLI::App& app, Context& ctx);
void add_synthesize_command(CLI::App& app, Context& ctx);
void add_pairs_command(CLI::App& app, Context& ctx);
void add_dpo_metrics_command(CLI::App& app, Context& ctx);
void add_eval_command(CLI::App& app, Context& ctx);
void add_analyze_command(CLI::App& app, Context& ctx);
void add_report_command(CLI::App& app, Context& ctx);

// Shared helpers.

/// Throws UsageError naming `flag` when `value` is empty.
void require_path(const std::filesystem::path& value, const std::string& flag);

ExecConfig exec_config(const PipelineConfig& cfg, double real_abs_tol = 1e-6);

/// item_id -> item. Throws DUPLICATE_ID.
std::map<std::string, DatasetItem> index_items(const std::vector<DatasetItem>& items);

/// Introspects each database once; attaches Bird column descriptions from
/// `<db_root>/<db_id>/database_description` when present.
class CatalogCache {
public:
    CatalogCache(std::filesystem::path db_root, std::size_t value_budget);
    const SchemaCatalog& get(const std::string& db_id);

private:
    std::filesystem::path db_root_;
    std::size_t value_budget_;
    std::map<std::string, SchemaCatalog> cache_;
};

/// Rollouts with verdicts attached from `verdicts` when given; otherwise every
/// rollout must already carry one.
std::vector<Rollout> load_judged_rollouts(const std::filesystem::path& rollouts,
                                          const std::optional<std::filesystem::path>& verdicts);

/// Keeps records of `tag` when set; otherwise all records must share one tag,
/// which is returned. Throws INVALID_ARGUMENT for mixed tags.
template <typename Record>
std::string select_checkpoint(std::vector<Record>& records, const std::optional<std::string>& tag) {
    if (tag) {
        std::erase_if(records, [&](const Record& r) { return r.checkpoint_tag != *tag; });
        return *tag;
    }
    std::string found;
    for (const auto& r : records) {
        if (found.empty()) found = r.checkpoint_tag;
        if (r.checkpoint_tag != found) {
            throw Error(ErrorCode::InvalidArgument, "records mix checkpoint tags '" + found + "' and '" +
                                                        r.checkpoint_tag + "'; pass --checkpoint-tag");
        }
    }
    return found;
}

} // namespace sqlpref::cli
