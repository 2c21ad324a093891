// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include "context.hpp"

namespace sqlpref::cli {

void require_path(const std::filesystem::path& value, const std::string& flag) {
    if (value.empty()) throw UsageError(flag + " is required (flag or config file)");
}

ExecConfig exec_config(const PipelineConfig& cfg, double real_abs_tol) {
    ExecConfig ec;
    ec.timeout_ms = cfg.timeout_ms;
    ec.workers = cfg.workers;
    ec.real_abs_tol = real_abs_tol;
    ec.validate();
    return ec;
}

std::map<std::string, DatasetItem> index_items(const std::vector<DatasetItem>& items) {
    std::map<std::string, DatasetItem> out;
    for (const auto& item : items) {
        if (!out.emplace(item.item_id, item).second) {
            throw Error(ErrorCode::DuplicateId, "item_id '" + item.item_id + "' repeats");
        }
    }
    return out;
}

CatalogCache::CatalogCache(std::filesystem::path db_root, std::size_t value_budget)
    : db_root_(std::move(db_root)), value_budget_(value_budget) {}

const SchemaCatalog& CatalogCache::get(const std::string& db_id) {
    if (const auto it = cache_.find(db_id); it != cache_.end()) return it->second;
    const auto file = database_path(db_root_, db_id);
    if (!std::filesystem::exists(file)) throw Error(ErrorCode::UnknownDb, "no database file " + file.string());
    auto catalog = introspect_schema(file, value_budget_, db_id);
    const auto descriptions = db_root_ / db_id / "database_description";
    if (std::filesystem::is_directory(descriptions)) attach_descriptions(catalog, descriptions);
    return cache_.emplace(db_id, std::move(catalog)).first->second;
}

std::vector<Rollout> load_judged_rollouts(const std::filesystem::path& rollouts,
                                          const std::optional<std::filesystem::path>& verdicts) {
    auto loaded = load_rollouts(rollouts);
    if (verdicts) return attach_verdicts(std::move(loaded), load_verdicts(*verdicts));
    return loaded;
}

} // namespace sqlpref::cli
