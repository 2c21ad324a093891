// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sqlpref/corpus.hpp"
#include "sqlpref/executor.hpp"

namespace sqlpref::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

/// Creates (or extends) a database file by running `script`. Throws on error.
void run_script(const std::filesystem::path& db_file, std::string_view script);

/// Names of the handcrafted databases.
inline constexpr std::string_view kFormula1 = "formula_1";
inline constexpr std::string_view kToxicology = "toxicology";
inline constexpr std::string_view kFinancial = "financial";

/// Writes formula_1, toxicology and financial under `<root>/<db_id>/<db_id>.sqlite`.
void write_fixture_databases(const std::filesystem::path& root);

/// A (gold, predicted) statement pair on one fixture database. `ordered` is the
/// hand-annotated order sensitivity of the gold statement and `expected` the
/// hand-derived verdict.
struct FixturePair {
    std::string name;
    std::string db_id;
    std::string gold;
    std::string pred;
    bool ordered = false;
    Verdict expected = Verdict::Correct;
};

/// Hand-built pairs covering ORDER BY, NULLs, duplicates, reals, engine errors,
/// writes, and a runaway query.
const std::vector<FixturePair>& fixture_pairs();

DatasetItem item_for(const FixturePair& p);

/// Raw bytes of a file.
std::string file_bytes(const std::filesystem::path& path);

/// Suite instance with the single-table schema t(a INTEGER, b TEXT, c REAL)
/// and `rows` random rows drawn from small domains.
void write_random_instance(const std::filesystem::path& db_file, std::uint64_t seed, int rows);

/// Statements over t(a, b, c) used for randomized suite tests.
const std::vector<std::string>& suite_queries();

} // namespace sqlpref::testing
