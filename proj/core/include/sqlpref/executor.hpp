// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqlpref/cell.hpp"
#include "sqlpref/corpus.hpp"
#include "sqlpref/error.hpp"

namespace sqlpref {

enum class ExecStatus { Rows, Error, Timeout };

std::string_view exec_status_name(ExecStatus s);

/// Normalized result of one statement. `rows` is meaningful iff status == Rows,
/// `error_msg` iff status == Error.
struct ExecutionOutcome {
    ExecStatus status = ExecStatus::Rows;
    std::vector<Row> rows;
    std::string error_msg;
    double elapsed_ms = 0;

    std::size_t arity() const { return rows.empty() ? 0 : rows.front().size(); }
};

nlohmann::json outcome_to_json(const ExecutionOutcome& o);
ExecutionOutcome outcome_from_json(const nlohmann::json& j);

struct ExecConfig {
    std::int64_t timeout_ms = 30000;
    std::size_t workers = default_workers();
    bool retry_serial_on_timeout = true;
    double real_abs_tol = 1e-6;

    static std::size_t default_workers();
    /// Throws INVALID_ARGUMENT.
    void validate() const;
};

enum class Verdict { Correct, Incorrect, Nonexecutable };

std::string_view verdict_name(Verdict v);
/// Accepts "CORRECT", "INCORRECT", "NONEXECUTABLE"; anything else is absent.
std::optional<Verdict> parse_verdict(std::string_view s);

/// Runs one statement on a database file, read-only. Writes, ATTACH/DETACH and
/// multi-statement input produce an Error outcome; exceeding the deadline
/// interrupts the statement and yields Timeout.
ExecutionOutcome execute_file(const std::filesystem::path& db_file, std::string_view sql,
                              const ExecConfig& cfg);

/// Multiset (or sequence, when order_sensitive) equality of two Rows outcomes with
/// cell tolerance cfg.real_abs_tol. False unless both are Rows with equal arity.
bool results_match(const ExecutionOutcome& gold, const ExecutionOutcome& pred, bool order_sensitive,
                   const ExecConfig& cfg);

/// True iff the statement has a top-level ORDER BY. Unparseable text is treated
/// as order-insensitive.
bool order_sensitive_sql(std::string_view gold_sql);

/// Verdict from a gold/pred outcome pair; gold must be Rows.
Verdict verdict_from_outcomes(const ExecutionOutcome& gold, const ExecutionOutcome& pred,
                              bool order_sensitive, const ExecConfig& cfg);

/// One judging job. A missing pred_sql (extraction failed) is NONEXECUTABLE
/// without touching the database. An empty suite means EX on the primary database;
/// otherwise the verdict is TS over the listed instances.
struct JudgeJob {
    DatasetItem item;
    std::optional<std::string> pred_sql;
    std::vector<std::filesystem::path> suite;
};

struct JudgeResult {
    std::optional<Verdict> verdict;           // absent iff harness_error is set
    std::optional<ErrorCode> harness_error;   // e.g. GOLD_FAILED, UNKNOWN_DB
    std::string error_msg;                    // engine or harness message
    double elapsed_ms = 0;                    // prediction execution time
    bool order_sensitive = false;
    std::optional<ExecutionOutcome> gold;     // primary (or first suite) instance
    std::optional<ExecutionOutcome> pred;

    /// Verdict name, or the harness error code name.
    std::string verdict_label() const;
};

/// Resolves db ids to files under a Bird/Spider-layout root and judges against them.
class Executor {
public:
    Executor(std::filesystem::path db_root, ExecConfig cfg);

    const ExecConfig& config() const noexcept { return cfg_; }

    /// Throws UNKNOWN_DB when `<db_root>/<db_id>/<db_id>.sqlite` does not exist.
    std::filesystem::path resolve(const std::string& db_id) const;

    ExecutionOutcome execute(const std::string& db_id, std::string_view sql) const;

    /// EX verdict. Throws GOLD_FAILED when the gold statement does not yield rows.
    Verdict ex_verdict(const DatasetItem& item, std::string_view pred_sql) const;
    Verdict ex_verdict_on(const std::filesystem::path& db_file, const DatasetItem& item,
                          std::string_view pred_sql) const;

    /// True iff ex_verdict is CORRECT on every instance. Throws INVALID_ARGUMENT for
    /// an empty suite and GOLD_FAILED as ex_verdict.
    bool ts_verdict(const DatasetItem& item, std::string_view pred_sql,
                    std::span<const std::filesystem::path> suite_dbs) const;

    /// Judges jobs on cfg.workers threads (one connection cache per worker). Output
    /// order equals input order; per-job failures are embedded, never thrown.
    std::vector<JudgeResult> judge_batch(std::span<const JudgeJob> jobs) const;

private:
    std::filesystem::path db_root_;
    ExecConfig cfg_;
};

/// Suite instances for one database: every *.sqlite file in `<suite_root>/<db_id>/`,
/// sorted by path. Empty when the directory does not exist.
std::vector<std::filesystem::path> suite_instances(const std::filesystem::path& suite_root,
                                                   const std::string& db_id);

} // namespace sqlpref
