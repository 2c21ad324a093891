// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include "sqlpref/executor.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <thread>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "sqlite_handle.hpp"
#include "sqlpref/sql_parser.hpp"
#include "sqlpref/util.hpp"

namespace sqlpref {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::string_view exec_status_name(ExecStatus s) {
    switch (s) {
    case ExecStatus::Rows: return "ROWS";
    case ExecStatus::Error: return "ERROR";
    case ExecStatus::Timeout: return "TIMEOUT";
    }
    return "?";
}

nlohmann::json outcome_to_json(const ExecutionOutcome& o) {
    nlohmann::json j;
    j["status"] = exec_status_name(o.status);
    if (o.status == ExecStatus::Rows) {
        auto rows = nlohmann::json::array();
        for (const auto& r : o.rows) {
            auto row = nlohmann::json::array();
            for (const auto& c : r) row.push_back(cell_to_json(c));
            rows.push_back(std::move(row));
        }
        j["rows"] = std::move(rows);
    }
    if (o.status == ExecStatus::Error) j["error_msg"] = o.error_msg;
    j["elapsed_ms"] = o.elapsed_ms;
    return j;
}

ExecutionOutcome outcome_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("status") || !j["status"].is_string()) {
        throw Error(ErrorCode::MalformedRecord, "execution outcome lacks a status");
    }
    ExecutionOutcome o;
    const auto status = j["status"].get<std::string>();
    if (status == "ROWS") {
        o.status = ExecStatus::Rows;
        if (j.contains("rows")) {
            for (const auto& r : j["rows"]) {
                Row row;
                for (const auto& c : r) row.push_back(cell_from_json(c));
                if (!o.rows.empty() && row.size() != o.rows.front().size()) {
                    throw Error(ErrorCode::MalformedRecord, "execution outcome has ragged rows");
                }
                o.rows.push_back(std::move(row));
            }
        }
    } else if (status == "ERROR") {
        o.status = ExecStatus::Error;
        o.error_msg = j.value("error_msg", std::string());
    } else if (status == "TIMEOUT") {
        o.status = ExecStatus::Timeout;
    } else {
        throw Error(ErrorCode::MalformedRecord, "unknown outcome status '" + status + "'");
    }
    o.elapsed_ms = j.value("elapsed_ms", 0.0);
    return o;
}

std::size_t ExecConfig::default_workers() {
    return std::max(1u, std::thread::hardware_concurrency());
}

void ExecConfig::validate() const {
    if (timeout_ms <= 0) throw Error(ErrorCode::InvalidArgument, "timeout_ms must be > 0");
    if (workers < 1) throw Error(ErrorCode::InvalidArgument, "workers must be >= 1");
    if (!(real_abs_tol >= 0)) throw Error(ErrorCode::InvalidArgument, "real_abs_tol must be >= 0");
}

std::string_view verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Correct: return "CORRECT";
    case Verdict::Incorrect: return "INCORRECT";
    case Verdict::Nonexecutable: return "NONEXECUTABLE";
    }
    return "?";
}

std::optional<Verdict> parse_verdict(std::string_view s) {
    if (s == "CORRECT") return Verdict::Correct;
    if (s == "INCORRECT") return Verdict::Incorrect;
    if (s == "NONEXECUTABLE") return Verdict::Nonexecutable;
    return std::nullopt;
}

std::string JudgeResult::verdict_label() const {
    if (verdict) return std::string(verdict_name(*verdict));
    if (harness_error) return std::string(error_code_name(*harness_error));
    return "UNJUDGED";
}

namespace {

int deny_attach(void*, int action, const char*, const char*, const char*, const char*) {
    return (action == SQLITE_ATTACH || action == SQLITE_DETACH) ? SQLITE_DENY : SQLITE_OK;
}

int check_deadline(void* arg) {
    return Clock::now() >= *static_cast<const Clock::time_point*>(arg) ? 1 : 0;
}

detail::DbHandle open_for_judging(const fs::path& path, std::string& err) {
    auto db = detail::open_readonly(path, err);
    if (db) sqlite3_set_authorizer(db.get(), deny_attach, nullptr);
    return db;
}

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

ExecutionOutcome error_outcome(std::string msg, Clock::time_point start) {
    ExecutionOutcome o;
    o.status = ExecStatus::Error;
    o.error_msg = std::move(msg);
    o.elapsed_ms = ms_since(start);
    return o;
}

// True when only whitespace and comments remain.
bool blank_tail(sqlite3* db, const char* tail) {
    sqlite3_stmt* raw = nullptr;
    const char* rest = nullptr;
    if (sqlite3_prepare_v2(db, tail, -1, &raw, &rest) != SQLITE_OK) return false;
    detail::StmtHandle stmt(raw);
    return stmt == nullptr;
}

ExecutionOutcome run_statement(sqlite3* db, std::string_view sql, const ExecConfig& cfg) {
    const auto start = Clock::now();
    const std::string text(sql);
    sqlite3_stmt* raw = nullptr;
    const char* tail = nullptr;
    if (sqlite3_prepare_v2(db, text.c_str(), static_cast<int>(text.size()), &raw, &tail) != SQLITE_OK) {
        return error_outcome(sqlite3_errmsg(db), start);
    }
    detail::StmtHandle stmt(raw);
    if (!stmt) return error_outcome("empty statement", start);
    if (tail && *tail && !blank_tail(db, tail)) {
        return error_outcome("multiple statements are not allowed", start);
    }
    if (!sqlite3_stmt_readonly(stmt.get())) {
        return error_outcome("attempt to write a readonly database", start);
    }

    sqlite3_exec(db, "BEGIN", nullptr, nullptr, nullptr);
    const Clock::time_point deadline = start + std::chrono::milliseconds(cfg.timeout_ms);
    sqlite3_progress_handler(db, 1000, check_deadline, const_cast<Clock::time_point*>(&deadline));

    ExecutionOutcome out;
    const int width = sqlite3_column_count(stmt.get());
    int rc;
    while ((rc = sqlite3_step(stmt.get())) == SQLITE_ROW) {
        Row row;
        row.reserve(static_cast<std::size_t>(width));
        for (int i = 0; i < width; ++i) row.push_back(detail::read_column(stmt.get(), i));
        out.rows.push_back(std::move(row));
    }
    if (rc == SQLITE_INTERRUPT || (rc != SQLITE_DONE && Clock::now() >= deadline)) {
        out.status = ExecStatus::Timeout;
        out.rows.clear();
    } else if (rc != SQLITE_DONE) {
        out.status = ExecStatus::Error;
        out.error_msg = sqlite3_errmsg(db);
        out.rows.clear();
    }
    sqlite3_progress_handler(db, 0, nullptr, nullptr);
    stmt.reset();
    sqlite3_exec(db, "ROLLBACK", nullptr, nullptr, nullptr);
    out.elapsed_ms = ms_since(start);
    return out;
}

// One open connection per database file, owned by a single worker.
class ConnectionCache {
public:
    ExecutionOutcome run(const fs::path& db_file, std::string_view sql, const ExecConfig& cfg) {
        const auto key = db_file.string();
        auto it = dbs_.find(key);
        if (it == dbs_.end()) {
            std::string err;
            auto db = open_for_judging(db_file, err);
            if (!db) return error_outcome(err, Clock::now());
            it = dbs_.emplace(key, std::move(db)).first;
        }
        return run_statement(it->second.get(), sql, cfg);
    }

private:
    std::unordered_map<std::string, detail::DbHandle> dbs_;
};

bool rows_equal_sorted(std::vector<Row> a, std::vector<Row> b, double tol) {
    std::sort(a.begin(), a.end(), row_less);
    std::sort(b.begin(), b.end(), row_less);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!rows_match(a[i], b[i], tol)) return false;
    }
    return true;
}

bool has_real(const std::vector<Row>& rows) {
    for (const auto& r : rows) {
        for (const auto& c : r) {
            if (c.kind() == CellKind::Real) return true;
        }
    }
    return false;
}

// Perfect bipartite matching (Kuhn) between rows under tolerant equality.
bool rows_equal_matching(const std::vector<Row>& a, const std::vector<Row>& b, double tol) {
    const std::size_t n = a.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (rows_match(a[i], b[j], tol)) adj[i].push_back(j);
        }
        if (adj[i].empty()) return false;
    }
    std::vector<std::size_t> match_b(n, n);
    std::vector<char> seen;
    std::function<bool(std::size_t)> augment = [&](std::size_t i) {
        for (std::size_t j : adj[i]) {
            if (seen[j]) continue;
            seen[j] = 1;
            if (match_b[j] == n || augment(match_b[j])) {
                match_b[j] = i;
                return true;
            }
        }
        return false;
    };
    for (std::size_t i = 0; i < n; ++i) {
        seen.assign(n, 0);
        if (!augment(i)) return false;
    }
    return true;
}

constexpr std::size_t kMatchingRowLimit = 2000;

template <typename Fn>
void run_workers(std::size_t n, std::size_t workers, Fn&& fn) {
    if (n == 0) return;
    const std::size_t count = std::max<std::size_t>(1, std::min(workers, n));
    std::atomic<std::size_t> next{0};
    auto body = [&] {
        ConnectionCache cache;
        for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i, cache);
    };
    if (count == 1) {
        body();
        return;
    }
    std::vector<std::jthread> threads;
    threads.reserve(count);
    for (std::size_t t = 0; t < count; ++t) threads.emplace_back(body);
}

struct ExecTask {
    fs::path db_file;
    std::string sql;
    ExecutionOutcome outcome;
};

void run_tasks(std::vector<ExecTask>& tasks, const ExecConfig& cfg) {
    run_workers(tasks.size(), cfg.workers, [&](std::size_t i, ConnectionCache& cache) {
        tasks[i].outcome = cache.run(tasks[i].db_file, tasks[i].sql, cfg);
    });
    if (!cfg.retry_serial_on_timeout) return;
    ConnectionCache exclusive;
    for (auto& t : tasks) {
        if (t.outcome.status == ExecStatus::Timeout) t.outcome = exclusive.run(t.db_file, t.sql, cfg);
    }
}

} // namespace

ExecutionOutcome execute_file(const fs::path& db_file, std::string_view sql, const ExecConfig& cfg) {
    ConnectionCache cache;
    return cache.run(db_file, sql, cfg);
}

bool results_match(const ExecutionOutcome& gold, const ExecutionOutcome& pred, bool order_sensitive,
                   const ExecConfig& cfg) {
    if (gold.status != ExecStatus::Rows || pred.status != ExecStatus::Rows) return false;
    if (gold.rows.size() != pred.rows.size()) return false;
    if (gold.rows.empty()) return true;
    if (gold.arity() != pred.arity()) return false;
    const double tol = cfg.real_abs_tol;
    if (order_sensitive) {
        for (std::size_t i = 0; i < gold.rows.size(); ++i) {
            if (!rows_match(gold.rows[i], pred.rows[i], tol)) return false;
        }
        return true;
    }
    if (rows_equal_sorted(gold.rows, pred.rows, tol)) return true;
    // Sorting can misalign rows whose reals differ within tolerance.
    if (tol > 0 && gold.rows.size() <= kMatchingRowLimit && (has_real(gold.rows) || has_real(pred.rows))) {
        return rows_equal_matching(gold.rows, pred.rows, tol);
    }
    return false;
}

bool order_sensitive_sql(std::string_view gold_sql) {
    const auto parsed = parse_sql(gold_sql);
    if (!parsed) {
        spdlog::warn("gold SQL does not parse ({}); comparing order-insensitively", parsed.failure().describe());
        return false;
    }
    return parsed.ast().has_order_by;
}

Verdict verdict_from_outcomes(const ExecutionOutcome& gold, const ExecutionOutcome& pred, bool order_sensitive,
                              const ExecConfig& cfg) {
    if (pred.status != ExecStatus::Rows) return Verdict::Nonexecutable;
    return results_match(gold, pred, order_sensitive, cfg) ? Verdict::Correct : Verdict::Incorrect;
}

Executor::Executor(fs::path db_root, ExecConfig cfg) : db_root_(std::move(db_root)), cfg_(cfg) {
    cfg_.validate();
}

fs::path Executor::resolve(const std::string& db_id) const {
    auto path = database_path(db_root_, db_id);
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        throw Error(ErrorCode::UnknownDb, "no database file for '" + db_id + "' at " + path.string());
    }
    return path;
}

ExecutionOutcome Executor::execute(const std::string& db_id, std::string_view sql) const {
    return execute_file(resolve(db_id), sql, cfg_);
}

Verdict Executor::ex_verdict_on(const fs::path& db_file, const DatasetItem& item, std::string_view pred_sql) const {
    ConnectionCache cache;
    auto gold = cache.run(db_file, item.gold_sql, cfg_);
    if (gold.status != ExecStatus::Rows) {
        throw Error(ErrorCode::GoldFailed, "gold SQL of item " + item.item_id + " failed on " + db_file.string() +
                                               ": " + (gold.status == ExecStatus::Timeout ? "timeout" : gold.error_msg));
    }
    auto pred = cache.run(db_file, pred_sql, cfg_);
    if (pred.status == ExecStatus::Timeout && cfg_.retry_serial_on_timeout) pred = cache.run(db_file, pred_sql, cfg_);
    return verdict_from_outcomes(gold, pred, order_sensitive_sql(item.gold_sql), cfg_);
}

Verdict Executor::ex_verdict(const DatasetItem& item, std::string_view pred_sql) const {
    return ex_verdict_on(resolve(item.db_id), item, pred_sql);
}

bool Executor::ts_verdict(const DatasetItem& item, std::string_view pred_sql,
                          std::span<const fs::path> suite_dbs) const {
    if (suite_dbs.empty()) throw Error(ErrorCode::InvalidArgument, "test suite is empty");
    bool all = true;
    for (const auto& db : suite_dbs) {
        // Every instance is evaluated so a gold failure anywhere is reported.
        all = ex_verdict_on(db, item, pred_sql) == Verdict::Correct && all;
    }
    return all;
}

std::vector<JudgeResult> Executor::judge_batch(std::span<const JudgeJob> jobs) const {
    std::vector<JudgeResult> results(jobs.size());
    std::vector<std::vector<fs::path>> instances(jobs.size());
    std::vector<ExecTask> gold_tasks;
    std::map<std::pair<std::string, std::string>, std::size_t> gold_index;
    std::vector<ExecTask> pred_tasks;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> slots(jobs.size());  // (gold, pred)

    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const auto& job = jobs[j];
        results[j].order_sensitive = order_sensitive_sql(job.item.gold_sql);
        if (!job.suite.empty()) {
            instances[j] = job.suite;
        } else {
            try {
                instances[j] = {resolve(job.item.db_id)};
            } catch (const Error& e) {
                results[j].harness_error = e.code();
                results[j].error_msg = e.what();
                continue;
            }
        }
        for (const auto& db : instances[j]) {
            auto key = std::make_pair(db.string(), job.item.gold_sql);
            auto [it, inserted] = gold_index.emplace(key, gold_tasks.size());
            if (inserted) gold_tasks.push_back({db, job.item.gold_sql, {}});
            std::size_t pred_slot = pred_tasks.size();
            if (job.pred_sql) pred_tasks.push_back({db, *job.pred_sql, {}});
            else pred_slot = static_cast<std::size_t>(-1);
            slots[j].emplace_back(it->second, pred_slot);
        }
    }

    run_tasks(gold_tasks, cfg_);
    run_tasks(pred_tasks, cfg_);

    for (std::size_t j = 0; j < jobs.size(); ++j) {
        auto& r = results[j];
        if (r.harness_error) continue;
        std::optional<Verdict> overall;
        for (std::size_t k = 0; k < slots[j].size(); ++k) {
            const auto [gi, pi] = slots[j][k];
            const auto& gold = gold_tasks[gi].outcome;
            if (gold.status != ExecStatus::Rows) {
                r.harness_error = ErrorCode::GoldFailed;
                r.error_msg = "gold SQL failed on " + instances[j][k].string() + ": " +
                              (gold.status == ExecStatus::Timeout ? std::string("timeout") : gold.error_msg);
                r.verdict.reset();
                break;
            }
            ExecutionOutcome unextracted;
            unextracted.status = ExecStatus::Error;
            unextracted.error_msg = "no SQL could be extracted";
            const auto& pred = pi == static_cast<std::size_t>(-1) ? unextracted : pred_tasks[pi].outcome;
            const Verdict v = verdict_from_outcomes(gold, pred, r.order_sensitive, cfg_);
            r.elapsed_ms += pred.elapsed_ms;
            if (k == 0) {
                r.gold = gold;
                r.pred = pred;
            }
            if (!overall || (*overall == Verdict::Correct && v != Verdict::Correct)) {
                overall = v;
                if (pred.status == ExecStatus::Error) r.error_msg = pred.error_msg;
                else if (pred.status == ExecStatus::Timeout) r.error_msg = "timeout";
            }
        }
        if (!r.harness_error) r.verdict = overall;
    }
    return results;
}

std::vector<fs::path> suite_instances(const fs::path& suite_root, const std::string& db_id) {
    std::vector<fs::path> out;
    std::error_code ec;
    const auto dir = suite_root / db_id;
    if (!fs::is_directory(dir, ec)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".sqlite") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace sqlpref
