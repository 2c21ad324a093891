// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <sqlite3.h>

#include "sqlpref/cell.hpp"

namespace sqlpref::detail {

struct DbCloser {
    void operator()(sqlite3* db) const noexcept { sqlite3_close_v2(db); }
};
struct StmtFinalizer {
    void operator()(sqlite3_stmt* s) const noexcept { sqlite3_finalize(s); }
};

using DbHandle = std::unique_ptr<sqlite3, DbCloser>;
using StmtHandle = std::unique_ptr<sqlite3_stmt, StmtFinalizer>;

/// Opens an existing database file read-only. Returns null and fills `err` on failure.
DbHandle open_readonly(const std::filesystem::path& path, std::string& err);

/// Reads column `i` of the current row as a Cell. Non-finite reals become the
/// text "Inf" / "-Inf" (NaN is already NULL in SQLite).
Cell read_column(sqlite3_stmt* stmt, int i);

/// Double-quoted identifier with embedded quotes doubled.
std::string quote_ident(const std::string& name);

} // namespace sqlpref::detail
