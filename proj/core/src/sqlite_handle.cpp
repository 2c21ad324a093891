// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include "sqlite_handle.hpp"

#include <cmath>

namespace sqlpref::detail {

DbHandle open_readonly(const std::filesystem::path& path, std::string& err) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        err = "no such database file: " + path.string();
        return nullptr;
    }
    sqlite3* raw = nullptr;
    const int rc = sqlite3_open_v2(path.string().c_str(), &raw,
                                   SQLITE_OPEN_READONLY | SQLITE_OPEN_NOMUTEX, nullptr);
    DbHandle db(raw);
    if (rc != SQLITE_OK) {
        err = raw ? sqlite3_errmsg(raw) : "cannot open database";
        return nullptr;
    }
    return db;
}

Cell read_column(sqlite3_stmt* stmt, int i) {
    switch (sqlite3_column_type(stmt, i)) {
    case SQLITE_INTEGER: return Cell(static_cast<std::int64_t>(sqlite3_column_int64(stmt, i)));
    case SQLITE_FLOAT: {
        const double v = sqlite3_column_double(stmt, i);
        if (std::isinf(v)) return Cell(std::string(v > 0 ? "Inf" : "-Inf"));
        if (std::isnan(v)) return Cell();
        return Cell::real(v);
    }
    case SQLITE_TEXT: {
        const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt, i));
        const int n = sqlite3_column_bytes(stmt, i);
        return Cell(std::string(p ? p : "", static_cast<std::size_t>(n)));
    }
    case SQLITE_BLOB: {
        const auto* p = static_cast<const std::uint8_t*>(sqlite3_column_blob(stmt, i));
        const int n = sqlite3_column_bytes(stmt, i);
        return Cell(Blob(p, p + n));
    }
    default: return Cell();
    }
}

std::string quote_ident(const std::string& name) {
    std::string out = "\"";
    for (char c : name) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

} // namespace sqlpref::detail
