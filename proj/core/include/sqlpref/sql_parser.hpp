// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sqlpref {

struct SchemaCatalog;

namespace sql {
struct Select;
} // namespace sql

struct ColumnRef {
    std::string qualifier;  // folded; empty when unqualified
    std::string column;     // folded
    std::optional<std::string> resolved_table;  // folded base table, when determinable
    bool double_quoted = false;  // "x" falls back to a string literal in SQLite
    std::size_t offset = 0;
};

/// A parsed SELECT statement (SQLite dialect) plus the reference summary used by
/// order-sensitivity checks and hallucination detection.
struct SqlAst {
    std::vector<std::string> tables;   // base tables, folded, deduplicated, sorted
    std::vector<std::string> columns;  // referenced column names, folded, deduplicated, sorted
    std::vector<ColumnRef> column_refs;
    std::map<std::string, std::string> aliases;  // folded alias -> folded table
    std::size_t result_width = 0;  // 0 when a '*' makes it schema-dependent
    bool has_order_by = false;
    bool has_limit = false;
    bool distinct = false;

    std::shared_ptr<const sql::Select> tree;
};

struct ParseFailure {
    std::size_t offset = 0;
    std::size_t line = 1;
    std::size_t column = 1;
    std::string message;

    std::string describe() const;
};

class ParseResult {
public:
    ParseResult(SqlAst ast) : value_(std::move(ast)) {}
    ParseResult(ParseFailure f) : value_(std::move(f)) {}

    bool ok() const noexcept { return value_.index() == 0; }
    explicit operator bool() const noexcept { return ok(); }
    const SqlAst& ast() const { return std::get<SqlAst>(value_); }
    const ParseFailure& failure() const { return std::get<ParseFailure>(value_); }

private:
    std::variant<SqlAst, ParseFailure> value_;
};

/// Parses exactly one SELECT / WITH / VALUES statement; trailing semicolons are allowed.
ParseResult parse_sql(std::string_view sql);

/// Identifiers in `ast` that do not exist in `catalog` after alias resolution:
/// unknown tables ("t"), qualified columns missing from their table ("t.c"), and
/// unqualified columns that resolve in no visible source ("c").
std::vector<std::string> unresolved_identifiers(const SqlAst& ast, const SchemaCatalog& catalog);

} // namespace sqlpref
