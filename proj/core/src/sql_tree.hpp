// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace sqlpref::sql {

struct Select;

struct Expr {
    enum class Kind { Column, Literal, Subquery, Function, Operator };

    Kind kind = Kind::Operator;
    std::size_t offset = 0;
    // Column: qualifier may be empty. Function: name holds the function name.
    std::string qualifier;
    std::string name;
    bool double_quoted = false;
    std::vector<std::unique_ptr<Expr>> children;
    std::shared_ptr<Select> subquery;  // Subquery / EXISTS / IN (SELECT ...)
};
using ExprPtr = std::unique_ptr<Expr>;

struct ResultColumn {
    enum class Kind { Star, TableStar, Expr };
    Kind kind = Kind::Expr;
    std::string table;  // TableStar qualifier
    ExprPtr expr;
    std::string alias;
};

struct FromItem {
    enum class Kind { Table, Subquery, TableFunction };
    Kind kind = Kind::Table;
    std::string name;  // table or function name as written
    std::string alias;
    std::shared_ptr<Select> subquery;
    std::vector<ExprPtr> args;
    std::size_t offset = 0;
};

struct SelectCore {
    bool distinct = false;
    bool is_values = false;
    std::vector<ResultColumn> columns;
    std::vector<FromItem> from;      // joins flattened into one source list
    std::vector<ExprPtr> join_conditions;
    std::vector<ExprPtr> using_columns;
    ExprPtr where;
    std::vector<ExprPtr> group_by;
    ExprPtr having;
    std::vector<ExprPtr> window_exprs;  // named WINDOW definitions
    std::vector<std::vector<ExprPtr>> values;
};

struct Cte {
    std::string name;
    std::vector<std::string> columns;
    std::shared_ptr<Select> select;
};

struct Select {
    bool recursive = false;
    std::vector<Cte> ctes;
    std::vector<SelectCore> cores;  // compound members, in order
    std::vector<ExprPtr> order_by;
    ExprPtr limit;
    ExprPtr offset;
};

} // namespace sqlpref::sql
