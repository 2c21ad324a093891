// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include "sqlpref/sql_parser.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <unordered_set>

#include "sql_tree.hpp"
#include "sqlpref/corpus.hpp"
#include "sqlpref/util.hpp"

namespace sqlpref {

namespace {

using sql::Expr;
using sql::ExprPtr;

// ── tokenizer ───────────────────────────────────────────────────

enum class Tok { Ident, QuotedIdent, String, Number, Blob, Param, Op, End };

struct Token {
    Tok type = Tok::End;
    std::string text;  // unescaped value for identifiers/strings, raw otherwise
    std::size_t offset = 0;
    bool double_quoted = false;
};

struct SyntaxError {
    std::size_t offset;
    std::string message;
};

bool ident_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}
bool ident_char(unsigned char c) {
    return ident_start(c) || (c >= '0' && c <= '9') || c == '$';
}
bool digit(char c) { return c >= '0' && c <= '9'; }

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = s.size();
    auto quoted = [&](char close, Tok type, bool dq) {
        const std::size_t start = i;
        std::string text;
        ++i;
        for (;;) {
            if (i >= n) throw SyntaxError{start, "unterminated quoted token"};
            if (s[i] == close) {
                if (close != ']' && i + 1 < n && s[i + 1] == close) {
                    text += close;
                    i += 2;
                    continue;
                }
                ++i;
                break;
            }
            text += s[i++];
        }
        out.push_back({type, std::move(text), start, dq});
    };
    while (i < n) {
        const char c = s[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            ++i;
            continue;
        }
        if (c == '-' && i + 1 < n && s[i + 1] == '-') {
            while (i < n && s[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && s[i + 1] == '*') {
            const auto end = s.find("*/", i + 2);
            i = end == std::string_view::npos ? n : end + 2;
            continue;
        }
        if (c == '\'') {
            quoted('\'', Tok::String, false);
            continue;
        }
        if (c == '"') {
            quoted('"', Tok::QuotedIdent, true);
            continue;
        }
        if (c == '`') {
            quoted('`', Tok::QuotedIdent, false);
            continue;
        }
        if (c == '[') {
            quoted(']', Tok::QuotedIdent, false);
            continue;
        }
        if ((c == 'x' || c == 'X') && i + 1 < n && s[i + 1] == '\'') {
            const std::size_t start = i;
            ++i;
            quoted('\'', Tok::Blob, false);
            out.back().offset = start;
            continue;
        }
        if (digit(c) || (c == '.' && i + 1 < n && digit(s[i + 1]))) {
            const std::size_t start = i;
            if (c == '0' && i + 1 < n && (s[i + 1] == 'x' || s[i + 1] == 'X')) {
                i += 2;
                while (i < n && std::isxdigit(static_cast<unsigned char>(s[i]))) ++i;
            } else {
                while (i < n && (digit(s[i]) || s[i] == '_')) ++i;
                if (i < n && s[i] == '.') {
                    ++i;
                    while (i < n && digit(s[i])) ++i;
                }
                if (i < n && (s[i] == 'e' || s[i] == 'E')) {
                    std::size_t j = i + 1;
                    if (j < n && (s[j] == '+' || s[j] == '-')) ++j;
                    if (j < n && digit(s[j])) {
                        i = j;
                        while (i < n && digit(s[i])) ++i;
                    }
                }
            }
            if (i < n && ident_char(static_cast<unsigned char>(s[i]))) {
                throw SyntaxError{start, "unrecognized token"};
            }
            out.push_back({Tok::Number, std::string(s.substr(start, i - start)), start});
            continue;
        }
        if (ident_start(static_cast<unsigned char>(c))) {
            const std::size_t start = i;
            while (i < n && ident_char(static_cast<unsigned char>(s[i]))) ++i;
            out.push_back({Tok::Ident, std::string(s.substr(start, i - start)), start});
            continue;
        }
        if (c == '?' || c == ':' || c == '@' || c == '$') {
            const std::size_t start = i++;
            while (i < n && ident_char(static_cast<unsigned char>(s[i]))) ++i;
            out.push_back({Tok::Param, std::string(s.substr(start, i - start)), start});
            continue;
        }
        static constexpr std::array<std::string_view, 12> two_char = {
            "||", "<=", ">=", "==", "!=", "<>", "<<", ">>", "->", "::", "->>", ""};
        if (s.substr(i, 3) == "->>") {
            out.push_back({Tok::Op, "->>", i});
            i += 3;
            continue;
        }
        bool matched = false;
        for (auto op : two_char) {
            if (!op.empty() && op.size() == 2 && s.substr(i, 2) == op) {
                out.push_back({Tok::Op, std::string(op), i});
                i += 2;
                matched = true;
                break;
            }
        }
        if (matched) continue;
        static constexpr std::string_view singles = "(),.;*/%+-<>=&|~";
        if (singles.find(c) != std::string_view::npos) {
            out.push_back({Tok::Op, std::string(1, c), i});
            ++i;
            continue;
        }
        throw SyntaxError{i, std::string("unrecognized token '") + c + "'"};
    }
    out.push_back({Tok::End, "", n});
    return out;
}

// Words that can never be a bare identifier or implicit alias.
const std::unordered_set<std::string>& reserved_words() {
    static const std::unordered_set<std::string> words = {
        "all",     "alter",   "and",       "as",      "between", "by",     "case",   "cast",
        "collate", "create",  "cross",     "delete",  "distinct", "drop",  "else",   "end",
        "escape",  "except",  "exists",    "from",    "full",    "glob",   "group",  "having",
        "in",      "inner",   "insert",    "intersect", "into",  "is",     "isnull", "join",
        "left",    "like",    "limit",     "match",   "natural", "not",    "notnull", "null",
        "offset",  "on",      "or",        "order",   "outer",   "regexp", "right",  "select",
        "set",     "then",    "union",     "update",  "using",   "values", "when",   "where",
        "window",  "with"};
    return words;
}

bool is_reserved(const Token& t) {
    return t.type == Tok::Ident && reserved_words().count(fold_case(t.text)) > 0;
}

// ── parser ──────────────────────────────────────────────────────

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    std::shared_ptr<sql::Select> statement() {
        if (!(kw("select") || kw("with") || kw("values"))) {
            if (peek().type == Tok::End) fail("empty statement");
            fail("expected SELECT, WITH or VALUES near '" + peek().text + "'");
        }
        auto sel = select();
        while (op(";")) advance();
        if (peek().type != Tok::End) fail("unexpected '" + peek().text + "' after statement");
        return sel;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;

    const Token& peek(std::size_t k = 0) const {
        return toks_[std::min(pos_ + k, toks_.size() - 1)];
    }
    const Token& advance() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError{peek().offset, msg}; }

    bool kw(std::string_view word, std::size_t k = 0) const {
        const Token& t = peek(k);
        return t.type == Tok::Ident && iequals(t.text, word);
    }
    bool op(std::string_view o, std::size_t k = 0) const {
        const Token& t = peek(k);
        return t.type == Tok::Op && t.text == o;
    }
    bool accept_kw(std::string_view word) {
        if (!kw(word)) return false;
        advance();
        return true;
    }
    bool accept_op(std::string_view o) {
        if (!op(o)) return false;
        advance();
        return true;
    }
    void expect_kw(std::string_view word) {
        if (!accept_kw(word)) fail("expected " + fold_case(word) + " near '" + peek().text + "'");
    }
    void expect_op(std::string_view o) {
        if (!accept_op(o)) {
            fail("expected '" + std::string(o) + "'" +
                 (peek().type == Tok::End ? std::string(" at end of input") : " near '" + peek().text + "'"));
        }
    }

    bool name_token(std::size_t k = 0) const {
        const Token& t = peek(k);
        return t.type == Tok::QuotedIdent || (t.type == Tok::Ident && !is_reserved(t));
    }
    Token name(const char* what) {
        if (!name_token()) {
            fail(std::string("expected ") + what +
                 (peek().type == Tok::End ? std::string(" at end of input") : " near '" + peek().text + "'"));
        }
        return advance();
    }

    // Implicit alias candidates: a non-reserved identifier that is not a clause word.
    bool alias_token() const {
        if (!name_token()) return false;
        if (peek().type == Tok::QuotedIdent) return true;
        static const std::set<std::string> stop = {"asc", "desc", "indexed", "nulls", "filter", "over"};
        return stop.count(fold_case(peek().text)) == 0;
    }

    bool select_start(std::size_t k = 0) const {
        return kw("select", k) || kw("with", k) || kw("values", k);
    }

    // select := [WITH ...] core (compound core)* [ORDER BY ...] [LIMIT ...]
    std::shared_ptr<sql::Select> select() {
        auto sel = std::make_shared<sql::Select>();
        if (accept_kw("with")) {
            sel->recursive = accept_kw("recursive");
            do {
                sql::Cte cte;
                cte.name = name("common table name").text;
                if (accept_op("(")) {
                    do cte.columns.push_back(name("column name").text);
                    while (accept_op(","));
                    expect_op(")");
                }
                expect_kw("as");
                if (accept_kw("not")) expect_kw("materialized");
                else accept_kw("materialized");
                expect_op("(");
                cte.select = select();
                expect_op(")");
                sel->ctes.push_back(std::move(cte));
            } while (accept_op(","));
        }
        sel->cores.push_back(core());
        for (;;) {
            if (accept_kw("union")) {
                accept_kw("all");
            } else if (!(accept_kw("intersect") || accept_kw("except"))) {
                break;
            }
            sel->cores.push_back(core());
        }
        if (accept_kw("order")) {
            expect_kw("by");
            ordering_terms(sel->order_by);
        }
        if (accept_kw("limit")) {
            sel->limit = expr();
            if (accept_kw("offset") || accept_op(",")) sel->offset = expr();
        }
        return sel;
    }

    void ordering_terms(std::vector<ExprPtr>& out) {
        do {
            out.push_back(expr());
            if (!accept_kw("asc")) accept_kw("desc");
            if (accept_kw("nulls")) {
                if (!accept_kw("first")) expect_kw("last");
            }
        } while (accept_op(","));
    }

    sql::SelectCore core() {
        sql::SelectCore c;
        if (accept_kw("values")) {
            c.is_values = true;
            do {
                expect_op("(");
                std::vector<ExprPtr> row;
                do row.push_back(expr());
                while (accept_op(","));
                expect_op(")");
                c.values.push_back(std::move(row));
            } while (accept_op(","));
            return c;
        }
        expect_kw("select");
        if (accept_kw("distinct")) c.distinct = true;
        else accept_kw("all");
        do c.columns.push_back(result_column());
        while (accept_op(","));
        if (accept_kw("from")) from_clause(c);
        if (accept_kw("where")) c.where = expr();
        if (accept_kw("group")) {
            expect_kw("by");
            do c.group_by.push_back(expr());
            while (accept_op(","));
        }
        if (accept_kw("having")) c.having = expr();
        if (accept_kw("window")) {
            do {
                name("window name");
                expect_kw("as");
                window_spec(c.window_exprs);
            } while (accept_op(","));
        }
        return c;
    }

    sql::ResultColumn result_column() {
        sql::ResultColumn rc;
        if (accept_op("*")) {
            rc.kind = sql::ResultColumn::Kind::Star;
            return rc;
        }
        if (name_token() && op(".", 1) && op("*", 2)) {
            rc.kind = sql::ResultColumn::Kind::TableStar;
            rc.table = advance().text;
            advance();
            advance();
            return rc;
        }
        rc.expr = expr();
        if (accept_kw("as")) {
            if (peek().type == Tok::String) rc.alias = advance().text;
            else rc.alias = name("alias").text;
        } else if (alias_token() || peek().type == Tok::String) {
            rc.alias = advance().text;
        }
        return rc;
    }

    void from_clause(sql::SelectCore& c) {
        from_item(c);
        for (;;) {
            if (accept_op(",")) {
                from_item(c);
                continue;
            }
            const std::size_t save = pos_;
            accept_kw("natural");
            if (accept_kw("left") || accept_kw("right") || accept_kw("full")) {
                accept_kw("outer");
            } else if (!accept_kw("inner")) {
                accept_kw("cross");
            }
            if (!accept_kw("join")) {
                if (pos_ != save) fail("expected JOIN near '" + peek().text + "'");
                break;
            }
            from_item(c);
            if (accept_kw("on")) {
                c.join_conditions.push_back(expr());
            } else if (accept_kw("using")) {
                expect_op("(");
                do {
                    const Token t = name("column name");
                    auto e = std::make_unique<Expr>();
                    e->kind = Expr::Kind::Column;
                    e->name = t.text;
                    e->offset = t.offset;
                    c.using_columns.push_back(std::move(e));
                } while (accept_op(","));
                expect_op(")");
            }
        }
    }

    void from_item(sql::SelectCore& c) {
        if (op("(")) {
            if (select_start(1)) {
                sql::FromItem item;
                item.offset = peek().offset;
                advance();
                item.kind = sql::FromItem::Kind::Subquery;
                item.subquery = select();
                expect_op(")");
                item.alias = optional_alias();
                c.from.push_back(std::move(item));
                return;
            }
            advance();
            from_clause(c);
            expect_op(")");
            return;
        }
        sql::FromItem item;
        item.offset = peek().offset;
        item.name = name("table name").text;
        if (accept_op(".")) item.name = name("table name").text;  // schema-qualified
        if (accept_op("(")) {
            item.kind = sql::FromItem::Kind::TableFunction;
            if (!op(")")) {
                do item.args.push_back(expr());
                while (accept_op(","));
            }
            expect_op(")");
        }
        item.alias = optional_alias();
        if (accept_kw("indexed")) {
            expect_kw("by");
            name("index name");
        } else if (kw("not") && kw("indexed", 1)) {
            advance();
            advance();
        }
        c.from.push_back(std::move(item));
    }

    std::string optional_alias() {
        if (accept_kw("as")) {
            if (peek().type == Tok::String) return advance().text;
            return name("alias").text;
        }
        if (alias_token()) return advance().text;
        return {};
    }

    // ── expressions (SQLite precedence, loosest first) ──

    ExprPtr make(Expr::Kind k, std::size_t offset) {
        auto e = std::make_unique<Expr>();
        e->kind = k;
        e->offset = offset;
        return e;
    }
    ExprPtr binary(ExprPtr l, ExprPtr r, std::size_t offset) {
        auto e = make(Expr::Kind::Operator, offset);
        e->children.push_back(std::move(l));
        if (r) e->children.push_back(std::move(r));
        return e;
    }

    ExprPtr expr() { return or_expr(); }

    ExprPtr or_expr() {
        auto l = and_expr();
        while (kw("or")) {
            const auto off = advance().offset;
            l = binary(std::move(l), and_expr(), off);
        }
        return l;
    }
    ExprPtr and_expr() {
        auto l = not_expr();
        while (kw("and")) {
            const auto off = advance().offset;
            l = binary(std::move(l), not_expr(), off);
        }
        return l;
    }
    ExprPtr not_expr() {
        if (kw("not")) {
            const auto off = advance().offset;
            return binary(not_expr(), nullptr, off);
        }
        return equality();
    }

    ExprPtr equality() {
        auto l = comparison();
        for (;;) {
            const std::size_t off = peek().offset;
            if (op("=") || op("==") || op("!=") || op("<>")) {
                advance();
                l = binary(std::move(l), comparison(), off);
                continue;
            }
            if (accept_kw("is")) {
                accept_kw("not");
                if (accept_kw("distinct")) expect_kw("from");
                l = binary(std::move(l), comparison(), off);
                continue;
            }
            if (accept_kw("isnull") || accept_kw("notnull")) {
                l = binary(std::move(l), nullptr, off);
                continue;
            }
            const bool negated = kw("not") &&
                                 (kw("in", 1) || kw("like", 1) || kw("glob", 1) || kw("regexp", 1) ||
                                  kw("match", 1) || kw("between", 1) || kw("null", 1));
            if (negated) advance();
            if (accept_kw("null")) {  // NOT NULL postfix
                l = binary(std::move(l), nullptr, off);
                continue;
            }
            if (accept_kw("in")) {
                auto e = binary(std::move(l), nullptr, off);
                if (accept_op("(")) {
                    if (select_start()) {
                        auto sub = make(Expr::Kind::Subquery, peek().offset);
                        sub->subquery = select();
                        e->children.push_back(std::move(sub));
                    } else if (!op(")")) {
                        do e->children.push_back(expr());
                        while (accept_op(","));
                    }
                    expect_op(")");
                } else {
                    // x IN table
                    auto sub = make(Expr::Kind::Subquery, peek().offset);
                    auto sel = std::make_shared<sql::Select>();
                    sql::SelectCore c;
                    sql::FromItem item;
                    item.offset = peek().offset;
                    item.name = name("table name").text;
                    c.from.push_back(std::move(item));
                    sql::ResultColumn star;
                    star.kind = sql::ResultColumn::Kind::Star;
                    c.columns.push_back(std::move(star));
                    sel->cores.push_back(std::move(c));
                    sub->subquery = std::move(sel);
                    e->children.push_back(std::move(sub));
                }
                l = std::move(e);
                continue;
            }
            if (accept_kw("like") || accept_kw("glob") || accept_kw("regexp") || accept_kw("match")) {
                l = binary(std::move(l), comparison(), off);
                if (accept_kw("escape")) l->children.push_back(comparison());
                continue;
            }
            if (accept_kw("between")) {
                auto e = binary(std::move(l), comparison(), off);
                expect_kw("and");
                e->children.push_back(comparison());
                l = std::move(e);
                continue;
            }
            if (negated) fail("unexpected NOT");
            return l;
        }
    }

    ExprPtr comparison() {
        auto l = bitwise();
        while (op("<") || op("<=") || op(">") || op(">=")) {
            const auto off = advance().offset;
            l = binary(std::move(l), bitwise(), off);
        }
        return l;
    }
    ExprPtr bitwise() {
        auto l = additive();
        while (op("&") || op("|") || op("<<") || op(">>")) {
            const auto off = advance().offset;
            l = binary(std::move(l), additive(), off);
        }
        return l;
    }
    ExprPtr additive() {
        auto l = multiplicative();
        while (op("+") || op("-")) {
            const auto off = advance().offset;
            l = binary(std::move(l), multiplicative(), off);
        }
        return l;
    }
    ExprPtr multiplicative() {
        auto l = concat();
        while (op("*") || op("/") || op("%")) {
            const auto off = advance().offset;
            l = binary(std::move(l), concat(), off);
        }
        return l;
    }
    ExprPtr concat() {
        auto l = unary();
        while (op("||") || op("->") || op("->>")) {
            const auto off = advance().offset;
            l = binary(std::move(l), unary(), off);
        }
        return l;
    }
    ExprPtr unary() {
        if (op("-") || op("+") || op("~")) {
            const auto off = advance().offset;
            return binary(unary(), nullptr, off);
        }
        auto e = primary();
        while (accept_kw("collate")) name("collation name");
        return e;
    }

    void type_name() {
        if (!(peek().type == Tok::Ident || peek().type == Tok::QuotedIdent)) fail("expected type name");
        while ((peek().type == Tok::Ident && !is_reserved(peek())) || peek().type == Tok::QuotedIdent) advance();
        if (accept_op("(")) {
            accept_op("+") || accept_op("-");
            if (peek().type != Tok::Number) fail("expected number in type");
            advance();
            if (accept_op(",")) {
                accept_op("+") || accept_op("-");
                if (peek().type != Tok::Number) fail("expected number in type");
                advance();
            }
            expect_op(")");
        }
    }

    void window_spec(std::vector<ExprPtr>& out) {
        expect_op("(");
        if (name_token() && !kw("partition") && !kw("order") && !kw("rows") && !kw("range") && !kw("groups")) {
            advance();  // base window name
        }
        if (accept_kw("partition")) {
            expect_kw("by");
            do out.push_back(expr());
            while (accept_op(","));
        }
        if (accept_kw("order")) {
            expect_kw("by");
            ordering_terms(out);
        }
        if (accept_kw("rows") || accept_kw("range") || accept_kw("groups")) {
            if (accept_kw("between")) {
                frame_bound(out);
                expect_kw("and");
                frame_bound(out);
            } else {
                frame_bound(out);
            }
            if (accept_kw("exclude")) {
                if (accept_kw("no")) expect_kw("others");
                else if (accept_kw("current")) expect_kw("row");
                else if (!accept_kw("group")) expect_kw("ties");
            }
        }
        expect_op(")");
    }

    void frame_bound(std::vector<ExprPtr>& out) {
        if (accept_kw("unbounded")) {
            if (!accept_kw("preceding")) expect_kw("following");
            return;
        }
        if (accept_kw("current")) {
            expect_kw("row");
            return;
        }
        out.push_back(bitwise());
        if (!accept_kw("preceding")) expect_kw("following");
    }

    ExprPtr function_call(const Token& fname) {
        auto e = make(Expr::Kind::Function, fname.offset);
        e->name = fname.text;
        expect_op("(");
        if (!op(")")) {
            if (accept_op("*")) {
                // count(*)
            } else {
                accept_kw("distinct") || accept_kw("all");
                do e->children.push_back(expr());
                while (accept_op(","));
                if (accept_kw("order")) {
                    expect_kw("by");
                    ordering_terms(e->children);
                }
            }
        }
        expect_op(")");
        if (accept_kw("filter")) {
            expect_op("(");
            expect_kw("where");
            e->children.push_back(expr());
            expect_op(")");
        }
        if (accept_kw("over")) {
            if (op("(")) window_spec(e->children);
            else name("window name");
        }
        return e;
    }

    ExprPtr primary() {
        const Token& t = peek();
        switch (t.type) {
        case Tok::Number:
        case Tok::String:
        case Tok::Blob:
        case Tok::Param: {
            auto e = make(Expr::Kind::Literal, t.offset);
            advance();
            return e;
        }
        case Tok::End: fail("expected expression at end of input");
        case Tok::Op:
            if (op("(")) {
                const auto off = advance().offset;
                if (select_start()) {
                    auto e = make(Expr::Kind::Subquery, off);
                    e->subquery = select();
                    expect_op(")");
                    return e;
                }
                auto e = make(Expr::Kind::Operator, off);
                do e->children.push_back(expr());
                while (accept_op(","));
                expect_op(")");
                return e;
            }
            fail("expected expression near '" + t.text + "'");
        case Tok::Ident:
        case Tok::QuotedIdent: break;
        }

        if (t.type == Tok::Ident) {
            const std::string w = fold_case(t.text);
            if (w == "null" || w == "current_date" || w == "current_time" || w == "current_timestamp" ||
                ((w == "true" || w == "false") && !op("(", 1) && !op(".", 1))) {
                auto e = make(Expr::Kind::Literal, t.offset);
                advance();
                return e;
            }
            if (w == "exists") {
                const auto off = advance().offset;
                expect_op("(");
                auto e = make(Expr::Kind::Subquery, off);
                e->subquery = select();
                expect_op(")");
                return e;
            }
            if (w == "cast") {
                const auto off = advance().offset;
                expect_op("(");
                auto e = make(Expr::Kind::Operator, off);
                e->children.push_back(expr());
                expect_kw("as");
                type_name();
                expect_op(")");
                return e;
            }
            if (w == "case") {
                const auto off = advance().offset;
                auto e = make(Expr::Kind::Operator, off);
                if (!kw("when")) e->children.push_back(expr());
                if (!kw("when")) fail("expected WHEN near '" + peek().text + "'");
                while (accept_kw("when")) {
                    e->children.push_back(expr());
                    expect_kw("then");
                    e->children.push_back(expr());
                }
                if (accept_kw("else")) e->children.push_back(expr());
                expect_kw("end");
                return e;
            }
            if (w == "raise") fail("RAISE is not supported outside triggers");
        }

        // Functions may be named by words reserved elsewhere (e.g. LIKE(), GLOB()).
        if (t.type == Tok::Ident && op("(", 1) && (!is_reserved(t) || fold_case(t.text) == "like" ||
                                                   fold_case(t.text) == "glob")) {
            const Token fname = advance();
            return function_call(fname);
        }
        if (!name_token()) fail("expected expression near '" + t.text + "'");
        const Token first = advance();
        auto e = make(Expr::Kind::Column, first.offset);
        if (accept_op(".")) {
            const Token second = name("column name");
            if (accept_op(".")) {
                const Token third = name("column name");  // schema.table.column
                e->qualifier = second.text;
                e->name = third.text;
            } else {
                e->qualifier = first.text;
                e->name = second.text;
            }
        } else {
            e->name = first.text;
            e->double_quoted = first.double_quoted;
        }
        return e;
    }
};

// ── resolution ──────────────────────────────────────────────────

struct Source {
    std::string visible;                 // folded alias or table name
    std::optional<std::string> base;     // folded base table
    std::optional<std::vector<std::string>> columns;  // folded, when known
};

struct Scope {
    std::vector<Source> sources;
    std::vector<std::string> result_aliases;  // folded
    const Scope* parent = nullptr;
};

struct CteEnv {
    std::string name;  // folded
    std::optional<std::vector<std::string>> columns;
};

class Resolver {
public:
    explicit Resolver(const SchemaCatalog* catalog) : catalog_(catalog) {}

    std::vector<ColumnRef> refs;
    std::set<std::string> tables;
    std::map<std::string, std::string> aliases;
    std::vector<std::string> unresolved;

    std::optional<std::vector<std::string>> select(const sql::Select& sel, const Scope* parent) {
        const std::size_t cte_mark = ctes_.size();
        for (const auto& cte : sel.ctes) {
            CteEnv env{fold_case(cte.name), std::nullopt};
            if (!cte.columns.empty()) {
                env.columns.emplace();
                for (const auto& c : cte.columns) env.columns->push_back(fold_case(c));
            }
            if (sel.recursive) ctes_.push_back(env);
            auto derived = select(*cte.select, parent);
            if (sel.recursive) ctes_.pop_back();
            if (!env.columns) env.columns = std::move(derived);
            ctes_.push_back(std::move(env));
        }
        std::optional<std::vector<std::string>> out;
        Scope last_scope;
        for (std::size_t i = 0; i < sel.cores.size(); ++i) {
            Scope scope;
            auto cols = core(sel.cores[i], parent, scope);
            if (i == 0) out = std::move(cols);
            last_scope = std::move(scope);
        }
        for (const auto& e : sel.order_by) expr(*e, last_scope);
        Scope outer;
        outer.parent = parent;
        if (sel.limit) expr(*sel.limit, outer);
        if (sel.offset) expr(*sel.offset, outer);
        ctes_.resize(cte_mark);
        return out;
    }

private:
    const SchemaCatalog* catalog_;
    std::vector<CteEnv> ctes_;

    const CteEnv* find_cte(const std::string& folded) const {
        for (auto it = ctes_.rbegin(); it != ctes_.rend(); ++it) {
            if (it->name == folded) return &*it;
        }
        return nullptr;
    }

    std::optional<std::vector<std::string>> base_columns(const std::string& table) const {
        if (!catalog_) return std::nullopt;
        const TableDef* t = catalog_->find_table(table);
        if (!t) return std::nullopt;
        std::vector<std::string> cols;
        for (const auto& c : t->columns) cols.push_back(fold_case(c.name));
        return cols;
    }

    std::optional<std::vector<std::string>> core(const sql::SelectCore& c, const Scope* parent, Scope& scope) {
        scope.parent = parent;
        if (c.is_values) {
            for (const auto& row : c.values) {
                for (const auto& e : row) expr(*e, scope);
            }
            std::vector<std::string> cols;
            if (!c.values.empty()) {
                for (std::size_t i = 0; i < c.values.front().size(); ++i) cols.push_back("column" + std::to_string(i + 1));
            }
            return cols;
        }
        for (const auto& item : c.from) {
            Source src;
            switch (item.kind) {
            case sql::FromItem::Kind::Table: {
                const std::string folded = fold_case(item.name);
                src.visible = item.alias.empty() ? folded : fold_case(item.alias);
                if (const CteEnv* cte = find_cte(folded)) {
                    src.columns = cte->columns;
                } else {
                    tables.insert(folded);
                    src.base = folded;
                    src.columns = base_columns(folded);
                    if (catalog_ && !catalog_->find_table(folded)) unresolved.push_back(folded);
                    if (!item.alias.empty()) aliases[src.visible] = folded;
                }
                break;
            }
            case sql::FromItem::Kind::Subquery:
                src.visible = fold_case(item.alias);
                src.columns = select(*item.subquery, parent);
                break;
            case sql::FromItem::Kind::TableFunction:
                src.visible = fold_case(item.alias.empty() ? item.name : item.alias);
                for (const auto& a : item.args) expr(*a, scope);
                break;
            }
            scope.sources.push_back(std::move(src));
        }
        for (const auto& rc : c.columns) {
            if (!rc.alias.empty()) scope.result_aliases.push_back(fold_case(rc.alias));
        }
        for (const auto& rc : c.columns) {
            if (rc.kind == sql::ResultColumn::Kind::Expr) {
                expr(*rc.expr, scope);
            } else if (rc.kind == sql::ResultColumn::Kind::TableStar) {
                qualifier_source(fold_case(rc.table), scope, rc.table);
            }
        }
        for (const auto& e : c.join_conditions) expr(*e, scope);
        for (const auto& e : c.using_columns) expr(*e, scope);
        if (c.where) expr(*c.where, scope);
        for (const auto& e : c.group_by) expr(*e, scope);
        if (c.having) expr(*c.having, scope);
        for (const auto& e : c.window_exprs) expr(*e, scope);
        return output_columns(c, scope);
    }

    std::optional<std::vector<std::string>> output_columns(const sql::SelectCore& c, const Scope& scope) const {
        std::vector<std::string> cols;
        for (const auto& rc : c.columns) {
            switch (rc.kind) {
            case sql::ResultColumn::Kind::Star:
                for (const auto& s : scope.sources) {
                    if (!s.columns) return std::nullopt;
                    cols.insert(cols.end(), s.columns->begin(), s.columns->end());
                }
                break;
            case sql::ResultColumn::Kind::TableStar: {
                const std::string q = fold_case(rc.table);
                auto it = std::find_if(scope.sources.begin(), scope.sources.end(),
                                       [&](const Source& s) { return s.visible == q; });
                if (it == scope.sources.end() || !it->columns) return std::nullopt;
                cols.insert(cols.end(), it->columns->begin(), it->columns->end());
                break;
            }
            case sql::ResultColumn::Kind::Expr:
                if (!rc.alias.empty()) cols.push_back(fold_case(rc.alias));
                else if (rc.expr->kind == Expr::Kind::Column) cols.push_back(fold_case(rc.expr->name));
                else cols.push_back("");
                break;
            }
        }
        return cols;
    }

    const Source* qualifier_source(const std::string& q, const Scope& scope, const std::string& raw) {
        for (const Scope* s = &scope; s; s = s->parent) {
            for (const auto& src : s->sources) {
                if (src.visible == q) return &src;
            }
        }
        if (catalog_ && !catalog_->find_table(q)) unresolved.push_back(fold_case(raw));
        return nullptr;
    }

    static bool is_rowid(const std::string& c) { return c == "rowid" || c == "oid" || c == "_rowid_"; }

    void column(const Expr& e, const Scope& scope) {
        ColumnRef ref;
        ref.qualifier = fold_case(e.qualifier);
        ref.column = fold_case(e.name);
        ref.double_quoted = e.double_quoted;
        ref.offset = e.offset;

        if (!ref.qualifier.empty()) {
            const Source* src = qualifier_source(ref.qualifier, scope, e.qualifier);
            if (src) {
                ref.resolved_table = src->base;
                if (src->columns && !is_rowid(ref.column) &&
                    std::find(src->columns->begin(), src->columns->end(), ref.column) == src->columns->end()) {
                    unresolved.push_back(ref.qualifier + "." + ref.column);
                }
            } else if (catalog_ && catalog_->find_table(ref.qualifier) &&
                       !catalog_->has_column(ref.qualifier, ref.column) && !is_rowid(ref.column)) {
                unresolved.push_back(ref.qualifier + "." + ref.column);
            }
            refs.push_back(std::move(ref));
            return;
        }

        bool unknown_source = false;
        bool found = false;
        for (const Scope* s = &scope; s && !found; s = s->parent) {
            std::vector<const Source*> hits;
            for (const auto& src : s->sources) {
                if (!src.columns) {
                    unknown_source = true;
                    continue;
                }
                if (std::find(src.columns->begin(), src.columns->end(), ref.column) != src.columns->end() ||
                    (is_rowid(ref.column) && src.base)) {
                    hits.push_back(&src);
                }
            }
            if (!hits.empty()) {
                found = true;
                ref.resolved_table = hits.front()->base;
            } else if (std::find(s->result_aliases.begin(), s->result_aliases.end(), ref.column) !=
                       s->result_aliases.end()) {
                found = true;
            } else if (s == &scope && s->sources.size() == 1 && s->sources.front().base && !s->sources.front().columns) {
                // Single unknown base table: the reference can only belong to it.
                ref.resolved_table = s->sources.front().base;
            }
        }
        if (!found && !unknown_source && catalog_) {
            if (ref.double_quoted) return;  // SQLite reads it as a string literal
            unresolved.push_back(ref.column);
        }
        refs.push_back(std::move(ref));
    }

    void expr(const Expr& e, const Scope& scope) {
        switch (e.kind) {
        case Expr::Kind::Column: column(e, scope); return;
        case Expr::Kind::Literal: return;
        case Expr::Kind::Subquery:
            if (e.subquery) select(*e.subquery, &scope);
            for (const auto& c : e.children) expr(*c, scope);
            return;
        case Expr::Kind::Function:
        case Expr::Kind::Operator:
            for (const auto& c : e.children) expr(*c, scope);
            return;
        }
    }
};

ParseFailure make_failure(std::string_view sql, std::size_t offset, std::string message) {
    ParseFailure f;
    f.offset = std::min(offset, sql.size());
    f.message = std::move(message);
    for (std::size_t i = 0; i < f.offset; ++i) {
        if (sql[i] == '\n') {
            ++f.line;
            f.column = 1;
        } else {
            ++f.column;
        }
    }
    return f;
}

template <typename T>
std::vector<T> sorted_unique(std::vector<T> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

} // namespace

std::string ParseFailure::describe() const {
    return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message;
}

ParseResult parse_sql(std::string_view text) {
    std::shared_ptr<sql::Select> tree;
    try {
        Parser parser(tokenize(text));
        tree = parser.statement();
    } catch (const SyntaxError& e) {
        return make_failure(text, e.offset, e.message);
    }

    SqlAst ast;
    Resolver resolver(nullptr);
    resolver.select(*tree, nullptr);
    ast.tables.assign(resolver.tables.begin(), resolver.tables.end());
    std::vector<std::string> cols;
    for (const auto& r : resolver.refs) cols.push_back(r.column);
    ast.columns = sorted_unique(std::move(cols));
    ast.column_refs = std::move(resolver.refs);
    ast.aliases = std::move(resolver.aliases);
    ast.has_order_by = !tree->order_by.empty();
    ast.has_limit = static_cast<bool>(tree->limit);
    const auto& first = tree->cores.front();
    ast.distinct = first.distinct;
    if (first.is_values) {
        ast.result_width = first.values.empty() ? 0 : first.values.front().size();
    } else {
        const bool starred = std::any_of(first.columns.begin(), first.columns.end(), [](const sql::ResultColumn& rc) {
            return rc.kind != sql::ResultColumn::Kind::Expr;
        });
        ast.result_width = starred ? 0 : first.columns.size();
    }
    ast.tree = std::move(tree);
    return ast;
}

std::vector<std::string> unresolved_identifiers(const SqlAst& ast, const SchemaCatalog& catalog) {
    if (!ast.tree) return {};
    Resolver resolver(&catalog);
    resolver.select(*ast.tree, nullptr);
    return sorted_unique(std::move(resolver.unresolved));
}

} // namespace sqlpref
