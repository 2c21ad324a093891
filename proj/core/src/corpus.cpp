// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include "sqlpref/corpus.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "sqlite_handle.hpp"
#include "sqlpref/error.hpp"
#include "sqlpref/util.hpp"

namespace sqlpref {

namespace {

using nlohmann::json;

std::string required_string(const json& rec, std::initializer_list<const char*> keys,
                            std::size_t index, const char* what) {
    for (const char* k : keys) {
        auto it = rec.find(k);
        if (it != rec.end() && it->is_string()) return it->get<std::string>();
    }
    throw Error(ErrorCode::MalformedRecord,
                "record " + std::to_string(index) + ": missing " + what);
}

std::string id_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    return v.dump();
}

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF.
std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        any = true;
        if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field += c;
        }
    }
    if (any || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string one_line(std::string_view s) {
    std::string out;
    for (char c : trim(s)) out += (c == '\n' || c == '\r' || c == '\t') ? ' ' : c;
    return out;
}

std::string render_column(const TableDef& t, const ColumnDef& c, bool primary) {
    std::string out = t.name + "." + c.name + " ( ";
    out += c.declared_type.empty() ? std::string("blob") : fold_case(c.declared_type);
    if (primary) out += " | primary key";
    if (c.comment && !c.comment->empty()) out += " | comment : " + *c.comment;
    if (!c.example_values.empty()) {
        out += " | values : ";
        for (std::size_t i = 0; i < c.example_values.size(); ++i) {
            if (i) out += " , ";
            out += render_cell(c.example_values[i]);
        }
    }
    out += " )";
    return out;
}

std::string prompt_tail(std::string_view question, std::string_view evidence) {
    std::string out = "Question: " + std::string(question) + "\n";
    if (!trim(evidence).empty()) out += "External Knowledge: " + std::string(evidence) + "\n";
    return out;
}

} // namespace

CorpusFormat parse_corpus_format(std::string_view name) {
    if (iequals(name, "bird")) return CorpusFormat::Bird;
    if (iequals(name, "spider")) return CorpusFormat::Spider;
    throw Error(ErrorCode::InvalidArgument, "unknown corpus format: " + std::string(name));
}

std::vector<DatasetItem> load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedRecord, path.string() + ": " + e.what());
    }
    if (!doc.is_array()) {
        throw Error(ErrorCode::MalformedRecord, path.string() + ": expected a JSON array");
    }
    std::vector<DatasetItem> items;
    items.reserve(doc.size());
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const json& rec = doc[i];
        if (!rec.is_object()) {
            throw Error(ErrorCode::MalformedRecord, "record " + std::to_string(i) + ": not an object");
        }
        DatasetItem item;
        item.question = required_string(rec, {"question"}, i, "question");
        item.db_id = required_string(rec, {"db_id"}, i, "db_id");
        if (format == CorpusFormat::Bird) {
            item.gold_sql = required_string(rec, {"SQL", "query"}, i, "SQL");
            if (auto it = rec.find("evidence"); it != rec.end() && it->is_string()) {
                item.evidence = it->get<std::string>();
            }
        } else {
            item.gold_sql = required_string(rec, {"query", "SQL"}, i, "query");
        }
        if (trim(item.gold_sql).empty()) {
            throw Error(ErrorCode::MalformedRecord, "record " + std::to_string(i) + ": empty SQL");
        }
        if (item.db_id.empty()) {
            throw Error(ErrorCode::MalformedRecord, "record " + std::to_string(i) + ": empty db_id");
        }
        auto qid = rec.find("question_id");
        item.item_id = qid != rec.end() ? id_string(*qid) : std::to_string(i);
        if (!seen.insert(item.item_id).second) {
            throw Error(ErrorCode::DuplicateId, "item_id " + item.item_id + " (record " +
                                                    std::to_string(i) + ")");
        }
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<DatasetItem> load_items_jsonl(const std::filesystem::path& path) {
    std::vector<DatasetItem> items;
    std::unordered_set<std::string> seen;
    const auto records = read_jsonl(path);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        DatasetItem item;
        item.item_id = required_string(rec, {"item_id"}, i, "item_id");
        item.question = required_string(rec, {"question"}, i, "question");
        item.db_id = required_string(rec, {"db_id"}, i, "db_id");
        item.gold_sql = required_string(rec, {"gold_sql"}, i, "gold_sql");
        if (auto it = rec.find("evidence"); it != rec.end() && it->is_string()) {
            item.evidence = it->get<std::string>();
        }
        if (trim(item.gold_sql).empty()) {
            throw Error(ErrorCode::MalformedRecord, "record " + std::to_string(i) + ": empty gold_sql");
        }
        if (!seen.insert(item.item_id).second) {
            throw Error(ErrorCode::DuplicateId, "item_id " + item.item_id);
        }
        items.push_back(std::move(item));
    }
    return items;
}

std::string items_to_jsonl(std::span<const DatasetItem> items) {
    std::vector<nlohmann::ordered_json> recs;
    recs.reserve(items.size());
    for (const auto& it : items) {
        nlohmann::ordered_json j;
        j["item_id"] = it.item_id;
        j["question"] = it.question;
        j["evidence"] = it.evidence;
        j["db_id"] = it.db_id;
        j["gold_sql"] = it.gold_sql;
        recs.push_back(std::move(j));
    }
    return to_jsonl(recs);
}

const ColumnDef* TableDef::find_column(std::string_view column) const {
    for (const auto& c : columns) {
        if (iequals(c.name, column)) return &c;
    }
    return nullptr;
}

const TableDef* SchemaCatalog::find_table(std::string_view table) const {
    for (const auto& t : tables) {
        if (iequals(t.name, table)) return &t;
    }
    return nullptr;
}

bool SchemaCatalog::has_column(std::string_view table, std::string_view column) const {
    const TableDef* t = find_table(table);
    return t && t->find_column(column);
}

bool SchemaCatalog::is_primary_key(std::string_view table, std::string_view column) const {
    return std::any_of(primary_keys.begin(), primary_keys.end(), [&](const ColumnKey& k) {
        return iequals(k.table, table) && iequals(k.column, column);
    });
}

void SchemaCatalog::validate() const {
    std::set<std::string> names;
    for (const auto& t : tables) {
        if (!names.insert(fold_case(t.name)).second) {
            throw Error(ErrorCode::InvalidArgument, "duplicate table " + t.name);
        }
        std::set<std::string> cols;
        for (const auto& c : t.columns) {
            if (!cols.insert(fold_case(c.name)).second) {
                throw Error(ErrorCode::InvalidArgument, "duplicate column " + t.name + "." + c.name);
            }
        }
    }
    for (const auto& k : primary_keys) {
        if (!has_column(k.table, k.column)) {
            throw Error(ErrorCode::InvalidArgument, "primary key " + k.table + "." + k.column +
                                                        " does not resolve");
        }
    }
    for (const auto& fk : foreign_keys) {
        if (!has_column(fk.from.table, fk.from.column) || !has_column(fk.to.table, fk.to.column)) {
            throw Error(ErrorCode::InvalidArgument, "foreign key " + fk.from.table + "." +
                                                        fk.from.column + " does not resolve");
        }
    }
}

SchemaCatalog introspect_schema(const std::filesystem::path& db_file, std::size_t value_budget,
                                std::string db_id) {
    std::string err;
    auto db = detail::open_readonly(db_file, err);
    if (!db) throw Error(ErrorCode::UnreadableDb, err);

    auto prepare = [&](const std::string& sql) {
        sqlite3_stmt* raw = nullptr;
        if (sqlite3_prepare_v2(db.get(), sql.c_str(), -1, &raw, nullptr) != SQLITE_OK) {
            throw Error(ErrorCode::UnreadableDb,
                        db_file.string() + ": " + sqlite3_errmsg(db.get()));
        }
        return detail::StmtHandle(raw);
    };
    auto text_col = [](sqlite3_stmt* s, int i) {
        const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(s, i));
        return std::string(p ? p : "");
    };

    SchemaCatalog cat;
    cat.db_id = db_id.empty() ? db_file.stem().string() : std::move(db_id);

    std::vector<std::string> table_names;
    {
        auto st = prepare("SELECT name FROM sqlite_master WHERE type = 'table' "
                          "AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\' ORDER BY rowid");
        int rc;
        while ((rc = sqlite3_step(st.get())) == SQLITE_ROW) table_names.push_back(text_col(st.get(), 0));
        if (rc != SQLITE_DONE) {
            throw Error(ErrorCode::UnreadableDb, db_file.string() + ": " + sqlite3_errmsg(db.get()));
        }
    }
    if (table_names.empty()) throw Error(ErrorCode::EmptySchema, db_file.string());

    struct RawFk {
        std::string from_table, from_col, to_table, to_col;
        int id, seq;
    };
    std::vector<RawFk> raw_fks;

    for (const auto& tname : table_names) {
        TableDef table;
        table.name = tname;
        std::vector<std::pair<int, std::string>> pk_cols;
        auto info = prepare("PRAGMA table_info(" + detail::quote_ident(tname) + ")");
        while (sqlite3_step(info.get()) == SQLITE_ROW) {
            ColumnDef col;
            col.name = text_col(info.get(), 1);
            col.declared_type = text_col(info.get(), 2);
            const int pk = sqlite3_column_int(info.get(), 5);
            if (pk > 0) pk_cols.emplace_back(pk, col.name);
            table.columns.push_back(std::move(col));
        }
        std::sort(pk_cols.begin(), pk_cols.end());
        for (const auto& [_, c] : pk_cols) cat.primary_keys.push_back({tname, c});

        auto fks = prepare("PRAGMA foreign_key_list(" + detail::quote_ident(tname) + ")");
        while (sqlite3_step(fks.get()) == SQLITE_ROW) {
            raw_fks.push_back({tname, text_col(fks.get(), 3), text_col(fks.get(), 2),
                               text_col(fks.get(), 4), sqlite3_column_int(fks.get(), 0),
                               sqlite3_column_int(fks.get(), 1)});
        }

        if (value_budget > 0 && !table.columns.empty()) {
            std::string order;
            for (const auto& [_, c] : pk_cols) {
                order += (order.empty() ? "" : ", ") + detail::quote_ident(c);
            }
            if (order.empty()) order = "rowid";
            std::string cols;
            for (const auto& c : table.columns) {
                cols += (cols.empty() ? "" : ", ") + detail::quote_ident(c.name);
            }
            auto sample = prepare("SELECT " + cols + " FROM " + detail::quote_ident(tname) +
                                  " ORDER BY " + order + " LIMIT " + std::to_string(value_budget));
            while (sqlite3_step(sample.get()) == SQLITE_ROW) {
                for (std::size_t i = 0; i < table.columns.size(); ++i) {
                    table.columns[i].example_values.push_back(
                        detail::read_column(sample.get(), static_cast<int>(i)));
                }
            }
        }
        cat.tables.push_back(std::move(table));
    }

    for (const auto& fk : raw_fks) {
        const TableDef* from = cat.find_table(fk.from_table);
        const TableDef* to = cat.find_table(fk.to_table);
        std::string to_col = fk.to_col;
        if (to && to_col.empty()) {
            // REFERENCES t without a column list targets t's primary key.
            std::vector<std::string> pk;
            for (const auto& k : cat.primary_keys) {
                if (iequals(k.table, to->name)) pk.push_back(k.column);
            }
            if (static_cast<std::size_t>(fk.seq) < pk.size()) to_col = pk[fk.seq];
        }
        const ColumnDef* fc = from ? from->find_column(fk.from_col) : nullptr;
        const ColumnDef* tc = to ? to->find_column(to_col) : nullptr;
        if (!fc || !tc) {
            spdlog::warn("{}: dropping unresolvable foreign key {}.{} -> {}.{}", cat.db_id,
                         fk.from_table, fk.from_col, fk.to_table, to_col);
            continue;
        }
        cat.foreign_keys.push_back({{from->name, fc->name}, {to->name, tc->name}});
    }
    return cat;
}

void attach_descriptions(SchemaCatalog& catalog, const std::filesystem::path& description_dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(description_dir, ec)) return;
    for (const auto& entry : std::filesystem::directory_iterator(description_dir)) {
        if (!entry.is_regular_file() || !iequals(entry.path().extension().string(), ".csv")) continue;
        TableDef* table = nullptr;
        for (auto& t : catalog.tables) {
            if (iequals(t.name, entry.path().stem().string())) table = &t;
        }
        if (!table) continue;
        std::string text = read_file(entry.path());
        if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
        const auto rows = parse_csv(text);
        if (rows.empty()) continue;
        int orig = -1, expanded = -1, desc = -1;
        for (std::size_t i = 0; i < rows[0].size(); ++i) {
            const auto h = fold_case(trim(rows[0][i]));
            if (h == "original_column_name") orig = static_cast<int>(i);
            if (h == "column_name") expanded = static_cast<int>(i);
            if (h == "column_description") desc = static_cast<int>(i);
        }
        if (orig < 0) continue;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& row = rows[r];
            auto cell = [&](int i) -> std::string {
                return i >= 0 && static_cast<std::size_t>(i) < row.size() ? one_line(row[i]) : std::string();
            };
            const std::string name = cell(orig);
            auto it = std::find_if(table->columns.begin(), table->columns.end(),
                                   [&](const ColumnDef& c) { return iequals(c.name, name); });
            if (it == table->columns.end()) continue;
            std::string comment = cell(expanded);
            if (comment.empty() || iequals(comment, name)) comment = cell(desc);
            if (!comment.empty()) it->comment = comment;
        }
    }
}

std::filesystem::path database_path(const std::filesystem::path& db_root, const std::string& db_id) {
    return db_root / db_id / (db_id + ".sqlite");
}

SchemaCatalog filter_catalog(const SchemaCatalog& catalog, const SchemaSelection& keep) {
    SchemaCatalog out;
    out.db_id = catalog.db_id;
    auto kept_table = [&](const std::string& t) {
        return std::any_of(keep.tables.begin(), keep.tables.end(),
                           [&](const std::string& k) { return iequals(k, t); });
    };
    for (const auto& t : catalog.tables) {
        if (!kept_table(t.name)) continue;
        const bool any_listed = std::any_of(keep.columns.begin(), keep.columns.end(),
                                            [&](const ColumnKey& k) { return iequals(k.table, t.name); });
        TableDef copy{t.name, {}};
        for (const auto& c : t.columns) {
            const bool listed = std::any_of(keep.columns.begin(), keep.columns.end(), [&](const ColumnKey& k) {
                return iequals(k.table, t.name) && iequals(k.column, c.name);
            });
            // Key columns stay so the key section remains resolvable.
            if (!any_listed || listed || catalog.is_primary_key(t.name, c.name)) copy.columns.push_back(c);
        }
        out.tables.push_back(std::move(copy));
    }
    for (const auto& k : catalog.primary_keys) {
        if (out.has_column(k.table, k.column)) out.primary_keys.push_back(k);
    }
    for (const auto& fk : catalog.foreign_keys) {
        if (out.has_column(fk.from.table, fk.from.column) && out.has_column(fk.to.table, fk.to.column)) {
            out.foreign_keys.push_back(fk);
        }
    }
    return out;
}

std::string render_schema(const SchemaCatalog& catalog) {
    std::string out;
    for (const auto& t : catalog.tables) {
        out += "Table " + t.name + ", columns = [ ";
        for (std::size_t i = 0; i < t.columns.size(); ++i) {
            if (i) out += " , ";
            out += render_column(t, t.columns[i], catalog.is_primary_key(t.name, t.columns[i].name));
        }
        out += " ]\n";
    }
    out += "primary keys :\n";
    for (const auto& k : catalog.primary_keys) out += k.table + "." + k.column + "\n";
    out += "foreign keys :\n";
    for (const auto& fk : catalog.foreign_keys) {
        out += fk.from.table + "." + fk.from.column + " = " + fk.to.table + "." + fk.to.column + "\n";
    }
    return out;
}

std::string build_database_prompt(const SchemaCatalog& catalog, std::string_view question,
                                  std::string_view evidence, const PromptOptions& opts) {
    if (catalog.tables.empty()) throw Error(ErrorCode::EmptySchema, catalog.db_id);
    const std::string tail = prompt_tail(question, evidence);
    std::string prompt = render_schema(catalog) + tail;
    if (opts.max_chars == 0 || prompt.size() <= opts.max_chars) return prompt;

    SchemaCatalog reduced = catalog;
    for (auto& t : reduced.tables) {
        for (auto& c : t.columns) c.example_values.clear();
    }
    prompt = render_schema(reduced) + tail;
    while (prompt.size() > opts.max_chars && reduced.tables.size() > 1) {
        SchemaSelection keep;
        for (std::size_t i = 0; i + 1 < reduced.tables.size(); ++i) keep.tables.push_back(reduced.tables[i].name);
        reduced = filter_catalog(reduced, keep);
        prompt = render_schema(reduced) + tail;
    }
    return prompt;
}

} // namespace sqlpref
