// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqlpref/cell.hpp"

namespace sqlpref {

/// One <question, database, SQL> benchmark sample.
struct DatasetItem {
    std::string item_id;
    std::string question;
    std::string evidence;  // Bird "evidence" hints; empty for Spider
    std::string db_id;
    std::string gold_sql;

    friend bool operator==(const DatasetItem&, const DatasetItem&) = default;
};

enum class CorpusFormat { Bird, Spider };

CorpusFormat parse_corpus_format(std::string_view name);

/// Reads a benchmark JSON array. Item ids come from "question_id" when present,
/// otherwise the record's index. Order is preserved.
std::vector<DatasetItem> load_corpus(const std::filesystem::path& path, CorpusFormat format);

/// items.jsonl: one object per line with fields item_id,question,evidence,db_id,gold_sql.
std::vector<DatasetItem> load_items_jsonl(const std::filesystem::path& path);
std::string items_to_jsonl(std::span<const DatasetItem> items);

struct ColumnDef {
    std::string name;
    std::string declared_type;
    std::optional<std::string> comment;
    std::vector<Cell> example_values;
};

struct TableDef {
    std::string name;
    std::vector<ColumnDef> columns;

    const ColumnDef* find_column(std::string_view column) const;
};

struct ColumnKey {
    std::string table;
    std::string column;
    friend bool operator==(const ColumnKey&, const ColumnKey&) = default;
};

struct ForeignKey {
    ColumnKey from;
    ColumnKey to;
};

/// Schema of one database. Table and column lookups are case-insensitive.
struct SchemaCatalog {
    std::string db_id;
    std::vector<TableDef> tables;
    std::vector<ColumnKey> primary_keys;
    std::vector<ForeignKey> foreign_keys;

    const TableDef* find_table(std::string_view table) const;
    bool has_column(std::string_view table, std::string_view column) const;
    bool is_primary_key(std::string_view table, std::string_view column) const;

    /// Throws INVALID_ARGUMENT if names collide or key endpoints do not resolve.
    void validate() const;
};

/// Enumerates user tables in creation order and columns in declaration order.
/// Example values are the first `value_budget` rows in primary-key (or rowid) order.
SchemaCatalog introspect_schema(const std::filesystem::path& db_file, std::size_t value_budget,
                                std::string db_id = {});

/// Fills column comments from a Bird `database_description/<table>.csv` directory:
/// the expanded column name, or the description when no expanded name is given.
/// Missing files are skipped.
void attach_descriptions(SchemaCatalog& catalog, const std::filesystem::path& description_dir);

/// `<db_root>/<db_id>/<db_id>.sqlite`
std::filesystem::path database_path(const std::filesystem::path& db_root, const std::string& db_id);

/// Keeps only the listed tables/columns (a pre-computed schema-linking result).
/// An empty column list for a kept table keeps all of its columns.
struct SchemaSelection {
    std::vector<std::string> tables;
    std::vector<ColumnKey> columns;
};
SchemaCatalog filter_catalog(const SchemaCatalog& catalog, const SchemaSelection& keep);

struct PromptOptions {
    /// 0 means unlimited. When the prompt is longer, example values are dropped
    /// first, then whole tables from the end; question and evidence always remain.
    std::size_t max_chars = 0;
};

/// Schema part of the database prompt:
///   Table t, columns = [ t.c ( type | primary key | comment : ... | values : v1 , v2 ) , ... ]
/// one line per table, followed by "primary keys :" and "foreign keys :" sections.
std::string render_schema(const SchemaCatalog& catalog);

/// render_schema + "Question: ..." + "External Knowledge: ..." (omitted when empty).
std::string build_database_prompt(const SchemaCatalog& catalog, std::string_view question,
                                  std::string_view evidence, const PromptOptions& opts = {});

} // namespace sqlpref
