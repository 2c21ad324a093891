// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <sqlite3.h>
#include <unistd.h>

namespace sqlpref::testing {

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("sqlpref-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

void run_script(const std::filesystem::path& db_file, std::string_view script) {
    std::filesystem::create_directories(db_file.parent_path());
    sqlite3* db = nullptr;
    if (sqlite3_open(db_file.c_str(), &db) != SQLITE_OK) {
        sqlite3_close(db);
        throw std::runtime_error("cannot create " + db_file.string());
    }
    char* err = nullptr;
    const std::string sql(script);
    if (sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
        const std::string msg = err ? err : "unknown error";
        sqlite3_free(err);
        sqlite3_close(db);
        throw std::runtime_error(db_file.string() + ": " + msg);
    }
    sqlite3_close(db);
}

namespace {

constexpr std::string_view kFormula1Script = R"(
CREATE TABLE drivers (driverId INTEGER PRIMARY KEY, forename TEXT, surname TEXT, code TEXT, nationality TEXT, dob DATE);
INSERT INTO drivers VALUES
  (1, 'Lewis', 'Hamilton', 'HAM', 'British', '1985-01-07'),
  (2, 'Nico', 'Rosberg', 'ROS', 'German', '1985-06-27'),
  (3, 'Fernando', 'Alonso', 'ALO', 'Spanish', '1981-07-29'),
  (4, 'Kimi', 'Raikkonen', NULL, 'Finnish', '1979-10-17'),
  (5, 'Robert', 'Kubica', 'KUB', 'Polish', '1984-12-07'),
  (6, 'Scott', 'Speed', NULL, 'American', '1983-01-24'),
  (7, 'Michael', 'Andretti', NULL, 'American', '1962-10-05'),
  (8, 'Nick', 'Heidfeld', 'HEI', 'German', '1977-05-10');
CREATE TABLE races (raceId INTEGER PRIMARY KEY, year INTEGER, name TEXT);
INSERT INTO races VALUES (1, 2008, 'Australian Grand Prix'), (2, 2008, 'Malaysian Grand Prix'),
  (3, 2009, 'Australian Grand Prix');
CREATE TABLE results (
  resultId INTEGER PRIMARY KEY,
  raceId INTEGER REFERENCES races(raceId),
  driverId INTEGER REFERENCES drivers(driverId),
  points REAL, position INTEGER, fastestLapSpeed REAL);
INSERT INTO results VALUES
  (1, 1, 1, 10, 1, 218.3), (2, 1, 8, 8, 2, 217.586), (3, 1, 2, 6, 3, 216.719), (4, 1, 3, 5, 4, NULL),
  (5, 2, 4, 10, 1, 209.033), (6, 2, 5, 8, 2, 208.9), (7, 2, 1, 4, 5, 207.5),
  (8, 3, 1, 0, NULL, NULL), (9, 3, 2, 4.5, 5, 201.1), (10, 3, 8, 4.5, 6, 200.95);
)";

constexpr std::string_view kToxicologyScript = R"(
CREATE TABLE molecule (molecule_id TEXT PRIMARY KEY, label TEXT);
INSERT INTO molecule VALUES ('TR000', '+'), ('TR001', '+'), ('TR002', '-'), ('TR004', '-');
CREATE TABLE atom (atom_id TEXT PRIMARY KEY, molecule_id TEXT REFERENCES molecule(molecule_id), element TEXT);
INSERT INTO atom VALUES ('TR000_1', 'TR000', 'cl'), ('TR000_2', 'TR000', 'c'), ('TR001_1', 'TR001', 'c'),
  ('TR001_2', 'TR001', 'o'), ('TR002_1', 'TR002', 'n'), ('TR004_1', 'TR004', 'c'), ('TR004_2', 'TR004', 'c');
CREATE TABLE bond (bond_id TEXT PRIMARY KEY, molecule_id TEXT REFERENCES molecule(molecule_id), bond_type TEXT);
INSERT INTO bond VALUES ('TR000_1_2', 'TR000', '-'), ('TR001_1_2', 'TR001', '='), ('TR002_1_2', 'TR002', '#'),
  ('TR004_1_2', 'TR004', '#'), ('TR004_2_3', 'TR004', '#'), ('TR001_2_3', 'TR001', '-');
)";

constexpr std::string_view kFinancialScript = R"(
CREATE TABLE district (district_id INTEGER PRIMARY KEY, A2 TEXT, A3 TEXT, A11 INTEGER);
INSERT INTO district VALUES (1, 'Hl.m. Praha', 'Prague', 12541), (2, 'Benesov', 'central Bohemia', 8507),
  (3, 'Liberec', 'north Bohemia', 9650), (4, 'Decin', 'north Bohemia', 8441),
  (5, 'Jablonec n. Nisou', 'north Bohemia', 7500);
CREATE TABLE client (client_id INTEGER PRIMARY KEY, gender TEXT, district_id INTEGER REFERENCES district(district_id));
INSERT INTO client VALUES (1, 'M', 3), (2, 'F', 3), (3, 'M', 4), (4, 'M', 5), (5, 'F', 1), (6, 'M', 1), (7, 'M', 2);
CREATE TABLE account (account_id INTEGER PRIMARY KEY, district_id INTEGER REFERENCES district(district_id),
  frequency TEXT, date TEXT);
INSERT INTO account VALUES (1, 1, 'POPLATEK MESICNE', '1995-03-24'), (2, 3, 'POPLATEK TYDNE', '1993-02-26'),
  (3, 4, 'POPLATEK MESICNE', '1997-07-07'), (4, 2, NULL, '1996-02-21');
CREATE TABLE loan (loan_id INTEGER PRIMARY KEY, account_id INTEGER REFERENCES account(account_id),
  amount REAL, duration INTEGER, status TEXT);
INSERT INTO loan VALUES (1, 1, 80952.0, 24, 'A'), (2, 2, 30276.5, 12, 'B'), (3, 3, 30276.5, 60, 'A'),
  (4, 4, 0.1, 12, 'D'), (5, 1, 0.2, 12, 'C');
)";

constexpr const char* kRunaway = "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT count(*) FROM c";

} // namespace

void write_fixture_databases(const std::filesystem::path& root) {
    run_script(database_path(root, std::string(kFormula1)), kFormula1Script);
    run_script(database_path(root, std::string(kToxicology)), kToxicologyScript);
    run_script(database_path(root, std::string(kFinancial)), kFinancialScript);
}

const std::vector<FixturePair>& fixture_pairs() {
    using V = Verdict;
    const std::string f1(kFormula1);
    const std::string tx(kToxicology);
    const std::string fn(kFinancial);
    static const std::vector<FixturePair> pairs = {
        {"self_match", f1, "SELECT forename, surname FROM drivers WHERE nationality = 'American'",
         "SELECT forename, surname FROM drivers WHERE nationality = 'American'", false, V::Correct},
        {"unordered_gold_any_order", f1, "SELECT code FROM drivers WHERE code IS NOT NULL",
         "SELECT code FROM drivers WHERE code IS NOT NULL ORDER BY code DESC", false, V::Correct},
        {"ordered_gold_reversed", f1, "SELECT surname FROM drivers ORDER BY dob",
         "SELECT surname FROM drivers ORDER BY dob DESC", true, V::Incorrect},
        {"ordered_gold_same_order", f1, "SELECT surname FROM drivers ORDER BY dob LIMIT 3",
         "SELECT surname FROM drivers ORDER BY dob ASC LIMIT 3", true, V::Correct},
        {"entity_mismatch", f1, "SELECT forename FROM drivers WHERE nationality = 'American'",
         "SELECT forename FROM drivers WHERE nationality = 'America'", false, V::Incorrect},
        {"null_rows_dropped", f1, "SELECT code FROM drivers WHERE nationality = 'American'",
         "SELECT code FROM drivers WHERE nationality = 'American' AND code IS NOT NULL", false, V::Incorrect},
        {"null_equals_null", f1, "SELECT code FROM drivers WHERE nationality = 'Finnish'", "SELECT NULL", false,
         V::Correct},
        {"duplicates_collapsed", f1, "SELECT nationality FROM drivers WHERE nationality = 'German'",
         "SELECT DISTINCT nationality FROM drivers WHERE nationality = 'German'", false, V::Incorrect},
        {"duplicates_reordered", f1, "SELECT points FROM results WHERE raceId = 3",
         "SELECT points FROM results WHERE raceId = 3 ORDER BY points DESC", false, V::Correct},
        {"average_two_ways", f1, "SELECT AVG(points) FROM results WHERE raceId = 1",
         "SELECT SUM(points) / COUNT(points) FROM results WHERE raceId = 1", false, V::Correct},
        {"real_within_tolerance", f1, "SELECT fastestLapSpeed FROM results WHERE resultId = 2",
         "SELECT 217.5860000001", false, V::Correct},
        {"real_outside_tolerance", f1, "SELECT fastestLapSpeed FROM results WHERE resultId = 2", "SELECT 217.587",
         false, V::Incorrect},
        {"integral_real_vs_integer", f1, "SELECT points FROM results WHERE resultId = 1", "SELECT 10", false,
         V::Correct},
        {"column_order_matters", f1, "SELECT forename, surname FROM drivers WHERE driverId = 1",
         "SELECT surname, forename FROM drivers WHERE driverId = 1", false, V::Incorrect},
        {"unknown_column", f1, "SELECT surname FROM drivers", "SELECT driver_name FROM drivers", false,
         V::Nonexecutable},
        {"syntax_error", f1, "SELECT surname FROM drivers", "SELECT FROM drivers", false, V::Nonexecutable},
        {"runaway_query", f1, "SELECT count(*) FROM drivers", kRunaway, false, V::Nonexecutable},
        {"write_rejected", f1, "SELECT count(*) FROM drivers", "DELETE FROM drivers", false, V::Nonexecutable},
        {"two_statements", f1, "SELECT 1", "SELECT 1; SELECT 2", false, V::Nonexecutable},
        {"arity_mismatch", f1, "SELECT surname FROM drivers WHERE driverId = 2",
         "SELECT surname, forename FROM drivers WHERE driverId = 2", false, V::Incorrect},
        {"join_vs_subquery", f1,
         "SELECT T2.surname FROM results AS T1 INNER JOIN drivers AS T2 ON T1.driverId = T2.driverId "
         "WHERE T1.raceId = 2 AND T1.position = 1",
         "SELECT surname FROM drivers WHERE driverId IN (SELECT driverId FROM results WHERE raceId = 2 AND position = "
         "1)",
         false, V::Correct},
        {"both_empty", f1, "SELECT surname FROM drivers WHERE nationality = 'Brazilian'",
         "SELECT forename FROM drivers WHERE nationality = 'Brazilian'", false, V::Correct},
        {"count_star_vs_count_column", tx, "SELECT count(*) FROM bond WHERE bond_type = '#'",
         "SELECT COUNT(bond_id) FROM bond WHERE bond_type = '#'", false, V::Correct},
        {"text_case_sensitive", tx, "SELECT element FROM atom WHERE atom_id = 'TR000_1'", "SELECT 'Cl'", false,
         V::Incorrect},
        {"distinct_vs_in", tx, "SELECT DISTINCT T1.molecule_id FROM bond AS T1 WHERE T1.bond_type = '#'",
         "SELECT molecule_id FROM molecule WHERE molecule_id IN (SELECT molecule_id FROM bond WHERE bond_type = '#')",
         false, V::Correct},
        {"wrong_filter_value", tx, "SELECT label FROM molecule WHERE molecule_id = 'TR001'",
         "SELECT label FROM molecule WHERE molecule_id = 'TR002'", false, V::Incorrect},
        {"ordered_group_alias", tx,
         "SELECT molecule_id, COUNT(*) FROM atom GROUP BY molecule_id ORDER BY COUNT(*) DESC, molecule_id",
         "SELECT molecule_id, COUNT(atom_id) AS n FROM atom GROUP BY molecule_id ORDER BY n DESC, molecule_id ASC",
         true, V::Correct},
        {"unknown_table", tx, "SELECT * FROM bond", "SELECT * FROM bonds", false, V::Nonexecutable},
        {"condition_on_wrong_column", fn,
         "SELECT COUNT(*) FROM client AS T1 INNER JOIN district AS T2 ON T1.district_id = T2.district_id "
         "WHERE T2.A2 = 'Liberec' AND T1.gender = 'M'",
         "SELECT COUNT(*) FROM client AS T1 INNER JOIN district AS T2 ON T1.district_id = T2.district_id "
         "WHERE T2.A3 = 'north Bohemia' AND T1.gender = 'M'",
         false, V::Incorrect},
        {"region_value_format", fn,
         "SELECT COUNT(T1.client_id) FROM client AS T1 INNER JOIN district AS T2 ON T1.district_id = T2.district_id "
         "WHERE T2.A3 = 'north Bohemia' AND T1.gender = 'M' AND T2.A11 > 8000",
         "SELECT COUNT(client.client_id) FROM district INNER JOIN client ON district.district_id = client.district_id "
         "WHERE district.A3 = 'North Bohemia' AND client.gender = 'M' AND district.A11 > 8000",
         false, V::Incorrect},
        {"float_sum_tolerance", fn, "SELECT SUM(amount) FROM loan WHERE loan_id IN (4, 5)", "SELECT 0.3", false,
         V::Correct},
        {"null_group_key", fn, "SELECT frequency, COUNT(*) FROM account GROUP BY frequency",
         "SELECT frequency, COUNT(account_id) FROM account GROUP BY frequency", false, V::Correct},
        {"null_vs_empty_text", fn, "SELECT frequency FROM account WHERE account_id = 4", "SELECT ''", false,
         V::Incorrect},
        {"duplicate_amounts_grouped", fn, "SELECT amount FROM loan WHERE amount > 30000",
         "SELECT amount FROM loan WHERE amount > 30000 GROUP BY amount", false, V::Incorrect},
        {"blob_bytes", fn, "SELECT CAST('ab' AS BLOB)", "SELECT x'6162'", false, V::Correct},
    };
    return pairs;
}

DatasetItem item_for(const FixturePair& p) {
    return {p.name, "fixture question for " + p.name, "", p.db_id, p.gold};
}

std::string file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_random_instance(const std::filesystem::path& db_file, std::uint64_t seed, int rows) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> a_dist(0, 7);
    std::uniform_int_distribution<int> b_dist(0, 4);
    std::uniform_int_distribution<int> c_dist(0, 10);
    std::string script = "CREATE TABLE t (a INTEGER, b TEXT, c REAL);\n";
    for (int i = 0; i < rows; ++i) {
        const int b = b_dist(rng);
        const std::string b_sql = b == 0 ? "NULL" : "'" + std::string(1, static_cast<char>('w' + b - 1)) + "'";
        script += "INSERT INTO t VALUES (" + std::to_string(a_dist(rng)) + ", " + b_sql + ", " +
                  std::to_string(c_dist(rng) / 10.0) + ");\n";
    }
    run_script(db_file, script);
}

const std::vector<std::string>& suite_queries() {
    static const std::vector<std::string> queries = {
        "SELECT a FROM t WHERE a > 3",
        "SELECT a FROM t WHERE a >= 4",
        "SELECT COUNT(*) FROM t",
        "SELECT COUNT(b) FROM t",
        "SELECT b FROM t WHERE c > 0.5",
        "SELECT b FROM t WHERE c >= 0.5",
        "SELECT MAX(a) FROM t",
        "SELECT a FROM t ORDER BY a DESC LIMIT 1",
        "SELECT DISTINCT b FROM t",
        "SELECT b FROM t GROUP BY b",
        "SELECT a FROM t WHERE b = 'x'",
        "SELECT a FROM t WHERE b = 'x' OR b IS NULL",
    };
    return queries;
}

} // namespace sqlpref::testing
