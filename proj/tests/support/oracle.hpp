// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "sqlpref/executor.hpp"

namespace sqlpref::testing {

/// Reference comparator written directly against the SQLite C API, sharing no
/// code with the harness: step-budget timeouts, value-by-value comparison, and
/// a backtracking search for a row bijection instead of sorting.
struct OracleValue {
    std::variant<std::monostate, std::int64_t, double, std::string, std::vector<unsigned char>> v;
};

struct OracleResult {
    enum class Kind { Rows, Error, Timeout } kind = Kind::Rows;
    std::vector<std::vector<OracleValue>> rows;
};

/// Runs one statement read-only. More than `max_steps` thousand VM steps is a
/// timeout; trailing statements are an error.
OracleResult oracle_run(const std::filesystem::path& db_file, const std::string& sql,
                        std::int64_t max_steps = 20000);

bool oracle_values_equal(const OracleValue& a, const OracleValue& b, double tol);

/// Multiset (or sequence when `ordered`) equality by exhaustive matching.
bool oracle_rows_match(const OracleResult& gold, const OracleResult& pred, bool ordered, double tol);

Verdict oracle_verdict(const std::filesystem::path& db_file, const std::string& gold, const std::string& pred,
                       bool ordered, double tol = 1e-6);

} // namespace sqlpref::testing
