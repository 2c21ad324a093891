// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace sqlpref {

using Blob = std::vector<std::uint8_t>;

enum class CellKind { Null, Integer, Real, Text, Blob };

/// One result-set cell. Reals are always finite and never integral: an integral
/// real is stored as an integer, so 2.0 and 2 are the same cell.
class Cell {
public:
    using Value = std::variant<std::monostate, std::int64_t, double, std::string, Blob>;

    Cell() = default;
    Cell(std::int64_t v) : value_(v) {}
    Cell(int v) : value_(static_cast<std::int64_t>(v)) {}
    Cell(std::string v) : value_(std::move(v)) {}
    Cell(const char* v) : value_(std::string(v)) {}
    Cell(Blob v) : value_(std::move(v)) {}

    /// Throws NON_FINITE for NaN/inf.
    static Cell real(double v);
    static Cell null() { return Cell(); }

    CellKind kind() const noexcept { return static_cast<CellKind>(value_.index()); }
    bool is_null() const noexcept { return kind() == CellKind::Null; }
    bool is_numeric() const noexcept {
        return kind() == CellKind::Integer || kind() == CellKind::Real;
    }
    const Value& value() const noexcept { return value_; }

    std::int64_t as_integer() const { return std::get<std::int64_t>(value_); }
    double as_real() const { return std::get<double>(value_); }
    double as_number() const;
    const std::string& as_text() const { return std::get<std::string>(value_); }
    const Blob& as_blob() const { return std::get<Blob>(value_); }

    friend bool operator==(const Cell&, const Cell&) = default;

private:
    Value value_;
};

using Row = std::vector<Cell>;

/// Result-comparison equality: NULL matches NULL, numbers match within `real_abs_tol`
/// (integers against integers exactly), text and blobs byte-exact.
bool cells_match(const Cell& a, const Cell& b, double real_abs_tol);
bool rows_match(const Row& a, const Row& b, double real_abs_tol);

/// Total order used for canonical sorting: NULL < numbers < text < blob.
int compare_cells(const Cell& a, const Cell& b);
bool row_less(const Row& a, const Row& b);

/// Snap reals to the `tol` grid (round(x / tol) * tol); a snapped integral value
/// becomes an integer. tol == 0 leaves the cell unchanged.
Cell snap_to_grid(const Cell& c, double tol);

/// Prompt rendering: NULL -> None, text unquoted, numbers in shortest round-trip form,
/// blobs as lowercase hex prefixed with 0x.
std::string render_cell(const Cell& c);

nlohmann::json cell_to_json(const Cell& c);
Cell cell_from_json(const nlohmann::json& j);

} // namespace sqlpref
