// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include "sqlpref/cell.hpp"

#include <algorithm>
#include <cmath>

#include "sqlpref/error.hpp"
#include "sqlpref/util.hpp"

namespace sqlpref {

namespace {

constexpr double kTwo63 = 9223372036854775808.0;

std::string to_hex(const Blob& b) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(b.size() * 2);
    for (auto byte : b) {
        out += digits[byte >> 4];
        out += digits[byte & 0xF];
    }
    return out;
}

Blob from_hex(const std::string& s) {
    auto nibble = [&](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw Error(ErrorCode::MalformedRecord, "bad hex digit in blob: " + s);
    };
    if (s.size() % 2 != 0) throw Error(ErrorCode::MalformedRecord, "odd-length blob hex");
    Blob out(s.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<std::uint8_t>(nibble(s[2 * i]) << 4 | nibble(s[2 * i + 1]));
    }
    return out;
}

int kind_rank(CellKind k) {
    switch (k) {
    case CellKind::Null: return 0;
    case CellKind::Integer:
    case CellKind::Real: return 1;
    case CellKind::Text: return 2;
    case CellKind::Blob: return 3;
    }
    return 4;
}

} // namespace

Cell Cell::real(double v) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite real cell");
    if (v == std::trunc(v) && v >= -kTwo63 && v < kTwo63) {
        return Cell(static_cast<std::int64_t>(v));
    }
    Cell c;
    c.value_ = v;
    return c;
}

double Cell::as_number() const {
    if (kind() == CellKind::Integer) return static_cast<double>(as_integer());
    return as_real();
}

bool cells_match(const Cell& a, const Cell& b, double real_abs_tol) {
    if (a.is_numeric() && b.is_numeric()) {
        if (a.kind() == CellKind::Integer && b.kind() == CellKind::Integer) {
            return a.as_integer() == b.as_integer();
        }
        return std::fabs(a.as_number() - b.as_number()) <= real_abs_tol;
    }
    return a == b;
}

bool rows_match(const Row& a, const Row& b, double real_abs_tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!cells_match(a[i], b[i], real_abs_tol)) return false;
    }
    return true;
}

int compare_cells(const Cell& a, const Cell& b) {
    const int ra = kind_rank(a.kind()), rb = kind_rank(b.kind());
    if (ra != rb) return ra < rb ? -1 : 1;
    switch (a.kind()) {
    case CellKind::Null: return 0;
    case CellKind::Integer:
    case CellKind::Real: {
        if (a.kind() == CellKind::Integer && b.kind() == CellKind::Integer) {
            return a.as_integer() < b.as_integer() ? -1 : (a.as_integer() > b.as_integer() ? 1 : 0);
        }
        const double x = a.as_number(), y = b.as_number();
        if (x < y) return -1;
        if (x > y) return 1;
        // Equal as doubles but distinct cells (large integer vs real): integers first.
        if (a.kind() != b.kind()) return a.kind() == CellKind::Integer ? -1 : 1;
        return 0;
    }
    case CellKind::Text: return a.as_text().compare(b.as_text()) < 0 ? -1 : (a.as_text() == b.as_text() ? 0 : 1);
    case CellKind::Blob: {
        const auto& x = a.as_blob();
        const auto& y = b.as_blob();
        if (x == y) return 0;
        return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end()) ? -1 : 1;
    }
    }
    return 0;
}

bool row_less(const Row& a, const Row& b) {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        const int c = compare_cells(a[i], b[i]);
        if (c != 0) return c < 0;
    }
    return a.size() < b.size();
}

Cell snap_to_grid(const Cell& c, double tol) {
    if (c.kind() != CellKind::Real || tol <= 0.0) return c;
    const double snapped = std::round(c.as_real() / tol) * tol;
    if (!std::isfinite(snapped)) return c;
    return Cell::real(snapped);
}

std::string render_cell(const Cell& c) {
    switch (c.kind()) {
    case CellKind::Null: return "None";
    case CellKind::Integer: return std::to_string(c.as_integer());
    case CellKind::Real: return format_real(c.as_real());
    case CellKind::Text: return c.as_text();
    case CellKind::Blob: return "0x" + to_hex(c.as_blob());
    }
    return {};
}

nlohmann::json cell_to_json(const Cell& c) {
    switch (c.kind()) {
    case CellKind::Null: return nullptr;
    case CellKind::Integer: return c.as_integer();
    case CellKind::Real: return c.as_real();
    case CellKind::Text: return c.as_text();
    case CellKind::Blob: return nlohmann::json{{"blob", to_hex(c.as_blob())}};
    }
    return nullptr;
}

Cell cell_from_json(const nlohmann::json& j) {
    if (j.is_null()) return Cell();
    if (j.is_number_integer()) return Cell(j.get<std::int64_t>());
    if (j.is_number_float()) return Cell::real(j.get<double>());
    if (j.is_string()) return Cell(j.get<std::string>());
    if (j.is_boolean()) return Cell(static_cast<std::int64_t>(j.get<bool>() ? 1 : 0));
    if (j.is_object() && j.contains("blob") && j["blob"].is_string()) {
        return Cell(from_hex(j["blob"].get<std::string>()));
    }
    throw Error(ErrorCode::MalformedRecord, "unsupported cell value: " + j.dump());
}

} // namespace sqlpref
