// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include "sqlpref/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "sqlpref/sql_parser.hpp"
#include "sqlpref/util.hpp"

namespace sqlpref {

namespace {

struct CategoryInfo {
    ErrorCategory category;
    std::string_view name;
    std::string_view title;
    std::string_view group;
    std::string_view description;
};

constexpr std::array<CategoryInfo, kCategoryCount> kCategories = {{
    {ErrorCategory::G, "G", "G", "", ""},
    {ErrorCategory::A1, "A1", "[A1] EK", "External Knowledge", "Neglect of hints"},
    {ErrorCategory::B1, "B1", "[B1] Table", "Schema Linking",
     "Fails to match the question with its concerning table and columns"},
    {ErrorCategory::B2, "B2", "[B2] JOIN", "Schema Linking", ""},
    {ErrorCategory::B3, "B3", "[B3] Column", "Schema Linking", ""},
    {ErrorCategory::B4, "B4", "[B4] Hallucination", "Schema Linking", ""},
    {ErrorCategory::B5, "B5", "[B5] Condition", "Schema Linking", ""},
    {ErrorCategory::B6, "B6", "[B6] NULL/DISTINCT", "Schema Linking", ""},
    {ErrorCategory::C1, "C1", "[C1] String/Number", "Value Retrieval",
     "Mismatch of condition with its storage format"},
    {ErrorCategory::C2, "C2", "[C2] Date", "Value Retrieval", ""},
    {ErrorCategory::D1, "D1", "[D1] Mathematical Formula", "Operation",
     "Misunderstands required operation in the question."},
    {ErrorCategory::D2, "D2", "[D2] Aggregation", "Operation", ""},
    {ErrorCategory::D3, "D3", "[D3] Complex Operation", "Operation", ""},
    {ErrorCategory::E1, "E1", "[E1] Redundant/Incomplete", "Information",
     "Fails to organize information in the right way"},
    {ErrorCategory::E2, "E2", "[E2] Column Sequence", "Information", ""},
    {ErrorCategory::E3, "E3", "[E3] ORDER BY/LIMIT", "Information", ""},
    {ErrorCategory::E4, "E4", "[E4] Format", "Information", ""},
    {ErrorCategory::F1, "F1", "[F1] Syntax", "Syntax Error", "Inexecutatble SQL"},
    {ErrorCategory::Unclassified, "UNCLASSIFIED", "UNCLASSIFIED", "", ""},
}};

const CategoryInfo& info(ErrorCategory c) { return kCategories[static_cast<std::size_t>(c)]; }

std::size_t index_of(ErrorCategory c) { return static_cast<std::size_t>(c); }

ExecutionOutcome with_rows(std::vector<Row> rows) {
    ExecutionOutcome o;
    o.rows = std::move(rows);
    return o;
}

std::vector<Row> permute_columns(const std::vector<Row>& rows, const std::vector<std::size_t>& cols) {
    std::vector<Row> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        Row p;
        p.reserve(cols.size());
        for (std::size_t c : cols) p.push_back(r[c]);
        out.push_back(std::move(p));
    }
    return out;
}

bool column_permutation_matches(const ExecutionOutcome& gold, const ExecutionOutcome& pred, bool ordered,
                                const ExecConfig& cfg) {
    const std::size_t w = gold.arity();
    if (w < 2 || w != pred.arity() || gold.rows.size() != pred.rows.size()) return false;
    std::vector<std::size_t> perm(w);
    std::iota(perm.begin(), perm.end(), 0);
    while (std::next_permutation(perm.begin(), perm.end())) {
        if (results_match(gold, with_rows(permute_columns(pred.rows, perm)), ordered, cfg)) return true;
    }
    return false;
}

// Tries every injective mapping of the narrow side's columns into the wide side.
bool projection_matches(const ExecutionOutcome& narrow, const ExecutionOutcome& wide, bool ordered,
                        const ExecConfig& cfg) {
    const std::size_t n = narrow.arity(), w = wide.arity();
    if (n == 0 || n >= w || narrow.rows.size() != wide.rows.size()) return false;
    std::vector<std::size_t> pick;
    std::vector<char> used(w, 0);
    std::function<bool()> search = [&]() {
        if (pick.size() == n) return results_match(narrow, with_rows(permute_columns(wide.rows, pick)), ordered, cfg);
        for (std::size_t c = 0; c < w; ++c) {
            if (used[c]) continue;
            used[c] = 1;
            pick.push_back(c);
            const bool hit = search();
            pick.pop_back();
            used[c] = 0;
            if (hit) return true;
        }
        return false;
    };
    return search();
}

std::vector<Row> distinct_rows(std::vector<Row> rows, double tol) {
    std::sort(rows.begin(), rows.end(), row_less);
    std::vector<Row> out;
    for (auto& r : rows) {
        if (out.empty() || !rows_match(out.back(), r, tol)) out.push_back(std::move(r));
    }
    return out;
}

std::vector<Row> drop_null_rows(const std::vector<Row>& rows) {
    std::vector<Row> out;
    for (const auto& r : rows) {
        if (std::none_of(r.begin(), r.end(), [](const Cell& c) { return c.is_null(); })) out.push_back(r);
    }
    return out;
}

bool null_or_distinct_matches(const ExecutionOutcome& gold, const ExecutionOutcome& pred, bool ordered,
                              const ExecConfig& cfg) {
    const double tol = cfg.real_abs_tol;
    if (results_match(with_rows(distinct_rows(gold.rows, tol)), with_rows(distinct_rows(pred.rows, tol)), false, cfg)) {
        return true;
    }
    const auto gold_nn = drop_null_rows(gold.rows);
    if (gold_nn.size() != gold.rows.size() && results_match(with_rows(gold_nn), pred, ordered, cfg)) return true;
    const auto pred_nn = drop_null_rows(pred.rows);
    return pred_nn.size() != pred.rows.size() && results_match(gold, with_rows(pred_nn), ordered, cfg);
}

} // namespace

const std::array<ErrorCategory, kCategoryCount>& all_categories() {
    static const std::array<ErrorCategory, kCategoryCount> cats = [] {
        std::array<ErrorCategory, kCategoryCount> a{};
        for (std::size_t i = 0; i < kCategoryCount; ++i) a[i] = kCategories[i].category;
        return a;
    }();
    return cats;
}

std::string_view category_name(ErrorCategory c) { return info(c).name; }
std::string_view category_title(ErrorCategory c) { return info(c).title; }

std::optional<ErrorCategory> parse_category(std::string_view name) {
    for (const auto& ci : kCategories) {
        if (ci.name == name) return ci.category;
    }
    return std::nullopt;
}

std::string_view provenance_name(Provenance p) { return p == Provenance::Auto ? "AUTO" : "MANUAL"; }

ErrorLabel auto_label(const OutcomeRecord& record, const SchemaCatalog& catalog, double real_abs_tol) {
    auto label = [](ErrorCategory c) { return ErrorLabel{c, Provenance::Auto}; };
    if (record.verdict == Verdict::Correct) return label(ErrorCategory::G);
    if (record.extracted_sql) {
        const auto parsed = parse_sql(*record.extracted_sql);
        if (parsed && !unresolved_identifiers(parsed.ast(), catalog).empty()) return label(ErrorCategory::B4);
    }
    if (record.verdict == Verdict::Nonexecutable) return label(ErrorCategory::F1);

    const std::string key = rollout_key(record.item_id, record.checkpoint_tag, record.sample_index);
    if (!record.gold || !record.pred || record.gold->status != ExecStatus::Rows ||
        record.pred->status != ExecStatus::Rows) {
        throw Error(ErrorCode::MissingOutcome, "no gold and predicted result rows for " + key);
    }
    const auto& gold = *record.gold;
    const auto& pred = *record.pred;
    ExecConfig cfg;
    cfg.real_abs_tol = real_abs_tol;
    const bool ordered = record.order_sensitive;

    const std::size_t widest = std::max(gold.arity(), pred.arity());
    if (widest > kMaxPermutationWidth) {
        spdlog::warn("{}: result width {} exceeds {}, skipping column permutation and projection checks", key, widest,
                     kMaxPermutationWidth);
    } else {
        if (column_permutation_matches(gold, pred, ordered, cfg)) return label(ErrorCategory::E2);
        if (projection_matches(gold, pred, ordered, cfg) || projection_matches(pred, gold, ordered, cfg)) {
            return label(ErrorCategory::E1);
        }
    }
    if (null_or_distinct_matches(gold, pred, ordered, cfg)) return label(ErrorCategory::B6);
    return label(ErrorCategory::Unclassified);
}

std::map<LabelKey, ErrorCategory> ingest_manual_labels(const std::filesystem::path& path) {
    std::map<LabelKey, ErrorCategory> out;
    const auto records = read_jsonl(path);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& j = records[i];
        const std::string where = path.string() + " record " + std::to_string(i);
        std::string item_id, tag, name;
        try {
            item_id = j.at("item_id").is_string() ? j.at("item_id").get<std::string>()
                                                  : std::to_string(j.at("item_id").get<std::int64_t>());
            tag = j.at("checkpoint_tag").get<std::string>();
            name = j.at("category").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::MalformedRecord, where + ": " + e.what());
        }
        const auto cat = parse_category(name);
        if (!cat || *cat == ErrorCategory::G) {
            throw Error(ErrorCode::UnknownCategory, where + ": category '" + name + "' cannot be assigned manually");
        }
        if (!out.emplace(LabelKey{item_id, tag}, *cat).second) {
            throw Error(ErrorCode::DuplicateKey, where + ": second label for " + item_id + "/" + tag);
        }
    }
    return out;
}

std::size_t apply_manual_labels(std::vector<LabelRecord>& labels, const std::map<LabelKey, ErrorCategory>& manual) {
    std::size_t applied = 0;
    for (auto& rec : labels) {
        const auto it = manual.find(LabelKey{rec.item_id, rec.checkpoint_tag});
        if (it == manual.end()) continue;
        if (rec.label.category == ErrorCategory::G) {
            throw Error(ErrorCode::LabelOnCorrect,
                        "manual label " + std::string(category_name(it->second)) + " on correct prediction " +
                            rec.item_id + "/" + rec.checkpoint_tag);
        }
        rec.label = {it->second, Provenance::Manual};
        ++applied;
    }
    return applied;
}

std::string labels_to_jsonl(std::span<const LabelRecord> labels) {
    std::vector<nlohmann::ordered_json> lines;
    lines.reserve(labels.size());
    for (const auto& l : labels) {
        nlohmann::ordered_json j;
        j["item_id"] = l.item_id;
        j["checkpoint_tag"] = l.checkpoint_tag;
        j["category"] = category_name(l.label.category);
        j["provenance"] = provenance_name(l.label.provenance);
        lines.push_back(std::move(j));
    }
    return to_jsonl(lines);
}

namespace {

void check_same_items(const ItemLabels& before, const ItemLabels& after) {
    if (before.size() == after.size() &&
        std::equal(before.begin(), before.end(), after.begin(), [](const auto& a, const auto& b) {
            return a.first == b.first;
        })) {
        return;
    }
    for (const auto& [id, _] : before) {
        if (!after.count(id)) throw Error(ErrorCode::ItemSetMismatch, "item " + id + " has no label after");
    }
    for (const auto& [id, _] : after) {
        if (!before.count(id)) throw Error(ErrorCode::ItemSetMismatch, "item " + id + " has no label before");
    }
}

} // namespace

std::vector<FixRate> fix_rates(const ItemLabels& before, const ItemLabels& after) {
    const auto m = transition_matrix(before, after);
    std::vector<FixRate> out;
    for (ErrorCategory c : all_categories()) {
        if (c == ErrorCategory::G) continue;
        FixRate f;
        f.category = c;
        const auto& row = m[index_of(c)];
        f.total = std::accumulate(row.begin(), row.end(), std::size_t{0});
        f.fixed = row[index_of(ErrorCategory::G)];
        if (f.total > 0) f.rate = 100.0 * static_cast<double>(f.fixed) / static_cast<double>(f.total);
        out.push_back(f);
    }
    return out;
}

std::string format_fix_rate(std::size_t fixed, std::size_t total) {
    if (total == 0) return "-";
    const double pct = std::round(1000.0 * static_cast<double>(fixed) / static_cast<double>(total)) / 10.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f (%zu/%zu)", pct, fixed, total);
    return buf;
}

TransitionMatrix transition_matrix(const ItemLabels& before, const ItemLabels& after) {
    check_same_items(before, after);
    TransitionMatrix m{};
    for (const auto& [id, a] : before) ++m[index_of(a)][index_of(after.at(id))];
    return m;
}

std::string transition_matrix_csv(const TransitionMatrix& m) {
    std::ostringstream out;
    out << "before\\after";
    for (ErrorCategory c : all_categories()) out << ',' << category_name(c);
    out << '\n';
    for (ErrorCategory a : all_categories()) {
        out << category_name(a);
        for (ErrorCategory b : all_categories()) out << ',' << m[index_of(a)][index_of(b)];
        out << '\n';
    }
    return out.str();
}

std::string fix_rate_table_markdown(std::span<const FixRate> rates) {
    std::ostringstream out;
    out << "| Category | Description | Type | DPO Fix (%) |\n";
    out << "|---|---|---|---|\n";
    for (const auto& r : rates) {
        const auto& ci = info(r.category);
        out << "| " << ci.group << " | " << ci.description << " | " << ci.title << " | "
            << format_fix_rate(r.fixed, r.total) << " |\n";
    }
    return out.str();
}

std::size_t utf8_length(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
}

OutputStats output_stats(std::span<const Rollout> rollouts) {
    if (rollouts.empty()) throw Error(ErrorCode::EmptySet, "no rollouts");
    OutputStats s;
    s.checkpoint_tag = rollouts.front().checkpoint_tag;
    s.n_rollouts = rollouts.size();
    std::size_t chars = 0, nonexec = 0;
    for (const auto& r : rollouts) {
        if (!r.verdict) {
            throw Error(ErrorCode::UnjudgedRollout,
                        "rollout " + rollout_key(r.item_id, r.checkpoint_tag, r.sample_index) + " has no verdict");
        }
        if (r.extracted_sql) chars += utf8_length(*r.extracted_sql);
        nonexec += *r.verdict == Verdict::Nonexecutable || !r.extracted_sql;
    }
    const auto n = static_cast<double>(rollouts.size());
    s.mean_sql_chars = static_cast<double>(chars) / n;
    s.nonexecutable_pct = 100.0 * static_cast<double>(nonexec) / n;
    return s;
}

nlohmann::ordered_json output_stats_to_json(const OutputStats& s) {
    nlohmann::ordered_json j;
    j["checkpoint_tag"] = s.checkpoint_tag;
    j["n_rollouts"] = s.n_rollouts;
    j["mean_sql_chars"] = s.mean_sql_chars;
    j["nonexecutable_pct"] = s.nonexecutable_pct;
    return j;
}

} // namespace sqlpref
