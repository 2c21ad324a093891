// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "sqlpref/analysis.hpp"
#include "sqlpref/error.hpp"
#include "sqlpref/util.hpp"

namespace sqlpref {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::InvalidArgument;
}

TEST(Categories, NamesRoundTrip) {
    EXPECT_EQ(all_categories().size(), kCategoryCount);
    EXPECT_EQ(all_categories().front(), ErrorCategory::G);
    EXPECT_EQ(all_categories().back(), ErrorCategory::Unclassified);
    for (const auto c : all_categories()) EXPECT_EQ(parse_category(category_name(c)), c);
    EXPECT_EQ(category_name(ErrorCategory::B6), "B6");
    EXPECT_EQ(category_name(ErrorCategory::Unclassified), "UNCLASSIFIED");
    EXPECT_FALSE(parse_category("Z9").has_value());
}

TEST(FixRate, Formatting) {
    EXPECT_EQ(format_fix_rate(12, 30), "40.0 (12/30)");
    EXPECT_EQ(format_fix_rate(0, 5), "0.0 (0/5)");
    EXPECT_EQ(format_fix_rate(1, 3), "33.3 (1/3)");
    EXPECT_EQ(format_fix_rate(2, 3), "66.7 (2/3)");
    EXPECT_EQ(format_fix_rate(1, 16), "6.3 (1/16)");
    EXPECT_EQ(format_fix_rate(0, 0), "-");
}

TEST(FixRate, RatesAndMismatch) {
    const ItemLabels before = {{"a", ErrorCategory::E1}, {"b", ErrorCategory::E1}, {"c", ErrorCategory::G}};
    const ItemLabels after = {{"a", ErrorCategory::G}, {"b", ErrorCategory::B6}, {"c", ErrorCategory::F1}};
    const auto rates = fix_rates(before, after);
    EXPECT_EQ(rates.size(), kCategoryCount - 1);
    for (const auto& r : rates) {
        EXPECT_NE(r.category, ErrorCategory::G);
        if (r.category == ErrorCategory::E1) {
            EXPECT_EQ(r.fixed, 1u);
            EXPECT_EQ(r.total, 2u);
            EXPECT_EQ(r.rate, 50.0);
        } else {
            EXPECT_EQ(r.total, 0u);
            EXPECT_FALSE(r.rate.has_value());
        }
    }
    const ItemLabels other = {{"a", ErrorCategory::G}};
    EXPECT_EQ(code_of([&] { fix_rates(before, other); }), ErrorCode::ItemSetMismatch);
    EXPECT_EQ(code_of([&] { transition_matrix(before, other); }), ErrorCode::ItemSetMismatch);
    const auto md = fix_rate_table_markdown(rates);
    EXPECT_NE(md.find("50.0 (1/2)"), std::string::npos) << md;
}

TEST(Transitions, ConservationProperty) {
    std::mt19937_64 rng(17);
    const auto& cats = all_categories();
    for (int t = 0; t < 100; ++t) {
        ItemLabels b;
        ItemLabels a;
        const std::size_t n = rng() % 40;
        for (std::size_t i = 0; i < n; ++i) {
            b[std::to_string(i)] = cats[rng() % cats.size()];
            a[std::to_string(i)] = cats[rng() % cats.size()];
        }
        const auto m = transition_matrix(b, a);
        std::size_t total = 0;
        for (std::size_t i = 0; i < kCategoryCount; ++i) {
            std::size_t row = 0;
            for (std::size_t j = 0; j < kCategoryCount; ++j) row += m[i][j];
            const auto expected = static_cast<std::size_t>(
                std::count_if(b.begin(), b.end(), [&](const auto& kv) { return kv.second == cats[i]; }));
            EXPECT_EQ(row, expected);
            total += row;
        }
        EXPECT_EQ(total, n);
    }
    const auto csv = transition_matrix_csv(transition_matrix({{"x", ErrorCategory::B4}}, {{"x", ErrorCategory::G}}));
    EXPECT_EQ(csv.substr(0, csv.find('\n')).find("before\\after"), 0u) << csv;
}

TEST(ManualLabels, IngestAndApply) {
    testing::TempDir tmp;
    write_file(tmp / "labels.jsonl",
               "{\"item_id\":\"a\",\"checkpoint_tag\":\"sft\",\"category\":\"B5\"}\n"
               "{\"item_id\":\"zz\",\"checkpoint_tag\":\"sft\",\"category\":\"D2\"}\n");
    const auto manual = ingest_manual_labels(tmp / "labels.jsonl");
    EXPECT_EQ(manual.size(), 2u);
    std::vector<LabelRecord> labels = {{"a", "sft", {ErrorCategory::Unclassified, Provenance::Auto}},
                                       {"b", "sft", {ErrorCategory::F1, Provenance::Auto}}};
    EXPECT_EQ(apply_manual_labels(labels, manual), 1u);
    EXPECT_EQ(labels[0].label, (ErrorLabel{ErrorCategory::B5, Provenance::Manual}));
    EXPECT_EQ(labels[1].label.provenance, Provenance::Auto);
    const auto jsonl = labels_to_jsonl(labels);
    EXPECT_NE(jsonl.find("\"provenance\":\"MANUAL\""), std::string::npos) << jsonl;

    std::vector<LabelRecord> correct = {{"a", "sft", {ErrorCategory::G, Provenance::Auto}}};
    EXPECT_EQ(code_of([&] { apply_manual_labels(correct, manual); }), ErrorCode::LabelOnCorrect);

    write_file(tmp / "g.jsonl", "{\"item_id\":\"a\",\"checkpoint_tag\":\"sft\",\"category\":\"G\"}\n");
    EXPECT_EQ(code_of([&] { ingest_manual_labels(tmp / "g.jsonl"); }), ErrorCode::UnknownCategory);
    write_file(tmp / "x.jsonl", "{\"item_id\":\"a\",\"checkpoint_tag\":\"sft\",\"category\":\"Q7\"}\n");
    EXPECT_EQ(code_of([&] { ingest_manual_labels(tmp / "x.jsonl"); }), ErrorCode::UnknownCategory);
}

class AutoLabelTest : public ::testing::Test {
protected:
    void SetUp() override {
        testing::write_fixture_databases(tmp_.path());
        cfg_.workers = 1;
        catalog_ = introspect_schema(database_path(tmp_.path(), "financial"), 0, "financial");
    }
    ErrorCategory label(const std::string& gold, const std::string& pred) {
        const Executor e(tmp_.path(), cfg_);
        OutcomeRecord r;
        r.item_id = "i";
        r.checkpoint_tag = "sft";
        r.extracted_sql = pred;
        r.gold = e.execute("financial", gold);
        r.pred = e.execute("financial", pred);
        r.order_sensitive = order_sensitive_sql(gold);
        r.verdict = r.pred->status == ExecStatus::Rows
                        ? verdict_from_outcomes(*r.gold, *r.pred, r.order_sensitive, cfg_)
                        : Verdict::Nonexecutable;
        return auto_label(r, catalog_, cfg_.real_abs_tol).category;
    }
    testing::TempDir tmp_;
    ExecConfig cfg_;
    SchemaCatalog catalog_;
};

TEST_F(AutoLabelTest, Ladder) {
    EXPECT_EQ(label("SELECT A2 FROM district", "SELECT A2 FROM district"), ErrorCategory::G);
    EXPECT_EQ(label("SELECT A2 FROM district", "SELECT region FROM district"), ErrorCategory::B4);
    EXPECT_EQ(label("SELECT A2 FROM district", "SELECT A2 FROM districts"), ErrorCategory::B4);
    EXPECT_EQ(label("SELECT A2 FROM district", "SELECT A2 FROM district WHERE"), ErrorCategory::F1);
    EXPECT_EQ(label("SELECT A2, A3 FROM district", "SELECT A3, A2 FROM district"), ErrorCategory::E2);
    EXPECT_EQ(label("SELECT A2, A3, A11 FROM district", "SELECT A2, A11 FROM district"), ErrorCategory::E1);
    EXPECT_EQ(label("SELECT A3 FROM district", "SELECT DISTINCT A3 FROM district"), ErrorCategory::B6);
    EXPECT_EQ(label("SELECT frequency FROM account WHERE frequency IS NOT NULL", "SELECT frequency FROM account"),
              ErrorCategory::B6);
    EXPECT_EQ(label("SELECT A3 FROM district WHERE A3 = 'north Bohemia'",
                    "SELECT A3 FROM district WHERE A3 = 'North Bohemia'"),
              ErrorCategory::Unclassified);
}

TEST_F(AutoLabelTest, MissingOutcome) {
    OutcomeRecord r;
    r.item_id = "i";
    r.verdict = Verdict::Incorrect;
    r.extracted_sql = "SELECT 1";
    EXPECT_EQ(code_of([&] { auto_label(r, catalog_, 1e-6); }), ErrorCode::MissingOutcome);
}

TEST(OutputStats, MeansAndPercentages) {
    std::vector<Rollout> rs = {
        {"a", "t", 0, "", "SELECT 'é'", Verdict::Correct},
        {"b", "t", 0, "", std::nullopt, Verdict::Nonexecutable},
        {"c", "t", 0, "", "SELECT 1", Verdict::Nonexecutable},
        {"d", "t", 0, "", "SELECT 22", Verdict::Incorrect},
    };
    const auto s = output_stats(rs);
    EXPECT_EQ(s.checkpoint_tag, "t");
    EXPECT_EQ(s.n_rollouts, 4u);
    EXPECT_DOUBLE_EQ(s.mean_sql_chars, (10.0 + 0 + 8 + 9) / 4);
    EXPECT_DOUBLE_EQ(s.nonexecutable_pct, 50.0);
    EXPECT_EQ(code_of([] { output_stats(std::vector<Rollout>{}); }), ErrorCode::EmptySet);
    rs[0].verdict.reset();
    EXPECT_EQ(code_of([&] { output_stats(rs); }), ErrorCode::UnjudgedRollout);
    EXPECT_EQ(utf8_length("naïve ✓"), 7u);
}

} // namespace
} // namespace sqlpref
