// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "sqlpref/corpus.hpp"
#include "sqlpref/error.hpp"
#include "sqlpref/util.hpp"

namespace sqlpref {
namespace {

using testing::TempDir;

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::InvalidArgument;
}

TEST(Corpus, LoadsBirdAndSpider) {
    TempDir tmp;
    write_file(tmp / "bird.json",
               R"([{"question_id": 7, "db_id": "financial", "question": "How many?", "evidence": "A3 is region",
                    "SQL": "SELECT 1"},
                   {"question_id": 8, "db_id": "financial", "question": "Which?", "SQL": "SELECT 2"}])");
    const auto bird = load_corpus(tmp / "bird.json", CorpusFormat::Bird);
    ASSERT_EQ(bird.size(), 2u);
    EXPECT_EQ(bird[0], (DatasetItem{"7", "How many?", "A3 is region", "financial", "SELECT 1"}));
    EXPECT_EQ(bird[1].evidence, "");

    write_file(tmp / "spider.json", R"([{"db_id": "concert_singer", "question": "Count?", "query": "SELECT 3"}])");
    const auto spider = load_corpus(tmp / "spider.json", parse_corpus_format("spider"));
    ASSERT_EQ(spider.size(), 1u);
    EXPECT_EQ(spider[0].item_id, "0");
    EXPECT_EQ(spider[0].gold_sql, "SELECT 3");
}

TEST(Corpus, RejectsBadRecords) {
    TempDir tmp;
    write_file(tmp / "dup.json", R"([{"question_id": 1, "db_id": "a", "question": "q", "SQL": "SELECT 1"},
                                     {"question_id": 1, "db_id": "a", "question": "q", "SQL": "SELECT 1"}])");
    EXPECT_EQ(code_of([&] { load_corpus(tmp / "dup.json", CorpusFormat::Bird); }), ErrorCode::DuplicateId);
    write_file(tmp / "empty_sql.json", R"([{"db_id": "a", "question": "q", "SQL": "  "}])");
    EXPECT_EQ(code_of([&] { load_corpus(tmp / "empty_sql.json", CorpusFormat::Bird); }), ErrorCode::MalformedRecord);
    write_file(tmp / "object.json", R"({"db_id": "a"})");
    EXPECT_EQ(code_of([&] { load_corpus(tmp / "object.json", CorpusFormat::Spider); }), ErrorCode::MalformedRecord);
    EXPECT_EQ(code_of([] { parse_corpus_format("wikisql"); }), ErrorCode::InvalidArgument);
}

TEST(Corpus, ItemsJsonlRoundTrip) {
    TempDir tmp;
    const std::vector<DatasetItem> items = {{"a", "q1", "e", "db", "SELECT 1"}, {"b", "q2", "", "db", "SELECT 2"}};
    write_file(tmp / "items.jsonl", items_to_jsonl(items));
    EXPECT_EQ(load_items_jsonl(tmp / "items.jsonl"), items);
}

class SchemaTest : public ::testing::Test {
protected:
    void SetUp() override { testing::write_fixture_databases(tmp_.path()); }
    std::filesystem::path db(const char* id) { return database_path(tmp_.path(), id); }
    TempDir tmp_;
};

TEST_F(SchemaTest, IntrospectsTablesKeysAndValues) {
    const auto c = introspect_schema(db("financial"), 2, "financial");
    EXPECT_NO_THROW(c.validate());
    ASSERT_EQ(c.tables.size(), 4u);
    EXPECT_EQ(c.tables[0].name, "district");
    const auto* a3 = c.find_table("DISTRICT")->find_column("a3");
    ASSERT_NE(a3, nullptr);
    EXPECT_EQ(a3->example_values, (std::vector<Cell>{Cell("Prague"), Cell("central Bohemia")}));
    EXPECT_TRUE(c.is_primary_key("district", "district_id"));
    EXPECT_TRUE(c.has_column("Loan", "AMOUNT"));
    bool found = false;
    for (const auto& fk : c.foreign_keys) {
        found = found || (fk.from == ColumnKey{"client", "district_id"} && fk.to == ColumnKey{"district", "district_id"});
    }
    EXPECT_TRUE(found);
}

TEST_F(SchemaTest, ValueBudgetBoundsExamples) {
    for (std::size_t budget : {0u, 1u, 3u, 50u}) {
        const auto c = introspect_schema(db("formula_1"), budget, "formula_1");
        for (const auto& t : c.tables) {
            for (const auto& col : t.columns) EXPECT_LE(col.example_values.size(), budget);
        }
    }
}

TEST_F(SchemaTest, UnreadableDatabase) {
    write_file(tmp_ / "junk.sqlite", "this is not a database file at all, not even close......................");
    EXPECT_EQ(code_of([&] { introspect_schema(tmp_ / "junk.sqlite", 2); }), ErrorCode::UnreadableDb);
}

TEST_F(SchemaTest, PromptLayout) {
    const auto c = introspect_schema(db("financial"), 2, "financial");
    const auto p = build_database_prompt(c, "How many male customers?", "Male means gender = 'M'");
    EXPECT_NE(p.find("Table district, columns = [ district.district_id ( integer | primary key | values : 1 , 2 )"),
              std::string::npos)
        << p;
    EXPECT_NE(p.find("district.A3 ( text | values : Prague , central Bohemia )"), std::string::npos) << p;
    EXPECT_NE(p.find("foreign keys :\nclient.district_id = district.district_id"), std::string::npos) << p;
    EXPECT_NE(p.find("Question: How many male customers?\nExternal Knowledge: Male means gender = 'M'\n"),
              std::string::npos);
    EXPECT_EQ(build_database_prompt(c, "q", "").find("External Knowledge"), std::string::npos);
}

TEST_F(SchemaTest, DescriptionsBecomeComments) {
    auto c = introspect_schema(db("financial"), 2, "financial");
    write_file(tmp_ / "desc/district.csv",
               "original_column_name,column_name,column_description,data_format,value_description\n"
               "A3,region,,text,\nA11,,average salary,integer,\n");
    attach_descriptions(c, tmp_ / "desc");
    const auto* t = c.find_table("district");
    EXPECT_EQ(t->find_column("A3")->comment, "region");
    EXPECT_EQ(t->find_column("A11")->comment, "average salary");
    EXPECT_FALSE(t->find_column("A2")->comment.has_value());
    EXPECT_NE(render_schema(c).find("district.A11 ( integer | comment : average salary | values"), std::string::npos);
}

TEST_F(SchemaTest, TruncationKeepsQuestion) {
    const auto c = introspect_schema(db("financial"), 2, "financial");
    const auto full = build_database_prompt(c, "Q?", "E.");
    PromptOptions opts;
    opts.max_chars = full.size() / 2;
    const auto cut = build_database_prompt(c, "Q?", "E.", opts);
    EXPECT_LT(cut.size(), full.size());
    EXPECT_EQ(cut.find("values :"), std::string::npos);
    EXPECT_NE(cut.find("Question: Q?\nExternal Knowledge: E.\n"), std::string::npos);
    EXPECT_NE(cut.find("Table district"), std::string::npos);
}

TEST_F(SchemaTest, FilterKeepsKeysAndListedColumns) {
    const auto c = introspect_schema(db("financial"), 0, "financial");
    const auto f = filter_catalog(c, {{"client", "district"}, {{"district", "A3"}, {"client", "gender"}}});
    ASSERT_EQ(f.tables.size(), 2u);
    EXPECT_TRUE(f.has_column("district", "A3"));
    EXPECT_TRUE(f.has_column("district", "district_id"));
    EXPECT_FALSE(f.has_column("district", "A11"));
    EXPECT_FALSE(f.has_column("loan", "amount"));
    EXPECT_NO_THROW(f.validate());
}

} // namespace
} // namespace sqlpref
