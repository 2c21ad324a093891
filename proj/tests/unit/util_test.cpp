// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <numeric>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "sqlpref/error.hpp"
#include "sqlpref/util.hpp"

namespace sqlpref {
namespace {

TEST(Util, CaseAndTrim) {
    EXPECT_EQ(fold_case("Drivers.ForeName"), "drivers.forename");
    EXPECT_TRUE(iequals("A3", "a3"));
    EXPECT_FALSE(iequals("a3", "a30"));
    EXPECT_EQ(trim("  \tx y\n"), "x y");
    EXPECT_EQ(trim("   "), "");
}

TEST(Util, FormatRealRoundTrips) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(-1e9, 1e9);
    for (int i = 0; i < 1000; ++i) {
        const double v = d(rng);
        EXPECT_EQ(std::stod(format_real(v)), v);
    }
    EXPECT_EQ(format_real(0.1), "0.1");
    EXPECT_EQ(format_real(217.586), "217.586");
}

TEST(Util, JsonlRoundTrip) {
    testing::TempDir tmp;
    std::vector<nlohmann::ordered_json> rows;
    rows.push_back({{"b", 1}, {"a", "x"}});
    rows.push_back({{"z", nullptr}});
    const std::string text = to_jsonl(rows);
    EXPECT_EQ(text, "{\"b\":1,\"a\":\"x\"}\n{\"z\":null}\n");
    write_file(tmp / "nested/dir/f.jsonl", text + "\n  \n");
    const auto back = read_jsonl(tmp / "nested/dir/f.jsonl");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0]["a"], "x");
}

TEST(Util, JsonlErrorsNameTheLine) {
    testing::TempDir tmp;
    write_file(tmp / "bad.jsonl", "{\"a\":1}\n{oops\n");
    try {
        read_jsonl(tmp / "bad.jsonl");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
    }
}

TEST(Util, MissingFileIsIoError) {
    try {
        read_file("/nonexistent/sqlpref/file");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Io);
    }
}

TEST(Util, PairwiseSumIsAccurate) {
    std::vector<double> v(1 << 16, 0.1);
    EXPECT_NEAR(pairwise_sum(v), 6553.6, 1e-9);
    EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
}

TEST(Util, ParallelForRunsEachIndexOnce) {
    for (std::size_t workers : {1, 3, 8}) {
        std::vector<std::atomic<int>> hits(1000);
        parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i]++; });
        for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
}

TEST(Util, ParallelForRethrows) {
    std::atomic<int> ran{0};
    EXPECT_THROW(parallel_for(100, 4,
                              [&](std::size_t i) {
                                  ran++;
                                  if (i == 37) throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
    EXPECT_EQ(ran.load(), 100);
}

TEST(Util, ErrorNames) {
    EXPECT_EQ(error_code_name(ErrorCode::DuplicateId), "DUPLICATE_ID");
    EXPECT_EQ(parse_error_code("GOLD_FAILED"), ErrorCode::GoldFailed);
    EXPECT_FALSE(parse_error_code("NOPE").has_value());
    EXPECT_STREQ(Error(ErrorCode::Io, "x").what(), "IO_ERROR: x");
}

} // namespace
} // namespace sqlpref
