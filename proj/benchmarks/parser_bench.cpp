// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "fixtures.hpp"
#include "sqlpref/rollouts.hpp"
#include "sqlpref/sql_parser.hpp"

namespace sqlpref {
namespace {

void BM_ParseFixtureSql(benchmark::State& state) {
    std::vector<std::string> sql;
    for (const auto& p : testing::fixture_pairs()) {
        sql.push_back(p.gold);
        sql.push_back(p.pred);
    }
    for (auto _ : state) {
        for (const auto& s : sql) benchmark::DoNotOptimize(parse_sql(s));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sql.size()));
}
BENCHMARK(BM_ParseFixtureSql);

void BM_ExtractSql(benchmark::State& state) {
    std::string text;
    for (int i = 0; i < state.range(0); ++i) text += "Step " + std::to_string(i) + ": look at the schema.\n";
    text += "```sqlite\nSELECT T1.name FROM drivers AS T1 JOIN results AS T2 ON T1.driverId = T2.driverId;\n```\n";
    for (auto _ : state) benchmark::DoNotOptimize(extract_sql(text));
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ExtractSql)->Arg(10)->Arg(200);

} // namespace
} // namespace sqlpref
