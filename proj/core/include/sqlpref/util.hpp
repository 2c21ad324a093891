// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

namespace sqlpref {

/// ASCII lower-casing; SQL identifiers are compared case-insensitively.
std::string fold_case(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::string_view trim(std::string_view s);

/// Shortest decimal text that round-trips to the same double.
std::string format_real(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Parses one JSON object per non-blank line. Errors name the file and line.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
/// One compact object per line, '\n' terminated, keys in insertion order.
std::string to_jsonl(std::span<const nlohmann::ordered_json> records);

/// Sum of `values` by pairwise (cascade) summation; order of reduction is fixed.
double pairwise_sum(std::span<const double> values);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index runs exactly
/// once; the first exception thrown by any task is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> threads;
        const std::size_t count = std::min(workers, n);
        threads.reserve(count);
        for (std::size_t t = 0; t < count; ++t) threads.emplace_back(body);
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace sqlpref
