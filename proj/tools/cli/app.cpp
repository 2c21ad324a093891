// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <algorithm>
#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "context.hpp"
#include "sqlpref/error.hpp"
#include "sqlpref/util.hpp"

namespace sqlpref::cli {

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {"db_root", "suite_root", "beta",       "seed",
                                                  "timeout_ms", "workers", "k_majority", "lambda_sft"};
    return keys;
}

std::map<std::string, std::string> read_config(const std::filesystem::path& path) {
    std::map<std::string, std::string> out;
    const std::string text = read_file(path);
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + start, end - start);
        start = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (eq == std::string_view::npos) throw UsageError(where + ": expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        const auto& keys = config_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw UsageError(where + ": unknown config key '" + key + "'");
        }
        if (!out.emplace(key, value).second) throw UsageError(where + ": config key '" + key + "' repeats");
    }
    return out;
}

namespace {

/// Fills flags the user did not pass from the config file, through the same
/// conversion and validation as command-line values.
void apply_config(Context& ctx, const CLI::App* selected) {
    if (!ctx.config_file) return;
    const auto values = read_config(*ctx.config_file);
    for (auto& [key, binding] : ctx.bindings) {
        auto [owner, opt] = binding;
        if (owner != selected || opt->count() > 0) continue;
        const auto it = values.find(key);
        if (it == values.end()) continue;
        try {
            opt->add_result(it->second);
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw UsageError("config key '" + key + "': " + e.what());
        }
    }
}

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::Io:
    case ErrorCode::UnreadableDb:
    case ErrorCode::GoldFailed:
    case ErrorCode::EndpointError:
    case ErrorCode::EmptyCompletion:
        return kExitRuntime;
    default:
        return kExitValidation;
    }
}

void init_logging(const std::string& level) {
    static const auto logger = [] {
        auto l = spdlog::stderr_color_mt("sqlpref");
        l->set_pattern("[%l] %v");
        return l;
    }();
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::from_str(level));
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Text-to-SQL preference-optimization harness", "sqlpref"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "sqlpref 0.1.0");
    app.fallthrough();  // global flags may follow the subcommand
    Context ctx;
    std::string log_level = "info";
    app.add_option("--config", ctx.config_file, "key = value file supplying defaults for shared flags")
        ->check(CLI::ExistingFile);
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    add_synthesize_command(app, ctx);
    add_prompt_command(app, ctx);
    add_judge_command(app, ctx);
    add_pairs_command(app, ctx);
    add_eval_command(app, ctx);
    add_dpo_metrics_command(app, ctx);
    add_analyze_command(app, ctx);
    add_report_command(app, ctx);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }
    init_logging(log_level);
    try {
        apply_config(ctx, app.get_subcommands().front());
        return ctx.action();
    } catch (const UsageError& e) {
        spdlog::error("{}", e.what());
        return kExitValidation;
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitRuntime;
    }
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args);
}

} // namespace sqlpref::cli
