// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include "sqlpref/synth.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "sqlpref/rollouts.hpp"
#include "sqlpref/util.hpp"

namespace sqlpref {

std::string_view synthesis_system_message() {
    static constexpr std::string_view kMessage =
        "You are a senior data analyst who expertise at structural query language (SQL). Given a question made by "
        "front end employees and targeted database schema, you are asked to translate that question into SQLite "
        "query with detailed explanation.\n"
        "\n"
        "Additionally, the input will be accompanied with a reference solution from your colleagues, which may or "
        "may not be correct. This extra information intents to help you to formulate your answer, and you are asked "
        "not to mention reference solution in any form.\n"
        "\n"
        "To facilitate SQL extraction with regular expression, the SQL in your answer should be expressed in a "
        "Markdown code block with proper highlight. For example,\n"
        "``` SQL\n"
        "SELECT * FROM database;\n"
        "```";
    return kMessage;
}

SynthesisRequest build_request(const DatasetItem& item, const SchemaCatalog& catalog, const SamplingParams& sampling,
                               const PromptOptions& prompt) {
    if (catalog.db_id != item.db_id) {
        throw Error(ErrorCode::CatalogMismatch,
                    "item " + item.item_id + " targets '" + item.db_id + "' but the catalog is '" + catalog.db_id + "'");
    }
    if (sampling.k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    SynthesisRequest req;
    req.item_id = item.item_id;
    req.system_message = std::string(synthesis_system_message());
    req.user_message = build_database_prompt(catalog, item.question, item.evidence, prompt);
    req.user_message.append(kReferenceLabel);
    req.user_message.append(item.gold_sql);
    req.user_message.push_back('\n');
    req.k = sampling.k;
    req.temperature = sampling.temperature;
    req.top_k = sampling.top_k;
    return req;
}

nlohmann::ordered_json request_body(const SynthesisRequest& req, const std::string& model) {
    nlohmann::ordered_json body;
    body["model"] = model;
    body["messages"] = nlohmann::ordered_json::array({
        nlohmann::ordered_json{{"role", "system"}, {"content", req.system_message}},
        nlohmann::ordered_json{{"role", "user"}, {"content", req.user_message}},
    });
    body["n"] = req.k;
    body["temperature"] = req.temperature;
    body["top_k"] = req.top_k;
    return body;
}

std::optional<std::string> reference_sql(std::string_view user_message) {
    const auto pos = user_message.rfind(kReferenceLabel);
    if (pos == std::string_view::npos) return std::nullopt;
    return std::string(trim(user_message.substr(pos + kReferenceLabel.size())));
}

HttpEndpointOptions HttpEndpointOptions::from_env() {
    HttpEndpointOptions o;
    if (const char* url = std::getenv("SQLPREF_COMPLETIONS_URL")) o.url = url;
    if (const char* key = std::getenv("SQLPREF_COMPLETIONS_KEY")) o.api_key = key;
    return o;
}

HttpEndpoint::HttpEndpoint(HttpEndpointOptions opts) : opts_(std::move(opts)) {
    if (opts_.url.empty()) throw Error(ErrorCode::InvalidArgument, "completions URL is empty");
    if (opts_.max_attempts == 0) throw Error(ErrorCode::InvalidArgument, "max_attempts must be >= 1");
}

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme = url.find("://");
    const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::vector<std::string> parse_choices(const std::string& body) {
    const auto j = nlohmann::json::parse(body);
    std::vector<std::string> out;
    for (const auto& choice : j.at("choices")) out.push_back(choice.at("message").at("content").get<std::string>());
    return out;
}

} // namespace

std::vector<std::string> HttpEndpoint::complete(const SynthesisRequest& req) {
    const auto [base, path] = split_url(opts_.url);
    const std::string body = request_body(req, opts_.model).dump();
    auto backoff = opts_.initial_backoff;
    std::string last_error;
    for (std::size_t attempt = 1; attempt <= opts_.max_attempts; ++attempt) {
        httplib::Client client(base);
        client.set_connection_timeout(opts_.timeout);
        client.set_read_timeout(opts_.timeout);
        client.set_write_timeout(opts_.timeout);
        if (!opts_.api_key.empty()) client.set_bearer_token_auth(opts_.api_key);
        if (!client.is_valid()) {
            throw Error(ErrorCode::EndpointError, "unsupported completions URL '" + opts_.url + "'");
        }
        auto res = client.Post(path, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
        } else if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
        } else {
            try {
                return parse_choices(res->body);
            } catch (const nlohmann::json::exception& e) {
                last_error = std::string("malformed response: ") + e.what();
            }
        }
        spdlog::warn("completion request for item {} failed (attempt {}/{}): {}", req.item_id, attempt,
                     opts_.max_attempts, last_error);
        if (attempt < opts_.max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw Error(ErrorCode::EndpointError, "item " + req.item_id + ": " + last_error);
}

StubEndpoint::StubEndpoint(std::map<std::string, std::vector<std::string>> canned) : canned_(std::move(canned)) {}

std::vector<std::string> StubEndpoint::completions_for(std::string_view user_message, std::size_t n) const {
    const auto ref = reference_sql(user_message);
    std::vector<std::string> out;
    if (ref) {
        const auto it = canned_.find(*ref);
        if (it != canned_.end() && !it->second.empty()) {
            for (std::size_t i = 0; i < n; ++i) out.push_back(it->second[i % it->second.size()]);
            return out;
        }
    }
    const std::string sql = ref.value_or("SELECT 1");
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back("Let's answer the question step by step using the tables in the schema.\n\n"
                      "Here is the SQL query that fulfills the requirements:\n```SQL\n" +
                      sql + "\n```\n");
    }
    return out;
}

std::vector<std::string> StubEndpoint::complete(const SynthesisRequest& req) {
    return completions_for(req.user_message, req.k);
}

std::vector<SynthesisResult> synthesize(std::span<const SynthesisRequest> requests, CompletionEndpoint& endpoint,
                                        std::size_t max_in_flight) {
    std::vector<SynthesisResult> results(requests.size());
    parallel_for(requests.size(), std::max<std::size_t>(1, max_in_flight), [&](std::size_t i) {
        auto& r = results[i];
        r.item_id = requests[i].item_id;
        try {
            r.completions = endpoint.complete(requests[i]);
            if (r.completions.empty()) {
                r.error = Error(ErrorCode::EmptyCompletion, "endpoint returned no completions for item " + r.item_id)
                              .what();
            }
        } catch (const Error& e) {
            r.error = e.what();
        }
    });
    return results;
}

std::vector<std::string> verify_synth(const DatasetItem& item, std::span<const std::string> completions,
                                      const Executor& executor) {
    std::vector<JudgeJob> jobs;
    jobs.reserve(completions.size());
    for (const auto& text : completions) jobs.push_back({item, extract_sql(text), {}});
    const auto results = executor.judge_batch(jobs);
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].harness_error) throw Error(*results[i].harness_error, results[i].error_msg);
        if (results[i].verdict == Verdict::Correct) kept.push_back(completions[i]);
    }
    return kept;
}

} // namespace sqlpref
