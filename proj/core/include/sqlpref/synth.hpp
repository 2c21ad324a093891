// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqlpref/corpus.hpp"
#include "sqlpref/executor.hpp"

namespace sqlpref {

/// System message for CoT synthesis, byte-for-byte.
std::string_view synthesis_system_message();

struct SamplingParams {
    std::size_t k = 16;
    double temperature = 1.0;
    int top_k = 32;
};

struct SynthesisRequest {
    std::string item_id;
    std::string system_message;
    std::string user_message;
    std::size_t k = 16;
    double temperature = 1.0;
    int top_k = 32;
};

/// Label that introduces the gold SQL in the user message.
inline constexpr std::string_view kReferenceLabel = "Reference Solution: ";

/// User message = database prompt, question, external knowledge (omitted when
/// empty), reference solution. Throws CATALOG_MISMATCH when the catalog is for a
/// different database and INVALID_ARGUMENT when k == 0.
SynthesisRequest build_request(const DatasetItem& item, const SchemaCatalog& catalog, const SamplingParams& sampling,
                               const PromptOptions& prompt = {});

/// Chat-completions body: {"model", "messages": [system, user], "n", "temperature", "top_k"}.
nlohmann::ordered_json request_body(const SynthesisRequest& req, const std::string& model);

/// Reference SQL recovered from a user message (text after the last reference label).
std::optional<std::string> reference_sql(std::string_view user_message);

class CompletionEndpoint {
public:
    virtual ~CompletionEndpoint() = default;
    /// Returns the completion texts for one request. Throws ENDPOINT_ERROR.
    virtual std::vector<std::string> complete(const SynthesisRequest& req) = 0;
};

struct HttpEndpointOptions {
    std::string url;      // e.g. http://127.0.0.1:8080/v1/chat/completions
    std::string api_key;  // sent as a bearer token when non-empty
    std::string model = "default";
    std::size_t max_attempts = 3;
    std::chrono::milliseconds initial_backoff{250};
    std::chrono::seconds timeout{120};

    /// url from SQLPREF_COMPLETIONS_URL, api_key from SQLPREF_COMPLETIONS_KEY.
    static HttpEndpointOptions from_env();
};

/// POSTs request_body and reads choices[].message.content. Failed attempts
/// (transport error, non-200 status, malformed body) are retried with doubling
/// backoff up to max_attempts.
class HttpEndpoint final : public CompletionEndpoint {
public:
    explicit HttpEndpoint(HttpEndpointOptions opts);
    std::vector<std::string> complete(const SynthesisRequest& req) override;

private:
    HttpEndpointOptions opts_;
};

/// Deterministic offline endpoint. By default each completion is a short
/// explanation followed by the reference SQL in a ```SQL fence. Canned
/// completions keyed by reference SQL replace the default and are cycled to n.
class StubEndpoint final : public CompletionEndpoint {
public:
    explicit StubEndpoint(std::map<std::string, std::vector<std::string>> canned = {});
    std::vector<std::string> complete(const SynthesisRequest& req) override;

    /// Completions for a raw user message, shared with the HTTP stub server.
    std::vector<std::string> completions_for(std::string_view user_message, std::size_t n) const;

private:
    std::map<std::string, std::vector<std::string>> canned_;
};

struct SynthesisResult {
    std::string item_id;
    std::vector<std::string> completions;
    std::optional<std::string> error;  // set when the endpoint failed for this request
};

/// Dispatches requests with at most `max_in_flight` concurrent calls; results are
/// in request order. Endpoint failures are recorded per request. An empty
/// completion list is recorded as EMPTY_COMPLETION.
std::vector<SynthesisResult> synthesize(std::span<const SynthesisRequest> requests, CompletionEndpoint& endpoint,
                                        std::size_t max_in_flight = 4);

/// Keeps completions whose extracted SQL is CORRECT against the item's gold on its
/// database. Order is preserved; the gold must execute (GOLD_FAILED otherwise).
std::vector<std::string> verify_synth(const DatasetItem& item, std::span<const std::string> completions,
                                      const Executor& executor);

} // namespace sqlpref
