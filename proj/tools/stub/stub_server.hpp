// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <thread>

#include "sqlpref/synth.hpp"

namespace httplib {
class Server;
}

namespace sqlpref::stub {

inline constexpr const char* kCompletionsPath = "/v1/chat/completions";

/// Local chat-completions server backed by a StubEndpoint. Answers POSTs to
/// kCompletionsPath with {"choices": [{"message": {"content": ...}}, ...]}.
class StubServer {
public:
    /// A non-empty `api_key` makes the server reject requests without
    /// "Authorization: Bearer <api_key>".
    explicit StubServer(StubEndpoint endpoint = StubEndpoint{}, std::string api_key = {});
    ~StubServer();
    StubServer(const StubServer&) = delete;
    StubServer& operator=(const StubServer&) = delete;

    /// Binds (port 0 picks a free port) and serves on a background thread.
    /// Returns the bound port. Throws ENDPOINT_ERROR when binding fails.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Binds and serves on the calling thread until stop().
    void listen(const std::string& host, int port);
    void stop();

    /// http://host:port/v1/chat/completions of the running server.
    std::string url() const;
    std::size_t requests_served() const;
    /// Body of the most recent request, byte for byte.
    std::string last_request_body() const;

private:
    struct State;
    std::unique_ptr<State> state_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

} // namespace sqlpref::stub
