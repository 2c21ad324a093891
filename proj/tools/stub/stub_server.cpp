// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include "stub_server.hpp"

#include <atomic>
#include <mutex>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sqlpref/error.hpp"

namespace sqlpref::stub {

struct StubServer::State {
    StubEndpoint endpoint;
    std::string api_key;
    std::string host;
    int port = 0;
    std::atomic<std::size_t> served{0};
    mutable std::mutex mutex;
    std::string last_body;
};

namespace {

void reply_error(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", {{"message", message}}}}.dump(), "application/json");
}

} // namespace

StubServer::StubServer(StubEndpoint endpoint, std::string api_key)
    : state_(std::make_unique<State>()), server_(std::make_unique<httplib::Server>()) {
    state_->endpoint = std::move(endpoint);
    state_->api_key = std::move(api_key);
    State* st = state_.get();
    server_->Post(kCompletionsPath, [st](const httplib::Request& req, httplib::Response& res) {
        {
            std::lock_guard lock(st->mutex);
            st->last_body = req.body;
        }
        ++st->served;
        if (!st->api_key.empty() && req.get_header_value("Authorization") != "Bearer " + st->api_key) {
            reply_error(res, 401, "bad credential");
            return;
        }
        nlohmann::json body;
        std::string user;
        std::size_t n = 1;
        try {
            body = nlohmann::json::parse(req.body);
            for (const auto& m : body.at("messages")) {
                if (m.at("role") == "user") user = m.at("content").get<std::string>();
            }
            n = body.value("n", std::size_t{1});
        } catch (const nlohmann::json::exception& e) {
            reply_error(res, 400, e.what());
            return;
        }
        nlohmann::json out;
        out["id"] = "stub";
        out["object"] = "chat.completion";
        out["model"] = body.value("model", "stub");
        out["choices"] = nlohmann::json::array();
        std::size_t index = 0;
        for (const auto& text : st->endpoint.completions_for(user, n)) {
            out["choices"].push_back({{"index", index++},
                                      {"message", {{"role", "assistant"}, {"content", text}}},
                                      {"finish_reason", "stop"}});
        }
        res.set_content(out.dump(), "application/json");
    });
}

StubServer::~StubServer() { stop(); }

int StubServer::start(const std::string& host, int port) {
    const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error(ErrorCode::EndpointError, "stub server cannot bind " + host + ":" + std::to_string(port));
    state_->host = host;
    state_->port = bound;
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void StubServer::listen(const std::string& host, int port) {
    const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error(ErrorCode::EndpointError, "stub server cannot bind " + host + ":" + std::to_string(port));
    state_->host = host;
    state_->port = bound;
    server_->listen_after_bind();
}

void StubServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string StubServer::url() const {
    return "http://" + state_->host + ":" + std::to_string(state_->port) + kCompletionsPath;
}

std::size_t StubServer::requests_served() const { return state_->served.load(); }

std::string StubServer::last_request_body() const {
    std::lock_guard lock(state_->mutex);
    return state_->last_body;
}

} // namespace sqlpref::stub
