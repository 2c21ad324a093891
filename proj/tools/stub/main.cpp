// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#include <csignal>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sqlpref/util.hpp"
#include "stub_server.hpp"

namespace {
sqlpref::stub::StubServer* g_server = nullptr;
extern "C" void handle_signal(int) {
    if (g_server != nullptr) g_server->stop();
}
} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic chat-completions stub for offline synthesis runs", "sqlpref-stub-server"};
    std::string host = "127.0.0.1";
    int port = 8089;
    std::string api_key;
    std::string canned_path;
    app.add_option("--host", host, "bind address");
    app.add_option("--port", port, "bind port, 0 for any")->check(CLI::Range(0, 65535));
    app.add_option("--api-key", api_key, "required bearer token");
    app.add_option("--canned", canned_path, "JSON object: reference SQL -> list of completions")
        ->check(CLI::ExistingFile);
    CLI11_PARSE(app, argc, argv);

    std::map<std::string, std::vector<std::string>> canned;
    if (!canned_path.empty()) {
        try {
            canned = nlohmann::json::parse(sqlpref::read_file(canned_path))
                         .get<std::map<std::string, std::vector<std::string>>>();
        } catch (const std::exception& e) {
            std::cerr << canned_path << ": " << e.what() << "\n";
            return 1;
        }
    }
    sqlpref::stub::StubServer server(sqlpref::StubEndpoint(std::move(canned)), api_key);
    g_server = &server;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    try {
        std::cerr << "serving " << sqlpref::stub::kCompletionsPath << " on " << host << ":" << port << "\n";
        server.listen(host, port);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    return 0;
}
