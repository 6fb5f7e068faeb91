// Copyright 2026 The Frugal Cascade Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <chrono>
#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

namespace frugal::testing {

/// Scriptable completion endpoint speaking the generic wire protocol.
/// Completion statuses and health statuses are consumed from queues; when a
/// queue is empty the stub answers 200. Successful completions report usage
/// (120, 8).
class StubServer {
public:
    StubServer() {
        server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
            int status = 200;
            std::chrono::milliseconds delay{0};
            {
                std::lock_guard lock(mutex_);
                bodies_.push_back(req.body);
                authorization_.push_back(req.get_header_value("Authorization"));
                if (!statuses_.empty()) {
                    status = statuses_.front();
                    statuses_.pop_front();
                }
                delay = delay_;
            }
            ++completions_;
            const int now = ++in_flight_;
            int seen = max_in_flight_.load();
            while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
            }
            std::this_thread::sleep_for(delay);
            --in_flight_;
            if (status != 200) {
                res.status = status;
                res.set_content(R"({"error":"scripted"})", "application/json");
                return;
            }
            const auto body = nlohmann::json::parse(req.body);
            nlohmann::json reply = {{"text", answer_for(body.at("prompt").get<std::string>())},
                                    {"usage", {{"prompt_tokens", 120}, {"completion_tokens", 8}}},
                                    {"cost_usd", "0.0041"}};
            res.set_content(reply.dump(), "application/json");
        });
        server_.Get("/v1/healthz", [this](const httplib::Request&, httplib::Response& res) {
            int status = 200;
            {
                std::lock_guard lock(mutex_);
                if (!health_.empty()) {
                    status = health_.front();
                    health_.pop_front();
                }
            }
            res.status = status;
            res.set_content(status == 200 ? "ok" : "down", "text/plain");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubServer() { stop(); }

    void stop() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int port() const { return port_; }

    void script_completions(std::initializer_list<int> statuses) {
        std::lock_guard lock(mutex_);
        statuses_.insert(statuses_.end(), statuses);
    }
    void script_health(std::initializer_list<int> statuses) {
        std::lock_guard lock(mutex_);
        health_.insert(health_.end(), statuses);
    }
    void set_delay(std::chrono::milliseconds d) {
        std::lock_guard lock(mutex_);
        delay_ = d;
    }

    std::vector<std::string> bodies() const {
        std::lock_guard lock(mutex_);
        return bodies_;
    }
    std::vector<std::string> authorization() const {
        std::lock_guard lock(mutex_);
        return authorization_;
    }
    int completions() const { return completions_.load(); }
    int max_in_flight() const { return max_in_flight_.load(); }

    /// Answers with the last whitespace-separated word of the prompt.
    static std::string answer_for(const std::string& prompt) {
        const auto end = prompt.find_last_not_of(" \t\n");
        if (end == std::string::npos) return "";
        const auto start = prompt.find_last_of(" \t\n", end);
        return prompt.substr(start == std::string::npos ? 0 : start + 1, end - (start == std::string::npos ? 0 : start + 1) + 1);
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mutex_;
    std::deque<int> statuses_;
    std::deque<int> health_;
    std::vector<std::string> bodies_;
    std::vector<std::string> authorization_;
    std::chrono::milliseconds delay_{0};
    std::atomic<int> completions_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
};

}  // namespace frugal::testing
