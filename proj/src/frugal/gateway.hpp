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

#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <string_view>
#include <thread>

#include "frugal/approximation.hpp"
#include "frugal/cascade.hpp"
#include "frugal/money.hpp"
#include "frugal/providers.hpp"
#include "frugal/scorer.hpp"

namespace httplib {
class Server;
}

namespace frugal {

enum class LedgerWindow { kPerQueryMean, kRollingN };

struct LedgerSnapshot {
    std::uint64_t served = 0;
    Money spent;
    Money mean_cost;  // over all served queries, rounded
    Money budget;
    bool over_budget = false;  // judged on the configured window
};

/// Running spend accounting. Every update is serialized, so `spent` equals
/// the exact sum of recorded costs at any quiescent point.
class BudgetLedger {
public:
    BudgetLedger(Money budget, LedgerWindow window = LedgerWindow::kPerQueryMean, std::size_t rolling_n = 100);

    void record(Money cost);
    LedgerSnapshot snapshot() const;
    bool over_budget() const;

private:
    bool over_budget_locked() const;

    Money budget_;
    LedgerWindow window_;
    std::size_t rolling_n_;
    mutable std::mutex mutex_;
    Money spent_;
    std::uint64_t served_ = 0;
    std::deque<Money> recent_;
    Money recent_sum_;
};

struct GatewayOptions {
    CacheOptions cache{false, 2.0};
    std::string cache_log;  // empty: in-memory cache
    std::string listen_address = "127.0.0.1";
    int port = 8080;        // 0: pick a free port
    int max_concurrency = 8;
    LedgerWindow window = LedgerWindow::kPerQueryMean;
    std::size_t rolling_n = 100;
    /// When the ledger is over budget, answer with the cheapest single LLM of
    /// the cascade instead of the full cascade.
    bool strict = false;
    RouteOptions route;
};

/// Gateway configuration file (JSON). Paths are resolved relative to the
/// file's directory. See docs/formats.md.
struct GatewayConfig {
    std::string marketplace_path;
    std::string cascade_path;
    std::string scorer_path;
    std::string providers_mode = "trace_replay";  // trace_replay | http | mock
    std::string trace_path;                       // trace_replay
    std::string reward = "exact_match";
    GatewayOptions options;
    std::vector<HttpProviderConfig> http;  // http mode; api keys from env

    static GatewayConfig parse(std::string_view json_text, const std::string& base_dir = ".");
    static GatewayConfig load(const std::string& path);
};

/// JSON body for a routed query: answer, llm_used, stop_index, cost_usd,
/// cached and per-step telemetry.
std::string route_outcome_json(const RouteOutcome& outcome);

struct RouteReply {
    int status = 200;
    std::string body;  // JSON
};

/// Routes live queries through a cascade with cache and ledger accounting;
/// optionally serves the JSON endpoints over HTTP.
class Gateway {
public:
    Gateway(CascadeConfig cascade, std::shared_ptr<const Scorer> scorer, Marketplace marketplace, ProviderSet providers,
            GatewayOptions options);
    static std::unique_ptr<Gateway> from_config(const GatewayConfig& config);
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /// POST /v1/route body -> reply. Thread-safe.
    RouteReply handle_route(std::string_view request_body);
    std::string stats_json() const;
    std::string health_json();

    /// Binds and serves on a background thread; returns the bound port.
    /// A negative `port` keeps the configured one; 0 picks a free port.
    int start(int port = -1);
    void stop();
    /// Blocks until stop() is called from another thread.
    void wait();
    int port() const { return bound_port_; }

    const BudgetLedger& ledger() const { return ledger_; }
    CompletionCache& cache() { return *cache_; }

private:
    CascadeConfig cheapest_singleton(std::string_view query) const;

    CascadeConfig cascade_;
    std::shared_ptr<const Scorer> scorer_;
    Marketplace marketplace_;
    ProviderSet providers_;
    GatewayOptions options_;
    BudgetLedger ledger_;
    std::unique_ptr<CompletionCache> cache_;
    // Caps routes in flight over HTTP; connections are served by a larger pool.
    std::unique_ptr<std::counting_semaphore<>> route_slots_;
    std::unique_ptr<httplib::Server> server_;
    std::thread server_thread_;
    int bound_port_ = 0;
    std::mutex run_mutex_;
    std::condition_variable stopped_;
    bool running_ = false;
};

}  // namespace frugal
