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

#include "frugal/gateway.hpp"

#include <algorithm>
#include <filesystem>

#include <httplib.h>
#include <json.hpp>

#include "frugal/error.hpp"
#include "frugal/text.hpp"

namespace frugal {

using nlohmann::json;

BudgetLedger::BudgetLedger(Money budget, LedgerWindow window, std::size_t rolling_n)
    : budget_(budget), window_(window), rolling_n_(std::max<std::size_t>(1, rolling_n)) {}

void BudgetLedger::record(Money cost) {
    std::lock_guard lock(mutex_);
    spent_ += cost;
    ++served_;
    if (window_ == LedgerWindow::kRollingN) {
        recent_.push_back(cost);
        recent_sum_ += cost;
        if (recent_.size() > rolling_n_) {
            recent_sum_ -= recent_.front();
            recent_.pop_front();
        }
    }
}

bool BudgetLedger::over_budget_locked() const {
    if (served_ == 0) return false;
    if (window_ == LedgerWindow::kRollingN) return !mean_within_budget(recent_sum_, recent_.size(), budget_);
    return !mean_within_budget(spent_, served_, budget_);
}

bool BudgetLedger::over_budget() const {
    std::lock_guard lock(mutex_);
    return over_budget_locked();
}

LedgerSnapshot BudgetLedger::snapshot() const {
    std::lock_guard lock(mutex_);
    LedgerSnapshot s;
    s.served = served_;
    s.spent = spent_;
    s.mean_cost = served_ == 0 ? Money{} : mean_money(spent_, served_);
    s.budget = budget_;
    s.over_budget = over_budget_locked();
    return s;
}

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
    if (path.empty()) return path;
    std::filesystem::path p(path);
    return p.is_absolute() ? path : (std::filesystem::path(base_dir) / p).string();
}

}  // namespace

GatewayConfig GatewayConfig::parse(std::string_view json_text, const std::string& base_dir) {
    GatewayConfig cfg;
    try {
        const json j = json::parse(json_text);
        cfg.marketplace_path = resolve(base_dir, j.at("marketplace").get<std::string>());
        cfg.cascade_path = resolve(base_dir, j.at("cascade").get<std::string>());
        cfg.scorer_path = resolve(base_dir, j.at("scorer").get<std::string>());
        cfg.reward = j.value("reward", cfg.reward);
        if (j.contains("providers")) {
            const auto& p = j.at("providers");
            cfg.providers_mode = p.value("mode", cfg.providers_mode);
            cfg.trace_path = resolve(base_dir, p.value("trace", std::string()));
            if (p.contains("endpoints")) {
                for (const auto& [llm_id, e] : p.at("endpoints").items()) {
                    HttpProviderConfig h;
                    if (e.contains("provider")) {
                        h = HttpProviderConfig::from_env(e.at("provider").get<std::string>(), llm_id,
                                                         e.value("model", std::string()));
                    } else {
                        h.llm_id = llm_id;
                        h.model = e.value("model", llm_id);
                    }
                    if (e.contains("base_url")) h.base_url = e.at("base_url").get<std::string>();
                    h.max_in_flight = e.value("max_in_flight", h.max_in_flight);
                    if (e.value("busy", std::string("block")) == "reject") h.busy_policy = BusyPolicy::kReject;
                    cfg.http.push_back(std::move(h));
                }
            }
        }
        auto& o = cfg.options;
        if (j.contains("cache")) {
            const auto& c = j.at("cache");
            o.cache.enabled = c.value("enabled", false);
            o.cache.similarity_threshold = c.value("threshold", 2.0);
            o.cache_log = resolve(base_dir, c.value("log", std::string()));
        }
        o.listen_address = j.value("listen_address", o.listen_address);
        o.port = j.value("port", o.port);
        o.max_concurrency = j.value("max_concurrency", o.max_concurrency);
        o.strict = j.value("strict", false);
        if (j.value("failure_policy", std::string("skip")) == "fail") o.route.on_failure = FailurePolicy::kFail;
        if (j.contains("ledger")) {
            const auto& l = j.at("ledger");
            const std::string window = l.value("window", std::string("per_query_mean"));
            if (window == "rolling_n") o.window = LedgerWindow::kRollingN;
            else if (window != "per_query_mean") throw invalid_argument("unknown ledger window '" + window + "'");
            o.rolling_n = l.value("n", o.rolling_n);
        }
    } catch (const json::exception& e) {
        throw invalid_argument(std::string("gateway config: ") + e.what());
    }
    if (cfg.options.max_concurrency < 1) throw invalid_argument("max_concurrency must be >= 1");
    return cfg;
}

GatewayConfig GatewayConfig::load(const std::string& path) {
    const auto dir = std::filesystem::path(path).parent_path().string();
    return parse(read_file(path), dir.empty() ? "." : dir);
}

Gateway::Gateway(CascadeConfig cascade, std::shared_ptr<const Scorer> scorer, Marketplace marketplace,
                 ProviderSet providers, GatewayOptions options)
    : cascade_(std::move(cascade)),
      scorer_(std::move(scorer)),
      marketplace_(std::move(marketplace)),
      providers_(std::move(providers)),
      options_(std::move(options)),
      ledger_(cascade_.budget, options_.window, options_.rolling_n),
      cache_(options_.cache_log.empty() ? std::make_unique<CompletionCache>()
                                        : std::make_unique<CompletionCache>(options_.cache_log)) {
    if (options_.max_concurrency < 1) throw invalid_argument("max_concurrency must be >= 1");
    cascade_.validate(marketplace_);
    for (const auto& id : cascade_.list) {
        if (providers_.find(id) == providers_.end()) throw invalid_argument("no provider for cascade llm '" + id + "'");
    }
}

std::unique_ptr<Gateway> Gateway::from_config(const GatewayConfig& config) {
    auto marketplace = load_pricing_table(config.marketplace_path);
    auto cascade = load_cascade(config.cascade_path);
    auto model = std::make_shared<const ScorerModel>(load_scorer(config.scorer_path));
    auto scorer = std::make_shared<LogisticScorer>(model, cascade.scorer_ref);
    ProviderSet providers;
    if (config.providers_mode == "trace_replay") {
        if (config.trace_path.empty()) throw invalid_argument("trace_replay providers need a trace path");
        auto trace = load_trace(config.trace_path, marketplace, parse_reward_kind(config.reward));
        providers = trace_replay_providers(marketplace, trace.records);
    } else if (config.providers_mode == "mock") {
        for (const auto& id : marketplace.llm_ids()) providers.emplace(id, MockProvider::last_word(id));
    } else if (config.providers_mode == "http") {
        for (const auto& h : config.http) providers.emplace(h.llm_id, std::make_shared<HttpProvider>(h));
    } else {
        throw invalid_argument("unknown providers mode '" + config.providers_mode + "'");
    }
    return std::make_unique<Gateway>(std::move(cascade), std::move(scorer), std::move(marketplace),
                                     std::move(providers), config.options);
}

Gateway::~Gateway() { stop(); }

CascadeConfig Gateway::cheapest_singleton(std::string_view query) const {
    // Estimate each listed LLM's price for this prompt with a one-token answer.
    const Usage probe{static_cast<std::uint32_t>(whitespace_tokens(query).size()), 1};
    const std::string* best = &cascade_.list.front();
    Money best_cost = marketplace_.cost(*best, probe);
    for (const auto& id : cascade_.list) {
        const Money c = marketplace_.cost(id, probe);
        if (c < best_cost) {
            best_cost = c;
            best = &id;
        }
    }
    return CascadeConfig{{*best}, {0.0}, cascade_.scorer_ref, cascade_.budget};
}

namespace {

json steps_json(const std::vector<RouteStep>& steps) {
    json arr = json::array();
    for (const auto& s : steps) {
        json j = {{"llm_id", s.llm_id},
                  {"score", s.score},
                  {"cost_usd", format_money(s.cost)},
                  {"accepted", s.accepted},
                  {"input_tokens", s.usage.input_tokens},
                  {"output_tokens", s.usage.output_tokens}};
        if (s.error) j["error"] = *s.error;
        arr.push_back(std::move(j));
    }
    return arr;
}

json outcome_to_json(const RouteOutcome& outcome) {
    return {{"answer", outcome.answer},
            {"llm_used", outcome.llm_used},
            {"stop_index", outcome.stop_index},
            {"cost_usd", format_money(outcome.total_cost)},
            {"cached", outcome.cache_hit},
            {"steps", steps_json(outcome.per_step)}};
}

RouteReply error_reply(int status, const std::string& reason) {
    return {status, json{{"error", reason}}.dump()};
}

}  // namespace

std::string route_outcome_json(const RouteOutcome& outcome) { return outcome_to_json(outcome).dump(); }

RouteReply Gateway::handle_route(std::string_view request_body) {
    std::string query;
    try {
        const json j = json::parse(request_body);
        if (!j.is_object() || !j.contains("query") || !j.at("query").is_string()) {
            return error_reply(400, "request body must be an object with a string 'query'");
        }
        query = j.at("query").get<std::string>();
    } catch (const json::exception& e) {
        return error_reply(400, std::string("malformed JSON: ") + e.what());
    }
    if (trim(query).empty()) return error_reply(400, "query is empty");

    const bool shed = options_.strict && ledger_.over_budget();
    const CascadeConfig config = shed ? cheapest_singleton(query) : cascade_;
    RouteOutcome outcome;
    try {
        outcome = cached_route(*cache_, options_.cache, config, *scorer_, providers_, marketplace_, query, options_.route);
    } catch (const CascadeFailure& e) {
        return {502, json{{"error", e.what()}, {"steps", steps_json(e.steps())}}.dump()};
    } catch (const Error& e) {
        return error_reply(e.kind() == ErrorKind::kProvider ? 502 : 500, e.what());
    }
    ledger_.record(outcome.total_cost);
    json reply = outcome_to_json(outcome);
    reply["shed"] = shed;
    return {200, reply.dump()};
}

std::string Gateway::stats_json() const {
    const auto s = ledger_.snapshot();
    return json{{"served", s.served},
                {"spent_usd", format_money(s.spent)},
                {"mean_cost_usd", format_money(s.mean_cost)},
                {"budget_usd", format_money(s.budget)},
                {"over_budget", s.over_budget}}
        .dump();
}

std::string Gateway::health_json() {
    json providers = json::object();
    bool healthy = true;
    for (const auto& id : cascade_.list) {
        const auto status = providers_.at(id)->health_check();
        healthy = healthy && status.healthy;
        providers[id] = status.healthy ? json("ok") : json(status.reason);
    }
    return json{{"status", healthy ? "ok" : "degraded"}, {"providers", providers}}.dump();
}

int Gateway::start(int port) {
    if (server_) return bound_port_;
    if (port >= 0) options_.port = port;
    server_ = std::make_unique<httplib::Server>();
    route_slots_ = std::make_unique<std::counting_semaphore<>>(options_.max_concurrency);
    const auto connections = static_cast<std::size_t>(std::max(64, 4 * options_.max_concurrency));
    server_->new_task_queue = [connections] { return new httplib::ThreadPool(connections); };
    server_->Post("/v1/route", [this](const httplib::Request& req, httplib::Response& res) {
        route_slots_->acquire();
        RouteReply reply;
        try {
            reply = handle_route(req.body);
        } catch (...) {
            route_slots_->release();
            throw;
        }
        route_slots_->release();
        res.status = reply.status;
        res.set_content(reply.body, "application/json");
    });
    server_->Get("/v1/stats", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(stats_json(), "application/json");
    });
    server_->Get("/v1/healthz", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(health_json(), "application/json");
    });
    if (options_.port == 0) {
        bound_port_ = server_->bind_to_any_port(options_.listen_address);
    } else {
        bound_port_ = server_->bind_to_port(options_.listen_address, options_.port) ? options_.port : -1;
    }
    if (bound_port_ < 0) {
        server_.reset();
        throw io_error("cannot bind " + options_.listen_address + ":" + std::to_string(options_.port));
    }
    server_thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    {
        std::lock_guard lock(run_mutex_);
        running_ = true;
    }
    return bound_port_;
}

void Gateway::stop() {
    if (server_) server_->stop();
    if (server_thread_.joinable()) server_thread_.join();
    server_.reset();
    {
        std::lock_guard lock(run_mutex_);
        running_ = false;
    }
    stopped_.notify_all();
}

void Gateway::wait() {
    std::unique_lock lock(run_mutex_);
    stopped_.wait(lock, [this] { return !running_; });
}

}  // namespace frugal
