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

#include <atomic>
#include <future>
#include <thread>

#include "doctest.h"
#include "frugal/error.hpp"
#include "frugal/gateway.hpp"
#include "frugal/scorer.hpp"
#include "frugal/text.hpp"
#include "httplib.h"
#include "json.hpp"
#include "stub_server.hpp"
#include "support.hpp"

using namespace frugal;
using namespace frugal::testing;
using json = nlohmann::json;

namespace {

// Accepts answers that are a single lower-case word longer than three letters.
class LengthScorer final : public Scorer {
public:
    double score(std::string_view, std::string_view answer, std::string_view) const override {
        return answer.size() > 3 ? 0.9 : 0.1;
    }
    std::string id() const override { return "length"; }
};

class FailingProvider final : public Provider {
public:
    explicit FailingProvider(std::string id) : id_(std::move(id)) {}
    const std::string& llm_id() const override { return id_; }
    ProviderKind kind() const override { return ProviderKind::kMock; }
    CompletionResponse complete(const CompletionRequest&) override { throw provider_error("upstream down"); }
    HealthStatus health_check() override { return {false, "upstream down"}; }

private:
    std::string id_;
};

Marketplace gateway_marketplace() {
    return marketplace_of({{"small", flat_plan(1'000'000, 7, 11)}, {"large", flat_plan(20'000'000, 13, 17)}});
}

CascadeConfig two_step(Money budget = parse_money("0.01")) {
    return CascadeConfig{{"small", "large"}, {0.5, 0}, "length", budget};
}

ProviderSet mock_providers() {
    return {{"small", MockProvider::last_word("small")}, {"large", MockProvider::last_word("large")}};
}

std::unique_ptr<Gateway> make_gateway(GatewayOptions options, ProviderSet providers = mock_providers(),
                                      Money budget = parse_money("0.01")) {
    return std::make_unique<Gateway>(two_step(budget), std::make_shared<LengthScorer>(), gateway_marketplace(),
                                     std::move(providers), std::move(options));
}

std::string route_body(const std::string& q) { return json{{"query", q}}.dump(); }

Money money_of(const json& j, const char* key) { return parse_money(j.at(key).get<std::string>()); }

}  // namespace

TEST_CASE("budget ledger windows") {
    BudgetLedger mean(Money::from_nano(10));
    mean.record(Money::from_nano(5));
    mean.record(Money::from_nano(15));
    CHECK_FALSE(mean.over_budget());
    mean.record(Money::from_nano(11));
    CHECK(mean.over_budget());  // 31 / 3 > 10
    const auto s = mean.snapshot();
    CHECK(s.served == 3);
    CHECK(s.spent.nano() == 31);
    CHECK(s.mean_cost.nano() == 10);

    BudgetLedger rolling(Money::from_nano(10), LedgerWindow::kRollingN, 2);
    rolling.record(Money::from_nano(100));
    CHECK(rolling.over_budget());
    rolling.record(Money::from_nano(0));
    rolling.record(Money::from_nano(0));
    CHECK_FALSE(rolling.over_budget());  // last two are free
    CHECK(rolling.snapshot().spent.nano() == 100);
}

TEST_CASE("malformed requests are rejected with 400") {
    auto g = make_gateway({});
    for (const char* body : {"not json", "[]", "{}", R"({"query": 3})", R"({"query": "   "})"}) {
        const auto reply = g->handle_route(body);
        CHECK(reply.status == 400);
        CHECK(json::parse(reply.body).contains("error"));
    }
    CHECK(g->ledger().snapshot().served == 0);
}

TEST_CASE("routes carry telemetry and only cascade answers") {
    auto g = make_gateway({});
    const auto reply = g->handle_route(route_body("the trend is down"));
    REQUIRE(reply.status == 200);
    const auto j = json::parse(reply.body);
    CHECK(j.at("answer") == "down");
    CHECK(j.at("llm_used") == "small");
    CHECK(j.at("stop_index") == 1);
    CHECK(j.at("cached") == false);
    CHECK(j.at("shed") == false);
    // small: 1'000'000 + 4 * 7 + 1 * 11
    CHECK(money_of(j, "cost_usd").nano() == 1'000'039);
    REQUIRE(j.at("steps").size() == 1);
    CHECK(j.at("steps")[0].at("accepted") == true);
    CHECK(j.at("steps")[0].at("input_tokens") == 4);

    const auto fell = json::parse(g->handle_route(route_body("it went up")).body);
    CHECK(fell.at("stop_index") == 2);
    CHECK(fell.at("llm_used") == "large");
    CHECK(fell.at("answer") == "up");
    CHECK(fell.at("steps").size() == 2);
    CHECK(fell.at("steps")[0].at("accepted") == false);
}

TEST_CASE("second identical query is served from the cache") {
    GatewayOptions o;
    o.cache.enabled = true;
    auto g = make_gateway(o);
    const auto a = json::parse(g->handle_route(route_body("the trend is down")).body);
    const auto b = json::parse(g->handle_route(route_body("The trend is DOWN")).body);
    CHECK(a.at("cached") == false);
    CHECK(b.at("cached") == true);
    CHECK(b.at("cost_usd") == "0");
    CHECK(b.at("stop_index") == 0);
    CHECK(b.at("answer") == a.at("answer"));
    const auto stats = json::parse(g->stats_json());
    CHECK(stats.at("served") == 2);
    CHECK(stats.at("spent_usd") == a.at("cost_usd"));
}

TEST_CASE("stats spent equals the sum of reply costs") {
    auto g = make_gateway({});
    Money sum;
    for (int i = 0; i < 25; ++i) {
        const auto j = json::parse(g->handle_route(route_body("query number " + std::to_string(i) + (i % 3 ? " down" : " up"))).body);
        sum += money_of(j, "cost_usd");
    }
    const auto stats = json::parse(g->stats_json());
    CHECK(stats.at("served") == 25);
    CHECK(money_of(stats, "spent_usd") == sum);
    CHECK(money_of(stats, "mean_cost_usd") == mean_money(sum, 25));
    CHECK(stats.at("budget_usd") == "0.01");
    CHECK(stats.at("over_budget") == false);
}

TEST_CASE("over budget is reported, and strict mode sheds to the cheapest LLM") {
    SUBCASE("reporting only by default") {
        auto g = make_gateway({}, mock_providers(), Money::from_nano(1));
        g->handle_route(route_body("x up"));
        CHECK(json::parse(g->stats_json()).at("over_budget") == true);
        const auto j = json::parse(g->handle_route(route_body("y up")).body);
        CHECK(j.at("shed") == false);
        CHECK(j.at("stop_index") == 2);
    }
    SUBCASE("strict") {
        GatewayOptions o;
        o.strict = true;
        auto g = make_gateway(o, mock_providers(), Money::from_nano(1));
        const auto first = json::parse(g->handle_route(route_body("x up")).body);
        CHECK(first.at("shed") == false);
        const auto second = json::parse(g->handle_route(route_body("y up")).body);
        CHECK(second.at("shed") == true);
        CHECK(second.at("llm_used") == "small");
        CHECK(second.at("answer") == "up");
        CHECK(second.at("steps").size() == 1);
    }
}

TEST_CASE("provider exhaustion returns 502 with step telemetry") {
    ProviderSet providers = mock_providers();
    providers["large"] = std::make_shared<FailingProvider>("large");
    auto g = make_gateway({}, providers);
    const auto reply = g->handle_route(route_body("it went up"));
    CHECK(reply.status == 502);
    const auto j = json::parse(reply.body);
    CHECK(j.contains("error"));
    REQUIRE(j.at("steps").size() == 2);
    CHECK(j.at("steps")[1].contains("error"));
    CHECK(g->ledger().snapshot().served == 0);
    // A query the first step accepts still succeeds.
    CHECK(g->handle_route(route_body("trend is down")).status == 200);

    const auto health = json::parse(g->health_json());
    CHECK(health.at("status") == "degraded");
    CHECK(health.at("providers").at("small") == "ok");
    CHECK(health.at("providers").at("large") == "upstream down");
}

TEST_CASE("fail policy ends the route at the first provider error") {
    ProviderSet providers = mock_providers();
    providers["small"] = std::make_shared<FailingProvider>("small");
    SUBCASE("skip") {
        auto g = make_gateway({}, providers);
        const auto j = json::parse(g->handle_route(route_body("trend is down")).body);
        CHECK(j.at("llm_used") == "large");
        CHECK(j.at("steps")[0].contains("error"));
    }
    SUBCASE("fail") {
        GatewayOptions o;
        o.route.on_failure = FailurePolicy::kFail;
        auto g = make_gateway(o, providers);
        CHECK(g->handle_route(route_body("trend is down")).status == 502);
    }
}

TEST_CASE("concurrent HTTP burst matches the serial total") {
    std::vector<std::string> queries;
    for (int i = 0; i < 100; ++i) queries.push_back("burst query " + std::to_string(i) + (i % 4 ? " longword" : " up"));

    auto serial = make_gateway({});
    Money serial_total;
    for (const auto& q : queries) serial_total += money_of(json::parse(serial->handle_route(route_body(q)).body), "cost_usd");

    GatewayOptions o;
    o.max_concurrency = 8;
    o.cache.enabled = true;
    auto g = make_gateway(o);
    const int port = g->start(0);
    REQUIRE(port > 0);
    std::vector<std::future<std::pair<int, Money>>> calls;
    for (int t = 0; t < 10; ++t) {
        calls.push_back(std::async(std::launch::async, [&, t] {
            httplib::Client client("127.0.0.1", port);
            Money sum;
            int ok = 0;
            for (int i = t; i < 100; i += 10) {
                auto res = client.Post("/v1/route", route_body(queries[static_cast<std::size_t>(i)]), "application/json");
                if (res && res->status == 200) {
                    ++ok;
                    sum += money_of(json::parse(res->body), "cost_usd");
                }
            }
            return std::pair{ok, sum};
        }));
    }
    int ok = 0;
    Money reply_total;
    for (auto& c : calls) {
        auto [n, s] = c.get();
        ok += n;
        reply_total += s;
    }
    CHECK(ok == 100);
    CHECK(reply_total == serial_total);
    httplib::Client client("127.0.0.1", port);
    auto stats = client.Get("/v1/stats");
    REQUIRE(stats);
    const auto j = json::parse(stats->body);
    CHECK(j.at("served") == 100);
    CHECK(money_of(j, "spent_usd") == serial_total);
    auto health = client.Get("/v1/healthz");
    REQUIRE(health);
    CHECK(json::parse(health->body).at("status") == "ok");
    auto bad = client.Post("/v1/route", "{", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    g->stop();
    CHECK_FALSE(httplib::Client("127.0.0.1", port).Get("/v1/stats"));
}

TEST_CASE("wait returns once stop is called") {
    auto g = make_gateway({});
    g->start(0);
    auto waiter = std::async(std::launch::async, [&] { g->wait(); });
    CHECK(waiter.wait_for(std::chrono::milliseconds(50)) == std::future_status::timeout);
    g->stop();
    CHECK(waiter.wait_for(std::chrono::seconds(5)) == std::future_status::ready);
}

TEST_CASE("gateway construction validates providers and cascade") {
    ProviderSet missing{{"small", MockProvider::last_word("small")}};
    CHECK_THROWS_AS(make_gateway({}, missing), Error);
    GatewayOptions bad;
    bad.max_concurrency = 0;
    CHECK_THROWS_AS(make_gateway(bad), Error);
}

TEST_CASE("config file: parsing, path resolution and mock mode") {
    TempDir dir;
    write_file(dir.file("market.csv"), serialize_pricing_table(gateway_marketplace()));
    CascadeConfig c = two_step();
    c.scorer_ref = "zero";
    save_cascade(dir.file("cascade.txt"), c);
    save_scorer(dir.file("scorer.txt"), ScorerModel::zeros(256));
    const json cfg = {{"marketplace", "market.csv"},
                      {"cascade", "cascade.txt"},
                      {"scorer", "scorer.txt"},
                      {"providers", {{"mode", "mock"}}},
                      {"cache", {{"enabled", true}, {"log", "cache.log"}}},
                      {"max_concurrency", 4},
                      {"strict", true},
                      {"failure_policy", "fail"},
                      {"ledger", {{"window", "rolling_n"}, {"n", 5}}}};
    write_file(dir.file("gateway.json"), cfg.dump());
    const GatewayConfig parsed = GatewayConfig::load(dir.file("gateway.json"));
    CHECK(parsed.marketplace_path == dir.file("market.csv"));
    CHECK(parsed.options.cache_log == dir.file("cache.log"));
    CHECK(parsed.options.cache.enabled);
    CHECK(parsed.options.max_concurrency == 4);
    CHECK(parsed.options.strict);
    CHECK(parsed.options.route.on_failure == FailurePolicy::kFail);
    CHECK(parsed.options.window == LedgerWindow::kRollingN);
    CHECK(parsed.options.rolling_n == 5);

    auto g = Gateway::from_config(parsed);
    // Zero-weight scorer gives 0.5 everywhere, which clears the first threshold.
    const auto j = json::parse(g->handle_route(route_body("the trend is down")).body);
    CHECK(j.at("answer") == "down");
    CHECK(j.at("llm_used") == "small");
    CHECK(read_file(dir.file("cache.log")).find("the trend is down") != std::string::npos);

    CHECK_THROWS_AS(GatewayConfig::parse("{}"), Error);
    CHECK_THROWS_AS(GatewayConfig::parse(R"({"marketplace":"m","cascade":"c","scorer":"s","ledger":{"window":"weekly"}})"),
                    Error);
    CHECK_THROWS_AS(GatewayConfig::parse("not json"), Error);
}

TEST_CASE("http mode against the stub server") {
    StubServer stub;
    TempDir dir;
    write_file(dir.file("market.csv"), serialize_pricing_table(gateway_marketplace()));
    CascadeConfig c{{"small"}, {0}, "zero", parse_money("1")};
    save_cascade(dir.file("cascade.txt"), c);
    save_scorer(dir.file("scorer.txt"), ScorerModel::zeros(256));
    const json cfg = {{"marketplace", "market.csv"},
                      {"cascade", "cascade.txt"},
                      {"scorer", "scorer.txt"},
                      {"providers",
                       {{"mode", "http"},
                        {"endpoints", {{"small", {{"model", "tiny-1"}, {"base_url", stub.base_url()}}}}}}}};
    const auto parsed = GatewayConfig::parse(cfg.dump(), dir.path().string());
    REQUIRE(parsed.http.size() == 1);
    CHECK(parsed.http[0].model == "tiny-1");
    CHECK(parsed.http[0].api_key.empty());
    auto g = Gateway::from_config(parsed);
    const auto j = json::parse(g->handle_route(route_body("where is it going up")).body);
    CHECK(j.at("answer") == "up");
    // small: 1'000'000 + 120 * 7 + 8 * 11
    CHECK(money_of(j, "cost_usd").nano() == 1'000'928);
    CHECK(json::parse(g->health_json()).at("status") == "ok");
    stub.stop();
    CHECK(json::parse(g->health_json()).at("status") == "degraded");
}

TEST_CASE("HTTP routes in flight never exceed max_concurrency") {
    class SlowProvider final : public Provider {
    public:
        explicit SlowProvider(std::string id) : id_(std::move(id)) {}
        const std::string& llm_id() const override { return id_; }
        ProviderKind kind() const override { return ProviderKind::kMock; }
        CompletionResponse complete(const CompletionRequest& r) override {
            const int now = ++in_flight_;
            int seen = peak.load();
            while (now > seen && !peak.compare_exchange_weak(seen, now)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
            --in_flight_;
            return inner_->complete(r);
        }
        HealthStatus health_check() override { return {}; }
        std::atomic<int> peak{0};

    private:
        std::string id_;
        std::atomic<int> in_flight_{0};
        std::shared_ptr<MockProvider> inner_ = MockProvider::last_word("x");
    };
    auto slow = std::make_shared<SlowProvider>("small");
    ProviderSet providers = mock_providers();
    providers["small"] = slow;
    GatewayOptions o;
    o.max_concurrency = 3;
    auto g = make_gateway(o, providers);
    const int port = g->start(0);
    std::vector<std::future<bool>> calls;
    for (int t = 0; t < 12; ++t) {
        calls.push_back(std::async(std::launch::async, [port, t] {
            httplib::Client client("127.0.0.1", port);
            auto res = client.Post("/v1/route", route_body("slow query " + std::to_string(t) + " onward"), "application/json");
            return res && res->status == 200;
        }));
    }
    for (auto& c : calls) CHECK(c.get());
    CHECK(slow->peak.load() >= 1);
    CHECK(slow->peak.load() <= 3);
    g->stop();
}
