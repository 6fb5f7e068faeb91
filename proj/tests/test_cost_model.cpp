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

#include <random>

#include "doctest.h"
#include "frugal/error.hpp"
#include "frugal/money.hpp"
#include "support.hpp"

using namespace frugal;
using frugal::testing::flat_plan;

namespace {

PricingPlan gpt4_per_1k() {
    // $0.03 / 1K input tokens, $0.06 / 1K output tokens.
    return PricingPlan{parse_money_divided("0.03", 1000), parse_money_divided("0.06", 1000), Money{}};
}

Marketplace api_prices() { return load_pricing_table(frugal::testing::source_path("data/marketplace_march2023.csv")); }

}  // namespace

TEST_CASE("gpt-4 per-1K rates price the illustrative query at $0.0588") {
    const PricingPlan plan = gpt4_per_1k();
    CHECK(plan.input_rate.nano() == 30'000);
    CHECK(plan.output_rate.nano() == 60'000);
    const Money per_query = query_cost(plan, Usage{1800, 80});
    CHECK(per_query.nano() == 58'800'000);
    CHECK(format_money(per_query) == "0.0588");
    CHECK(per_query.times(360'000) == parse_money("21168"));
}

TEST_CASE("zero usage with no fixed fee costs nothing") {
    CHECK(query_cost(flat_plan(0, 123, 456), Usage{0, 0}).nano() == 0);
    CHECK(query_cost(gpt4_per_1k(), Usage{}).nano() == 0);
}

TEST_CASE("J1-Jumbo prices output tokens plus a flat fee") {
    const Marketplace m = api_prices();
    CHECK(m.cost("J1-Jumbo", Usage{500, 100}).nano() == 7'500'000);
    CHECK(format_money(m.cost("J1-Jumbo", Usage{500, 100})) == "0.0075");
}

TEST_CASE("pricing table converts per-10M prices to per-token rates") {
    const Marketplace m = api_prices();
    REQUIRE(m.size() == 12);
    CHECK(m.at("GPT-J").pricing.input_rate.nano() == 20);
    CHECK(m.at("GPT-J").pricing.output_rate.nano() == 500);
    CHECK(m.at("GPT-4").pricing.input_rate.nano() == 3000);
    CHECK(m.at("GPT-4").pricing.output_rate.nano() == 6000);
    CHECK(m.at("J1-Large").pricing.fixed_per_request.nano() == 300'000);
    CHECK(m.at("GPT-J").display_name == "Textsynth");
    CHECK(m.providers().front().llm_id == "GPT-Curie");
    // Table rates on the same workload: a tenth of the per-1K figure.
    CHECK(m.cost("GPT-4", Usage{1800, 80}).times(360'000) == parse_money("2116.8"));
}

TEST_CASE("empty pricing table yields an empty registry") {
    CHECK(parse_pricing_table("").empty());
    CHECK(parse_pricing_table("# only a comment\n\n").empty());
}

TEST_CASE("pricing table errors name the line") {
    auto kind_of = [](const std::string& text) {
        try {
            parse_pricing_table(text);
        } catch (const Error& e) {
            return std::pair<ErrorKind, std::string>{e.kind(), e.what()};
        }
        return std::pair<ErrorKind, std::string>{ErrorKind::kInternal, ""};
    };
    auto [k1, m1] = kind_of("A,x,1,1,0\nA,y,1,1,0\n");
    CHECK(k1 == ErrorKind::kData);
    CHECK(m1.find("2") != std::string::npos);
    CHECK(kind_of("A,x,-1,1,0\n").first == ErrorKind::kData);
    CHECK(kind_of("A,x,abc,1,0\n").first == ErrorKind::kData);
    CHECK(kind_of("A,x,1,1\n").first == ErrorKind::kData);
    // 1e-10 USD per token is not a whole number of nano-USD.
    CHECK(kind_of("A,x,0.001,1,0\n").first == ErrorKind::kData);
    CHECK(kind_of("A,x,1,1,0,carrier-pigeon\n").first == ErrorKind::kData);
}

TEST_CASE("unknown llm id is a data error naming the id") {
    const Marketplace m = api_prices();
    try {
        (void)m.at("gpt-5");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::kData);
        CHECK(std::string(e.what()).find("gpt-5") != std::string::npos);
    }
}

TEST_CASE("money formatting") {
    CHECK(format_money(Money::from_nano(58'800'000)) == "0.0588");
    CHECK(format_money(Money::from_nano(0)) == "0");
    CHECK(format_money(Money::from_nano(-25)) == "-0.000000025");
    CHECK(format_money(Money::from_nano(21'168 * Money::kNanoPerUsd)) == "21168");
    CHECK(format_money(Money::from_nano(1'500'000'000)) == "1.5");
}

TEST_CASE("money parsing") {
    CHECK(parse_money("0.0588").nano() == 58'800'000);
    CHECK(parse_money("+1.50").nano() == 1'500'000'000);
    CHECK(parse_money("-0.000000025").nano() == -25);
    CHECK_THROWS_AS(parse_money("0.0000000001"), Error);
    CHECK_THROWS_AS(parse_money("1e3"), Error);
    CHECK_THROWS_AS(parse_money(""), Error);
    CHECK_THROWS_AS(parse_money("."), Error);
    CHECK_THROWS_AS(parse_money("99999999999"), Error);
}

TEST_CASE("money arithmetic is checked") {
    const Money big = Money::from_nano(Money::kLimit - 1);
    CHECK_THROWS_AS(big + Money::from_nano(1), Error);
    CHECK_THROWS_AS(Money::from_nano(Money::kLimit), Error);
    CHECK_THROWS_AS(Money::from_nano(2).times(Money::kLimit / 2), Error);
    CHECK_THROWS_AS((-big) - Money::from_nano(1), Error);
    CHECK((big - big).nano() == 0);
    const Usage a{0xFFFFFFFFu, 0};
    const Usage one{1, 0};
    CHECK_THROWS_AS(a + one, Error);
}

TEST_CASE("property: query cost is additive up to the double-counted fee") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 2000; ++trial) {
        const PricingPlan plan = flat_plan(static_cast<std::int64_t>(rng() % 10'000'000),
                                           static_cast<std::int64_t>(rng() % 100'000),
                                           static_cast<std::int64_t>(rng() % 100'000));
        const Usage u1{static_cast<std::uint32_t>(rng() % 100'000), static_cast<std::uint32_t>(rng() % 10'000)};
        const Usage u2{static_cast<std::uint32_t>(rng() % 100'000), static_cast<std::uint32_t>(rng() % 10'000)};
        CHECK(query_cost(plan, u1 + u2) ==
              query_cost(plan, u1) + query_cost(plan, u2) - plan.fixed_per_request);
    }
}

TEST_CASE("property: query cost is monotone in each usage field") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 2000; ++trial) {
        const PricingPlan plan = flat_plan(static_cast<std::int64_t>(rng() % 1000),
                                           static_cast<std::int64_t>(rng() % 1000),
                                           static_cast<std::int64_t>(rng() % 1000));
        const Usage u{static_cast<std::uint32_t>(rng() % 100'000), static_cast<std::uint32_t>(rng() % 100'000)};
        const std::uint32_t d = static_cast<std::uint32_t>(rng() % 1000);
        CHECK(query_cost(plan, u) <= query_cost(plan, Usage{u.input_tokens + d, u.output_tokens}));
        CHECK(query_cost(plan, u) <= query_cost(plan, Usage{u.input_tokens, u.output_tokens + d}));
    }
}

TEST_CASE("property: pricing table round-trips through serialization") {
    CHECK(parse_pricing_table(serialize_pricing_table(api_prices())) == api_prices());

    std::mt19937_64 rng(13);
    const ProviderKind kinds[] = {ProviderKind::kMock, ProviderKind::kTraceReplay, ProviderKind::kHttp};
    for (int trial = 0; trial < 200; ++trial) {
        Marketplace m;
        const int n = static_cast<int>(rng() % 6);
        for (int i = 0; i < n; ++i) {
            m.add(ProviderSpec{"llm-" + std::to_string(trial) + "-" + std::to_string(i), "P" + std::to_string(i),
                               flat_plan(static_cast<std::int64_t>(rng() % 1'000'000'000),
                                         static_cast<std::int64_t>(rng() % 10'000'000),
                                         static_cast<std::int64_t>(rng() % 10'000'000)),
                               kinds[rng() % 3]});
        }
        CHECK(parse_pricing_table(serialize_pricing_table(m)) == m);
    }
}

TEST_CASE("property: money format and parse are inverse") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 5000; ++trial) {
        const auto nano = static_cast<std::int64_t>(rng() % (std::uint64_t{1} << 61)) * (rng() % 2 ? 1 : -1);
        const Money m = Money::from_nano(nano);
        CHECK(parse_money(format_money(m)) == m);
    }
}
