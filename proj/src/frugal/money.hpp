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

#include <cstdint>
#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace frugal {

/// Exact currency amount in units of 1e-9 USD.
///
/// All arithmetic is checked: any result whose magnitude reaches 2^62 throws
/// Error(kData) instead of wrapping. There is no floating-point path.
class Money {
public:
    static constexpr std::int64_t kNanoPerUsd = 1'000'000'000;
    static constexpr std::int64_t kLimit = std::int64_t{1} << 62;

    constexpr Money() = default;
    static Money from_nano(std::int64_t nano);

    constexpr std::int64_t nano() const noexcept { return nano_; }

    Money operator+(Money other) const;
    Money operator-(Money other) const;
    Money operator-() const;
    Money& operator+=(Money other);
    Money& operator-=(Money other);
    /// Multiply by a count (tokens, queries).
    Money times(std::int64_t count) const;

    friend constexpr bool operator==(Money, Money) = default;
    friend constexpr auto operator<=>(Money, Money) = default;

private:
    constexpr explicit Money(std::int64_t nano) : nano_(nano) {}
    std::int64_t nano_ = 0;
};

/// Decimal USD rendering with up to nine fractional digits and no trailing
/// zeros: 58800000 -> "0.0588", -25 -> "-0.000000025", 0 -> "0".
std::string format_money(Money m);

/// Inverse of format_money; also accepts a leading '+' and trailing zeros.
/// Throws Error(kData) on malformed input or more than nine fractional digits.
Money parse_money(std::string_view text);

/// Parses a decimal USD amount and divides it exactly by `divisor`. Used for
/// "dollars per 10M tokens" figures; throws when the quotient is not integral.
Money parse_money_divided(std::string_view text, std::int64_t divisor);

struct Usage {
    std::uint32_t input_tokens = 0;
    std::uint32_t output_tokens = 0;

    Usage operator+(const Usage& other) const;
    friend bool operator==(const Usage&, const Usage&) = default;
};

struct PricingPlan {
    Money input_rate;         // per input token
    Money output_rate;        // per output token
    Money fixed_per_request;  // flat fee per call

    friend bool operator==(const PricingPlan&, const PricingPlan&) = default;
};

enum class ProviderKind { kMock, kTraceReplay, kHttp };

std::string_view to_string(ProviderKind kind);
ProviderKind parse_provider_kind(std::string_view text);

struct ProviderSpec {
    std::string llm_id;
    std::string display_name;  // provider company, e.g. "OpenAI"
    PricingPlan pricing;
    ProviderKind provider_kind = ProviderKind::kTraceReplay;

    friend bool operator==(const ProviderSpec&, const ProviderSpec&) = default;
};

/// c = output_rate*|output| + input_rate*|input| + fixed, computed exactly.
Money query_cost(const PricingPlan& plan, const Usage& usage);

/// Registry of LLM APIs keyed by llm_id, preserving file order.
class Marketplace {
public:
    Marketplace() = default;

    /// Throws Error(kData) on a duplicate id or a negative rate.
    void add(ProviderSpec spec);

    bool contains(std::string_view llm_id) const;
    /// Throws Error(kData) naming the id when it is unknown.
    const ProviderSpec& at(std::string_view llm_id) const;
    const std::vector<ProviderSpec>& providers() const noexcept { return providers_; }
    std::vector<std::string> llm_ids() const;
    std::size_t size() const noexcept { return providers_.size(); }
    bool empty() const noexcept { return providers_.empty(); }

    Money cost(std::string_view llm_id, const Usage& usage) const;

    friend bool operator==(const Marketplace& a, const Marketplace& b) { return a.providers_ == b.providers_; }

private:
    std::vector<ProviderSpec> providers_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

/// Marketplace file: CSV lines `llm_id,provider,input_usd_per_10m,
/// output_usd_per_10m,fixed_usd_per_request[,kind]`. Blank lines, '#'
/// comments and a header line starting with "llm_id" are skipped.
Marketplace parse_pricing_table(std::string_view text);
Marketplace load_pricing_table(const std::string& path);
std::string serialize_pricing_table(const Marketplace& marketplace);

}  // namespace frugal
