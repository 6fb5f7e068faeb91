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

#include "frugal/money.hpp"

#include <charconv>
#include <cstdlib>

#include "frugal/error.hpp"
#include "frugal/text.hpp"

namespace frugal {
namespace {

std::int64_t checked(std::int64_t v) {
    if (v >= Money::kLimit || v <= -Money::kLimit) {
        throw data_error("money overflow: magnitude reached 2^62 nano-USD");
    }
    return v;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t out = 0;
    if (__builtin_add_overflow(a, b, &out)) throw data_error("money overflow in addition");
    return checked(out);
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t out = 0;
    if (__builtin_mul_overflow(a, b, &out)) throw data_error("money overflow in multiplication");
    return checked(out);
}

}  // namespace

Money Money::from_nano(std::int64_t nano) { return Money(checked(nano)); }

Money Money::operator+(Money other) const { return Money(checked_add(nano_, other.nano_)); }
Money Money::operator-(Money other) const { return Money(checked_add(nano_, -other.nano_)); }
Money Money::operator-() const { return Money(-nano_); }

Money& Money::operator+=(Money other) {
    nano_ = checked_add(nano_, other.nano_);
    return *this;
}

Money& Money::operator-=(Money other) {
    nano_ = checked_add(nano_, -other.nano_);
    return *this;
}

Money Money::times(std::int64_t count) const { return Money(checked_mul(nano_, count)); }

std::string format_money(Money m) {
    std::int64_t v = m.nano();
    const bool negative = v < 0;
    // |v| < 2^62, so negation is safe.
    std::uint64_t mag = negative ? static_cast<std::uint64_t>(-v) : static_cast<std::uint64_t>(v);
    std::string out = negative ? "-" : "";
    out += std::to_string(mag / Money::kNanoPerUsd);
    std::uint64_t frac = mag % Money::kNanoPerUsd;
    if (frac != 0) {
        std::string digits = std::to_string(frac);
        digits.insert(0, 9 - digits.size(), '0');
        while (digits.back() == '0') digits.pop_back();
        out += '.';
        out += digits;
    }
    return out;
}

namespace {

// Parses "[-+]int[.frac]" into an integer scaled by 10^scale_digits.
// Returns false when there are more fractional digits than the scale allows
// (unless the surplus digits are zero).
__int128 parse_scaled(std::string_view text, int scale_digits) {
    std::string_view s = trim(text);
    if (s.empty()) throw data_error("empty decimal amount");
    bool negative = false;
    if (s.front() == '-' || s.front() == '+') {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    const auto dot = s.find('.');
    std::string_view whole = s.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
    if (whole.empty() && frac.empty()) throw data_error("malformed decimal amount '" + std::string(text) + "'");
    __int128 value = 0;
    for (char c : whole) {
        if (c < '0' || c > '9') throw data_error("malformed decimal amount '" + std::string(text) + "'");
        value = value * 10 + (c - '0');
        if (value > (__int128{1} << 100)) throw data_error("decimal amount too large '" + std::string(text) + "'");
    }
    int used = 0;
    for (char c : frac) {
        if (c < '0' || c > '9') throw data_error("malformed decimal amount '" + std::string(text) + "'");
        if (used < scale_digits) {
            value = value * 10 + (c - '0');
            ++used;
        } else if (c != '0') {
            throw data_error("decimal amount '" + std::string(text) + "' has more precision than 1e-9 USD");
        }
    }
    for (; used < scale_digits; ++used) value *= 10;
    return negative ? -value : value;
}

Money from_int128(__int128 v, std::string_view text) {
    if (v >= Money::kLimit || v <= -Money::kLimit) {
        throw data_error("decimal amount '" + std::string(text) + "' out of range");
    }
    return Money::from_nano(static_cast<std::int64_t>(v));
}

}  // namespace

Money parse_money(std::string_view text) { return from_int128(parse_scaled(text, 9), text); }

Money parse_money_divided(std::string_view text, std::int64_t divisor) {
    const __int128 scaled = parse_scaled(text, 9);
    if (scaled % divisor != 0) {
        throw data_error("amount '" + std::string(text) + "' is not an exact multiple of 1e-9 USD after dividing by " +
                         std::to_string(divisor));
    }
    return from_int128(scaled / divisor, text);
}

Usage Usage::operator+(const Usage& other) const {
    const std::uint64_t in = std::uint64_t{input_tokens} + other.input_tokens;
    const std::uint64_t out = std::uint64_t{output_tokens} + other.output_tokens;
    if (in > UINT32_MAX || out > UINT32_MAX) throw data_error("token count exceeds 32 bits");
    return Usage{static_cast<std::uint32_t>(in), static_cast<std::uint32_t>(out)};
}

std::string_view to_string(ProviderKind kind) {
    switch (kind) {
        case ProviderKind::kMock: return "mock";
        case ProviderKind::kTraceReplay: return "trace_replay";
        case ProviderKind::kHttp: return "http";
    }
    return "unknown";
}

ProviderKind parse_provider_kind(std::string_view text) {
    if (text == "mock") return ProviderKind::kMock;
    if (text == "trace_replay") return ProviderKind::kTraceReplay;
    if (text == "http") return ProviderKind::kHttp;
    throw data_error("unknown provider kind '" + std::string(text) + "'");
}

Money query_cost(const PricingPlan& plan, const Usage& usage) {
    return plan.output_rate.times(usage.output_tokens) + plan.input_rate.times(usage.input_tokens) +
           plan.fixed_per_request;
}

void Marketplace::add(ProviderSpec spec) {
    if (spec.llm_id.empty()) throw data_error("empty llm_id");
    if (index_.count(spec.llm_id) != 0) throw data_error("duplicate llm_id '" + spec.llm_id + "'");
    const auto& p = spec.pricing;
    if (p.input_rate.nano() < 0 || p.output_rate.nano() < 0 || p.fixed_per_request.nano() < 0) {
        throw data_error("negative rate for llm_id '" + spec.llm_id + "'");
    }
    index_.emplace(spec.llm_id, providers_.size());
    providers_.push_back(std::move(spec));
}

bool Marketplace::contains(std::string_view llm_id) const { return index_.find(llm_id) != index_.end(); }

const ProviderSpec& Marketplace::at(std::string_view llm_id) const {
    auto it = index_.find(llm_id);
    if (it == index_.end()) throw data_error("unknown llm_id '" + std::string(llm_id) + "'");
    return providers_[it->second];
}

std::vector<std::string> Marketplace::llm_ids() const {
    std::vector<std::string> ids;
    ids.reserve(providers_.size());
    for (const auto& p : providers_) ids.push_back(p.llm_id);
    return ids;
}

Money Marketplace::cost(std::string_view llm_id, const Usage& usage) const {
    return query_cost(at(llm_id).pricing, usage);
}

namespace {
constexpr std::int64_t kTokensPerQuote = 10'000'000;
}

Marketplace parse_pricing_table(std::string_view text) {
    Marketplace registry;
    std::size_t row = 0;
    for (std::string_view line : split_lines(text)) {
        ++row;
        std::string_view body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        auto fields = split(body, ',');
        for (auto& f : fields) f = trim(f);
        if (fields.front() == "llm_id") continue;
        if (fields.size() != 5 && fields.size() != 6) {
            throw data_error("marketplace row " + std::to_string(row) + ": expected 5 or 6 fields, found " +
                             std::to_string(fields.size()));
        }
        try {
            ProviderSpec spec;
            spec.llm_id = std::string(fields[0]);
            spec.display_name = std::string(fields[1]);
            spec.pricing.input_rate = parse_money_divided(fields[2], kTokensPerQuote);
            spec.pricing.output_rate = parse_money_divided(fields[3], kTokensPerQuote);
            spec.pricing.fixed_per_request = parse_money(fields[4]);
            if (fields.size() == 6) spec.provider_kind = parse_provider_kind(fields[5]);
            registry.add(std::move(spec));
        } catch (const Error& e) {
            throw data_error("marketplace row " + std::to_string(row) + ": " + e.what());
        }
    }
    return registry;
}

Marketplace load_pricing_table(const std::string& path) { return parse_pricing_table(read_file(path)); }

std::string serialize_pricing_table(const Marketplace& marketplace) {
    std::string out = "llm_id,provider,input_usd_per_10m,output_usd_per_10m,fixed_usd_per_request,kind\n";
    for (const auto& p : marketplace.providers()) {
        out += p.llm_id + ',' + p.display_name + ',' + format_money(p.pricing.input_rate.times(kTokensPerQuote)) + ',' +
               format_money(p.pricing.output_rate.times(kTokensPerQuote)) + ',' +
               format_money(p.pricing.fixed_per_request) + ',' + std::string(to_string(p.provider_kind)) + '\n';
    }
    return out;
}

}  // namespace frugal
