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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "frugal/money.hpp"

namespace frugal {

struct LlmResponse {
    std::string answer_text;
    Usage usage;
    double reward = 0.0;  // r(true_answer, answer_text), materialized at ingest

    friend bool operator==(const LlmResponse&, const LlmResponse&) = default;
};

struct TraceRecord {
    std::string query_id;
    std::string query_text;
    std::string true_answer;
    std::map<std::string, LlmResponse> responses;  // keyed by llm_id

    const LlmResponse* find(std::string_view llm_id) const;
    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

enum class RewardKind { kExactMatch, kTokenF1 };

RewardKind parse_reward_kind(std::string_view text);
std::string_view to_string(RewardKind kind);

/// 1 when both strings normalize identically, else 0.
double reward_exact_match(std::string_view truth, std::string_view answer);
/// Token-level F1 over normalized whitespace tokens (multiset overlap).
double reward_token_f1(std::string_view truth, std::string_view answer);
double compute_reward(RewardKind kind, std::string_view truth, std::string_view answer);

enum class Split { kTrain, kTest };

struct Dataset {
    std::vector<TraceRecord> records;
    Split split = Split::kTrain;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }
};

struct TraceLoad {
    std::vector<TraceRecord> records;
    std::vector<std::string> warnings;
};

/// Parses a JSON-lines trace and validates it against the marketplace.
/// Rewards are recomputed with `reward`; a stored reward that disagrees is
/// replaced and reported as a warning.
TraceLoad parse_trace(std::string_view text, const Marketplace& marketplace, RewardKind reward = RewardKind::kExactMatch);
TraceLoad load_trace(const std::string& path, const Marketplace& marketplace,
                     RewardKind reward = RewardKind::kExactMatch);

std::string serialize_trace(const std::vector<TraceRecord>& records);
void save_trace(const std::string& path, const std::vector<TraceRecord>& records);

/// Seeded permutation split; the test side gets round(n * test_fraction)
/// records, clamped so both sides are non-empty.
std::pair<Dataset, Dataset> split_trace(const std::vector<TraceRecord>& records, double test_fraction,
                                        std::uint64_t seed);

/// Uniform integer in [0, bound) from a 64-bit engine, without modulo bias.
/// Shared by every seeded routine so results do not depend on the standard
/// library's distribution implementations.
template <class Engine>
std::uint64_t uniform_below(Engine& engine, std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = engine();
    } while (x >= limit);
    return x % bound;
}

template <class Engine>
double uniform_unit(Engine& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace frugal
