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
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "frugal/cascade.hpp"
#include "frugal/features.hpp"
#include "frugal/money.hpp"
#include "frugal/providers.hpp"
#include "frugal/trace.hpp"

namespace frugal {

// ---------------------------------------------------------------------------
// Completion cache
// ---------------------------------------------------------------------------

struct CacheEntry {
    std::string key;               // hex digest of normalized_query
    std::string normalized_query;  // stored for collision checks
    std::string query_text;
    std::string answer_text;
    std::string llm_id;
    Money stored_cost;
    std::uint64_t hit_count = 0;
    std::int64_t created_at = 0;  // unix seconds
};

std::string cache_key(std::string_view query);

struct CacheStats {
    std::size_t entries = 0;
    std::uint64_t lookups = 0;
    std::uint64_t exact_hits = 0;
    std::uint64_t similar_hits = 0;
    std::uint64_t misses = 0;
    Money saved_cost;  // sum of stored_cost over hits
};

/// Append-only log of completions with an in-memory index. Lookups may run
/// concurrently; inserts are serialized.
///
/// Log format, one entry per line, tab-separated with backslash escapes:
///   key  normalized_query  answer  llm_id  cost_usd  created_at  query
class CompletionCache {
public:
    /// In-memory cache with no backing file.
    CompletionCache() = default;
    /// Opens (creating if absent) and replays the log at `path`.
    explicit CompletionCache(std::string path);

    /// Exact normalized match first; otherwise the most similar stored query
    /// by cosine over hashed features, if at least `similarity_threshold`.
    /// A threshold above 1 disables the approximate pass.
    std::optional<CacheEntry> lookup(std::string_view query, double similarity_threshold = 2.0);
    /// Returns false (and stores nothing) when the normalized query is present.
    bool insert(std::string_view query, std::string_view answer, std::string_view llm_id, Money cost);

    std::size_t size() const;
    CacheStats stats() const;
    std::vector<CacheEntry> entries() const;

private:
    void append_log(const CacheEntry& entry);
    void index_entry(CacheEntry entry);

    std::string path_;
    mutable std::shared_mutex mutex_;
    std::vector<CacheEntry> entries_;
    std::vector<FeatureVector> features_;
    std::unordered_map<std::string, std::size_t> by_key_;
    std::ofstream log_;
    // Counters are updated under the exclusive lock taken for hit bookkeeping.
    CacheStats stats_;
};

std::string serialize_cache_entry(const CacheEntry& entry);
CacheEntry parse_cache_entry(std::string_view line);

struct CacheOptions {
    bool enabled = true;
    double similarity_threshold = 2.0;  // exact-match only by default
};

/// Cache-first routing: a hit returns the stored answer at zero cost; a miss
/// routes through the cascade and stores the accepted answer.
RouteOutcome cached_route(CompletionCache& cache, const CacheOptions& cache_options, const CascadeConfig& config,
                          const Scorer& scorer, const ProviderSet& providers, const Marketplace& marketplace,
                          std::string_view query, const RouteOptions& options = {});

// ---------------------------------------------------------------------------
// Prompt adaptation
// ---------------------------------------------------------------------------

struct PromptExample {
    std::string query;
    std::string answer;

    friend bool operator==(const PromptExample&, const PromptExample&) = default;
};

struct PromptTemplate {
    std::string instruction;
    std::vector<PromptExample> examples;
    std::map<std::string, std::string> per_llm_instruction;  // optional overrides
    std::size_t max_examples = 8;

    const std::string& instruction_for(std::string_view llm_id) const;
    friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;
};

/// instruction, then "Q: ...\nA: ...\n" per example, then "Q: <query>\nA:".
std::string render_prompt(const PromptTemplate& tmpl, std::string_view query, std::string_view llm_id = {});

inline constexpr std::string_view kAnswerDelimiter = "@@END-OF-ANSWER@@";
inline constexpr std::size_t kDefaultMaxBatch = 8;

/// Splits a batched completion into exactly `expected` answers.
class BatchParser {
public:
    explicit BatchParser(std::size_t expected) : expected_(expected) {}
    /// Throws Error(kData) naming expected vs found on a count mismatch.
    std::vector<std::string> operator()(std::string_view response) const;
    std::size_t expected() const { return expected_; }

private:
    std::size_t expected_;
};

struct BatchPrompt {
    std::string prompt;
    BatchParser parser;
};

/// Renders one prompt carrying the shared instruction and examples once and
/// the queries as a numbered list. With one query the prompt equals
/// render_prompt(tmpl, query).
BatchPrompt concat_queries(const PromptTemplate& tmpl, const std::vector<std::string>& queries, std::size_t k,
                           std::size_t max_batch = kDefaultMaxBatch);

/// Fraction of input tokens saved by batching k queries of `query_tokens`
/// under one shared prompt of `prompt_tokens`: 1 - (P + kq) / (k (P + q)).
double concat_savings_ratio(std::uint64_t prompt_tokens, std::uint64_t query_tokens, std::uint64_t k);

struct PromptSelection {
    PromptTemplate tmpl;
    std::vector<std::size_t> chosen;  // indices into the original examples, ascending
    double validation_reward = 0.0;
    double empty_reward = 0.0;  // instruction-only template on the same slice
    Money validation_cost;
};

/// Greedy forward selection of `n` in-context examples, each round adding the
/// example that maximizes mean validation reward (ties to the earliest).
/// Provider failures are retried up to `retries` times per call.
PromptSelection select_prompt_examples(const PromptTemplate& tmpl, const Dataset& validation, Provider& provider,
                                       const Marketplace& marketplace, std::size_t n,
                                       RewardKind reward = RewardKind::kExactMatch, int retries = 2);

}  // namespace frugal
