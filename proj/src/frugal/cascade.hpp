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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "frugal/error.hpp"
#include "frugal/money.hpp"
#include "frugal/providers.hpp"
#include "frugal/scorer.hpp"
#include "frugal/trace.hpp"

namespace frugal {

/// An ordered LLM list with one acceptance threshold per position. The last
/// position always answers, so its threshold is stored but never consulted.
struct CascadeConfig {
    std::vector<std::string> list;
    std::vector<double> thresholds;
    std::string scorer_ref;
    Money budget;

    std::size_t length() const noexcept { return list.size(); }
    /// Throws Error(kData) when the list is empty, longer than max_length,
    /// has repeats or unregistered ids, or a threshold lies outside [0,1].
    void validate(const Marketplace& marketplace, std::size_t max_length = 16) const;
    friend bool operator==(const CascadeConfig&, const CascadeConfig&) = default;
};

std::string serialize_cascade(const CascadeConfig& config);
CascadeConfig parse_cascade(std::string_view text);
void save_cascade(const std::string& path, const CascadeConfig& config);
CascadeConfig load_cascade(const std::string& path);

struct RouteStep {
    std::string llm_id;
    std::string answer;
    double score = 0.0;
    Usage usage;
    Money cost;
    bool accepted = false;
    std::optional<std::string> error;  // provider failure that was skipped
    std::optional<Money> provider_reported_cost;

    friend bool operator==(const RouteStep&, const RouteStep&) = default;
};

struct RouteOutcome {
    std::string answer;
    std::string llm_used;
    std::size_t stop_index = 0;  // 1-based; 0 only for cache hits
    std::vector<RouteStep> per_step;
    Money total_cost;
    bool cache_hit = false;

    friend bool operator==(const RouteOutcome&, const RouteOutcome&) = default;
};

enum class FailurePolicy { kSkip, kFail };

/// Provider failure that ended a route; carries the steps taken so far.
class CascadeFailure : public Error {
public:
    CascadeFailure(const std::string& what, std::vector<RouteStep> steps)
        : Error(ErrorKind::kProvider, what), steps_(std::move(steps)) {}
    const std::vector<RouteStep>& steps() const noexcept { return steps_; }

private:
    std::vector<RouteStep> steps_;
};

struct RouteOptions {
    FailurePolicy on_failure = FailurePolicy::kSkip;
    CompletionRequest request_template;  // llm_id and prompt are filled per step
};

/// Calls the listed LLMs in order and returns the first answer whose score
/// clears its threshold (>=), or the last LLM's answer. Cost is computed
/// locally from the marketplace pricing.
RouteOutcome route(const CascadeConfig& config, const Scorer& scorer, const ProviderSet& providers,
                   const Marketplace& marketplace, std::string_view query, const RouteOptions& options = {});

/// Same acceptance logic with answers and usage taken from a trace record.
RouteOutcome replay_route(const CascadeConfig& config, const Scorer& scorer, const TraceRecord& record,
                          const Marketplace& marketplace);

struct CascadeEvaluation {
    double mean_reward = 0.0;
    double total_reward = 0.0;
    Money mean_cost;   // total_cost / n rounded to the nearest nano-USD
    Money total_cost;  // exact
    std::size_t count = 0;
    std::vector<RouteOutcome> per_query;
    std::vector<double> rewards;
};

CascadeEvaluation evaluate_cascade(const CascadeConfig& config, const Scorer& scorer, const Dataset& dataset,
                                   const Marketplace& marketplace);

/// total / n rounded half away from zero.
Money mean_money(Money total, std::size_t n);
/// Exact check that total / n <= budget.
bool mean_within_budget(Money total, std::size_t n, Money budget);

}  // namespace frugal
