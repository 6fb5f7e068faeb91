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
#include <string>
#include <vector>

#include "frugal/cascade.hpp"
#include "frugal/money.hpp"
#include "frugal/ratio.hpp"
#include "frugal/scorer.hpp"
#include "frugal/trace.hpp"

namespace frugal {

struct OptimizerConfig {
    std::size_t max_length = 3;
    Money budget;
    /// Threshold candidates per position: grid_points - 2 score quantiles
    /// plus {0, 1}.
    std::size_t grid_points = 19;
    double disagreement_floor = 0.02;
    double subsample = 1.0;
    std::size_t rerank_top = 20;
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0 = hardware concurrency (capped at 8)
    std::string scorer_ref;

    void validate() const;
};

struct SearchStats {
    std::size_t lists_enumerated = 0;
    std::size_t lists_pruned = 0;
    std::size_t grid_points_evaluated = 0;
    std::vector<std::string> llms_excluded;  // not answered on every record
};

struct OptimizerResult {
    CascadeConfig best;
    double train_mean_reward = 0.0;
    double train_total_reward = 0.0;
    Money train_mean_cost;
    Money train_total_cost;
    std::size_t train_count = 0;
    bool feasible = false;
    SearchStats search_stats;
};

struct Disagreement {
    Ratio fraction;            // differing / common
    std::size_t excluded = 0;  // records missing either LLM
};

/// Fraction of common records where exactly one of the two LLMs is correct
/// (binarized reward). Throws Error(kData) when no record has both.
Disagreement pairwise_disagreement(const Dataset& dataset, const std::string& llm_a, const std::string& llm_b);

struct ListEnumeration {
    std::vector<std::vector<std::string>> lists;
    std::size_t enumerated = 0;
    std::size_t pruned = 0;
};

/// All ordered repeat-free lists of length 1..max_length over `llm_ids`.
/// Lists of length >= 2 whose every adjacent pair disagrees on less than
/// disagreement_floor of the records are dropped; singletons are never
/// dropped.
ListEnumeration enumerate_lists(const std::vector<std::string>& llm_ids, const Dataset& dataset,
                                const OptimizerConfig& config);

/// Threshold candidates for one LLM: lower empirical quantiles at levels
/// j/(grid_points-1), j = 1..grid_points-2, plus 0 and 1; sorted, unique.
std::vector<double> threshold_grid(std::vector<double> scores, std::size_t grid_points);

/// Search objective of one candidate, in the form used for ranking.
struct Candidate {
    std::vector<std::string> list;
    std::vector<double> thresholds;
    double reward_sum = 0.0;
    std::int64_t cost_sum = 0;
    bool feasible = false;
};

/// Strict total order: feasible first; among feasible higher reward, then
/// lower cost; among infeasible lower cost, then higher reward; then shorter
/// list, lexicographic ids, lexicographic thresholds.
bool better_candidate(const Candidate& a, const Candidate& b);

/// Maximizes mean train reward subject to mean train cost <= budget.
OptimizerResult optimize(const Dataset& train, const Scorer& scorer, const Marketplace& marketplace,
                         const OptimizerConfig& config);

/// Exhaustive search over every list and the full threshold grid, replaying
/// each candidate through the cascade engine. Guarded to K <= 5 and at most
/// 500 records.
OptimizerResult brute_force_oracle(const Dataset& train, const Scorer& scorer, const Marketplace& marketplace,
                                   const OptimizerConfig& config);

std::string format_search_stats(const OptimizerResult& result);

}  // namespace frugal
