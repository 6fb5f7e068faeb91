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
#include <vector>

#include "frugal/cascade.hpp"
#include "frugal/optimizer.hpp"
#include "frugal/ratio.hpp"
#include "frugal/trace.hpp"

namespace frugal {

/// Fraction of records (answered by both) where `llm_a` is correct and
/// `llm_b` is not. Throws Error(kData) when no record has both.
Ratio mpi(const Dataset& dataset, const std::string& llm_a, const std::string& llm_b);

/// values[row][col] = MPI of the column LLM with respect to the row LLM.
struct MpiMatrix {
    std::vector<std::string> llm_ids;
    std::vector<std::vector<Ratio>> values;
};

/// Over the marketplace LLMs that appear in the dataset, in registry order.
MpiMatrix mpi_matrix(const Dataset& dataset, const Marketplace& marketplace);
/// CSV: row_llm,col_llm,value (value as a decimal fraction).
std::string mpi_csv(const MpiMatrix& matrix);

struct FrontierPoint {
    Money budget;
    CascadeConfig config;
    bool feasible = false;
    double train_mean_reward = 0.0;
    Money train_mean_cost;
    double test_mean_reward = 0.0;
    Money test_mean_cost;
};

/// Runs the optimizer at each budget (ascending) and evaluates each winner
/// on the test split. `base` supplies every optimizer setting but the budget.
std::vector<FrontierPoint> budget_sweep(const Dataset& train, const Dataset& test, const Scorer& scorer,
                                        const Marketplace& marketplace, const std::vector<Money>& budgets,
                                        const OptimizerConfig& base);

/// CSV: budget_usd,reward,cost_usd,list,thresholds,train_reward,train_cost_usd,feasible
std::string frontier_csv(const std::vector<FrontierPoint>& frontier);
std::vector<FrontierPoint> parse_frontier_csv(std::string_view text);

struct SingletonPerformance {
    std::string llm_id;
    double mean_reward = 0.0;
    Money mean_cost;
};

/// Each singleton cascade evaluated on `dataset`.
std::vector<SingletonPerformance> singleton_performance(const Dataset& dataset, const Marketplace& marketplace);
/// Highest mean reward; ties to the cheaper, then the smaller id.
SingletonPerformance best_singleton(const std::vector<SingletonPerformance>& singletons);

struct CostSavings {
    std::string singleton_llm;
    double singleton_reward = 0.0;
    Money singleton_cost;
    std::optional<Money> matching_cost;  // nullopt: no frontier point matches
    std::optional<double> matching_reward;
    double savings_fraction = 0.0;       // 1 - matching/singleton when matched
    bool matched() const { return matching_cost.has_value(); }
};

/// Cheapest frontier point whose test reward reaches the singleton's.
CostSavings cost_savings_report(const std::vector<FrontierPoint>& frontier, const SingletonPerformance& best);
/// CSV: singleton,singleton_reward,singleton_cost_usd,matching_cost_usd,matching_reward,savings_fraction
std::string savings_csv(const CostSavings& savings);
std::string savings_summary(const CostSavings& savings);

}  // namespace frugal
