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

#include "frugal/analysis.hpp"

#include <algorithm>
#include <sstream>

#include "frugal/error.hpp"
#include "frugal/text.hpp"

namespace frugal {

Ratio mpi(const Dataset& dataset, const std::string& llm_a, const std::string& llm_b) {
    std::uint64_t common = 0;
    std::uint64_t improved = 0;
    for (const auto& rec : dataset.records) {
        const auto* a = rec.find(llm_a);
        const auto* b = rec.find(llm_b);
        if (!a || !b) continue;
        ++common;
        if (a->reward == 1.0 && b->reward != 1.0) ++improved;
    }
    if (common == 0) throw data_error("no common records for '" + llm_a + "' and '" + llm_b + "'");
    return Ratio{improved, common};
}

MpiMatrix mpi_matrix(const Dataset& dataset, const Marketplace& marketplace) {
    MpiMatrix m;
    for (const auto& id : marketplace.llm_ids()) {
        const bool present = std::any_of(dataset.records.begin(), dataset.records.end(),
                                         [&](const TraceRecord& r) { return r.find(id) != nullptr; });
        if (present) m.llm_ids.push_back(id);
    }
    const std::size_t k = m.llm_ids.size();
    m.values.assign(k, std::vector<Ratio>(k, Ratio{0, 1}));
    for (std::size_t row = 0; row < k; ++row) {
        for (std::size_t col = 0; col < k; ++col) {
            if (row != col) m.values[row][col] = mpi(dataset, m.llm_ids[col], m.llm_ids[row]);
        }
    }
    return m;
}

std::string mpi_csv(const MpiMatrix& matrix) {
    std::string out = "row_llm,col_llm,value\n";
    for (std::size_t r = 0; r < matrix.llm_ids.size(); ++r) {
        for (std::size_t c = 0; c < matrix.llm_ids.size(); ++c) {
            out += matrix.llm_ids[r] + ',' + matrix.llm_ids[c] + ',' + format_double(matrix.values[r][c].value()) + '\n';
        }
    }
    return out;
}

std::vector<FrontierPoint> budget_sweep(const Dataset& train, const Dataset& test, const Scorer& scorer,
                                        const Marketplace& marketplace, const std::vector<Money>& budgets,
                                        const OptimizerConfig& base) {
    if (!std::is_sorted(budgets.begin(), budgets.end())) throw invalid_argument("sweep budgets must be ascending");
    std::vector<FrontierPoint> frontier;
    for (Money b : budgets) {
        OptimizerConfig cfg = base;
        cfg.budget = b;
        const auto result = optimize(train, scorer, marketplace, cfg);
        const auto eval = evaluate_cascade(result.best, scorer, test, marketplace);
        frontier.push_back({b, result.best, result.feasible, result.train_mean_reward, result.train_mean_cost,
                            eval.mean_reward, eval.mean_cost});
    }
    return frontier;
}

namespace {

std::string join_list(const std::vector<std::string>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) out += (i ? ";" : "") + ids[i];
    return out;
}

std::string join_thresholds(const std::vector<double>& t) {
    std::string out;
    for (std::size_t i = 0; i < t.size(); ++i) out += (i ? ";" : "") + format_double(t[i]);
    return out;
}

}  // namespace

std::string frontier_csv(const std::vector<FrontierPoint>& frontier) {
    std::string out = "budget_usd,reward,cost_usd,list,thresholds,train_reward,train_cost_usd,feasible\n";
    for (const auto& p : frontier) {
        out += format_money(p.budget) + ',' + format_double(p.test_mean_reward) + ',' + format_money(p.test_mean_cost) +
               ',' + join_list(p.config.list) + ',' + join_thresholds(p.config.thresholds) + ',' +
               format_double(p.train_mean_reward) + ',' + format_money(p.train_mean_cost) + ',' +
               (p.feasible ? "true" : "false") + '\n';
    }
    return out;
}

std::vector<FrontierPoint> parse_frontier_csv(std::string_view text) {
    std::vector<FrontierPoint> out;
    auto lines = split_lines(text);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split(lines[i], ',');
        if (f.size() != 8) throw data_error("frontier.csv line " + std::to_string(i + 1) + ": expected 8 fields");
        FrontierPoint p;
        p.budget = parse_money(f[0]);
        p.test_mean_reward = parse_double(f[1]);
        p.test_mean_cost = parse_money(f[2]);
        for (auto id : split(f[3], ';')) p.config.list.emplace_back(id);
        for (auto t : split(f[4], ';')) p.config.thresholds.push_back(parse_double(t));
        p.train_mean_reward = parse_double(f[5]);
        p.train_mean_cost = parse_money(f[6]);
        p.feasible = f[7] == "true";
        p.config.budget = p.budget;
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<SingletonPerformance> singleton_performance(const Dataset& dataset, const Marketplace& marketplace) {
    if (dataset.empty()) throw data_error("singleton performance needs a non-empty dataset");
    std::vector<SingletonPerformance> out;
    for (const auto& id : marketplace.llm_ids()) {
        double reward = 0.0;
        Money cost;
        bool covered = true;
        for (const auto& rec : dataset.records) {
            const auto* r = rec.find(id);
            if (!r) {
                covered = false;
                break;
            }
            reward += r->reward;
            cost += marketplace.cost(id, r->usage);
        }
        if (!covered) continue;
        out.push_back({id, reward / static_cast<double>(dataset.size()), mean_money(cost, dataset.size())});
    }
    return out;
}

SingletonPerformance best_singleton(const std::vector<SingletonPerformance>& singletons) {
    if (singletons.empty()) throw data_error("no singleton covers the dataset");
    return *std::min_element(singletons.begin(), singletons.end(), [](const auto& a, const auto& b) {
        if (a.mean_reward != b.mean_reward) return a.mean_reward > b.mean_reward;
        if (a.mean_cost != b.mean_cost) return a.mean_cost < b.mean_cost;
        return a.llm_id < b.llm_id;
    });
}

CostSavings cost_savings_report(const std::vector<FrontierPoint>& frontier, const SingletonPerformance& best) {
    if (frontier.empty()) throw invalid_argument("cost savings report needs a non-empty frontier");
    CostSavings out;
    out.singleton_llm = best.llm_id;
    out.singleton_reward = best.mean_reward;
    out.singleton_cost = best.mean_cost;
    for (const auto& p : frontier) {
        if (p.test_mean_reward < best.mean_reward) continue;
        if (!out.matching_cost || p.test_mean_cost < *out.matching_cost) {
            out.matching_cost = p.test_mean_cost;
            out.matching_reward = p.test_mean_reward;
        }
    }
    if (out.matching_cost && best.mean_cost.nano() > 0) {
        out.savings_fraction = 1.0 - static_cast<double>(out.matching_cost->nano()) /
                                         static_cast<double>(best.mean_cost.nano());
    }
    return out;
}

std::string savings_csv(const CostSavings& s) {
    std::string out = "singleton,singleton_reward,singleton_cost_usd,matching_cost_usd,matching_reward,savings_fraction\n";
    out += s.singleton_llm + ',' + format_double(s.singleton_reward) + ',' + format_money(s.singleton_cost) + ',';
    if (s.matched()) {
        out += format_money(*s.matching_cost) + ',' + format_double(*s.matching_reward) + ',' +
               format_double(s.savings_fraction) + '\n';
    } else {
        out += "no match,,\n";
    }
    return out;
}

std::string savings_summary(const CostSavings& s) {
    std::ostringstream out;
    out << "best singleton " << s.singleton_llm << ": reward " << format_double(s.singleton_reward) << ", mean cost $"
        << format_money(s.singleton_cost) << '\n';
    if (s.matched()) {
        out << "cheapest matching cascade: reward " << format_double(*s.matching_reward) << ", mean cost $"
            << format_money(*s.matching_cost) << ", savings " << format_double(s.savings_fraction * 100.0) << "%\n";
    } else {
        out << "no frontier point reaches the singleton's reward\n";
    }
    return out.str();
}

}  // namespace frugal
