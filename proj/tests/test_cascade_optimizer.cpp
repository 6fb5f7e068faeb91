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

#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "frugal/cascade.hpp"
#include "frugal/error.hpp"
#include "frugal/optimizer.hpp"
#include "frugal/synth.hpp"
#include "support.hpp"

using namespace frugal;
using namespace frugal::testing;

namespace {

// Ten records; `pattern` gives A's and B's correctness per record.
Dataset pair_trace(const std::string& a_correct, const std::string& b_correct) {
    std::vector<TraceRecord> records;
    for (std::size_t i = 0; i < a_correct.size(); ++i) {
        records.push_back(make_record("r" + std::to_string(i), "q" + std::to_string(i), "y",
                                      {{"A", a_correct[i] == '1' ? "y" : "n"}, {"B", b_correct[i] == '1' ? "y" : "n"}}));
    }
    return as_dataset(std::move(records));
}

OptimizerConfig exact_config(Money budget, std::size_t max_length, std::size_t grid) {
    OptimizerConfig c;
    c.budget = budget;
    c.max_length = max_length;
    c.grid_points = grid;
    c.disagreement_floor = 0.0;
    c.subsample = 1.0;
    c.threads = 2;
    return c;
}

Candidate objective(const OptimizerResult& r) {
    Candidate c;
    c.list = r.best.list;
    c.thresholds = r.best.thresholds;
    c.reward_sum = r.train_total_reward;
    c.cost_sum = r.train_total_cost.nano();
    c.feasible = r.feasible;
    return c;
}

}  // namespace

TEST_CASE("pairwise disagreement") {
    CHECK(pairwise_disagreement(pair_trace("1101001110", "1101001110"), "A", "B").fraction == Ratio{0, 10});
    CHECK(pairwise_disagreement(pair_trace("1101001110", "0010110001"), "A", "B").fraction == Ratio{10, 10});
    const auto d = pairwise_disagreement(pair_trace("1111100000", "1101100110"), "A", "B");
    CHECK(d.fraction.num == 3);
    CHECK(d.fraction.den == 10);
    CHECK(d.fraction.value() == doctest::Approx(0.3));
    CHECK(pairwise_disagreement(pair_trace("1111100000", "1101100110"), "B", "A").fraction == d.fraction);

    std::vector<TraceRecord> partial = pair_trace("11", "10").records;
    partial.push_back(make_record("x", "qx", "y", {{"A", "y"}}));
    const auto p = pairwise_disagreement(as_dataset(partial), "A", "B");
    CHECK(p.excluded == 1);
    CHECK(p.fraction == Ratio{1, 2});
    CHECK_THROWS_AS(pairwise_disagreement(as_dataset({make_record("x", "q", "y", {{"A", "y"}})}), "A", "B"), Error);
}

TEST_CASE("list enumeration counts") {
    const Dataset d = pair_trace("10", "01");
    OptimizerConfig c;
    c.budget = Money::from_nano(1);
    c.disagreement_floor = 0.0;
    c.max_length = 3;
    std::vector<TraceRecord> recs;
    for (int i = 0; i < 4; ++i)
        recs.push_back(make_record("r" + std::to_string(i), "q" + std::to_string(i), "y",
                                   {{"A", i % 2 ? "y" : "n"}, {"B", i % 3 ? "y" : "n"}, {"C", i ? "y" : "n"}}));
    const auto three = enumerate_lists({"A", "B", "C"}, as_dataset(recs), c);
    CHECK(three.enumerated == 15);
    CHECK(three.lists.size() == 15);
    CHECK(three.pruned == 0);
    const auto one = enumerate_lists({"A"}, d, c);
    CHECK(one.lists == std::vector<std::vector<std::string>>{{"A"}});
}

TEST_CASE("clones are never paired adjacently in a two-step list") {
    std::vector<TraceRecord> recs;
    for (int i = 0; i < 10; ++i) {
        const bool a = i % 3 == 0;
        recs.push_back(make_record("r" + std::to_string(i), "q" + std::to_string(i), "y",
                                   {{"C1", a ? "y" : "n"}, {"C2", a ? "y" : "n1"}, {"D", i % 2 ? "y" : "n"}}));
    }
    OptimizerConfig c;
    c.budget = Money::from_nano(1);
    c.max_length = 2;
    c.disagreement_floor = 0.02;
    const auto e = enumerate_lists({"C1", "C2", "D"}, as_dataset(recs), c);
    CHECK(e.enumerated == 9);
    CHECK(e.pruned == 2);
    for (const auto& l : e.lists) {
        const bool clone_pair = l.size() == 2 && l[0][0] == 'C' && l[1][0] == 'C';
        CHECK_FALSE(clone_pair);
    }
    for (const char* s : {"C1", "C2", "D"}) CHECK(std::count(e.lists.begin(), e.lists.end(), std::vector<std::string>{s}) == 1);

    // Longer lists are dropped only when every adjacent pair is close.
    c.max_length = 3;
    const auto e3 = enumerate_lists({"C1", "C2", "D"}, as_dataset(recs), c);
    CHECK(e3.enumerated == 15);
    CHECK(e3.pruned == 2);
}

TEST_CASE("threshold grid uses lower quantiles plus the endpoints") {
    std::vector<double> scores;
    for (int i = 0; i < 10; ++i) scores.push_back(i / 10.0);
    // G = 6: levels 1/5..4/5 -> indices 2, 4, 6, 8.
    CHECK(threshold_grid(scores, 6) == std::vector<double>{0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
    CHECK(threshold_grid(scores, 2) == std::vector<double>{0.0, 1.0});
    CHECK(threshold_grid({}, 9) == std::vector<double>{0.0, 1.0});
    CHECK(threshold_grid({0.5, 0.5, 0.5}, 9) == std::vector<double>{0.0, 0.5, 1.0});
}

TEST_CASE("candidate order") {
    Candidate a{{"A"}, {0}, 5, 10, true};
    Candidate b{{"B"}, {0}, 4, 1, true};
    CHECK(better_candidate(a, b));
    b.reward_sum = 5;
    CHECK(better_candidate(b, a));
    Candidate infeasible{{"C"}, {0}, 100, 0, false};
    CHECK(better_candidate(a, infeasible));
    Candidate cheap_inf{{"D"}, {0}, 0, 0, false};
    Candidate dear_inf{{"E"}, {0}, 9, 5, false};
    CHECK(better_candidate(cheap_inf, dear_inf));
    Candidate longer{{"A", "B"}, {0, 0}, 5, 10, true};
    CHECK(better_candidate(a, longer));
    CHECK_FALSE(better_candidate(a, a));
}

TEST_CASE("optimizer config validation") {
    OptimizerConfig c;
    CHECK_THROWS_AS(c.validate(), Error);  // zero budget
    c.budget = Money::from_nano(1);
    CHECK_NOTHROW(c.validate());
    c.grid_points = 1;
    CHECK_THROWS_AS(c.validate(), Error);
    c.grid_points = 5;
    c.subsample = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c.subsample = 1.0;
    c.max_length = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c.max_length = 1;
    c.disagreement_floor = 1.5;
    CHECK_THROWS_AS(c.validate(), Error);
    const auto inst = random_instance(1, 2, 10);
    CHECK_THROWS_AS(optimize(as_dataset({}), *inst.scorer, inst.marketplace, exact_config(Money::from_nano(1), 2, 5)),
                    Error);
}

TEST_CASE("single LLM: the singleton wins and the oracle agrees") {
    const auto inst = random_instance(2, 1, 30);
    const auto cfg = exact_config(parse_money("1000"), 3, 9);
    const auto r = optimize(inst.train, *inst.scorer, inst.marketplace, cfg);
    CHECK(r.best.list == std::vector<std::string>{"L0"});
    CHECK(r.feasible);
    const auto o = brute_force_oracle(inst.train, *inst.scorer, inst.marketplace, cfg);
    CHECK(o.best == r.best);
    CHECK(o.train_total_reward == r.train_total_reward);
}

TEST_CASE("two-tier synthetic marketplace gives a two-step cascade") {
    const Marketplace m = two_tier_marketplace();
    const Dataset train = as_dataset(synthesize_trace(two_tier_spec(1000), 3));
    HedgeScorer scorer;
    // 40% of the expensive singleton's $25.
    const auto cfg = exact_config(parse_money("10"), 2, 9);
    const auto r = optimize(train, scorer, m, cfg);
    CHECK(r.feasible);
    CHECK(r.best.list == std::vector<std::string>{"cheap", "expensive"});
    CHECK(r.train_mean_reward >= 0.88);
    CHECK(mean_within_budget(r.train_total_cost, r.train_count, cfg.budget));
    const auto small = as_dataset(std::vector<TraceRecord>(train.records.begin(), train.records.begin() + 300));
    const auto fast = optimize(small, scorer, m, cfg);
    const auto oracle = brute_force_oracle(small, scorer, m, cfg);
    CHECK(oracle.train_total_reward == fast.train_total_reward);
    CHECK(oracle.train_total_cost == fast.train_total_cost);
}

TEST_CASE("property: optimize matches the brute-force oracle with no pruning") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t k = 1 + rng() % 3;
        const std::size_t n = 20 + rng() % 60;
        const auto inst = random_instance(seed * 7919 + 1, k, n);
        const auto budget = Money::from_nano(static_cast<std::int64_t>(1 + rng() % 60) * 1'000'000);
        const auto cfg = exact_config(budget, 1 + rng() % 3, 3 + rng() % 5);
        const auto fast = optimize(inst.train, *inst.scorer, inst.marketplace, cfg);
        const auto oracle = brute_force_oracle(inst.train, *inst.scorer, inst.marketplace, cfg);
        CHECK(fast.feasible == oracle.feasible);
        CHECK(fast.train_total_reward == oracle.train_total_reward);
        CHECK(fast.train_total_cost == oracle.train_total_cost);
        CHECK(fast.best == oracle.best);
    }
}

TEST_CASE("property: pruning and subsampling never beat the oracle") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const auto inst = random_instance(seed + 500, 3, 60);
        auto cfg = exact_config(Money::from_nano(30'000'000), 3, 7);
        const auto oracle = brute_force_oracle(inst.train, *inst.scorer, inst.marketplace, cfg);
        cfg.disagreement_floor = 0.3;
        cfg.subsample = 0.5;
        cfg.rerank_top = 5;
        cfg.seed = seed;
        const auto approx = optimize(inst.train, *inst.scorer, inst.marketplace, cfg);
        CHECK_FALSE(better_candidate(objective(approx), objective(oracle)));
    }
}

TEST_CASE("property: feasible results replay within budget") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto inst = random_instance(seed + 900, 3, 80);
        auto cfg = exact_config(Money::from_nano(static_cast<std::int64_t>(5 + seed * 3) * 1'000'000), 3, 9);
        const auto r = optimize(inst.train, *inst.scorer, inst.marketplace, cfg);
        const auto replay = evaluate_cascade(r.best, *inst.scorer, inst.train, inst.marketplace);
        CHECK(replay.total_cost == r.train_total_cost);
        CHECK(replay.total_reward == r.train_total_reward);
        if (r.feasible) CHECK(mean_within_budget(replay.total_cost, replay.count, cfg.budget));
    }
}

TEST_CASE("property: dominance over feasible singletons") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto inst = random_instance(seed + 1300, 3, 80);
        const auto cfg = exact_config(Money::from_nano(static_cast<std::int64_t>(5 + seed * 3) * 1'000'000), 3, 9);
        const auto r = optimize(inst.train, *inst.scorer, inst.marketplace, cfg);
        for (const auto& id : inst.llm_ids) {
            const auto single = evaluate_cascade(CascadeConfig{{id}, {0}, "", {}}, *inst.scorer, inst.train,
                                                 inst.marketplace);
            if (mean_within_budget(single.total_cost, single.count, cfg.budget)) {
                CHECK(r.feasible);
                CHECK(r.train_total_reward >= single.total_reward);
            }
        }
    }
}

TEST_CASE("property: determinism and thread independence") {
    const auto inst = random_instance(77, 3, 100);
    auto cfg = exact_config(Money::from_nano(20'000'000), 3, 9);
    cfg.subsample = 0.6;
    cfg.rerank_top = 4;
    cfg.seed = 5;
    cfg.disagreement_floor = 0.05;
    const auto a = optimize(inst.train, *inst.scorer, inst.marketplace, cfg);
    cfg.threads = 1;
    const auto b = optimize(inst.train, *inst.scorer, inst.marketplace, cfg);
    cfg.threads = 7;
    const auto c = optimize(inst.train, *inst.scorer, inst.marketplace, cfg);
    for (const auto* other : {&b, &c}) {
        CHECK(other->best == a.best);
        CHECK(other->train_total_reward == a.train_total_reward);
        CHECK(other->train_total_cost == a.train_total_cost);
        CHECK(other->search_stats.grid_points_evaluated == a.search_stats.grid_points_evaluated);
    }
    CHECK(format_search_stats(a) == format_search_stats(b));
}

TEST_CASE("property: train reward is non-decreasing in the budget") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto inst = random_instance(seed + 4000, 3, 80);
        double last = -1.0;
        bool was_feasible = false;
        for (std::int64_t b = 1; b <= 64; b *= 2) {
            const auto r = optimize(inst.train, *inst.scorer, inst.marketplace,
                                    exact_config(Money::from_nano(b * 1'000'000), 3, 7));
            if (was_feasible) CHECK(r.feasible);
            if (r.feasible) {
                CHECK(r.train_total_reward >= last);
                last = r.train_total_reward;
                was_feasible = true;
            }
        }
    }
}

TEST_CASE("infeasible budget returns the cheapest configuration flagged infeasible") {
    const auto inst = random_instance(11, 3, 40);
    const auto r = optimize(inst.train, *inst.scorer, inst.marketplace, exact_config(Money::from_nano(1), 3, 5));
    CHECK_FALSE(r.feasible);
    for (const auto& id : inst.llm_ids) {
        const auto single =
            evaluate_cascade(CascadeConfig{{id}, {0}, "", {}}, *inst.scorer, inst.train, inst.marketplace);
        CHECK(r.train_total_cost <= single.total_cost);
    }
}

TEST_CASE("LLMs missing from some records are excluded") {
    auto inst = random_instance(12, 3, 30);
    inst.train.records[0].responses.erase("L2");
    const auto r = optimize(inst.train, *inst.scorer, inst.marketplace, exact_config(parse_money("1000"), 3, 5));
    CHECK(r.search_stats.llms_excluded == std::vector<std::string>{"L2"});
    for (const auto& id : r.best.list) CHECK(id != "L2");
}

TEST_CASE("oracle guard") {
    const auto big = random_instance(13, 6, 10);
    CHECK_THROWS_AS(brute_force_oracle(big.train, *big.scorer, big.marketplace, exact_config(parse_money("1"), 2, 3)),
                    Error);
    const auto many = random_instance(14, 2, 501);
    CHECK_THROWS_AS(
        brute_force_oracle(many.train, *many.scorer, many.marketplace, exact_config(parse_money("1"), 2, 3)), Error);
}
