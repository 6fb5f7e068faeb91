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

#include "frugal/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "frugal/error.hpp"
#include "frugal/text.hpp"

namespace frugal {

void OptimizerConfig::validate() const {
    if (max_length < 1) throw invalid_argument("max_length must be >= 1");
    if (grid_points < 2) throw invalid_argument("threshold grid needs at least 2 points");
    if (!(disagreement_floor >= 0.0 && disagreement_floor <= 1.0)) {
        throw invalid_argument("disagreement floor must lie in [0,1]");
    }
    if (!(subsample > 0.0 && subsample <= 1.0)) throw invalid_argument("subsample must lie in (0,1]");
    if (rerank_top < 1) throw invalid_argument("rerank_top must be >= 1");
    if (budget.nano() <= 0) throw invalid_argument("budget must be positive");
}

Disagreement pairwise_disagreement(const Dataset& dataset, const std::string& llm_a, const std::string& llm_b) {
    Disagreement out;
    std::uint64_t common = 0;
    std::uint64_t differing = 0;
    for (const auto& rec : dataset.records) {
        const auto* a = rec.find(llm_a);
        const auto* b = rec.find(llm_b);
        if (!a || !b) {
            ++out.excluded;
            continue;
        }
        ++common;
        if ((a->reward == 1.0) != (b->reward == 1.0)) ++differing;
    }
    if (common == 0) throw data_error("no common records for '" + llm_a + "' and '" + llm_b + "'");
    out.fraction = Ratio{differing, common};
    return out;
}

ListEnumeration enumerate_lists(const std::vector<std::string>& llm_ids, const Dataset& dataset,
                                const OptimizerConfig& config) {
    ListEnumeration out;
    const std::size_t k = llm_ids.size();
    if (k == 0) return out;

    // Pairwise "small disagreement" flags, computed once.
    std::vector<std::vector<bool>> close(k, std::vector<bool>(k, false));
    if (config.disagreement_floor > 0.0 && config.max_length > 1) {
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = i + 1; j < k; ++j) {
                const auto d = pairwise_disagreement(dataset, llm_ids[i], llm_ids[j]);
                close[i][j] = close[j][i] = d.fraction.value() < config.disagreement_floor;
            }
        }
    }

    std::vector<std::size_t> current;
    std::vector<bool> used(k, false);
    for (std::size_t len = 1; len <= std::min(config.max_length, k); ++len) {
        auto visit = [&](auto&& self) -> void {
            if (current.size() == len) {
                ++out.enumerated;
                bool all_close = len >= 2;
                for (std::size_t p = 0; p + 1 < len && all_close; ++p) all_close = close[current[p]][current[p + 1]];
                if (all_close) {
                    ++out.pruned;
                    return;
                }
                std::vector<std::string> list;
                for (auto idx : current) list.push_back(llm_ids[idx]);
                out.lists.push_back(std::move(list));
                return;
            }
            for (std::size_t i = 0; i < k; ++i) {
                if (used[i]) continue;
                used[i] = true;
                current.push_back(i);
                self(self);
                current.pop_back();
                used[i] = false;
            }
        };
        visit(visit);
    }
    return out;
}

std::vector<double> threshold_grid(std::vector<double> scores, std::size_t grid_points) {
    std::vector<double> grid{0.0, 1.0};
    std::sort(scores.begin(), scores.end());
    const std::size_t n = scores.size();
    if (n > 0 && grid_points > 2) {
        for (std::size_t j = 1; j + 1 < grid_points; ++j) {
            // Index floor(level * n) with level = j / (grid_points - 1), in integers.
            const std::size_t idx = std::min(n - 1, (j * n) / (grid_points - 1));
            grid.push_back(scores[idx]);
        }
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

bool better_candidate(const Candidate& a, const Candidate& b) {
    if (a.feasible != b.feasible) return a.feasible;
    if (a.feasible) {
        if (a.reward_sum != b.reward_sum) return a.reward_sum > b.reward_sum;
        if (a.cost_sum != b.cost_sum) return a.cost_sum < b.cost_sum;
    } else {
        if (a.cost_sum != b.cost_sum) return a.cost_sum < b.cost_sum;
        if (a.reward_sum != b.reward_sum) return a.reward_sum > b.reward_sum;
    }
    if (a.list.size() != b.list.size()) return a.list.size() < b.list.size();
    if (a.list != b.list) return a.list < b.list;
    return a.thresholds < b.thresholds;
}

namespace {

// Dense per-(llm, record) tables so candidate evaluation is pure arithmetic.
struct TraceMatrix {
    std::vector<std::string> ids;
    std::size_t n = 0;
    std::vector<std::vector<double>> score;
    std::vector<std::vector<double>> reward;
    std::vector<std::vector<std::int64_t>> cost;

    std::size_t index_of(const std::string& id) const {
        return static_cast<std::size_t>(std::find(ids.begin(), ids.end(), id) - ids.begin());
    }
};

// LLMs from the marketplace that answered every training record.
std::vector<std::string> covered_llms(const Dataset& train, const Marketplace& marketplace,
                                      std::vector<std::string>& excluded) {
    std::vector<std::string> ids;
    for (const auto& id : marketplace.llm_ids()) {
        const bool covered = std::all_of(train.records.begin(), train.records.end(),
                                         [&](const TraceRecord& r) { return r.find(id) != nullptr; });
        (covered ? ids : excluded).push_back(id);
    }
    return ids;
}

TraceMatrix build_matrix(const Dataset& train, const Scorer& scorer, const Marketplace& marketplace,
                         const std::vector<std::string>& ids) {
    TraceMatrix m;
    m.ids = ids;
    m.n = train.size();
    m.score.assign(ids.size(), std::vector<double>(m.n));
    m.reward.assign(ids.size(), std::vector<double>(m.n));
    m.cost.assign(ids.size(), std::vector<std::int64_t>(m.n));
    for (std::size_t k = 0; k < ids.size(); ++k) {
        const auto& plan = marketplace.at(ids[k]).pricing;
        for (std::size_t r = 0; r < m.n; ++r) {
            const auto& rec = train.records[r];
            const auto* resp = rec.find(ids[k]);
            m.score[k][r] = scorer.score(rec.query_text, resp->answer_text, ids[k]);
            m.reward[k][r] = resp->reward;
            m.cost[k][r] = query_cost(plan, resp->usage).nano();
        }
    }
    return m;
}

struct Sums {
    double reward = 0.0;
    std::int64_t cost = 0;
};

Sums evaluate(const TraceMatrix& m, const std::vector<std::size_t>& list, const std::vector<double>& tau,
              const std::vector<std::size_t>& rows) {
    Sums s;
    const std::size_t last = list.size() - 1;
    for (std::size_t r : rows) {
        for (std::size_t i = 0; i <= last; ++i) {
            const std::size_t k = list[i];
            s.cost += m.cost[k][r];
            if (i == last || m.score[k][r] >= tau[i]) {
                s.reward += m.reward[k][r];
                break;
            }
        }
    }
    return s;
}

struct ListJob {
    std::vector<std::size_t> idx;
    std::vector<std::string> ids;
};

// Keeps the best `capacity` candidates under better_candidate.
class TopK {
public:
    explicit TopK(std::size_t capacity) : capacity_(capacity) {}

    bool would_admit(const Candidate& c) const {
        return items_.size() < capacity_ || better_candidate(c, items_.back());
    }

    void offer(Candidate c) {
        if (!would_admit(c)) return;
        auto pos = std::upper_bound(items_.begin(), items_.end(), c, better_candidate);
        items_.insert(pos, std::move(c));
        if (items_.size() > capacity_) items_.pop_back();
    }

    void merge(TopK&& other) {
        for (auto& c : other.items_) offer(std::move(c));
    }

    const std::vector<Candidate>& items() const { return items_; }

private:
    std::size_t capacity_;
    std::vector<Candidate> items_;
};

struct SearchOutcome {
    TopK top{1};
    std::size_t grid_points = 0;
};

SearchOutcome search(const TraceMatrix& m, const std::vector<ListJob>& jobs,
                     const std::vector<std::vector<double>>& grids, const std::vector<std::size_t>& rows,
                     Money budget, std::size_t keep, unsigned threads) {
    const std::size_t n_rows = rows.size();
    auto worker = [&](std::size_t begin, std::size_t stride) {
        SearchOutcome out;
        out.top = TopK(keep);
        for (std::size_t j = begin; j < jobs.size(); j += stride) {
            const auto& job = jobs[j];
            const std::size_t len = job.idx.size();
            std::vector<std::size_t> digit(len, 0);
            std::vector<double> tau(len, 0.0);
            while (true) {
                for (std::size_t p = 0; p + 1 < len; ++p) tau[p] = grids[job.idx[p]][digit[p]];
                const Sums s = evaluate(m, job.idx, tau, rows);
                ++out.grid_points;
                Candidate c;
                c.reward_sum = s.reward;
                c.cost_sum = s.cost;
                c.feasible = mean_within_budget(Money::from_nano(s.cost), n_rows, budget);
                c.list = job.ids;
                c.thresholds = tau;
                out.top.offer(std::move(c));
                // Advance the mixed-radix counter over positions 0..len-2.
                std::size_t p = 0;
                for (; p + 1 < len; ++p) {
                    if (++digit[p] < grids[job.idx[p]].size()) break;
                    digit[p] = 0;
                }
                if (p + 1 >= len) break;
            }
        }
        return out;
    };

    const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
    std::vector<SearchOutcome> partial(n_threads);
    if (n_threads == 1) {
        partial[0] = worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t) {
            pool.emplace_back([&, t] { partial[t] = worker(t, n_threads); });
        }
        for (auto& th : pool) th.join();
    }
    SearchOutcome merged;
    merged.top = TopK(keep);
    for (auto& p : partial) {
        merged.grid_points += p.grid_points;
        merged.top.merge(std::move(p.top));
    }
    return merged;
}

unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    return std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
}

OptimizerResult finish(const Candidate& best, std::size_t n, const OptimizerConfig& config, SearchStats stats) {
    OptimizerResult result;
    result.best.list = best.list;
    result.best.thresholds = best.thresholds;
    result.best.scorer_ref = config.scorer_ref;
    result.best.budget = config.budget;
    result.train_total_reward = best.reward_sum;
    result.train_mean_reward = best.reward_sum / static_cast<double>(n);
    result.train_total_cost = Money::from_nano(best.cost_sum);
    result.train_mean_cost = mean_money(result.train_total_cost, n);
    result.train_count = n;
    result.feasible = best.feasible;
    result.search_stats = std::move(stats);
    return result;
}

}  // namespace

OptimizerResult optimize(const Dataset& train, const Scorer& scorer, const Marketplace& marketplace,
                         const OptimizerConfig& config) {
    config.validate();
    if (train.empty()) throw data_error("cannot optimize on an empty training set");
    SearchStats stats;
    const auto ids = covered_llms(train, marketplace, stats.llms_excluded);
    if (ids.empty()) throw data_error("no marketplace LLM answered every training record");

    const auto lists = enumerate_lists(ids, train, config);
    stats.lists_enumerated = lists.enumerated;
    stats.lists_pruned = lists.pruned;
    if (lists.lists.empty()) throw data_error("candidate list set is empty");

    const TraceMatrix m = build_matrix(train, scorer, marketplace, ids);
    std::vector<std::vector<double>> grids;
    for (std::size_t k = 0; k < ids.size(); ++k) grids.push_back(threshold_grid(m.score[k], config.grid_points));

    std::vector<ListJob> jobs;
    for (const auto& list : lists.lists) {
        ListJob job;
        job.ids = list;
        for (const auto& id : list) job.idx.push_back(m.index_of(id));
        jobs.push_back(std::move(job));
    }

    std::vector<std::size_t> all_rows(m.n);
    for (std::size_t r = 0; r < m.n; ++r) all_rows[r] = r;
    const unsigned threads = resolve_threads(config.threads);

    const std::size_t sub_n =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(config.subsample * static_cast<double>(m.n))), 1, m.n);
    if (sub_n == m.n) {
        auto out = search(m, jobs, grids, all_rows, config.budget, 1, threads);
        stats.grid_points_evaluated = out.grid_points;
        return finish(out.top.items().front(), m.n, config, std::move(stats));
    }

    // First pass on a seeded subsample, then re-rank the survivors (and every
    // singleton) on the full training split.
    std::vector<std::size_t> perm = all_rows;
    std::mt19937_64 rng(config.seed);
    for (std::size_t i = 0; i < sub_n; ++i) std::swap(perm[i], perm[i + uniform_below(rng, m.n - i)]);
    std::vector<std::size_t> rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(sub_n));
    std::sort(rows.begin(), rows.end());

    auto first = search(m, jobs, grids, rows, config.budget, config.rerank_top, threads);
    stats.grid_points_evaluated = first.grid_points;

    std::vector<Candidate> finalists = first.top.items();
    for (std::size_t k = 0; k < ids.size(); ++k) {
        Candidate c;
        c.list = {ids[k]};
        c.thresholds = {0.0};
        finalists.push_back(std::move(c));
    }
    TopK best(1);
    for (auto& c : finalists) {
        std::vector<std::size_t> idx;
        for (const auto& id : c.list) idx.push_back(m.index_of(id));
        const Sums s = evaluate(m, idx, c.thresholds, all_rows);
        ++stats.grid_points_evaluated;
        c.reward_sum = s.reward;
        c.cost_sum = s.cost;
        c.feasible = mean_within_budget(Money::from_nano(s.cost), m.n, config.budget);
        best.offer(std::move(c));
    }
    return finish(best.items().front(), m.n, config, std::move(stats));
}

namespace {

// Memoizes scorer calls so repeated replays stay cheap; the cascade logic is
// still the engine's.
class MemoScorer final : public Scorer {
public:
    explicit MemoScorer(const Scorer& inner) : inner_(inner) {}
    double score(std::string_view q, std::string_view a, std::string_view llm) const override {
        std::string key;
        key.append(llm).append(1, '\x1f').append(q).append(1, '\x1f').append(a);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        const double s = inner_.score(q, a, llm);
        memo_.emplace(std::move(key), s);
        return s;
    }
    std::string id() const override { return inner_.id(); }

private:
    const Scorer& inner_;
    mutable std::map<std::string, double> memo_;
};

}  // namespace

OptimizerResult brute_force_oracle(const Dataset& train, const Scorer& scorer, const Marketplace& marketplace,
                                   const OptimizerConfig& config) {
    config.validate();
    if (train.empty()) throw data_error("cannot optimize on an empty training set");
    SearchStats stats;
    const auto ids = covered_llms(train, marketplace, stats.llms_excluded);
    if (ids.empty()) throw data_error("no marketplace LLM answered every training record");
    if (ids.size() > 5 || train.size() > 500) {
        throw invalid_argument("brute-force oracle guard exceeded (K <= 5, n <= 500)");
    }
    MemoScorer memo(scorer);

    std::map<std::string, std::vector<double>> grid;
    for (const auto& id : ids) {
        std::vector<double> scores;
        for (const auto& rec : train.records) scores.push_back(memo.score(rec.query_text, rec.find(id)->answer_text, id));
        grid[id] = threshold_grid(std::move(scores), config.grid_points);
    }

    std::optional<Candidate> best;
    std::vector<std::string> list;
    std::vector<double> tau;
    // Recursively choose the next LLM and, for non-final positions, its threshold.
    auto extend = [&](auto&& self) -> void {
        if (!list.empty()) {
            CascadeConfig cfg{list, tau, config.scorer_ref, config.budget};
            cfg.thresholds.push_back(0.0);  // inert final threshold
            ++stats.lists_enumerated;
            const auto eval = evaluate_cascade(cfg, memo, train, marketplace);
            ++stats.grid_points_evaluated;
            Candidate c{cfg.list, cfg.thresholds, eval.total_reward, eval.total_cost.nano(),
                        mean_within_budget(eval.total_cost, eval.count, config.budget)};
            if (!best || better_candidate(c, *best)) best = std::move(c);
        }
        if (list.size() == config.max_length) return;
        for (const auto& id : ids) {
            if (std::find(list.begin(), list.end(), id) != list.end()) continue;
            if (list.empty()) {
                list.push_back(id);
                self(self);
                list.pop_back();
                continue;
            }
            // The previous tail becomes a non-final position and needs a threshold.
            for (double t : grid[list.back()]) {
                tau.push_back(t);
                list.push_back(id);
                self(self);
                list.pop_back();
                tau.pop_back();
            }
        }
    };
    extend(extend);
    return finish(*best, train.size(), config, std::move(stats));
}

std::string format_search_stats(const OptimizerResult& result) {
    std::ostringstream out;
    out << "feasible " << (result.feasible ? "true" : "false") << '\n';
    out << "train_mean_reward " << format_double(result.train_mean_reward) << '\n';
    out << "train_mean_cost_usd " << format_money(result.train_mean_cost) << '\n';
    out << "train_total_cost_usd " << format_money(result.train_total_cost) << '\n';
    out << "train_records " << result.train_count << '\n';
    out << "lists_enumerated " << result.search_stats.lists_enumerated << '\n';
    out << "lists_pruned " << result.search_stats.lists_pruned << '\n';
    out << "grid_points_evaluated " << result.search_stats.grid_points_evaluated << '\n';
    for (const auto& id : result.search_stats.llms_excluded) out << "llm_excluded " << id << '\n';
    return out.str();
}

}  // namespace frugal
