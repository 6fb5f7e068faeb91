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

#include "frugal/cascade.hpp"

#include <set>
#include <sstream>

#include "frugal/error.hpp"
#include "frugal/text.hpp"

namespace frugal {

void CascadeConfig::validate(const Marketplace& marketplace, std::size_t max_length) const {
    if (list.empty()) throw data_error("cascade list is empty");
    if (list.size() > max_length) {
        throw data_error("cascade length " + std::to_string(list.size()) + " exceeds maximum " +
                         std::to_string(max_length));
    }
    if (thresholds.size() != list.size()) throw data_error("cascade needs one threshold per list entry");
    std::set<std::string_view> seen;
    for (const auto& id : list) {
        if (!seen.insert(id).second) throw data_error("cascade list repeats '" + id + "'");
        if (!marketplace.contains(id)) throw data_error("cascade references unknown llm_id '" + id + "'");
    }
    for (double t : thresholds) {
        if (!(t >= 0.0 && t <= 1.0)) throw data_error("cascade threshold " + format_double(t) + " outside [0,1]");
    }
}

namespace {
constexpr std::string_view kCascadeMagic = "frugal-cascade v1";
}

std::string serialize_cascade(const CascadeConfig& config) {
    std::string out(kCascadeMagic);
    out += "\nscorer_ref " + config.scorer_ref + "\n";
    out += "budget_usd " + format_money(config.budget) + "\n";
    for (std::size_t i = 0; i < config.list.size(); ++i) {
        out += "step " + config.list[i] + " " + format_double(config.thresholds[i]) + "\n";
    }
    out += "end\n";
    return out;
}

CascadeConfig parse_cascade(std::string_view text) {
    auto lines = split_lines(text);
    if (lines.empty() || trim(lines.front()) != kCascadeMagic) throw data_error("not a frugal cascade file");
    CascadeConfig config;
    bool ended = false;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string_view line = trim(lines[i]);
        if (line.empty() || line.front() == '#') continue;
        const auto space = line.find(' ');
        const std::string_view key = line.substr(0, space);
        const std::string_view rest = space == std::string_view::npos ? std::string_view{} : trim(line.substr(space));
        if (key == "scorer_ref") {
            config.scorer_ref = std::string(rest);
        } else if (key == "budget_usd") {
            config.budget = parse_money(rest);
        } else if (key == "step") {
            const auto sep = rest.rfind(' ');
            if (sep == std::string_view::npos) throw data_error("cascade file line " + std::to_string(i + 1) + ": step needs id and threshold");
            config.list.emplace_back(trim(rest.substr(0, sep)));
            config.thresholds.push_back(parse_double(rest.substr(sep + 1)));
        } else if (key == "end") {
            ended = true;
            break;
        } else {
            throw data_error("cascade file line " + std::to_string(i + 1) + ": unknown key '" + std::string(key) + "'");
        }
    }
    if (!ended) throw data_error("cascade file: missing 'end' marker");
    return config;
}

void save_cascade(const std::string& path, const CascadeConfig& config) { write_file(path, serialize_cascade(config)); }

CascadeConfig load_cascade(const std::string& path) { return parse_cascade(read_file(path)); }

namespace {

struct StepAnswer {
    std::string text;
    Usage usage;
    std::optional<Money> reported_cost;
};

// Shared stop rule: accept at the first i with score_i >= tau_i, or at the
// last position. `fetch` returns nullopt for a skipped failure and may read
// the steps recorded so far.
template <class Fetch>
RouteOutcome run_cascade(const CascadeConfig& config, const Scorer& scorer, const Marketplace& marketplace,
                         std::string_view query, Fetch&& fetch) {
    if (config.list.empty() || config.thresholds.size() != config.list.size()) {
        throw data_error("invalid cascade configuration");
    }
    RouteOutcome out;
    const std::size_t m = config.list.size();
    for (std::size_t i = 0; i < m; ++i) {
        const std::string& llm_id = config.list[i];
        const bool last = i + 1 == m;
        RouteStep step;
        step.llm_id = llm_id;
        std::optional<StepAnswer> answer = fetch(llm_id, last, step, out.per_step);
        if (!answer) {
            out.per_step.push_back(std::move(step));
            continue;
        }
        step.answer = std::move(answer->text);
        step.usage = answer->usage;
        step.provider_reported_cost = answer->reported_cost;
        step.cost = marketplace.cost(llm_id, step.usage);
        step.score = scorer.score(query, step.answer, llm_id);
        step.accepted = last || step.score >= config.thresholds[i];
        out.total_cost += step.cost;
        out.per_step.push_back(step);
        if (step.accepted) {
            out.answer = step.answer;
            out.llm_used = llm_id;
            out.stop_index = i + 1;
            return out;
        }
    }
    throw Error(ErrorKind::kInternal, "cascade ended without acceptance");
}

}  // namespace

RouteOutcome route(const CascadeConfig& config, const Scorer& scorer, const ProviderSet& providers,
                   const Marketplace& marketplace, std::string_view query, const RouteOptions& options) {
    return run_cascade(config, scorer, marketplace, query,
                       [&](const std::string& llm_id, bool last, RouteStep& step,
                           const std::vector<RouteStep>& so_far) -> std::optional<StepAnswer> {
                           auto it = providers.find(llm_id);
                           if (it == providers.end()) throw data_error("no provider for llm_id '" + llm_id + "'");
                           CompletionRequest request = options.request_template;
                           request.llm_id = llm_id;
                           request.prompt = std::string(query);
                           try {
                               auto resp = it->second->complete(request);
                               return StepAnswer{std::move(resp.text), resp.usage, resp.provider_reported_cost};
                           } catch (const Error& e) {
                               if (e.kind() != ErrorKind::kProvider) throw;
                               if (last || options.on_failure == FailurePolicy::kFail) {
                                   auto steps = so_far;
                                   step.error = e.what();
                                   steps.push_back(step);
                                   throw CascadeFailure("cascade step " + llm_id + " failed: " + e.what(),
                                                        std::move(steps));
                               }
                               step.error = e.what();
                               return std::nullopt;
                           }
                       });
}

RouteOutcome replay_route(const CascadeConfig& config, const Scorer& scorer, const TraceRecord& record,
                          const Marketplace& marketplace) {
    return run_cascade(config, scorer, marketplace, record.query_text,
                       [&](const std::string& llm_id, bool, RouteStep&,
                           const std::vector<RouteStep>&) -> std::optional<StepAnswer> {
                           const auto* resp = record.find(llm_id);
                           if (!resp) {
                               throw data_error("record '" + record.query_id + "' has no response from '" + llm_id + "'");
                           }
                           return StepAnswer{resp->answer_text, resp->usage, std::nullopt};
                       });
}

Money mean_money(Money total, std::size_t n) {
    if (n == 0) throw invalid_argument("mean of zero items");
    const std::int64_t t = total.nano();
    const auto d = static_cast<std::int64_t>(n);
    std::int64_t q = t / d;
    const std::int64_t r = t % d;
    if (2 * (r < 0 ? -r : r) >= d) q += t < 0 ? -1 : 1;
    return Money::from_nano(q);
}

bool mean_within_budget(Money total, std::size_t n, Money budget) {
    return static_cast<__int128>(total.nano()) <= static_cast<__int128>(budget.nano()) * static_cast<__int128>(n);
}

CascadeEvaluation evaluate_cascade(const CascadeConfig& config, const Scorer& scorer, const Dataset& dataset,
                                   const Marketplace& marketplace) {
    if (dataset.empty()) throw data_error("cannot evaluate a cascade on an empty dataset");
    CascadeEvaluation eval;
    eval.per_query.reserve(dataset.size());
    for (const auto& rec : dataset.records) {
        auto outcome = replay_route(config, scorer, rec, marketplace);
        const double r = rec.find(outcome.llm_used)->reward;
        eval.total_reward += r;
        eval.rewards.push_back(r);
        eval.total_cost += outcome.total_cost;
        eval.per_query.push_back(std::move(outcome));
    }
    eval.count = dataset.size();
    eval.mean_reward = eval.total_reward / static_cast<double>(eval.count);
    eval.mean_cost = mean_money(eval.total_cost, eval.count);
    return eval;
}

}  // namespace frugal
