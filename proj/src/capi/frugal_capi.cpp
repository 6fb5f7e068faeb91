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

#include "frugal/frugal.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <string>

#include <json.hpp>

#include "frugal/analysis.hpp"
#include "frugal/approximation.hpp"
#include "frugal/cascade.hpp"
#include "frugal/error.hpp"
#include "frugal/gateway.hpp"
#include "frugal/optimizer.hpp"
#include "frugal/scorer.hpp"
#include "frugal/synth.hpp"
#include "frugal/text.hpp"
#include "frugal/trace.hpp"

using nlohmann::json;

struct frugal_marketplace {
    frugal::Marketplace value;
    std::vector<std::string> ids;
};

struct frugal_trace {
    std::vector<frugal::TraceRecord> records;
    std::vector<std::string> warnings;
};

struct frugal_scorer {
    std::shared_ptr<const frugal::ScorerModel> model;
    std::unique_ptr<frugal::LogisticScorer> scorer;
};

struct frugal_cascade {
    frugal::CascadeConfig value;
};

struct frugal_router {
    frugal::CascadeConfig cascade;
    std::shared_ptr<const frugal::ScorerModel> model;
    std::unique_ptr<frugal::LogisticScorer> scorer;
    frugal::Marketplace marketplace;
    frugal::ProviderSet providers;
    std::unique_ptr<frugal::CompletionCache> cache;
    frugal::CacheOptions cache_options;
    frugal::RouteOptions route_options;
};

struct frugal_gateway {
    std::unique_ptr<frugal::Gateway> value;
};

namespace {

thread_local std::string g_last_error;

frugal_status to_status(frugal::ErrorKind kind) { return static_cast<frugal_status>(static_cast<int>(kind)); }

template <class F>
frugal_status guarded(F&& body) {
    try {
        body();
        g_last_error.clear();
        return FRUGAL_OK;
    } catch (const frugal::Error& e) {
        g_last_error = e.what();
        return to_status(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return FRUGAL_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return FRUGAL_ERR_INTERNAL;
    }
}

void require(bool condition, const char* what) {
    if (!condition) throw frugal::invalid_argument(what);
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void emit(char** out, const std::string& s) {
    if (out) *out = dup_string(s);
}

frugal::Dataset as_dataset(const frugal_trace* t, frugal::Split split = frugal::Split::kTrain) {
    return frugal::Dataset{t->records, split, 0};
}

std::unique_ptr<frugal_scorer> make_scorer(frugal::ScorerModel model, const std::string& serialized) {
    auto out = std::make_unique<frugal_scorer>();
    out->model = std::make_shared<const frugal::ScorerModel>(std::move(model));
    const std::string id = "logistic-" + frugal::to_hex64(frugal::fnv1a64(serialized));
    out->scorer = std::make_unique<frugal::LogisticScorer>(out->model, id);
    return out;
}

frugal::OptimizerConfig to_config(const frugal_optimizer_options* o, const frugal_scorer* s) {
    frugal::OptimizerConfig cfg;
    cfg.max_length = o->max_length;
    cfg.budget = frugal::Money::from_nano(o->budget_nano_usd);
    cfg.grid_points = o->grid_points;
    cfg.disagreement_floor = o->disagreement_floor;
    cfg.subsample = o->subsample;
    cfg.rerank_top = o->rerank_top;
    cfg.seed = o->seed;
    cfg.threads = o->threads;
    cfg.scorer_ref = s->scorer->id();
    return cfg;
}

json thresholds_json(const std::vector<double>& t) {
    json arr = json::array();
    for (double v : t) arr.push_back(v);
    return arr;
}

}  // namespace

extern "C" {

const char* frugal_version(void) { return "0.1.0"; }

const char* frugal_last_error(void) { return g_last_error.c_str(); }

void frugal_string_free(char* s) { std::free(s); }

frugal_status frugal_money_format(int64_t nano_usd, char** out) {
    return guarded([&] {
        require(out, "out is null");
        *out = dup_string(frugal::format_money(frugal::Money::from_nano(nano_usd)));
    });
}

frugal_status frugal_money_parse(const char* usd, int64_t* out_nano_usd) {
    return guarded([&] {
        require(usd && out_nano_usd, "null argument");
        *out_nano_usd = frugal::parse_money(usd).nano();
    });
}

static frugal_status make_marketplace(frugal::Marketplace m, frugal_marketplace** out) {
    auto h = std::make_unique<frugal_marketplace>();
    h->ids = m.llm_ids();
    h->value = std::move(m);
    *out = h.release();
    return FRUGAL_OK;
}

frugal_status frugal_marketplace_load(const char* path, frugal_marketplace** out) {
    return guarded([&] {
        require(path && out, "null argument");
        make_marketplace(frugal::load_pricing_table(path), out);
    });
}

frugal_status frugal_marketplace_parse(const char* text, frugal_marketplace** out) {
    return guarded([&] {
        require(text && out, "null argument");
        make_marketplace(frugal::parse_pricing_table(text), out);
    });
}

void frugal_marketplace_free(frugal_marketplace* m) { delete m; }

size_t frugal_marketplace_size(const frugal_marketplace* m) { return m ? m->ids.size() : 0; }

const char* frugal_marketplace_llm_id(const frugal_marketplace* m, size_t index) {
    return m && index < m->ids.size() ? m->ids[index].c_str() : nullptr;
}

frugal_status frugal_query_cost(const frugal_marketplace* m, const char* llm_id, uint32_t input_tokens,
                                uint32_t output_tokens, int64_t* out_nano_usd) {
    return guarded([&] {
        require(m && llm_id && out_nano_usd, "null argument");
        *out_nano_usd = m->value.cost(llm_id, frugal::Usage{input_tokens, output_tokens}).nano();
    });
}

frugal_status frugal_trace_load(const char* path, const frugal_marketplace* m, const char* reward,
                                frugal_trace** out) {
    return guarded([&] {
        require(path && m && out, "null argument");
        const auto kind = frugal::parse_reward_kind(reward ? reward : "exact_match");
        auto loaded = frugal::load_trace(path, m->value, kind);
        *out = new frugal_trace{std::move(loaded.records), std::move(loaded.warnings)};
    });
}

frugal_status frugal_trace_synthesize(const char* spec_json, uint64_t seed, frugal_trace** out) {
    return guarded([&] {
        require(spec_json && out, "null argument");
        auto records = frugal::synthesize_trace(frugal::parse_synthetic_spec(spec_json), seed);
        *out = new frugal_trace{std::move(records), {}};
    });
}

frugal_status frugal_trace_save(const frugal_trace* t, const char* path) {
    return guarded([&] {
        require(t && path, "null argument");
        frugal::save_trace(path, t->records);
    });
}

frugal_status frugal_trace_split(const frugal_trace* t, double test_fraction, uint64_t seed, frugal_trace** train,
                                 frugal_trace** test) {
    return guarded([&] {
        require(t && train && test, "null argument");
        auto [tr, te] = frugal::split_trace(t->records, test_fraction, seed);
        auto a = std::make_unique<frugal_trace>(frugal_trace{std::move(tr.records), {}});
        auto b = std::make_unique<frugal_trace>(frugal_trace{std::move(te.records), {}});
        *train = a.release();
        *test = b.release();
    });
}

void frugal_trace_free(frugal_trace* t) { delete t; }

size_t frugal_trace_size(const frugal_trace* t) { return t ? t->records.size() : 0; }

size_t frugal_trace_warning_count(const frugal_trace* t) { return t ? t->warnings.size() : 0; }

const char* frugal_trace_warning(const frugal_trace* t, size_t index) {
    return t && index < t->warnings.size() ? t->warnings[index].c_str() : nullptr;
}

void frugal_train_options_default(frugal_train_options* options) {
    if (!options) return;
    const frugal::TrainingMeta meta;
    options->epochs = meta.epochs;
    options->learning_rate = meta.learning_rate;
    options->l2 = meta.l2;
    options->batch_size = meta.batch_size;
    options->seed = meta.seed;
    options->per_llm = meta.per_llm ? 1 : 0;
    options->dims = frugal::kDefaultFeatureDims;
}

frugal_status frugal_scorer_train(const frugal_trace* train, const frugal_train_options* options,
                                  frugal_scorer** out) {
    return guarded([&] {
        require(train && out, "null argument");
        frugal_train_options o;
        frugal_train_options_default(&o);
        if (options) o = *options;
        frugal::TrainConfig cfg;
        cfg.meta.epochs = o.epochs;
        cfg.meta.learning_rate = o.learning_rate;
        cfg.meta.l2 = o.l2;
        cfg.meta.batch_size = o.batch_size;
        cfg.meta.seed = o.seed;
        cfg.meta.per_llm = o.per_llm != 0;
        cfg.dims = o.dims;
        auto model = frugal::train_scorer(as_dataset(train), cfg);
        const std::string text = frugal::serialize_scorer(model);
        *out = make_scorer(std::move(model), text).release();
    });
}

frugal_status frugal_scorer_load(const char* path, frugal_scorer** out) {
    return guarded([&] {
        require(path && out, "null argument");
        const std::string text = frugal::read_file(path);
        *out = make_scorer(frugal::parse_scorer(text), text).release();
    });
}

frugal_status frugal_scorer_save(const frugal_scorer* s, const char* path) {
    return guarded([&] {
        require(s && path, "null argument");
        frugal::save_scorer(path, *s->model);
    });
}

void frugal_scorer_free(frugal_scorer* s) { delete s; }

frugal_status frugal_scorer_score(const frugal_scorer* s, const char* query, const char* answer, const char* llm_id,
                                  double* out) {
    return guarded([&] {
        require(s && query && answer && out, "null argument");
        *out = s->scorer->score(query, answer, llm_id ? llm_id : "");
    });
}

size_t frugal_scorer_warning_count(const frugal_scorer* s) { return s ? s->model->warnings.size() : 0; }

const char* frugal_scorer_warning(const frugal_scorer* s, size_t index) {
    return s && index < s->model->warnings.size() ? s->model->warnings[index].c_str() : nullptr;
}

void frugal_optimizer_options_default(frugal_optimizer_options* options) {
    if (!options) return;
    const frugal::OptimizerConfig cfg;
    options->max_length = cfg.max_length;
    options->budget_nano_usd = 0;
    options->grid_points = cfg.grid_points;
    options->disagreement_floor = cfg.disagreement_floor;
    options->subsample = cfg.subsample;
    options->rerank_top = cfg.rerank_top;
    options->seed = cfg.seed;
    options->threads = cfg.threads;
    options->brute_force = 0;
}

frugal_status frugal_cascade_load(const char* path, frugal_cascade** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = new frugal_cascade{frugal::load_cascade(path)};
    });
}

frugal_status frugal_cascade_save(const frugal_cascade* c, const char* path) {
    return guarded([&] {
        require(c && path, "null argument");
        frugal::save_cascade(path, c->value);
    });
}

frugal_status frugal_cascade_serialize(const frugal_cascade* c, char** out) {
    return guarded([&] {
        require(c && out, "null argument");
        *out = dup_string(frugal::serialize_cascade(c->value));
    });
}

void frugal_cascade_free(frugal_cascade* c) { delete c; }

size_t frugal_cascade_length(const frugal_cascade* c) { return c ? c->value.list.size() : 0; }

const char* frugal_cascade_llm(const frugal_cascade* c, size_t index) {
    return c && index < c->value.list.size() ? c->value.list[index].c_str() : nullptr;
}

double frugal_cascade_threshold(const frugal_cascade* c, size_t index) {
    return c && index < c->value.thresholds.size() ? c->value.thresholds[index] : 0.0;
}

frugal_status frugal_optimize(const frugal_trace* train, const frugal_scorer* s, const frugal_marketplace* m,
                              const frugal_optimizer_options* options, frugal_cascade** out, char** stats_json) {
    return guarded([&] {
        require(train && s && m && options && out, "null argument");
        const auto cfg = to_config(options, s);
        const auto data = as_dataset(train);
        const auto result = options->brute_force ? frugal::brute_force_oracle(data, *s->scorer, m->value, cfg)
                                                 : frugal::optimize(data, *s->scorer, m->value, cfg);
        json stats = {{"feasible", result.feasible},
                      {"budget_usd", frugal::format_money(cfg.budget)},
                      {"list", result.best.list},
                      {"thresholds", thresholds_json(result.best.thresholds)},
                      {"train_count", result.train_count},
                      {"train_mean_reward", result.train_mean_reward},
                      {"train_mean_cost_usd", frugal::format_money(result.train_mean_cost)},
                      {"train_total_cost_usd", frugal::format_money(result.train_total_cost)},
                      {"lists_enumerated", result.search_stats.lists_enumerated},
                      {"lists_pruned", result.search_stats.lists_pruned},
                      {"grid_points_evaluated", result.search_stats.grid_points_evaluated},
                      {"llms_excluded", result.search_stats.llms_excluded},
                      {"search", options->brute_force ? "brute_force" : "pruned"}};
        auto cascade = std::make_unique<frugal_cascade>(frugal_cascade{result.best});
        emit(stats_json, stats.dump(2) + "\n");
        *out = cascade.release();
    });
}

frugal_status frugal_evaluate(const frugal_cascade* c, const frugal_scorer* s, const frugal_trace* data,
                              const frugal_marketplace* m, char** report_json, char** per_query_csv) {
    return guarded([&] {
        require(c && s && data && m, "null argument");
        const auto ds = as_dataset(data, frugal::Split::kTest);
        const auto eval = frugal::evaluate_cascade(c->value, *s->scorer, ds, m->value);
        std::vector<std::size_t> stops(c->value.list.size(), 0);
        std::string csv = "query_id,stop_index,llm_used,reward,cost_usd\n";
        for (std::size_t i = 0; i < eval.per_query.size(); ++i) {
            const auto& q = eval.per_query[i];
            ++stops[q.stop_index - 1];
            csv += ds.records[i].query_id + ',' + std::to_string(q.stop_index) + ',' + q.llm_used + ',' +
                   frugal::format_double(eval.rewards[i]) + ',' + frugal::format_money(q.total_cost) + '\n';
        }
        json report = {{"count", eval.count},
                       {"list", c->value.list},
                       {"thresholds", thresholds_json(c->value.thresholds)},
                       {"mean_reward", eval.mean_reward},
                       {"mean_cost_usd", frugal::format_money(eval.mean_cost)},
                       {"total_cost_usd", frugal::format_money(eval.total_cost)},
                       {"budget_usd", frugal::format_money(c->value.budget)},
                       {"within_budget", frugal::mean_within_budget(eval.total_cost, eval.count, c->value.budget)},
                       {"stop_counts", stops}};
        emit(report_json, report.dump(2) + "\n");
        emit(per_query_csv, csv);
    });
}

frugal_status frugal_sweep(const frugal_trace* train, const frugal_trace* test, const frugal_scorer* s,
                           const frugal_marketplace* m, const int64_t* budgets_nano_usd, size_t budget_count,
                           const frugal_optimizer_options* options, char** frontier_csv, char** savings_csv,
                           char** summary) {
    return guarded([&] {
        require(train && test && s && m && options && (budgets_nano_usd || budget_count == 0), "null argument");
        require(budget_count > 0, "sweep needs at least one budget");
        std::vector<frugal::Money> budgets;
        for (size_t i = 0; i < budget_count; ++i) budgets.push_back(frugal::Money::from_nano(budgets_nano_usd[i]));
        const auto test_ds = as_dataset(test, frugal::Split::kTest);
        const auto frontier =
            frugal::budget_sweep(as_dataset(train), test_ds, *s->scorer, m->value, budgets, to_config(options, s));
        const auto best = frugal::best_singleton(frugal::singleton_performance(test_ds, m->value));
        const auto savings = frugal::cost_savings_report(frontier, best);
        emit(frontier_csv, frugal::frontier_csv(frontier));
        emit(savings_csv, frugal::savings_csv(savings));
        emit(summary, frugal::savings_summary(savings));
    });
}

frugal_status frugal_mpi_csv(const frugal_trace* data, const frugal_marketplace* m, char** out) {
    return guarded([&] {
        require(data && m && out, "null argument");
        *out = dup_string(frugal::mpi_csv(frugal::mpi_matrix(as_dataset(data), m->value)));
    });
}

void frugal_router_options_default(frugal_router_options* options) {
    if (!options) return;
    options->providers = "trace_replay";
    options->trace = nullptr;
    options->cache_path = nullptr;
    options->cache_threshold = 2.0;
    options->fail_on_error = 0;
}

frugal_status frugal_router_create(const frugal_cascade* c, const frugal_scorer* s, const frugal_marketplace* m,
                                   const frugal_router_options* options, frugal_router** out) {
    return guarded([&] {
        require(c && s && m && out, "null argument");
        frugal_router_options o;
        frugal_router_options_default(&o);
        if (options) o = *options;
        auto r = std::make_unique<frugal_router>();
        r->cascade = c->value;
        r->cascade.validate(m->value);
        r->model = s->model;
        r->scorer = std::make_unique<frugal::LogisticScorer>(s->model, s->scorer->id());
        r->marketplace = m->value;
        const std::string mode = o.providers ? o.providers : "trace_replay";
        if (mode == "trace_replay") {
            require(o.trace, "trace_replay providers need a trace");
            r->providers = frugal::trace_replay_providers(m->value, o.trace->records);
        } else if (mode == "mock") {
            for (const auto& id : m->value.llm_ids()) r->providers.emplace(id, frugal::MockProvider::last_word(id));
        } else {
            throw frugal::invalid_argument("unknown providers mode '" + mode + "'");
        }
        if (o.cache_path) {
            r->cache = *o.cache_path ? std::make_unique<frugal::CompletionCache>(o.cache_path)
                                     : std::make_unique<frugal::CompletionCache>();
        }
        r->cache_options = frugal::CacheOptions{r->cache != nullptr, o.cache_threshold};
        r->route_options.on_failure = o.fail_on_error ? frugal::FailurePolicy::kFail : frugal::FailurePolicy::kSkip;
        *out = r.release();
    });
}

frugal_status frugal_router_route(frugal_router* r, const char* query, char** result_json) {
    return guarded([&] {
        require(r && query && result_json, "null argument");
        frugal::RouteOutcome outcome;
        if (r->cache) {
            outcome = frugal::cached_route(*r->cache, r->cache_options, r->cascade, *r->scorer, r->providers,
                                           r->marketplace, query, r->route_options);
        } else {
            outcome = frugal::route(r->cascade, *r->scorer, r->providers, r->marketplace, query, r->route_options);
        }
        *result_json = dup_string(frugal::route_outcome_json(outcome));
    });
}

void frugal_router_free(frugal_router* r) { delete r; }

frugal_status frugal_cache_stats(const char* cache_path, char** stats_json) {
    return guarded([&] {
        require(cache_path && stats_json, "null argument");
        if (!std::filesystem::exists(cache_path)) throw frugal::io_error(std::string("no cache log at ") + cache_path);
        frugal::CompletionCache cache{std::string(cache_path)};
        frugal::Money stored;
        std::map<std::string, std::size_t> per_llm;
        for (const auto& e : cache.entries()) {
            stored += e.stored_cost;
            ++per_llm[e.llm_id];
        }
        json out = {{"entries", cache.size()},
                    {"total_stored_cost_usd", frugal::format_money(stored)},
                    {"llms", per_llm}};
        *stats_json = dup_string(out.dump(2) + "\n");
    });
}

frugal_status frugal_gateway_create(const char* config_path, frugal_gateway** out) {
    return guarded([&] {
        require(config_path && out, "null argument");
        auto g = std::make_unique<frugal_gateway>();
        g->value = frugal::Gateway::from_config(frugal::GatewayConfig::load(config_path));
        *out = g.release();
    });
}

frugal_status frugal_gateway_start(frugal_gateway* g, int port, int* bound_port) {
    return guarded([&] {
        require(g, "null gateway");
        const int p = g->value->start(port);
        if (bound_port) *bound_port = p;
    });
}

frugal_status frugal_gateway_wait(frugal_gateway* g) {
    return guarded([&] {
        require(g, "null gateway");
        g->value->wait();
    });
}

frugal_status frugal_gateway_stop(frugal_gateway* g) {
    return guarded([&] {
        require(g, "null gateway");
        g->value->stop();
    });
}

frugal_status frugal_gateway_handle_route(frugal_gateway* g, const char* body, int* http_status, char** reply_json) {
    return guarded([&] {
        require(g && body && http_status && reply_json, "null argument");
        const auto reply = g->value->handle_route(body);
        *http_status = reply.status;
        *reply_json = dup_string(reply.body);
    });
}

frugal_status frugal_gateway_stats(const frugal_gateway* g, char** stats_json) {
    return guarded([&] {
        require(g && stats_json, "null argument");
        *stats_json = dup_string(g->value->stats_json());
    });
}

void frugal_gateway_free(frugal_gateway* g) { delete g; }

}  // extern "C"
