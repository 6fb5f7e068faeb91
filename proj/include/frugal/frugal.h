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

#ifndef FRUGAL_FRUGAL_H
#define FRUGAL_FRUGAL_H

/*
 * C interface to the frugal cascade library.
 *
 * Every object is an opaque handle released with its *_free function.
 * Functions return a frugal_status; on failure the message is available
 * from frugal_last_error() on the calling thread until its next call.
 * Strings returned through char** are heap-allocated and must be released
 * with frugal_string_free(). Money crosses the interface as int64 nano-USD.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(FRUGAL_BUILDING_LIBRARY)
#define FRUGAL_API __attribute__((visibility("default")))
#else
#define FRUGAL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum frugal_status {
    FRUGAL_OK = 0,
    FRUGAL_ERR_INVALID_ARGUMENT = 1,
    FRUGAL_ERR_USAGE = 2,
    FRUGAL_ERR_DATA = 3,
    FRUGAL_ERR_PROVIDER = 4,
    FRUGAL_ERR_IO = 5,
    FRUGAL_ERR_INTERNAL = 6
} frugal_status;

typedef struct frugal_marketplace frugal_marketplace;
typedef struct frugal_trace frugal_trace;
typedef struct frugal_scorer frugal_scorer;
typedef struct frugal_cascade frugal_cascade;
typedef struct frugal_router frugal_router;
typedef struct frugal_gateway frugal_gateway;

FRUGAL_API const char* frugal_version(void);
FRUGAL_API const char* frugal_last_error(void);
FRUGAL_API void frugal_string_free(char* s);

/* ---- money and pricing ------------------------------------------------ */

FRUGAL_API frugal_status frugal_money_format(int64_t nano_usd, char** out);
FRUGAL_API frugal_status frugal_money_parse(const char* usd, int64_t* out_nano_usd);

FRUGAL_API frugal_status frugal_marketplace_load(const char* path, frugal_marketplace** out);
FRUGAL_API frugal_status frugal_marketplace_parse(const char* text, frugal_marketplace** out);
FRUGAL_API void frugal_marketplace_free(frugal_marketplace* m);
FRUGAL_API size_t frugal_marketplace_size(const frugal_marketplace* m);
/* Borrowed pointer, valid while the marketplace lives. NULL when out of range. */
FRUGAL_API const char* frugal_marketplace_llm_id(const frugal_marketplace* m, size_t index);
FRUGAL_API frugal_status frugal_query_cost(const frugal_marketplace* m, const char* llm_id, uint32_t input_tokens,
                                           uint32_t output_tokens, int64_t* out_nano_usd);

/* ---- traces ------------------------------------------------------------ */

/* reward: "exact_match" or "token_f1"; NULL selects exact_match. */
FRUGAL_API frugal_status frugal_trace_load(const char* path, const frugal_marketplace* m, const char* reward,
                                           frugal_trace** out);
/* spec_json: synthetic generator spec (see docs/formats.md). */
FRUGAL_API frugal_status frugal_trace_synthesize(const char* spec_json, uint64_t seed, frugal_trace** out);
FRUGAL_API frugal_status frugal_trace_save(const frugal_trace* t, const char* path);
FRUGAL_API frugal_status frugal_trace_split(const frugal_trace* t, double test_fraction, uint64_t seed,
                                            frugal_trace** train, frugal_trace** test);
FRUGAL_API void frugal_trace_free(frugal_trace* t);
FRUGAL_API size_t frugal_trace_size(const frugal_trace* t);
FRUGAL_API size_t frugal_trace_warning_count(const frugal_trace* t);
FRUGAL_API const char* frugal_trace_warning(const frugal_trace* t, size_t index);

/* ---- scorer ------------------------------------------------------------ */

typedef struct frugal_train_options {
    int epochs;
    double learning_rate;
    double l2;
    size_t batch_size;
    uint64_t seed;
    int per_llm;
    uint32_t dims;
} frugal_train_options;

FRUGAL_API void frugal_train_options_default(frugal_train_options* options);
FRUGAL_API frugal_status frugal_scorer_train(const frugal_trace* train, const frugal_train_options* options,
                                             frugal_scorer** out);
FRUGAL_API frugal_status frugal_scorer_load(const char* path, frugal_scorer** out);
FRUGAL_API frugal_status frugal_scorer_save(const frugal_scorer* s, const char* path);
FRUGAL_API void frugal_scorer_free(frugal_scorer* s);
FRUGAL_API frugal_status frugal_scorer_score(const frugal_scorer* s, const char* query, const char* answer,
                                             const char* llm_id, double* out);
FRUGAL_API size_t frugal_scorer_warning_count(const frugal_scorer* s);
FRUGAL_API const char* frugal_scorer_warning(const frugal_scorer* s, size_t index);

/* ---- cascades and optimization ----------------------------------------- */

typedef struct frugal_optimizer_options {
    size_t max_length;
    int64_t budget_nano_usd;
    size_t grid_points;
    double disagreement_floor;
    double subsample;
    size_t rerank_top;
    uint64_t seed;
    unsigned threads;
    int brute_force; /* nonzero: exhaustive oracle instead of the pruned search */
} frugal_optimizer_options;

FRUGAL_API void frugal_optimizer_options_default(frugal_optimizer_options* options);

FRUGAL_API frugal_status frugal_cascade_load(const char* path, frugal_cascade** out);
FRUGAL_API frugal_status frugal_cascade_save(const frugal_cascade* c, const char* path);
FRUGAL_API frugal_status frugal_cascade_serialize(const frugal_cascade* c, char** out);
FRUGAL_API void frugal_cascade_free(frugal_cascade* c);
FRUGAL_API size_t frugal_cascade_length(const frugal_cascade* c);
FRUGAL_API const char* frugal_cascade_llm(const frugal_cascade* c, size_t index);
FRUGAL_API double frugal_cascade_threshold(const frugal_cascade* c, size_t index);

/* Writes the winning cascade to *out and a JSON stats report to *stats_json
 * (may be NULL). The scorer's id is recorded as the cascade's scorer_ref. */
FRUGAL_API frugal_status frugal_optimize(const frugal_trace* train, const frugal_scorer* s,
                                         const frugal_marketplace* m, const frugal_optimizer_options* options,
                                         frugal_cascade** out, char** stats_json);

/* JSON report with mean reward and exact costs; per_query_csv may be NULL. */
FRUGAL_API frugal_status frugal_evaluate(const frugal_cascade* c, const frugal_scorer* s, const frugal_trace* data,
                                         const frugal_marketplace* m, char** report_json, char** per_query_csv);

/* Budgets must be ascending. Any output pointer may be NULL. */
FRUGAL_API frugal_status frugal_sweep(const frugal_trace* train, const frugal_trace* test, const frugal_scorer* s,
                                      const frugal_marketplace* m, const int64_t* budgets_nano_usd,
                                      size_t budget_count, const frugal_optimizer_options* options,
                                      char** frontier_csv, char** savings_csv, char** summary);

FRUGAL_API frugal_status frugal_mpi_csv(const frugal_trace* data, const frugal_marketplace* m, char** out);

/* ---- live routing ------------------------------------------------------ */

typedef struct frugal_router_options {
    const char* providers;   /* "trace_replay" (needs trace) or "mock" */
    const frugal_trace* trace;
    const char* cache_path;  /* NULL: no cache; "" : in-memory cache */
    double cache_threshold;  /* > 1 disables approximate matching */
    int fail_on_error;       /* nonzero: fail the route at the first provider error */
} frugal_router_options;

FRUGAL_API void frugal_router_options_default(frugal_router_options* options);
FRUGAL_API frugal_status frugal_router_create(const frugal_cascade* c, const frugal_scorer* s,
                                              const frugal_marketplace* m, const frugal_router_options* options,
                                              frugal_router** out);
/* JSON: {answer, llm_used, stop_index, cost_usd, cached, steps}. */
FRUGAL_API frugal_status frugal_router_route(frugal_router* r, const char* query, char** result_json);
FRUGAL_API void frugal_router_free(frugal_router* r);

/* JSON: {entries, total_stored_cost_usd, llms: {id: count}}. */
FRUGAL_API frugal_status frugal_cache_stats(const char* cache_path, char** stats_json);

/* ---- gateway ----------------------------------------------------------- */

FRUGAL_API frugal_status frugal_gateway_create(const char* config_path, frugal_gateway** out);
/* port < 0 keeps the configured port; 0 picks a free one. */
FRUGAL_API frugal_status frugal_gateway_start(frugal_gateway* g, int port, int* bound_port);
FRUGAL_API frugal_status frugal_gateway_wait(frugal_gateway* g);
FRUGAL_API frugal_status frugal_gateway_stop(frugal_gateway* g);
FRUGAL_API frugal_status frugal_gateway_handle_route(frugal_gateway* g, const char* body, int* http_status,
                                                     char** reply_json);
FRUGAL_API frugal_status frugal_gateway_stats(const frugal_gateway* g, char** stats_json);
FRUGAL_API void frugal_gateway_free(frugal_gateway* g);

#ifdef __cplusplus
}
#endif

#endif /* FRUGAL_FRUGAL_H */
