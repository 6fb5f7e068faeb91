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

// frugal: command-line front end. Links only the C API.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "frugal/frugal.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitProvider = 4;

struct Failure {
    int code;
    std::string message;
};

int exit_code(frugal_status s) {
    switch (s) {
        case FRUGAL_OK: return kExitOk;
        case FRUGAL_ERR_INVALID_ARGUMENT:
        case FRUGAL_ERR_USAGE: return kExitUsage;
        case FRUGAL_ERR_DATA:
        case FRUGAL_ERR_IO: return kExitData;
        case FRUGAL_ERR_PROVIDER: return kExitProvider;
        default: return kExitInternal;
    }
}

void check(frugal_status s, const std::string& context) {
    if (s != FRUGAL_OK) throw Failure{exit_code(s), context + ": " + frugal_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using Marketplace = std::unique_ptr<frugal_marketplace, Deleter<frugal_marketplace, frugal_marketplace_free>>;
using Trace = std::unique_ptr<frugal_trace, Deleter<frugal_trace, frugal_trace_free>>;
using Scorer = std::unique_ptr<frugal_scorer, Deleter<frugal_scorer, frugal_scorer_free>>;
using Cascade = std::unique_ptr<frugal_cascade, Deleter<frugal_cascade, frugal_cascade_free>>;
using Router = std::unique_ptr<frugal_router, Deleter<frugal_router, frugal_router_free>>;
using Gateway = std::unique_ptr<frugal_gateway, Deleter<frugal_gateway, frugal_gateway_free>>;

// Takes ownership of a C string returned by the library.
std::string take(char* s) {
    if (!s) return {};
    std::string out(s);
    frugal_string_free(s);
    return out;
}

Marketplace load_marketplace(const std::string& path) {
    frugal_marketplace* m = nullptr;
    check(frugal_marketplace_load(path.c_str(), &m), "marketplace " + path);
    return Marketplace(m);
}

Trace load_trace(const std::string& path, const frugal_marketplace* m, const std::string& reward) {
    frugal_trace* t = nullptr;
    check(frugal_trace_load(path.c_str(), m, reward.c_str(), &t), "trace " + path);
    for (size_t i = 0; i < frugal_trace_warning_count(t); ++i) {
        std::cerr << "warning: " << frugal_trace_warning(t, i) << '\n';
    }
    return Trace(t);
}

Scorer load_scorer(const std::string& path) {
    frugal_scorer* s = nullptr;
    check(frugal_scorer_load(path.c_str(), &s), "scorer " + path);
    return Scorer(s);
}

Cascade load_cascade(const std::string& path) {
    frugal_cascade* c = nullptr;
    check(frugal_cascade_load(path.c_str(), &c), "cascade " + path);
    return Cascade(c);
}

std::int64_t parse_usd(const std::string& text) {
    std::int64_t nano = 0;
    check(frugal_money_parse(text.c_str(), &nano), "amount '" + text + "'");
    return nano;
}

void write_output(const std::string& path, const std::string& contents) {
    if (path.empty() || path == "-") {
        std::cout << contents;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Failure{kExitData, "cannot write " + path};
    out << contents;
    if (!out) throw Failure{kExitData, "failed writing " + path};
}

std::string read_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure{kExitData, "cannot read " + path};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct OptimizerFlags {
    std::string budget;
    std::size_t max_length = 3;
    std::size_t grid = 19;
    double delta = 0.02;
    double subsample = 1.0;
    std::size_t rerank_top = 20;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool oracle = false;

    void add_to(CLI::App* cmd, bool with_budget) {
        if (with_budget) cmd->add_option("--budget", budget, "Mean per-query budget in USD")->required();
        cmd->add_option("--max-length", max_length, "Maximum cascade length")->check(CLI::PositiveNumber);
        cmd->add_option("--grid", grid, "Threshold grid points per position")->check(CLI::Range(2, 1000));
        cmd->add_option("--delta", delta, "Disagreement floor for list pruning")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--subsample", subsample, "First-pass subsample fraction (0,1]");
        cmd->add_option("--rerank-top", rerank_top, "Candidates re-evaluated on the full split");
        cmd->add_option("--seed", seed, "Seed for subsampling");
        cmd->add_option("--threads", threads, "Worker threads (0 = auto)");
        cmd->add_flag("--oracle", oracle, "Exhaustive search without pruning (small instances)");
    }

    frugal_optimizer_options options() const {
        frugal_optimizer_options o;
        frugal_optimizer_options_default(&o);
        o.max_length = max_length;
        o.grid_points = grid;
        o.disagreement_floor = delta;
        o.subsample = subsample;
        o.rerank_top = rerank_top;
        o.seed = seed;
        o.threads = threads;
        o.brute_force = oracle ? 1 : 0;
        if (!budget.empty()) o.budget_nano_usd = parse_usd(budget);
        return o;
    }
};

int run(int argc, char** argv) {
    CLI::App app{"Budget-aware LLM cascade toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(frugal_version()));

    std::string marketplace_path;
    std::string reward = "exact_match";
    auto add_marketplace = [&](CLI::App* cmd) {
        cmd->add_option("--marketplace", marketplace_path, "Pricing table CSV")->required();
    };
    auto add_reward = [&](CLI::App* cmd) {
        cmd->add_option("--reward", reward, "Reward function")->check(CLI::IsMember({"exact_match", "token_f1"}));
    };

    // ingest
    std::string trace_path, out_path, train_out, test_out;
    double test_fraction = 0.0;
    std::uint64_t seed = 0;
    auto* ingest = app.add_subcommand("ingest", "Validate a trace, recompute rewards, optionally split it");
    add_marketplace(ingest);
    add_reward(ingest);
    ingest->add_option("--trace", trace_path, "Input trace (JSON lines)")->required();
    ingest->add_option("--out", out_path, "Write the validated trace here");
    ingest->add_option("--test-fraction", test_fraction, "Split off this fraction as a test set");
    ingest->add_option("--seed", seed, "Split seed");
    ingest->add_option("--train-out", train_out, "Train split output");
    ingest->add_option("--test-out", test_out, "Test split output");

    // synth
    std::string spec_path;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic trace from a generator spec");
    synth->add_option("--spec", spec_path, "Generator spec (JSON)")->required();
    synth->add_option("--seed", seed, "Generator seed");
    synth->add_option("--out", out_path, "Output trace")->required();

    // train-scorer
    frugal_train_options train_opts;
    frugal_train_options_default(&train_opts);
    bool per_llm = false;
    auto* train = app.add_subcommand("train-scorer", "Fit the answer-reliability scorer");
    add_marketplace(train);
    add_reward(train);
    train->add_option("--trace", trace_path, "Training trace")->required();
    train->add_option("--out", out_path, "Model output")->required();
    train->add_option("--epochs", train_opts.epochs, "Training epochs")->check(CLI::PositiveNumber);
    train->add_option("--lr", train_opts.learning_rate, "Learning rate");
    train->add_option("--l2", train_opts.l2, "L2 penalty");
    train->add_option("--batch-size", train_opts.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
    train->add_option("--dims", train_opts.dims, "Hashed feature dimension")->check(CLI::PositiveNumber);
    train->add_option("--seed", train_opts.seed, "Shuffle seed");
    train->add_flag("--per-llm", per_llm, "Train one head per LLM");

    // optimize
    OptimizerFlags opt_flags;
    std::string scorer_path, stats_path;
    auto* optimize = app.add_subcommand("optimize", "Learn the cascade list and thresholds under a budget");
    add_marketplace(optimize);
    add_reward(optimize);
    optimize->add_option("--trace", trace_path, "Training trace")->required();
    optimize->add_option("--scorer", scorer_path, "Scorer model")->required();
    optimize->add_option("--out", out_path, "Cascade output")->required();
    optimize->add_option("--stats", stats_path, "Search statistics (JSON); '-' for stdout");
    opt_flags.add_to(optimize, true);

    // evaluate
    std::string cascade_path, per_query_path;
    auto* evaluate = app.add_subcommand("evaluate", "Replay a cascade over a trace");
    add_marketplace(evaluate);
    add_reward(evaluate);
    evaluate->add_option("--cascade", cascade_path, "Cascade file")->required();
    evaluate->add_option("--trace", trace_path, "Trace to replay")->required();
    evaluate->add_option("--scorer", scorer_path, "Scorer model")->required();
    evaluate->add_option("--out", out_path, "Report output (JSON)");
    evaluate->add_option("--per-query", per_query_path, "Per-query CSV output");

    // sweep
    std::string train_path, test_path, budgets_text, savings_path;
    auto* sweep = app.add_subcommand("sweep", "Optimize at several budgets and report the frontier");
    add_marketplace(sweep);
    add_reward(sweep);
    sweep->add_option("--trace", trace_path, "Full trace, split with --test-fraction");
    sweep->add_option("--train", train_path, "Training split");
    sweep->add_option("--test", test_path, "Test split");
    sweep->add_option("--test-fraction", test_fraction, "Test fraction when --trace is given");
    sweep->add_option("--split-seed", seed, "Split seed when --trace is given");
    sweep->add_option("--scorer", scorer_path, "Scorer model")->required();
    sweep->add_option("--budgets", budgets_text, "Comma-separated USD budgets, ascending")->required();
    sweep->add_option("--out", out_path, "frontier.csv output");
    sweep->add_option("--savings", savings_path, "savings.csv output");
    opt_flags.add_to(sweep, false);

    // mpi
    auto* mpi = app.add_subcommand("mpi", "Pairwise maximum performance improvement matrix");
    add_marketplace(mpi);
    add_reward(mpi);
    mpi->add_option("--trace", trace_path, "Trace")->required();
    mpi->add_option("--out", out_path, "mpi.csv output");

    // route
    std::string query, queries_path, providers_mode = "trace_replay", cache_path;
    double cache_threshold = 2.0;
    bool fail_fast = false;
    auto* route = app.add_subcommand("route", "Route queries through a cascade");
    add_marketplace(route);
    add_reward(route);
    route->add_option("--cascade", cascade_path, "Cascade file")->required();
    route->add_option("--scorer", scorer_path, "Scorer model")->required();
    route->add_option("--providers", providers_mode, "Provider backend")
        ->check(CLI::IsMember({"trace_replay", "mock"}));
    route->add_option("--trace", trace_path, "Trace backing the replay providers");
    auto* query_opt = route->add_option("--query", query, "A single query");
    route->add_option("--queries", queries_path, "File with one query per line")->excludes(query_opt);
    route->add_option("--cache", cache_path, "Completion cache log (enables caching)");
    route->add_option("--cache-threshold", cache_threshold, "Approximate-match cosine threshold (>1 disables)");
    route->add_flag("--fail-fast", fail_fast, "Fail at the first provider error instead of skipping");

    // serve
    std::string config_path;
    int port = -1;
    auto* serve = app.add_subcommand("serve", "Run the HTTP gateway");
    serve->add_option("--config", config_path, "Gateway config (JSON)")->required();
    serve->add_option("--port", port, "Override the configured port (0 = any free port)");

    // cache-stats
    auto* cache_stats = app.add_subcommand("cache-stats", "Summarize a completion cache log");
    cache_stats->add_option("--cache", cache_path, "Cache log")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    if (ingest->parsed()) {
        auto m = load_marketplace(marketplace_path);
        auto t = load_trace(trace_path, m.get(), reward);
        if (!out_path.empty()) check(frugal_trace_save(t.get(), out_path.c_str()), "save " + out_path);
        if (test_fraction > 0.0) {
            if (train_out.empty() || test_out.empty()) {
                throw Failure{kExitUsage, "--test-fraction needs --train-out and --test-out"};
            }
            frugal_trace* tr = nullptr;
            frugal_trace* te = nullptr;
            check(frugal_trace_split(t.get(), test_fraction, seed, &tr, &te), "split");
            Trace train_t(tr), test_t(te);
            check(frugal_trace_save(train_t.get(), train_out.c_str()), "save " + train_out);
            check(frugal_trace_save(test_t.get(), test_out.c_str()), "save " + test_out);
            std::cerr << "split: " << frugal_trace_size(tr) << " train, " << frugal_trace_size(te) << " test\n";
        }
        std::cerr << "ingested " << frugal_trace_size(t.get()) << " records\n";
    } else if (synth->parsed()) {
        frugal_trace* t = nullptr;
        check(frugal_trace_synthesize(read_input(spec_path).c_str(), seed, &t), "synthesize");
        Trace owned(t);
        check(frugal_trace_save(t, out_path.c_str()), "save " + out_path);
        std::cerr << "wrote " << frugal_trace_size(t) << " records\n";
    } else if (train->parsed()) {
        auto m = load_marketplace(marketplace_path);
        auto t = load_trace(trace_path, m.get(), reward);
        train_opts.per_llm = per_llm ? 1 : 0;
        frugal_scorer* s = nullptr;
        check(frugal_scorer_train(t.get(), &train_opts, &s), "train-scorer");
        Scorer owned(s);
        for (size_t i = 0; i < frugal_scorer_warning_count(s); ++i) {
            std::cerr << "warning: " << frugal_scorer_warning(s, i) << '\n';
        }
        check(frugal_scorer_save(s, out_path.c_str()), "save " + out_path);
    } else if (optimize->parsed()) {
        auto m = load_marketplace(marketplace_path);
        auto t = load_trace(trace_path, m.get(), reward);
        auto s = load_scorer(scorer_path);
        const auto o = opt_flags.options();
        frugal_cascade* c = nullptr;
        char* stats = nullptr;
        check(frugal_optimize(t.get(), s.get(), m.get(), &o, &c, &stats), "optimize");
        Cascade owned(c);
        const std::string stats_text = take(stats);
        check(frugal_cascade_save(c, out_path.c_str()), "save " + out_path);
        if (!stats_path.empty()) write_output(stats_path, stats_text);
    } else if (evaluate->parsed()) {
        auto m = load_marketplace(marketplace_path);
        auto t = load_trace(trace_path, m.get(), reward);
        auto s = load_scorer(scorer_path);
        auto c = load_cascade(cascade_path);
        char* report = nullptr;
        char* per_query = nullptr;
        check(frugal_evaluate(c.get(), s.get(), t.get(), m.get(), &report, &per_query), "evaluate");
        const std::string report_text = take(report);
        const std::string per_query_text = take(per_query);
        write_output(out_path, report_text);
        if (!per_query_path.empty()) write_output(per_query_path, per_query_text);
    } else if (sweep->parsed()) {
        auto m = load_marketplace(marketplace_path);
        auto s = load_scorer(scorer_path);
        Trace train_t, test_t;
        if (!trace_path.empty()) {
            if (!train_path.empty() || !test_path.empty()) throw Failure{kExitUsage, "use --trace or --train/--test"};
            if (test_fraction <= 0.0) throw Failure{kExitUsage, "--trace needs --test-fraction"};
            auto full = load_trace(trace_path, m.get(), reward);
            frugal_trace* tr = nullptr;
            frugal_trace* te = nullptr;
            check(frugal_trace_split(full.get(), test_fraction, seed, &tr, &te), "split");
            train_t.reset(tr);
            test_t.reset(te);
        } else {
            if (train_path.empty() || test_path.empty()) throw Failure{kExitUsage, "sweep needs --train and --test"};
            train_t = load_trace(train_path, m.get(), reward);
            test_t = load_trace(test_path, m.get(), reward);
        }
        std::vector<std::int64_t> budgets;
        std::stringstream ss(budgets_text);
        for (std::string item; std::getline(ss, item, ',');) budgets.push_back(parse_usd(item));
        const auto o = opt_flags.options();
        char* frontier = nullptr;
        char* savings = nullptr;
        char* summary = nullptr;
        check(frugal_sweep(train_t.get(), test_t.get(), s.get(), m.get(), budgets.data(), budgets.size(), &o,
                           &frontier, &savings, &summary),
              "sweep");
        const std::string frontier_text = take(frontier);
        const std::string savings_text = take(savings);
        const std::string summary_text = take(summary);
        write_output(out_path, frontier_text);
        if (!savings_path.empty()) write_output(savings_path, savings_text);
        std::cerr << summary_text;
    } else if (mpi->parsed()) {
        auto m = load_marketplace(marketplace_path);
        auto t = load_trace(trace_path, m.get(), reward);
        char* csv = nullptr;
        check(frugal_mpi_csv(t.get(), m.get(), &csv), "mpi");
        write_output(out_path, take(csv));
    } else if (route->parsed()) {
        auto m = load_marketplace(marketplace_path);
        auto s = load_scorer(scorer_path);
        auto c = load_cascade(cascade_path);
        Trace t;
        if (providers_mode == "trace_replay") {
            if (trace_path.empty()) throw Failure{kExitUsage, "trace_replay providers need --trace"};
            t = load_trace(trace_path, m.get(), reward);
        }
        frugal_router_options ro;
        frugal_router_options_default(&ro);
        ro.providers = providers_mode.c_str();
        ro.trace = t.get();
        ro.cache_path = cache_path.empty() ? nullptr : cache_path.c_str();
        ro.cache_threshold = cache_threshold;
        ro.fail_on_error = fail_fast ? 1 : 0;
        frugal_router* r = nullptr;
        check(frugal_router_create(c.get(), s.get(), m.get(), &ro, &r), "router");
        Router owned(r);
        std::vector<std::string> queries;
        if (!query.empty()) {
            queries.push_back(query);
        } else if (!queries_path.empty()) {
            std::istringstream in(read_input(queries_path));
            for (std::string line; std::getline(in, line);) {
                if (!line.empty()) queries.push_back(line);
            }
        } else {
            throw Failure{kExitUsage, "route needs --query or --queries"};
        }
        for (const auto& q : queries) {
            char* result = nullptr;
            check(frugal_router_route(r, q.c_str(), &result), "route");
            std::cout << take(result) << '\n';
        }
    } else if (serve->parsed()) {
        // Block termination signals before any server thread starts so they
        // are delivered to sigwait below.
        sigset_t signals;
        sigemptyset(&signals);
        sigaddset(&signals, SIGINT);
        sigaddset(&signals, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &signals, nullptr);
        frugal_gateway* g = nullptr;
        check(frugal_gateway_create(config_path.c_str(), &g), "gateway");
        Gateway owned(g);
        int bound = 0;
        check(frugal_gateway_start(g, port, &bound), "start");
        std::cout << "listening on port " << bound << std::endl;
        int sig = 0;
        sigwait(&signals, &sig);
        check(frugal_gateway_stop(g), "stop");
        std::cerr << "stopped\n";
    } else if (cache_stats->parsed()) {
        char* stats = nullptr;
        check(frugal_cache_stats(cache_path.c_str(), &stats), "cache-stats");
        std::cout << take(stats);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << '\n';
        return f.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInternal;
    }
}
