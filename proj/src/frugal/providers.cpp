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

#include "frugal/providers.hpp"

#include <cctype>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "frugal/error.hpp"
#include "frugal/text.hpp"

namespace frugal {

void CompletionRequest::validate() const {
    if (max_output_tokens < 1) throw invalid_argument("max_output_tokens must be >= 1");
    if (retry.max_attempts < 1) throw invalid_argument("retry max_attempts must be >= 1");
}

namespace {

std::uint32_t count_tokens(std::string_view s) { return static_cast<std::uint32_t>(whitespace_tokens(s).size()); }

using Clock = std::chrono::steady_clock;

std::chrono::microseconds since(Clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start);
}

}  // namespace

MockProvider::MockProvider(std::string llm_id, Rule rule) : llm_id_(std::move(llm_id)), rule_(std::move(rule)) {}

std::shared_ptr<MockProvider> MockProvider::last_word(std::string llm_id) {
    return std::make_shared<MockProvider>(std::move(llm_id), [](std::string_view, std::string_view prompt) {
        auto tokens = whitespace_tokens(prompt);
        return tokens.empty() ? std::string() : tokens.back();
    });
}

std::shared_ptr<MockProvider> MockProvider::hashed_labels(std::string llm_id, std::vector<std::string> labels,
                                                          std::uint64_t seed) {
    if (labels.empty()) throw invalid_argument("hashed_labels needs at least one label");
    return std::make_shared<MockProvider>(
        std::move(llm_id), [labels = std::move(labels), seed](std::string_view id, std::string_view prompt) {
            const std::uint64_t h = fnv1a64(prompt, fnv1a64(id, seed ^ 0xcbf29ce484222325ULL));
            return labels[h % labels.size()];
        });
}

CompletionResponse MockProvider::complete(const CompletionRequest& request) {
    request.validate();
    const auto start = Clock::now();
    calls_.fetch_add(1);
    CompletionResponse resp;
    resp.text = rule_(llm_id_, request.prompt);
    resp.usage = Usage{count_tokens(request.prompt), count_tokens(resp.text)};
    resp.latency = since(start);
    return resp;
}

TraceReplayProvider::TraceReplayProvider(std::string llm_id, const std::vector<TraceRecord>& records)
    : llm_id_(std::move(llm_id)) {
    for (const auto& rec : records) {
        if (const auto* r = rec.find(llm_id_)) by_query_.emplace(rec.query_text, *r);
    }
}

CompletionResponse TraceReplayProvider::complete(const CompletionRequest& request) {
    request.validate();
    auto it = by_query_.find(request.prompt);
    if (it == by_query_.end()) {
        throw provider_error("trace replay for '" + llm_id_ + "': query not present in trace");
    }
    CompletionResponse resp;
    resp.text = it->second.answer_text;
    resp.usage = it->second.usage;
    return resp;
}

ProviderSet trace_replay_providers(const Marketplace& marketplace, const std::vector<TraceRecord>& records) {
    ProviderSet set;
    for (const auto& id : marketplace.llm_ids()) set.emplace(id, std::make_shared<TraceReplayProvider>(id, records));
    return set;
}

std::string provider_env_prefix(std::string_view provider) {
    std::string out = "FRUGAL_";
    for (char c : provider) {
        out += std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                                                           : '_';
    }
    return out;
}

HttpProviderConfig HttpProviderConfig::from_env(std::string_view provider, std::string llm_id, std::string model) {
    const std::string prefix = provider_env_prefix(provider);
    HttpProviderConfig cfg;
    cfg.llm_id = std::move(llm_id);
    cfg.model = model.empty() ? cfg.llm_id : std::move(model);
    if (const char* url = std::getenv((prefix + "_BASE_URL").c_str())) cfg.base_url = url;
    if (const char* key = std::getenv((prefix + "_API_KEY").c_str())) cfg.api_key = key;
    if (cfg.base_url.empty()) throw invalid_argument(prefix + "_BASE_URL is not set");
    return cfg;
}

HttpProvider::HttpProvider(HttpProviderConfig config)
    : config_(std::move(config)), in_flight_(std::max(1, config_.max_in_flight)) {
    if (config_.model.empty()) config_.model = config_.llm_id;
    const auto scheme = config_.base_url.find("://");
    if (scheme == std::string::npos) throw invalid_argument("base url '" + config_.base_url + "' lacks a scheme");
    const auto path = config_.base_url.find('/', scheme + 3);
    scheme_host_port_ = config_.base_url.substr(0, path);
    if (path != std::string::npos) path_prefix_ = config_.base_url.substr(path);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

namespace {

bool transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

CompletionResponse HttpProvider::complete(const CompletionRequest& request) {
    request.validate();
    if (config_.busy_policy == BusyPolicy::kReject) {
        if (!in_flight_.try_acquire()) throw provider_error("provider '" + config_.llm_id + "' is busy");
    } else {
        in_flight_.acquire();
    }
    struct Release {
        std::counting_semaphore<>& sem;
        ~Release() { sem.release(); }
    } release{in_flight_};

    const nlohmann::json body = {
        {"model", config_.model}, {"prompt", request.prompt}, {"max_tokens", request.max_output_tokens}};
    const std::string payload = body.dump();
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    const auto start = Clock::now();
    std::string last_error;
    auto backoff = request.retry.backoff;
    for (int attempt = 1; attempt <= request.retry.max_attempts; ++attempt) {
        total_attempts_.fetch_add(1);
        httplib::Client client(scheme_host_port_);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        auto res = client.Post(path_prefix_ + "/v1/completions", headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 200) {
            try {
                const auto j = nlohmann::json::parse(res->body);
                CompletionResponse out;
                out.text = j.at("text").get<std::string>();
                const auto& usage = j.at("usage");
                const auto in = usage.at("prompt_tokens").get<std::int64_t>();
                const auto gen = usage.at("completion_tokens").get<std::int64_t>();
                if (in < 0 || gen < 0 || in > UINT32_MAX || gen > UINT32_MAX) {
                    throw provider_error("provider reported invalid token usage");
                }
                out.usage = Usage{static_cast<std::uint32_t>(in), static_cast<std::uint32_t>(gen)};
                if (j.contains("cost_usd") && j.at("cost_usd").is_string()) {
                    out.provider_reported_cost = parse_money(j.at("cost_usd").get<std::string>());
                }
                out.attempts = attempt;
                out.latency = since(start);
                return out;
            } catch (const nlohmann::json::exception& e) {
                throw provider_error("provider '" + config_.llm_id + "' returned malformed body: " + e.what());
            } catch (const Error& e) {
                throw provider_error("provider '" + config_.llm_id + "': " + e.what());
            }
        } else if (!transient_status(res->status)) {
            throw provider_error("provider '" + config_.llm_id + "' returned HTTP " + std::to_string(res->status));
        } else {
            last_error = "HTTP " + std::to_string(res->status);
        }
        if (attempt < request.retry.max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw provider_error("provider '" + config_.llm_id + "': retries exhausted after " +
                         std::to_string(request.retry.max_attempts) + " attempts (" + last_error + ")");
}

HealthStatus HttpProvider::health_check() {
    HealthStatus status;
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(2, 0);
    client.set_read_timeout(2, 0);
    auto res = client.Get(path_prefix_ + "/v1/healthz");
    if (!res) {
        status = {false, "transport error: " + httplib::to_string(res.error())};
    } else if (res->status != 200) {
        status = {false, "HTTP " + std::to_string(res->status)};
    }
    std::lock_guard lock(health_mutex_);
    last_health_ = status;
    return status;
}

HealthStatus HttpProvider::last_health() const {
    std::lock_guard lock(health_mutex_);
    return last_health_;
}

}  // namespace frugal
