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

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "frugal/money.hpp"
#include "frugal/trace.hpp"

namespace frugal {

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds backoff{100};  // doubled after each failed attempt
};

struct CompletionRequest {
    std::string llm_id;
    std::string prompt;
    std::uint32_t max_output_tokens = 256;
    std::chrono::milliseconds timeout{30'000};
    RetryPolicy retry;

    void validate() const;
};

struct CompletionResponse {
    std::string text;
    Usage usage;
    std::chrono::microseconds latency{0};
    std::optional<Money> provider_reported_cost;
    int attempts = 1;
};

struct HealthStatus {
    bool healthy = true;
    std::string reason;
};

/// A single LLM API. complete() may be called concurrently.
class Provider {
public:
    virtual ~Provider() = default;
    virtual const std::string& llm_id() const = 0;
    virtual ProviderKind kind() const = 0;
    /// Throws Error(kProvider) on failure.
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
    virtual HealthStatus health_check() = 0;
};

using ProviderSet = std::map<std::string, std::shared_ptr<Provider>, std::less<>>;

/// Deterministic in-process provider. Usage counts whitespace tokens of the
/// prompt and the answer.
class MockProvider final : public Provider {
public:
    using Rule = std::function<std::string(std::string_view llm_id, std::string_view prompt)>;

    MockProvider(std::string llm_id, Rule rule);

    /// Answers with the last whitespace token of the prompt.
    static std::shared_ptr<MockProvider> last_word(std::string llm_id);
    /// Answers with a label chosen by hashing (seed, llm_id, prompt).
    static std::shared_ptr<MockProvider> hashed_labels(std::string llm_id, std::vector<std::string> labels,
                                                       std::uint64_t seed);

    const std::string& llm_id() const override { return llm_id_; }
    ProviderKind kind() const override { return ProviderKind::kMock; }
    CompletionResponse complete(const CompletionRequest& request) override;
    HealthStatus health_check() override { return {}; }
    std::uint64_t calls() const { return calls_.load(); }

private:
    std::string llm_id_;
    Rule rule_;
    std::atomic<std::uint64_t> calls_{0};
};

/// Serves the recorded response of one LLM for queries present in a trace,
/// matched on the exact query text.
class TraceReplayProvider final : public Provider {
public:
    TraceReplayProvider(std::string llm_id, const std::vector<TraceRecord>& records);

    const std::string& llm_id() const override { return llm_id_; }
    ProviderKind kind() const override { return ProviderKind::kTraceReplay; }
    CompletionResponse complete(const CompletionRequest& request) override;
    HealthStatus health_check() override { return {}; }

private:
    std::string llm_id_;
    std::unordered_map<std::string, LlmResponse> by_query_;
};

/// Builds one trace-replay provider per marketplace LLM.
ProviderSet trace_replay_providers(const Marketplace& marketplace, const std::vector<TraceRecord>& records);

enum class BusyPolicy { kBlock, kReject };

struct HttpProviderConfig {
    std::string llm_id;
    std::string model;     // wire "model" field; defaults to llm_id
    std::string base_url;  // e.g. http://127.0.0.1:8080 (optionally with a path prefix)
    std::string api_key;   // sent as a bearer token when non-empty
    int max_in_flight = 16;
    BusyPolicy busy_policy = BusyPolicy::kBlock;

    /// Reads FRUGAL_<PROVIDER>_BASE_URL and FRUGAL_<PROVIDER>_API_KEY, where
    /// PROVIDER is the upper-cased provider name with non-alphanumerics as '_'.
    static HttpProviderConfig from_env(std::string_view provider, std::string llm_id, std::string model = {});
};

std::string provider_env_prefix(std::string_view provider);

/// Generic completion client: POST <base>/v1/completions with
/// {"model", "prompt", "max_tokens"}; expects {"text", "usage": {
/// "prompt_tokens", "completion_tokens"}} and optionally "cost_usd".
class HttpProvider final : public Provider {
public:
    explicit HttpProvider(HttpProviderConfig config);

    const std::string& llm_id() const override { return config_.llm_id; }
    ProviderKind kind() const override { return ProviderKind::kHttp; }
    CompletionResponse complete(const CompletionRequest& request) override;
    /// GET <base>/v1/healthz; the result of the latest probe is retained.
    HealthStatus health_check() override;
    HealthStatus last_health() const;
    std::uint64_t total_attempts() const { return total_attempts_.load(); }

private:
    HttpProviderConfig config_;
    std::string scheme_host_port_;
    std::string path_prefix_;
    std::counting_semaphore<> in_flight_;
    std::atomic<std::uint64_t> total_attempts_{0};
    mutable std::mutex health_mutex_;
    HealthStatus last_health_{false, "never probed"};
};

}  // namespace frugal
