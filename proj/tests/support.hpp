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

#include <cstdint>
#include <algorithm>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "frugal/money.hpp"
#include "frugal/scorer.hpp"
#include "frugal/synth.hpp"
#include "frugal/trace.hpp"

namespace frugal::testing {

struct Answer {
    std::string llm_id;
    std::string text;
    std::uint32_t input_tokens = 10;
    std::uint32_t output_tokens = 1;
};

inline TraceRecord make_record(const std::string& id, const std::string& query, const std::string& truth,
                               const std::vector<Answer>& answers) {
    TraceRecord rec{id, query, truth, {}};
    for (const auto& a : answers) {
        rec.responses[a.llm_id] =
            LlmResponse{a.text, Usage{a.input_tokens, a.output_tokens}, reward_exact_match(truth, a.text)};
    }
    return rec;
}

inline Dataset as_dataset(std::vector<TraceRecord> records) { return Dataset{std::move(records), Split::kTrain, 0}; }

inline PricingPlan flat_plan(std::int64_t fixed_nano, std::int64_t in_nano = 0, std::int64_t out_nano = 0) {
    return PricingPlan{Money::from_nano(in_nano), Money::from_nano(out_nano), Money::from_nano(fixed_nano)};
}

inline Marketplace marketplace_of(const std::vector<std::pair<std::string, PricingPlan>>& plans) {
    Marketplace m;
    for (const auto& [id, plan] : plans) m.add(ProviderSpec{id, "test", plan, ProviderKind::kTraceReplay});
    return m;
}

inline constexpr std::int64_t kUsd = Money::kNanoPerUsd;

/// cheap: $1 per request; expensive: $25 per request.
inline Marketplace two_tier_marketplace() {
    return marketplace_of({{"cheap", flat_plan(1 * kUsd)}, {"expensive", flat_plan(25 * kUsd)}});
}

/// cheap LLM 80% accurate with hedged (learnable) wrong answers; expensive
/// LLM 90% accurate, independent of the cheap one.
inline SyntheticSpec two_tier_spec(std::size_t records) {
    SyntheticSpec spec;
    spec.records = records;
    SyntheticLlm cheap;
    cheap.llm_id = "cheap";
    cheap.accuracy = 0.8;
    cheap.separable = true;
    SyntheticLlm expensive;
    expensive.llm_id = "expensive";
    expensive.accuracy = 0.9;
    expensive.anchor = "cheap";
    expensive.overlap = 0.72;
    expensive.separable = false;
    spec.llms = {cheap, expensive};
    return spec;
}

/// Scores an answer by whether it carries the hedge word: correct answers
/// from a separable synthetic LLM score high, hedged ones low.
class HedgeScorer final : public Scorer {
public:
    double score(std::string_view, std::string_view answer, std::string_view) const override {
        return answer.rfind(kHedgeWord, 0) == 0 ? 0.1 : 0.9;
    }
    std::string id() const override { return "hedge"; }
};

/// Fresh scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::uint64_t counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("frugal-test-" + std::to_string(rd()) + "-" + std::to_string(++counter));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Randomized optimizer instance: K LLMs with random prices, n records with
/// random correctness, and table scores on a coarse grid so ties occur.
struct RandomInstance {
    Marketplace marketplace;
    Dataset train;
    std::shared_ptr<TableScorer> scorer;
    std::vector<std::string> llm_ids;
};

inline RandomInstance random_instance(std::uint64_t seed, std::size_t k, std::size_t n) {
    std::mt19937_64 rng(seed);
    RandomInstance inst;
    inst.scorer = std::make_shared<TableScorer>("table-" + std::to_string(seed));
    for (std::size_t i = 0; i < k; ++i) {
        const std::string id = "L" + std::to_string(i);
        inst.llm_ids.push_back(id);
        inst.marketplace.add(ProviderSpec{id, "test",
                                          flat_plan(static_cast<std::int64_t>(1 + rng() % 50) * 1'000'000,
                                                    static_cast<std::int64_t>(rng() % 3) * 1000,
                                                    static_cast<std::int64_t>(rng() % 3) * 1000),
                                          ProviderKind::kTraceReplay});
    }
    std::vector<double> accuracy;
    for (std::size_t i = 0; i < k; ++i) accuracy.push_back(0.3 + 0.6 * uniform_unit(rng));
    std::vector<TraceRecord> records;
    for (std::size_t r = 0; r < n; ++r) {
        const std::string q = "query-" + std::to_string(r);
        std::vector<Answer> answers;
        for (std::size_t i = 0; i < k; ++i) {
            const bool correct = uniform_unit(rng) < accuracy[i];
            answers.push_back(Answer{inst.llm_ids[i], correct ? "yes" : "no-" + std::to_string(i),
                                     static_cast<std::uint32_t>(50 + rng() % 200),
                                     static_cast<std::uint32_t>(1 + rng() % 4)});
            // Scores correlate with correctness but overlap.
            const double base = correct ? 0.5 : 0.0;
            const double s = std::min(1.0, base + static_cast<double>(rng() % 11) / 20.0);
            inst.scorer->set(q, answers.back().text, inst.llm_ids[i], s);
        }
        records.push_back(make_record("r" + std::to_string(r), q, "yes", answers));
    }
    inst.train = as_dataset(std::move(records));
    return inst;
}

inline std::string source_path(const std::string& relative) { return std::string(FRUGAL_SOURCE_DIR) + "/" + relative; }

}  // namespace frugal::testing
