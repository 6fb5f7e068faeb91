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

#include "frugal/synth.hpp"

#include <algorithm>
#include <map>
#include <random>

#include <json.hpp>

#include "frugal/error.hpp"

namespace frugal {
namespace {

constexpr const char* kVocabulary[] = {
    "gold",   "oil",    "stocks", "bonds",  "fed",    "rates",   "gdp",     "jobs",    "prices", "market",
    "dollar", "yen",    "euro",   "silver", "copper", "futures", "index",   "shares",  "rally",  "slump",
    "report", "data",   "weak",   "strong", "lows",   "highs",   "after",   "before",  "amid",   "ahead",
    "trade",  "demand", "supply", "china",  "us",     "europe",  "inflation", "growth", "profit", "losses",
};
constexpr std::size_t kVocabularySize = sizeof(kVocabulary) / sizeof(kVocabulary[0]);
constexpr double kSlack = 1e-12;

std::uint32_t draw_between(std::mt19937_64& rng, std::uint32_t lo, std::uint32_t hi) {
    if (hi <= lo) return lo;
    return lo + static_cast<std::uint32_t>(uniform_below(rng, std::uint64_t{hi} - lo + 1));
}

}  // namespace

void validate(const SyntheticSpec& spec) {
    if (spec.labels.size() < 2) throw data_error("synthetic spec needs at least two labels");
    std::map<std::string, double> seen;
    for (const auto& llm : spec.llms) {
        if (llm.llm_id.empty()) throw data_error("synthetic llm with empty id");
        if (seen.count(llm.llm_id)) throw data_error("duplicate synthetic llm '" + llm.llm_id + "'");
        if (!(llm.accuracy >= 0.0 && llm.accuracy <= 1.0)) {
            throw data_error("accuracy of '" + llm.llm_id + "' outside [0,1]");
        }
        if (llm.input_tokens_min > llm.input_tokens_max || llm.output_tokens_min > llm.output_tokens_max) {
            throw data_error("token range of '" + llm.llm_id + "' is inverted");
        }
        if (llm.anchor) {
            auto it = seen.find(*llm.anchor);
            if (it == seen.end()) {
                throw data_error("anchor '" + *llm.anchor + "' of '" + llm.llm_id + "' must be an earlier llm");
            }
            const double pa = it->second;
            const double pb = llm.accuracy;
            const double lo = std::max(0.0, pa + pb - 1.0);
            const double hi = std::min(pa, pb);
            if (llm.overlap < lo - kSlack || llm.overlap > hi + kSlack) {
                throw data_error("infeasible overlap " + std::to_string(llm.overlap) + " between '" + *llm.anchor +
                                 "' and '" + llm.llm_id + "'");
            }
        }
        seen.emplace(llm.llm_id, llm.accuracy);
    }
}

std::vector<TraceRecord> synthesize_trace(const SyntheticSpec& spec, std::uint64_t seed) {
    validate(spec);
    std::mt19937_64 rng(seed);
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < spec.llms.size(); ++i) position[spec.llms[i].llm_id] = i;

    const std::size_t num_labels = spec.labels.size();
    std::vector<TraceRecord> records;
    records.reserve(spec.records);
    std::vector<bool> correct(spec.llms.size());
    for (std::size_t r = 0; r < spec.records; ++r) {
        TraceRecord rec;
        rec.query_id = "q" + std::to_string(r);
        rec.query_text = "headline " + std::to_string(r) + ":";
        for (int w = 0; w < 6; ++w) {
            rec.query_text += ' ';
            rec.query_text += kVocabulary[uniform_below(rng, kVocabularySize)];
        }
        const std::size_t truth = uniform_below(rng, num_labels);
        rec.true_answer = spec.labels[truth];

        for (std::size_t i = 0; i < spec.llms.size(); ++i) {
            const auto& llm = spec.llms[i];
            double p = llm.accuracy;
            if (llm.anchor) {
                const auto& anchor = spec.llms[position.at(*llm.anchor)];
                const double pa = anchor.accuracy;
                if (correct[position.at(*llm.anchor)]) {
                    p = pa > 0.0 ? llm.overlap / pa : 0.0;
                } else {
                    p = pa < 1.0 ? (llm.accuracy - llm.overlap) / (1.0 - pa) : 0.0;
                }
                p = std::clamp(p, 0.0, 1.0);
            }
            const double u = uniform_unit(rng);
            correct[i] = u < p;

            LlmResponse resp;
            if (correct[i]) {
                resp.answer_text = rec.true_answer;
            } else {
                const std::size_t offset = 1 + uniform_below(rng, num_labels - 1);
                const std::string& wrong = spec.labels[(truth + offset) % num_labels];
                resp.answer_text = llm.separable ? std::string(kHedgeWord) + " " + wrong : wrong;
            }
            resp.usage.input_tokens = draw_between(rng, llm.input_tokens_min, llm.input_tokens_max);
            resp.usage.output_tokens = draw_between(rng, llm.output_tokens_min, llm.output_tokens_max);
            resp.reward = correct[i] ? 1.0 : 0.0;
            rec.responses.emplace(llm.llm_id, std::move(resp));
        }
        records.push_back(std::move(rec));
    }
    return records;
}

SyntheticSpec parse_synthetic_spec(std::string_view json_text) {
    using nlohmann::json;
    SyntheticSpec spec;
    try {
        const json j = json::parse(json_text);
        spec.records = j.value("records", spec.records);
        if (j.contains("labels")) spec.labels = j.at("labels").get<std::vector<std::string>>();
        for (const auto& l : j.at("llms")) {
            SyntheticLlm llm;
            llm.llm_id = l.at("llm_id").get<std::string>();
            llm.accuracy = l.at("accuracy").get<double>();
            if (l.contains("anchor")) llm.anchor = l.at("anchor").get<std::string>();
            llm.overlap = l.value("overlap", 0.0);
            llm.separable = l.value("separable", true);
            if (l.contains("input_tokens")) {
                auto range = l.at("input_tokens").get<std::vector<std::uint32_t>>();
                if (range.size() != 2) throw data_error("input_tokens must be [lo, hi]");
                llm.input_tokens_min = range[0];
                llm.input_tokens_max = range[1];
            }
            if (l.contains("output_tokens")) {
                auto range = l.at("output_tokens").get<std::vector<std::uint32_t>>();
                if (range.size() != 2) throw data_error("output_tokens must be [lo, hi]");
                llm.output_tokens_min = range[0];
                llm.output_tokens_max = range[1];
            }
            spec.llms.push_back(std::move(llm));
        }
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("synthetic spec: ") + e.what());
    }
    validate(spec);
    return spec;
}

}  // namespace frugal
