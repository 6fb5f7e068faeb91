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

#include "frugal/trace.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "frugal/error.hpp"
#include "frugal/text.hpp"

namespace frugal {

using nlohmann::json;

const LlmResponse* TraceRecord::find(std::string_view llm_id) const {
    auto it = responses.find(std::string(llm_id));
    return it == responses.end() ? nullptr : &it->second;
}

RewardKind parse_reward_kind(std::string_view text) {
    if (text == "exact_match" || text == "exact") return RewardKind::kExactMatch;
    if (text == "token_f1" || text == "f1") return RewardKind::kTokenF1;
    throw invalid_argument("unknown reward function '" + std::string(text) + "'");
}

std::string_view to_string(RewardKind kind) {
    return kind == RewardKind::kExactMatch ? "exact_match" : "token_f1";
}

double reward_exact_match(std::string_view truth, std::string_view answer) {
    return normalize_text(truth) == normalize_text(answer) ? 1.0 : 0.0;
}

double reward_token_f1(std::string_view truth, std::string_view answer) {
    const auto t = whitespace_tokens(normalize_text(truth));
    const auto a = whitespace_tokens(normalize_text(answer));
    if (t.empty() && a.empty()) return 1.0;
    if (t.empty() || a.empty()) return 0.0;
    std::unordered_map<std::string, int> counts;
    for (const auto& tok : t) ++counts[tok];
    std::size_t overlap = 0;
    for (const auto& tok : a) {
        auto it = counts.find(tok);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    // F1 = 2PR/(P+R) = 2*overlap / (|a| + |t|)
    return 2.0 * static_cast<double>(overlap) / static_cast<double>(t.size() + a.size());
}

double compute_reward(RewardKind kind, std::string_view truth, std::string_view answer) {
    return kind == RewardKind::kExactMatch ? reward_exact_match(truth, answer) : reward_token_f1(truth, answer);
}

namespace {

std::uint32_t token_count(const json& j, const char* key, std::size_t line) {
    if (!j.contains(key)) return 0;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0 || v.get<std::int64_t>() > UINT32_MAX) {
        throw data_error("trace line " + std::to_string(line) + ": " + key + " must be a non-negative 32-bit integer");
    }
    return static_cast<std::uint32_t>(v.get<std::int64_t>());
}

std::string required_string(const json& j, const char* key, std::size_t line) {
    if (!j.contains(key) || !j.at(key).is_string()) {
        throw data_error("trace line " + std::to_string(line) + ": missing string field '" + key + "'");
    }
    return j.at(key).get<std::string>();
}

}  // namespace

TraceLoad parse_trace(std::string_view text, const Marketplace& marketplace, RewardKind reward) {
    TraceLoad out;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    for (std::string_view line : split_lines(text)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw data_error("trace line " + std::to_string(line_no) + ": " + e.what());
        }
        TraceRecord rec;
        rec.query_id = required_string(j, "query_id", line_no);
        rec.query_text = required_string(j, "query_text", line_no);
        rec.true_answer = required_string(j, "true_answer", line_no);
        if (!seen.insert(rec.query_id).second) {
            throw data_error("trace line " + std::to_string(line_no) + ": duplicate query_id '" + rec.query_id + "'");
        }
        if (!j.contains("responses") || !j.at("responses").is_array() || j.at("responses").empty()) {
            throw data_error("trace line " + std::to_string(line_no) + ": record has no responses");
        }
        for (const auto& r : j.at("responses")) {
            const std::string llm_id = required_string(r, "llm_id", line_no);
            if (!marketplace.contains(llm_id)) {
                throw data_error("trace line " + std::to_string(line_no) + ": unknown llm_id '" + llm_id + "'");
            }
            LlmResponse resp;
            resp.answer_text = required_string(r, "answer_text", line_no);
            resp.usage.input_tokens = token_count(r, "input_tokens", line_no);
            resp.usage.output_tokens = token_count(r, "output_tokens", line_no);
            resp.reward = compute_reward(reward, rec.true_answer, resp.answer_text);
            if (r.contains("reward") && !r.at("reward").is_null()) {
                const double stored = r.at("reward").get<double>();
                if (!(stored >= 0.0 && stored <= 1.0)) {
                    throw data_error("trace line " + std::to_string(line_no) + ": reward " + format_double(stored) +
                                     " outside [0,1] for '" + llm_id + "'");
                }
                if (stored != resp.reward) {
                    out.warnings.push_back("query '" + rec.query_id + "' llm '" + llm_id + "': stored reward " +
                                           format_double(stored) + " differs from recomputed " +
                                           format_double(resp.reward));
                }
            }
            if (!rec.responses.emplace(llm_id, std::move(resp)).second) {
                throw data_error("trace line " + std::to_string(line_no) + ": duplicate response for '" + llm_id + "'");
            }
        }
        out.records.push_back(std::move(rec));
    }
    if (out.records.empty()) out.warnings.emplace_back("trace is empty");
    return out;
}

TraceLoad load_trace(const std::string& path, const Marketplace& marketplace, RewardKind reward) {
    return parse_trace(read_file(path), marketplace, reward);
}

std::string serialize_trace(const std::vector<TraceRecord>& records) {
    std::string out;
    for (const auto& rec : records) {
        json j;
        j["query_id"] = rec.query_id;
        j["query_text"] = rec.query_text;
        j["true_answer"] = rec.true_answer;
        json responses = json::array();
        for (const auto& [llm_id, resp] : rec.responses) {
            responses.push_back({{"llm_id", llm_id},
                                 {"answer_text", resp.answer_text},
                                 {"input_tokens", resp.usage.input_tokens},
                                 {"output_tokens", resp.usage.output_tokens},
                                 {"reward", resp.reward}});
        }
        j["responses"] = std::move(responses);
        out += j.dump();
        out += '\n';
    }
    return out;
}

void save_trace(const std::string& path, const std::vector<TraceRecord>& records) {
    write_file(path, serialize_trace(records));
}

std::pair<Dataset, Dataset> split_trace(const std::vector<TraceRecord>& records, double test_fraction,
                                        std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw invalid_argument("test_fraction must be in (0,1)");
    const std::size_t n = records.size();
    if (n < 2) throw data_error("cannot split fewer than 2 records");
    std::size_t n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
    n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(order[i], order[uniform_below(rng, i + 1)]);
    }
    // Each side keeps the original record order.
    std::vector<bool> is_test(n, false);
    for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;

    Dataset train{{}, Split::kTrain, seed};
    Dataset test{{}, Split::kTest, seed};
    for (std::size_t i = 0; i < n; ++i) (is_test[i] ? test : train).records.push_back(records[i]);
    return {std::move(train), std::move(test)};
}

}  // namespace frugal
