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

#include "frugal/approximation.hpp"

#include <chrono>
#include <filesystem>
#include <mutex>

#include "frugal/error.hpp"
#include "frugal/text.hpp"

namespace frugal {

std::string cache_key(std::string_view query) { return to_hex64(fnv1a64(normalize_text(query))); }

namespace {

std::string escape_field(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out;
}

std::string unescape_field(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\' || i + 1 == s.size()) {
            out += s[i];
            continue;
        }
        const char n = s[++i];
        out += n == 't' ? '\t' : n == 'n' ? '\n' : n == 'r' ? '\r' : n;
    }
    return out;
}

std::int64_t unix_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace

std::string serialize_cache_entry(const CacheEntry& e) {
    return escape_field(e.key) + '\t' + escape_field(e.normalized_query) + '\t' + escape_field(e.answer_text) + '\t' +
           escape_field(e.llm_id) + '\t' + format_money(e.stored_cost) + '\t' + std::to_string(e.created_at) + '\t' +
           escape_field(e.query_text);
}

CacheEntry parse_cache_entry(std::string_view line) {
    const auto fields = split(line, '\t');
    if (fields.size() != 7) throw data_error("cache log: expected 7 fields, found " + std::to_string(fields.size()));
    CacheEntry e;
    e.key = unescape_field(fields[0]);
    e.normalized_query = unescape_field(fields[1]);
    e.answer_text = unescape_field(fields[2]);
    e.llm_id = unescape_field(fields[3]);
    e.stored_cost = parse_money(fields[4]);
    e.created_at = std::stoll(std::string(fields[5]));
    e.query_text = unescape_field(fields[6]);
    if (e.key != to_hex64(fnv1a64(e.normalized_query))) throw data_error("cache log: key does not match query digest");
    return e;
}

CompletionCache::CompletionCache(std::string path) : path_(std::move(path)) {
    if (std::filesystem::exists(path_)) {
        std::size_t line_no = 0;
        const std::string contents = read_file(path_);
        for (auto line : split_lines(contents)) {
            ++line_no;
            if (trim(line).empty()) continue;
            try {
                auto entry = parse_cache_entry(line);
                if (by_key_.count(entry.key) == 0) index_entry(std::move(entry));
            } catch (const Error& e) {
                throw data_error("cache log '" + path_ + "' line " + std::to_string(line_no) + ": " + e.what());
            }
        }
    }
    log_.open(path_, std::ios::app | std::ios::binary);
    if (!log_) throw io_error("cannot open cache log '" + path_ + "'");
    stats_.entries = entries_.size();
}

void CompletionCache::index_entry(CacheEntry entry) {
    by_key_.emplace(entry.key, entries_.size());
    features_.push_back(featurize_text(entry.normalized_query));
    entries_.push_back(std::move(entry));
}

void CompletionCache::append_log(const CacheEntry& entry) {
    if (!log_.is_open()) return;
    log_ << serialize_cache_entry(entry) << '\n';
    log_.flush();
}

std::optional<CacheEntry> CompletionCache::lookup(std::string_view query, double similarity_threshold) {
    if (similarity_threshold < 0.0) throw invalid_argument("similarity threshold must be >= 0");
    const std::string norm = normalize_text(query);
    const std::string key = to_hex64(fnv1a64(norm));

    std::optional<std::size_t> found;
    bool exact = false;
    {
        std::shared_lock lock(mutex_);
        auto it = by_key_.find(key);
        if (it != by_key_.end() && entries_[it->second].normalized_query == norm) {
            found = it->second;
            exact = true;
        } else if (similarity_threshold <= 1.0 && !entries_.empty()) {
            const FeatureVector probe = featurize_text(norm);
            double best = -1.0;
            for (std::size_t i = 0; i < entries_.size(); ++i) {
                const double sim = cosine_similarity(probe, features_[i]);
                if (sim > best) {
                    best = sim;
                    found = i;
                }
            }
            if (best < similarity_threshold) found.reset();
        }
    }

    std::unique_lock lock(mutex_);
    ++stats_.lookups;
    if (!found) {
        ++stats_.misses;
        return std::nullopt;
    }
    auto& entry = entries_[*found];
    ++entry.hit_count;
    ++(exact ? stats_.exact_hits : stats_.similar_hits);
    stats_.saved_cost += entry.stored_cost;
    return entry;
}

bool CompletionCache::insert(std::string_view query, std::string_view answer, std::string_view llm_id, Money cost) {
    CacheEntry entry;
    entry.normalized_query = normalize_text(query);
    entry.key = to_hex64(fnv1a64(entry.normalized_query));
    entry.query_text = std::string(query);
    entry.answer_text = std::string(answer);
    entry.llm_id = std::string(llm_id);
    entry.stored_cost = cost;
    entry.created_at = unix_now();

    std::unique_lock lock(mutex_);
    auto it = by_key_.find(entry.key);
    if (it != by_key_.end()) {
        if (entries_[it->second].normalized_query != entry.normalized_query) {
            throw Error(ErrorKind::kInternal, "cache digest collision for '" + entry.normalized_query + "'");
        }
        return false;
    }
    append_log(entry);
    index_entry(std::move(entry));
    stats_.entries = entries_.size();
    return true;
}

std::size_t CompletionCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

CacheStats CompletionCache::stats() const {
    std::shared_lock lock(mutex_);
    return stats_;
}

std::vector<CacheEntry> CompletionCache::entries() const {
    std::shared_lock lock(mutex_);
    return entries_;
}

RouteOutcome cached_route(CompletionCache& cache, const CacheOptions& cache_options, const CascadeConfig& config,
                          const Scorer& scorer, const ProviderSet& providers, const Marketplace& marketplace,
                          std::string_view query, const RouteOptions& options) {
    if (!cache_options.enabled) return route(config, scorer, providers, marketplace, query, options);
    if (auto hit = cache.lookup(query, cache_options.similarity_threshold)) {
        RouteOutcome out;
        out.answer = hit->answer_text;
        out.llm_used = hit->llm_id;
        out.cache_hit = true;
        return out;
    }
    auto outcome = route(config, scorer, providers, marketplace, query, options);
    cache.insert(query, outcome.answer, outcome.llm_used, outcome.total_cost);
    return outcome;
}

const std::string& PromptTemplate::instruction_for(std::string_view llm_id) const {
    auto it = per_llm_instruction.find(std::string(llm_id));
    return it == per_llm_instruction.end() ? instruction : it->second;
}

namespace {

std::string render_header(const PromptTemplate& tmpl, std::string_view llm_id) {
    std::string out;
    const auto& instruction = tmpl.instruction_for(llm_id);
    if (!instruction.empty()) {
        out += instruction;
        out += '\n';
    }
    for (const auto& ex : tmpl.examples) {
        out += "Q: " + ex.query + "\nA: " + ex.answer + '\n';
    }
    return out;
}

}  // namespace

std::string render_prompt(const PromptTemplate& tmpl, std::string_view query, std::string_view llm_id) {
    if (tmpl.examples.size() > tmpl.max_examples) throw invalid_argument("prompt template exceeds its example limit");
    std::string out = render_header(tmpl, llm_id);
    out += "Q: ";
    out += query;
    out += "\nA:";
    return out;
}

std::vector<std::string> BatchParser::operator()(std::string_view response) const {
    std::vector<std::string> answers;
    std::string current;
    std::size_t delimiters = 0;
    for (auto line : split_lines(response)) {
        if (trim(line) == kAnswerDelimiter) {
            ++delimiters;
            std::string_view a = trim(current);
            // Drop an "A<i>:" label if the model echoed it.
            const std::string label = "A" + std::to_string(answers.size() + 1) + ":";
            if (a.substr(0, label.size()) == label) a = trim(a.substr(label.size()));
            answers.emplace_back(a);
            current.clear();
            continue;
        }
        if (!current.empty()) current += '\n';
        current += line;
    }
    if (delimiters == 0 && expected_ == 1) return {std::string(trim(response))};
    if (delimiters != expected_ || !trim(current).empty()) {
        throw data_error("batched response: expected " + std::to_string(expected_) + " answers, found " +
                         std::to_string(delimiters) + " delimiters" +
                         (trim(current).empty() ? std::string() : " and trailing text"));
    }
    return answers;
}

BatchPrompt concat_queries(const PromptTemplate& tmpl, const std::vector<std::string>& queries, std::size_t k,
                           std::size_t max_batch) {
    if (k < 1 || k > max_batch) {
        throw invalid_argument("batch size must be in [1, " + std::to_string(max_batch) + "]");
    }
    if (queries.size() != k) {
        throw invalid_argument("expected " + std::to_string(k) + " queries, got " + std::to_string(queries.size()));
    }
    if (k == 1) return {render_prompt(tmpl, queries.front()), BatchParser(1)};
    if (tmpl.examples.size() > tmpl.max_examples) throw invalid_argument("prompt template exceeds its example limit");
    std::string prompt = render_header(tmpl, {});
    prompt += "Answer each of the " + std::to_string(k) +
              " queries below in order. Write each answer on its own, followed by a line containing only " +
              std::string(kAnswerDelimiter) + ".\n";
    for (std::size_t i = 0; i < k; ++i) prompt += "Q" + std::to_string(i + 1) + ": " + queries[i] + '\n';
    prompt += "A:";
    return {std::move(prompt), BatchParser(k)};
}

double concat_savings_ratio(std::uint64_t prompt_tokens, std::uint64_t query_tokens, std::uint64_t k) {
    if (k == 0 || prompt_tokens + query_tokens == 0) throw invalid_argument("savings ratio needs k >= 1 and tokens > 0");
    const double batched = static_cast<double>(prompt_tokens + k * query_tokens);
    const double separate = static_cast<double>(k * (prompt_tokens + query_tokens));
    return 1.0 - batched / separate;
}

namespace {

struct SliceResult {
    double mean_reward = 0.0;
    Money cost;
};

SliceResult run_slice(const PromptTemplate& tmpl, const Dataset& validation, Provider& provider,
                      const Marketplace& marketplace, RewardKind reward, int retries) {
    SliceResult out;
    double total = 0.0;
    for (const auto& rec : validation.records) {
        CompletionRequest req;
        req.llm_id = provider.llm_id();
        req.prompt = render_prompt(tmpl, rec.query_text, provider.llm_id());
        std::optional<CompletionResponse> resp;
        for (int attempt = 0; attempt <= retries && !resp; ++attempt) {
            try {
                resp = provider.complete(req);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::kProvider || attempt == retries) {
                    throw provider_error(std::string("prompt selection: ") + e.what());
                }
            }
        }
        total += compute_reward(reward, rec.true_answer, resp->text);
        if (marketplace.contains(provider.llm_id())) out.cost += marketplace.cost(provider.llm_id(), resp->usage);
    }
    out.mean_reward = total / static_cast<double>(validation.size());
    return out;
}

PromptTemplate with_examples(const PromptTemplate& base, const std::vector<std::size_t>& chosen) {
    PromptTemplate t = base;
    t.examples.clear();
    for (auto i : chosen) t.examples.push_back(base.examples[i]);
    return t;
}

}  // namespace

PromptSelection select_prompt_examples(const PromptTemplate& tmpl, const Dataset& validation, Provider& provider,
                                       const Marketplace& marketplace, std::size_t n, RewardKind reward, int retries) {
    if (n > tmpl.examples.size()) throw invalid_argument("cannot select more examples than the template holds");
    if (validation.empty()) throw invalid_argument("prompt selection needs a non-empty validation slice");

    PromptSelection out;
    const auto empty = run_slice(with_examples(tmpl, {}), validation, provider, marketplace, reward, retries);
    out.empty_reward = empty.mean_reward;
    out.validation_reward = empty.mean_reward;
    out.validation_cost = empty.cost;

    std::vector<std::size_t> chosen;
    for (std::size_t round = 0; round < n; ++round) {
        std::optional<std::size_t> best_idx;
        double best_reward = -1.0;
        for (std::size_t j = 0; j < tmpl.examples.size(); ++j) {
            if (std::find(chosen.begin(), chosen.end(), j) != chosen.end()) continue;
            auto trial = chosen;
            trial.insert(std::upper_bound(trial.begin(), trial.end(), j), j);
            const auto res = run_slice(with_examples(tmpl, trial), validation, provider, marketplace, reward, retries);
            out.validation_cost += res.cost;
            if (res.mean_reward > best_reward) {
                best_reward = res.mean_reward;
                best_idx = j;
            }
        }
        chosen.insert(std::upper_bound(chosen.begin(), chosen.end(), *best_idx), *best_idx);
        out.validation_reward = best_reward;
    }
    out.chosen = chosen;
    out.tmpl = with_examples(tmpl, chosen);
    return out;
}

}  // namespace frugal
