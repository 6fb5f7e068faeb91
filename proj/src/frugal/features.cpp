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

#include "frugal/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "frugal/text.hpp"

namespace frugal {

double FeatureVector::dot(const FeatureVector& other) const {
    double sum = 0.0;
    auto a = entries.begin();
    auto b = other.entries.begin();
    while (a != entries.end() && b != other.entries.end()) {
        if (a->first < b->first) {
            ++a;
        } else if (b->first < a->first) {
            ++b;
        } else {
            sum += a->second * b->second;
            ++a;
            ++b;
        }
    }
    return sum;
}

double FeatureVector::dot(const std::vector<double>& dense) const {
    double sum = 0.0;
    for (const auto& [i, v] : entries) sum += dense[i] * v;
    return sum;
}

double FeatureVector::norm() const {
    double sq = 0.0;
    for (const auto& e : entries) sq += e.second * e.second;
    return std::sqrt(sq);
}

std::uint32_t feature_slot(std::string_view name, std::uint32_t dims) {
    return static_cast<std::uint32_t>(fnv1a64(name) % dims);
}

namespace {

class Builder {
public:
    explicit Builder(std::uint32_t dims) : dims_(dims) {}

    void add(std::string_view name, double value) {
        if (value != 0.0) raw_.emplace_back(feature_slot(name, dims_), value);
    }

    void add_text(std::string_view ns, std::string_view text) {
        const std::string norm = normalize_text(text);
        std::string key;
        for (std::size_t n = 2; n <= 4; ++n) {
            if (norm.size() < n) break;
            for (std::size_t i = 0; i + n <= norm.size(); ++i) {
                key.assign(ns);
                key += ":c";
                key += static_cast<char>('0' + n);
                key += ':';
                key.append(norm, i, n);
                add(key, 1.0);
            }
        }
        for (const auto& word : whitespace_tokens(norm)) {
            key.assign(ns);
            key += ":w:";
            key += word;
            add(key, 1.0);
        }
    }

    FeatureVector finish() {
        std::sort(raw_.begin(), raw_.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        FeatureVector fv;
        fv.dims = dims_;
        for (const auto& [i, v] : raw_) {
            if (!fv.entries.empty() && fv.entries.back().first == i) {
                fv.entries.back().second += v;
            } else {
                fv.entries.emplace_back(i, v);
            }
        }
        std::erase_if(fv.entries, [](const auto& e) { return e.second == 0.0; });
        const double n = fv.norm();
        if (n > 0.0) {
            for (auto& e : fv.entries) e.second /= n;
        }
        return fv;
    }

private:
    std::uint32_t dims_;
    std::vector<std::pair<std::uint32_t, double>> raw_;
};

}  // namespace

FeatureVector featurize(std::string_view query, std::string_view answer, std::uint32_t dims) {
    Builder b(dims);
    b.add_text("q", query);
    b.add_text("a", answer);
    const std::string norm_answer = normalize_text(answer);
    const std::size_t tokens = whitespace_tokens(norm_answer).size();
    b.add("meta:answer_len", std::log1p(static_cast<double>(norm_answer.size())));
    b.add("meta:answer_tokens", std::log1p(static_cast<double>(tokens)));
    b.add("meta:single_token", tokens == 1 ? 1.0 : 0.0);
    b.add("meta:empty_answer", tokens == 0 ? 1.0 : 0.0);
    return b.finish();
}

FeatureVector featurize_text(std::string_view text, std::uint32_t dims) {
    Builder b(dims);
    b.add_text("q", text);
    return b.finish();
}

double cosine_similarity(const FeatureVector& a, const FeatureVector& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

}  // namespace frugal
