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
#include <string_view>
#include <utility>
#include <vector>

namespace frugal {

inline constexpr std::uint32_t kDefaultFeatureDims = 1u << 16;

/// Sparse hashed feature vector; entries sorted by index, indices unique.
struct FeatureVector {
    std::uint32_t dims = kDefaultFeatureDims;
    std::vector<std::pair<std::uint32_t, double>> entries;

    double dot(const FeatureVector& other) const;
    double dot(const std::vector<double>& dense) const;
    double norm() const;
    bool empty() const noexcept { return entries.empty(); }
    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Character 2/3/4-grams and word unigrams of the query and the answer in
/// separate namespaces, plus answer meta-features; L2-normalized.
FeatureVector featurize(std::string_view query, std::string_view answer, std::uint32_t dims = kDefaultFeatureDims);

/// Query-side features only (no meta-features); used for cache similarity.
FeatureVector featurize_text(std::string_view text, std::uint32_t dims = kDefaultFeatureDims);

/// Hash slot of a named feature; exposed so tests can inspect vectors.
std::uint32_t feature_slot(std::string_view name, std::uint32_t dims = kDefaultFeatureDims);

double cosine_similarity(const FeatureVector& a, const FeatureVector& b);

}  // namespace frugal
