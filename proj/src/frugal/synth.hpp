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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "frugal/trace.hpp"

namespace frugal {

// Synthetic trace generator for desk-scale experiments.
//
// Each LLM has a marginal accuracy. An LLM may name an earlier LLM as its
// anchor together with the joint probability that both are correct; its
// correctness is then drawn conditionally on the anchor's. LLMs without an
// anchor are independent. This yields exact marginals and exact pairwise
// joints along the anchor tree.
struct SyntheticLlm {
    std::string llm_id;
    double accuracy = 0.5;
    std::optional<std::string> anchor;
    double overlap = 0.0;  // P(this and anchor both correct)
    // When true, wrong answers carry a hedge word so a scorer can separate them.
    bool separable = true;
    std::uint32_t input_tokens_min = 100;
    std::uint32_t input_tokens_max = 100;
    std::uint32_t output_tokens_min = 1;
    std::uint32_t output_tokens_max = 1;
};

struct SyntheticSpec {
    std::vector<SyntheticLlm> llms;
    std::size_t records = 1000;
    std::vector<std::string> labels{"up", "down", "neutral", "none"};
};

inline constexpr std::string_view kHedgeWord = "perhaps";

/// Throws Error(kData) on probabilities outside [0,1], unknown or later
/// anchors, and infeasible overlaps (outside [pa+pb-1, min(pa,pb)]).
void validate(const SyntheticSpec& spec);

std::vector<TraceRecord> synthesize_trace(const SyntheticSpec& spec, std::uint64_t seed);

/// JSON form used by the CLI:
/// {"records": n, "labels": [...], "llms": [{"llm_id":..., "accuracy":...,
///  "anchor":..., "overlap":..., "separable":..., "input_tokens":[lo,hi],
///  "output_tokens":[lo,hi]}]}
SyntheticSpec parse_synthetic_spec(std::string_view json_text);

}  // namespace frugal
