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
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "frugal/features.hpp"
#include "frugal/trace.hpp"

namespace frugal {

/// Reliability score g(query, answer) in [0,1] used as the cascade's stop
/// criterion. Implementations must be reentrant.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual double score(std::string_view query, std::string_view answer, std::string_view llm_id) const = 0;
    virtual std::string id() const = 0;
};

struct LogisticHead {
    std::vector<double> weights;
    double bias = 0.0;

    friend bool operator==(const LogisticHead&, const LogisticHead&) = default;
};

struct TrainingMeta {
    int epochs = 30;
    double learning_rate = 0.5;
    double l2 = 1e-4;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    bool per_llm = false;

    friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

struct ScorerModel {
    std::uint32_t dims = kDefaultFeatureDims;
    LogisticHead shared;
    std::map<std::string, LogisticHead> per_llm;
    TrainingMeta meta;
    /// Mean regularized loss of the shared head: [initial, after epoch 1, ...].
    std::vector<double> loss_history;
    std::vector<std::string> warnings;

    static ScorerModel zeros(std::uint32_t dims = kDefaultFeatureDims);
    const LogisticHead& head_for(std::string_view llm_id) const;
    friend bool operator==(const ScorerModel&, const ScorerModel&) = default;
};

struct TrainConfig {
    TrainingMeta meta;
    std::uint32_t dims = kDefaultFeatureDims;
};

/// One labeled (query, answer) pair; label = 1{reward == 1}.
struct ScorerSample {
    std::string llm_id;
    FeatureVector features;
    double label = 0.0;
};

std::vector<ScorerSample> build_samples(const Dataset& train, std::uint32_t dims = kDefaultFeatureDims);

/// Mini-batch gradient descent on logistic loss + (l2/2)|w|^2. Deterministic
/// under meta.seed. Throws Error(kInvalidArgument) on an empty training set.
ScorerModel train_scorer(const Dataset& train, const TrainConfig& config);

double sigmoid(double z);
double score(const ScorerModel& model, std::string_view query, std::string_view answer, std::string_view llm_id);

/// Mean regularized logistic loss of `head` over `samples`.
double logistic_loss(const LogisticHead& head, double l2, const std::vector<ScorerSample>& samples);

struct GradientCheck {
    double max_relative_error = 0.0;
    std::size_t coordinates = 0;
};

/// Compares the analytic gradient of logistic_loss (shared head) against
/// central differences with step 1e-5. Coordinate `dims` denotes the bias.
/// Relative error falls back to absolute error when both values are < 1e-8.
GradientCheck gradient_check(const ScorerModel& model, const std::vector<ScorerSample>& samples,
                             const std::vector<std::uint32_t>& coordinates);
/// Samples `num_coordinates` coordinates from the features active in
/// `samples` (plus the bias).
GradientCheck gradient_check(const ScorerModel& model, const std::vector<ScorerSample>& samples,
                             std::size_t num_coordinates, std::uint64_t seed);

/// Versioned text container; weights stored as hex floats so the round trip
/// is bit-exact.
std::string serialize_scorer(const ScorerModel& model);
ScorerModel parse_scorer(std::string_view text);
void save_scorer(const std::string& path, const ScorerModel& model);
ScorerModel load_scorer(const std::string& path);

class LogisticScorer final : public Scorer {
public:
    LogisticScorer(std::shared_ptr<const ScorerModel> model, std::string id);
    double score(std::string_view query, std::string_view answer, std::string_view llm_id) const override;
    std::string id() const override { return id_; }
    const ScorerModel& model() const { return *model_; }

private:
    std::shared_ptr<const ScorerModel> model_;
    std::string id_;
};

/// Scores looked up from a table keyed by (query, answer, llm_id). Lets an
/// external model (or a test) supply g without retraining. Unknown keys throw.
class TableScorer final : public Scorer {
public:
    explicit TableScorer(std::string id = "table") : id_(std::move(id)) {}
    void set(std::string_view query, std::string_view answer, std::string_view llm_id, double value);
    double score(std::string_view query, std::string_view answer, std::string_view llm_id) const override;
    std::string id() const override { return id_; }

private:
    std::map<std::string, double, std::less<>> table_;
    std::string id_;
};

/// Area under the ROC curve; ties count one half.
double auc(const std::vector<double>& scores, const std::vector<double>& labels);
/// Pool-adjacent-violators fit of a non-decreasing sequence (unit weights).
std::vector<double> isotonic_fit(const std::vector<double>& values);
/// Empirical accuracy per score decile (ascending score order).
std::vector<double> decile_accuracy(const std::vector<double>& scores, const std::vector<double>& labels);

}  // namespace frugal
