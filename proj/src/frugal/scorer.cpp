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

#include "frugal/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "frugal/error.hpp"
#include "frugal/text.hpp"

namespace frugal {

ScorerModel ScorerModel::zeros(std::uint32_t dims) {
    ScorerModel m;
    m.dims = dims;
    m.shared.weights.assign(dims, 0.0);
    return m;
}

const LogisticHead& ScorerModel::head_for(std::string_view llm_id) const {
    auto it = per_llm.find(std::string(llm_id));
    return it == per_llm.end() ? shared : it->second;
}

std::vector<ScorerSample> build_samples(const Dataset& train, std::uint32_t dims) {
    std::vector<ScorerSample> samples;
    for (const auto& rec : train.records) {
        for (const auto& [llm_id, resp] : rec.responses) {
            samples.push_back({llm_id, featurize(rec.query_text, resp.answer_text, dims), resp.reward == 1.0 ? 1.0 : 0.0});
        }
    }
    return samples;
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sample_loss(double z, double label) { return label > 0.5 ? softplus(-z) : softplus(z); }

double squared_norm(const std::vector<double>& w) {
    double s = 0.0;
    for (double v : w) s += v * v;
    return s;
}

// Weights kept as scale * v so the L2 shrink is O(1) per batch.
struct ScaledHead {
    std::vector<double> v;
    double scale = 1.0;
    double bias = 0.0;

    double margin(const FeatureVector& x) const { return scale * x.dot(v) + bias; }

    LogisticHead materialize() const {
        LogisticHead h;
        h.weights.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) h.weights[i] = scale * v[i];
        h.bias = bias;
        return h;
    }
};

double scaled_loss(const ScaledHead& head, double l2, const std::vector<const ScorerSample*>& samples) {
    double total = 0.0;
    for (const auto* s : samples) total += sample_loss(head.margin(s->features), s->label);
    const double data = samples.empty() ? 0.0 : total / static_cast<double>(samples.size());
    return data + 0.5 * l2 * head.scale * head.scale * squared_norm(head.v);
}

struct HeadFit {
    LogisticHead head;
    std::vector<double> losses;
};

HeadFit fit_head(const std::vector<const ScorerSample*>& samples, std::uint32_t dims, const TrainingMeta& meta,
                 std::uint64_t seed) {
    ScaledHead head;
    head.v.assign(dims, 0.0);
    HeadFit fit;
    fit.losses.push_back(scaled_loss(head, meta.l2, samples));

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch = std::max<std::size_t>(1, meta.batch_size);
    const double decay = 1.0 - meta.learning_rate * meta.l2;
    std::vector<double> residual;
    for (int epoch = 0; epoch < meta.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng, i)]);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            const double inv_b = 1.0 / static_cast<double>(end - start);
            residual.clear();
            double bias_grad = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const auto* s = samples[order[k]];
                const double r = sigmoid(head.margin(s->features)) - s->label;
                residual.push_back(r);
                bias_grad += r;
            }
            head.scale *= decay;
            const double step = meta.learning_rate * inv_b / head.scale;
            for (std::size_t k = start; k < end; ++k) {
                const double r = residual[k - start];
                if (r == 0.0) continue;
                for (const auto& [idx, x] : samples[order[k]]->features.entries) head.v[idx] -= step * r * x;
            }
            head.bias -= meta.learning_rate * inv_b * bias_grad;
            if (head.scale < 1e-9) {
                for (double& w : head.v) w *= head.scale;
                head.scale = 1.0;
            }
        }
        fit.losses.push_back(scaled_loss(head, meta.l2, samples));
    }
    fit.head = head.materialize();
    return fit;
}

}  // namespace

double logistic_loss(const LogisticHead& head, double l2, const std::vector<ScorerSample>& samples) {
    double total = 0.0;
    for (const auto& s : samples) total += sample_loss(s.features.dot(head.weights) + head.bias, s.label);
    const double data = samples.empty() ? 0.0 : total / static_cast<double>(samples.size());
    return data + 0.5 * l2 * squared_norm(head.weights);
}

ScorerModel train_scorer(const Dataset& train, const TrainConfig& config) {
    if (train.empty()) throw invalid_argument("cannot train a scorer on an empty training set");
    for (const auto& rec : train.records) {
        if (rec.responses.empty()) throw invalid_argument("record '" + rec.query_id + "' has no responses");
    }
    const auto& meta = config.meta;
    if (meta.epochs < 0 || meta.learning_rate <= 0.0 || meta.l2 < 0.0 || meta.learning_rate * meta.l2 >= 1.0) {
        throw invalid_argument("invalid scorer training hyper-parameters");
    }

    const auto samples = build_samples(train, config.dims);
    std::vector<const ScorerSample*> all;
    all.reserve(samples.size());
    for (const auto& s : samples) all.push_back(&s);

    ScorerModel model;
    model.dims = config.dims;
    model.meta = meta;

    const bool all_positive = std::all_of(samples.begin(), samples.end(), [](const auto& s) { return s.label == 1.0; });
    const bool all_negative = std::all_of(samples.begin(), samples.end(), [](const auto& s) { return s.label == 0.0; });
    if (all_positive || all_negative) {
        model.warnings.push_back(std::string("degenerate labels: every training answer is ") +
                                 (all_positive ? "correct" : "incorrect"));
    }

    auto shared = fit_head(all, config.dims, meta, meta.seed);
    model.shared = std::move(shared.head);
    model.loss_history = std::move(shared.losses);
    if (model.loss_history.back() > model.loss_history.front()) {
        model.warnings.push_back("final training loss exceeds initial loss; lower the learning rate");
    }

    if (meta.per_llm) {
        std::map<std::string, std::vector<const ScorerSample*>> by_llm;
        for (const auto& s : samples) by_llm[s.llm_id].push_back(&s);
        for (const auto& [llm_id, subset] : by_llm) {
            // Per-head seed derived from the llm id keeps heads independent of map order.
            model.per_llm.emplace(llm_id, fit_head(subset, config.dims, meta, meta.seed ^ fnv1a64(llm_id)).head);
        }
    }
    return model;
}

double score(const ScorerModel& model, std::string_view query, std::string_view answer, std::string_view llm_id) {
    const auto& head = model.head_for(llm_id);
    const double s = sigmoid(featurize(query, answer, model.dims).dot(head.weights) + head.bias);
    // Keep g strictly inside (0,1) even when the margin saturates.
    return std::clamp(s, std::numeric_limits<double>::min(), 1.0 - 0x1.0p-53);
}

namespace {

void analytic_gradient(const LogisticHead& head, double l2, const std::vector<ScorerSample>& samples,
                       std::vector<double>& grad_w, double& grad_b) {
    grad_w.assign(head.weights.size(), 0.0);
    grad_b = 0.0;
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    for (const auto& s : samples) {
        const double r = sigmoid(s.features.dot(head.weights) + head.bias) - s.label;
        for (const auto& [i, x] : s.features.entries) grad_w[i] += r * x * inv_n;
        grad_b += r * inv_n;
    }
    for (std::size_t i = 0; i < grad_w.size(); ++i) grad_w[i] += l2 * head.weights[i];
}

}  // namespace

GradientCheck gradient_check(const ScorerModel& model, const std::vector<ScorerSample>& samples,
                             const std::vector<std::uint32_t>& coordinates) {
    if (samples.empty()) throw invalid_argument("gradient check needs at least one sample");
    constexpr double kStep = 1e-5;
    constexpr double kTiny = 1e-8;
    std::vector<double> grad_w;
    double grad_b = 0.0;
    analytic_gradient(model.shared, model.meta.l2, samples, grad_w, grad_b);

    GradientCheck out;
    LogisticHead probe = model.shared;
    for (std::uint32_t c : coordinates) {
        if (c > model.dims) throw invalid_argument("gradient check coordinate out of range");
        double& param = c == model.dims ? probe.bias : probe.weights[c];
        const double saved = param;
        param = saved + kStep;
        const double up = logistic_loss(probe, model.meta.l2, samples);
        param = saved - kStep;
        const double down = logistic_loss(probe, model.meta.l2, samples);
        param = saved;
        const double numeric = (up - down) / (2.0 * kStep);
        const double analytic = c == model.dims ? grad_b : grad_w[c];
        const double scale = std::max(std::abs(analytic), std::abs(numeric));
        const double err = scale < kTiny ? std::abs(analytic - numeric) : std::abs(analytic - numeric) / scale;
        out.max_relative_error = std::max(out.max_relative_error, err);
        ++out.coordinates;
    }
    return out;
}

GradientCheck gradient_check(const ScorerModel& model, const std::vector<ScorerSample>& samples,
                             std::size_t num_coordinates, std::uint64_t seed) {
    std::set<std::uint32_t> active;
    for (const auto& s : samples) {
        for (const auto& e : s.features.entries) active.insert(e.first);
    }
    std::vector<std::uint32_t> pool(active.begin(), active.end());
    pool.push_back(model.dims);
    std::mt19937_64 rng(seed);
    for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[uniform_below(rng, i)]);
    pool.resize(std::min(pool.size(), num_coordinates));
    return gradient_check(model, samples, pool);
}

namespace {

constexpr std::string_view kScorerMagic = "frugal-scorer v1";

std::string hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double unhex(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw data_error("scorer file: malformed number '" + s + "'");
    return v;
}

void write_head(std::ostringstream& out, const std::string& name, const LogisticHead& head) {
    std::size_t nnz = 0;
    // Negative zero is written too so the round trip stays bit-exact.
    auto stored = [](double w) { return w != 0.0 || std::signbit(w); };
    for (double w : head.weights) nnz += stored(w) ? 1 : 0;
    out << "head " << name << ' ' << hex(head.bias) << ' ' << nnz << '\n';
    for (std::size_t i = 0; i < head.weights.size(); ++i) {
        if (stored(head.weights[i])) out << i << ' ' << hex(head.weights[i]) << '\n';
    }
}

}  // namespace

std::string serialize_scorer(const ScorerModel& model) {
    std::ostringstream out;
    out << kScorerMagic << '\n';
    out << "dims " << model.dims << '\n';
    const auto& m = model.meta;
    out << "meta epochs " << m.epochs << " learning_rate " << hex(m.learning_rate) << " l2 " << hex(m.l2)
        << " batch_size " << m.batch_size << " seed " << m.seed << " per_llm " << (m.per_llm ? 1 : 0) << '\n';
    out << "loss " << model.loss_history.size();
    for (double l : model.loss_history) out << ' ' << hex(l);
    out << '\n';
    for (const auto& w : model.warnings) out << "warning " << w << '\n';
    write_head(out, "*", model.shared);
    for (const auto& [llm_id, head] : model.per_llm) write_head(out, llm_id, head);
    out << "end\n";
    return out.str();
}

ScorerModel parse_scorer(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != kScorerMagic) throw data_error("not a frugal scorer file (bad header)");
    ScorerModel model;
    std::string word;
    bool ended = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        ls >> word;
        if (word == "dims") {
            ls >> model.dims;
            if (model.dims == 0) throw data_error("scorer file: dims must be positive");
        } else if (word == "meta") {
            std::string key, value;
            while (ls >> key >> value) {
                if (key == "epochs") model.meta.epochs = std::stoi(value);
                else if (key == "learning_rate") model.meta.learning_rate = unhex(value);
                else if (key == "l2") model.meta.l2 = unhex(value);
                else if (key == "batch_size") model.meta.batch_size = std::stoull(value);
                else if (key == "seed") model.meta.seed = std::stoull(value);
                else if (key == "per_llm") model.meta.per_llm = value == "1";
            }
        } else if (word == "loss") {
            std::size_t n = 0;
            ls >> n;
            std::string v;
            for (std::size_t i = 0; i < n && ls >> v; ++i) model.loss_history.push_back(unhex(v));
        } else if (word == "warning") {
            model.warnings.push_back(line.size() > 8 ? line.substr(8) : "");
        } else if (word == "head") {
            std::string name, bias;
            std::size_t nnz = 0;
            ls >> name >> bias >> nnz;
            LogisticHead head;
            head.bias = unhex(bias);
            head.weights.assign(model.dims, 0.0);
            for (std::size_t k = 0; k < nnz; ++k) {
                if (!std::getline(in, line)) throw data_error("scorer file: truncated head '" + name + "'");
                std::istringstream ws(line);
                std::size_t idx = 0;
                std::string value;
                ws >> idx >> value;
                if (idx >= model.dims) throw data_error("scorer file: weight index out of range");
                head.weights[idx] = unhex(value);
            }
            if (name == "*") model.shared = std::move(head);
            else model.per_llm.emplace(name, std::move(head));
        } else if (word == "end") {
            ended = true;
            break;
        } else if (!word.empty()) {
            throw data_error("scorer file: unknown section '" + word + "'");
        }
        word.clear();
    }
    if (!ended) throw data_error("scorer file: missing 'end' marker");
    if (model.shared.weights.size() != model.dims) model.shared.weights.assign(model.dims, 0.0);
    return model;
}

void save_scorer(const std::string& path, const ScorerModel& model) { write_file(path, serialize_scorer(model)); }

ScorerModel load_scorer(const std::string& path) { return parse_scorer(read_file(path)); }

LogisticScorer::LogisticScorer(std::shared_ptr<const ScorerModel> model, std::string id)
    : model_(std::move(model)), id_(std::move(id)) {}

double LogisticScorer::score(std::string_view query, std::string_view answer, std::string_view llm_id) const {
    return frugal::score(*model_, query, answer, llm_id);
}

namespace {
std::string table_key(std::string_view query, std::string_view answer, std::string_view llm_id) {
    std::string key;
    key.reserve(query.size() + answer.size() + llm_id.size() + 2);
    key.append(llm_id);
    key += '\x1f';
    key.append(query);
    key += '\x1f';
    key.append(answer);
    return key;
}
}  // namespace

void TableScorer::set(std::string_view query, std::string_view answer, std::string_view llm_id, double value) {
    if (!(value >= 0.0 && value <= 1.0)) throw invalid_argument("table score outside [0,1]");
    table_[table_key(query, answer, llm_id)] = value;
}

double TableScorer::score(std::string_view query, std::string_view answer, std::string_view llm_id) const {
    auto it = table_.find(table_key(query, answer, llm_id));
    if (it == table_.end()) throw data_error("no table score for llm '" + std::string(llm_id) + "'");
    return it->second;
}

double auc(const std::vector<double>& scores, const std::vector<double>& labels) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    // Mann-Whitney U with average ranks for ties.
    double rank_sum = 0.0;
    double positives = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[idx[k]] > 0.5) {
                rank_sum += avg_rank;
                positives += 1.0;
            }
        }
        i = j;
    }
    const double negatives = static_cast<double>(scores.size()) - positives;
    if (positives == 0.0 || negatives == 0.0) return 0.5;
    return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

std::vector<double> isotonic_fit(const std::vector<double>& values) {
    struct Block {
        double sum;
        std::size_t count;
    };
    std::vector<Block> blocks;
    for (double v : values) {
        blocks.push_back({v, 1});
        while (blocks.size() > 1) {
            const auto& b = blocks[blocks.size() - 1];
            const auto& a = blocks[blocks.size() - 2];
            if (a.sum / static_cast<double>(a.count) <= b.sum / static_cast<double>(b.count)) break;
            Block merged{a.sum + b.sum, a.count + b.count};
            blocks.pop_back();
            blocks.back() = merged;
        }
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& b : blocks) out.insert(out.end(), b.count, b.sum / static_cast<double>(b.count));
    return out;
}

std::vector<double> decile_accuracy(const std::vector<double>& scores, const std::vector<double>& labels) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    std::vector<double> out;
    const std::size_t n = idx.size();
    for (std::size_t d = 0; d < 10; ++d) {
        const std::size_t lo = d * n / 10;
        const std::size_t hi = (d + 1) * n / 10;
        if (hi == lo) continue;
        double correct = 0.0;
        for (std::size_t k = lo; k < hi; ++k) correct += labels[idx[k]];
        out.push_back(correct / static_cast<double>(hi - lo));
    }
    return out;
}

}  // namespace frugal
