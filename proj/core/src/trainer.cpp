#include "embedkit/trainer.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "embedkit/rng.hpp"

namespace embedkit::trainer {

namespace {

constexpr double kInitNoiseSigma = 0.01;

Matrix embed_texts(const providers::EmbeddingProvider& provider,
                   const std::vector<std::string>& texts) {
    return providers::embed_batch(provider, texts, 1);
}

// grad[a][b] += sum_j upstream[j][a] * inputs[j][b]; the chain rule through
// row-wise y_j = W x_j.
void accumulate_weight_grad(Matrix& grad, const Matrix& upstream, const Matrix& inputs) {
    const std::size_t k = upstream.rows();
    const std::size_t d = upstream.cols();
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t a = 0; a < d; ++a) {
            const double u = upstream.at(j, a);
            if (u == 0.0) continue;
            for (std::size_t b = 0; b < d; ++b) {
                grad.at(a, b) += u * inputs.at(j, b);
            }
        }
    }
}

double effective_learning_rate(const TrainConfig& config, std::size_t step) {
    if (config.warmup_steps == 0) return config.learning_rate;
    const double ramp = static_cast<double>(step + 1) /
                        static_cast<double>(config.warmup_steps);
    return config.learning_rate * std::min(1.0, ramp);
}

template <typename Record>
TrainLog run_descent(LinearAdapter& adapter, sampler::Sampler<Record>& batches,
                     const providers::EmbeddingProvider& provider, const TrainConfig& config,
                     std::size_t steps, Phase phase) {
    if (!(config.learning_rate > 0.0)) {
        throw std::invalid_argument("trainer: learning_rate must be positive");
    }
    if (provider.dim() != adapter.dim) {
        throw std::invalid_argument("trainer: provider dimension " +
                                    std::to_string(provider.dim()) +
                                    " does not match adapter dimension " +
                                    std::to_string(adapter.dim));
    }
    TrainLog log;
    for (std::size_t step = 0; step < steps; ++step) {
        const sampler::Batch<Record> batch = batches.next_batch();
        std::vector<std::string> queries, positives, negatives;
        queries.reserve(batch.records.size());
        positives.reserve(batch.records.size());
        for (const Record& record : batch.records) {
            queries.push_back(record.query);
            positives.push_back(record.positive);
            if constexpr (requires { record.negative; }) {
                negatives.push_back(record.negative);
            }
        }
        const StepResult result =
            adapter_step(adapter, provider, queries, positives, negatives, config.loss, phase);
        if (!std::isfinite(result.loss)) {
            throw std::runtime_error("trainer: non-finite loss at " + to_string(phase) +
                                     " step " + std::to_string(step));
        }
        const double lr = effective_learning_rate(config, step);
        for (std::size_t i = 0; i < adapter.weights.data().size(); ++i) {
            adapter.weights.data()[i] -= lr * result.weight_grad.data()[i];
        }
        log.steps.push_back({to_string(phase), step, result.loss});
    }
    return log;
}

}  // namespace

LinearAdapter LinearAdapter::identity(std::size_t dim) {
    LinearAdapter adapter;
    adapter.dim = dim;
    adapter.weights = Matrix(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) adapter.weights.at(i, i) = 1.0;
    return adapter;
}

LinearAdapter LinearAdapter::identity_with_noise(std::size_t dim, double sigma,
                                                 std::uint64_t seed) {
    LinearAdapter adapter = identity(dim);
    Rng rng(seed);
    for (double& v : adapter.weights.data()) v += sigma * rng.next_gaussian();
    return adapter;
}

void LinearAdapter::save(const std::filesystem::path& path) const {
    providers::EmbeddingCache cache(dim);
    for (std::size_t r = 0; r < dim; ++r) {
        providers::EmbeddingVector row(dim);
        for (std::size_t c = 0; c < dim; ++c) {
            row[c] = static_cast<float>(weights.at(r, c));
        }
        cache.insert_raw(r, std::move(row));  // keyed by row index
    }
    cache.save_binary(path);
}

LinearAdapter LinearAdapter::load(const std::filesystem::path& path) {
    const providers::EmbeddingCache cache = providers::EmbeddingCache::load_binary(path);
    LinearAdapter adapter;
    adapter.dim = cache.dim();
    adapter.weights = Matrix(adapter.dim, adapter.dim);
    for (std::size_t r = 0; r < adapter.dim; ++r) {
        const providers::EmbeddingVector* row = cache.find(r);
        if (row == nullptr) {
            throw std::runtime_error("adapter file missing row " + std::to_string(r) + ": " +
                                     path.string());
        }
        for (std::size_t c = 0; c < adapter.dim; ++c) {
            adapter.weights.at(r, c) = (*row)[c];
        }
    }
    return adapter;
}

Matrix apply_linear(const LinearAdapter& adapter, const Matrix& batch) {
    if (batch.cols() != adapter.dim) {
        throw std::invalid_argument("adapter: batch dimension " + std::to_string(batch.cols()) +
                                    " does not match adapter dimension " +
                                    std::to_string(adapter.dim));
    }
    Matrix out(batch.rows(), adapter.dim);
    for (std::size_t j = 0; j < batch.rows(); ++j) {
        for (std::size_t a = 0; a < adapter.dim; ++a) {
            double acc = 0.0;
            for (std::size_t b = 0; b < adapter.dim; ++b) {
                acc += adapter.weights.at(a, b) * batch.at(j, b);
            }
            out.at(j, a) = acc;
        }
    }
    return out;
}

Matrix apply_adapter(const LinearAdapter& adapter, const Matrix& batch) {
    Matrix out = apply_linear(adapter, batch);
    for (std::size_t j = 0; j < out.rows(); ++j) {
        double sq = 0.0;
        for (double v : out.row(j)) sq += v * v;
        if (sq == 0.0) {
            throw std::runtime_error("adapter: mapped row " + std::to_string(j) +
                                     " has zero norm");
        }
        const double inv = 1.0 / std::sqrt(sq);
        for (double& v : out.row(j)) v *= inv;
    }
    return out;
}

AdaptedProvider::AdaptedProvider(const providers::EmbeddingProvider& base,
                                 const LinearAdapter& adapter)
    : base_(base), adapter_(adapter) {
    if (base.dim() != adapter.dim) {
        throw std::invalid_argument("adapted provider: dimension mismatch");
    }
}

std::string AdaptedProvider::identity() const {
    return "adapted(" + base_.identity() + ")";
}

providers::EmbeddingVector AdaptedProvider::embed(std::string_view text) const {
    const providers::EmbeddingVector raw = base_.embed(text);
    Matrix row(1, raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) row.at(0, i) = raw[i];
    const Matrix mapped = apply_adapter(adapter_, row);
    providers::EmbeddingVector out(mapped.cols());
    for (std::size_t i = 0; i < mapped.cols(); ++i) {
        out[i] = static_cast<float>(mapped.at(0, i));
    }
    return out;
}

std::string to_string(Phase phase) {
    return phase == Phase::pairs ? "pairs" : "triplets";
}

std::string TrainLog::to_jsonl() const {
    std::string out;
    for (const TrainStep& s : steps) {
        nlohmann::json obj;
        obj["phase"] = s.phase;
        obj["step"] = s.step;
        obj["loss"] = s.loss;
        out += obj.dump();
        out += '\n';
    }
    return out;
}

void TrainLog::save_jsonl(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out << to_jsonl();
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

StepResult adapter_step(const LinearAdapter& adapter,
                        const providers::EmbeddingProvider& provider,
                        const std::vector<std::string>& queries,
                        const std::vector<std::string>& positives,
                        const std::vector<std::string>& negatives,
                        const losses::LossParams& params, Phase phase) {
    const Matrix raw_q = embed_texts(provider, queries);
    const Matrix raw_p = embed_texts(provider, positives);
    const Matrix mapped_q = apply_linear(adapter, raw_q);
    const Matrix mapped_p = apply_linear(adapter, raw_p);

    StepResult result;
    result.weight_grad = Matrix(adapter.dim, adapter.dim);
    if (phase == Phase::pairs) {
        const losses::LossResult loss =
            losses::pair_loss_bidirectional(mapped_q, mapped_p, params, true);
        result.loss = loss.value;
        accumulate_weight_grad(result.weight_grad, loss.grad_query, raw_q);
        accumulate_weight_grad(result.weight_grad, loss.grad_positive, raw_p);
    } else {
        if (negatives.size() != queries.size()) {
            throw std::invalid_argument("trainer: triplet phase needs one negative per record");
        }
        const Matrix raw_n = embed_texts(provider, negatives);
        const Matrix mapped_n = apply_linear(adapter, raw_n);
        const losses::LossResult loss =
            losses::triplet_total(mapped_q, mapped_p, mapped_n, params, true);
        result.loss = loss.value;
        accumulate_weight_grad(result.weight_grad, loss.grad_query, raw_q);
        accumulate_weight_grad(result.weight_grad, loss.grad_positive, raw_p);
        accumulate_weight_grad(result.weight_grad, loss.grad_negative, raw_n);
    }
    return result;
}

TrainLog train_phase(LinearAdapter& adapter, sampler::Sampler<corpus::TextPair>& batches,
                     const providers::EmbeddingProvider& provider, const TrainConfig& config,
                     std::size_t steps) {
    return run_descent(adapter, batches, provider, config, steps, Phase::pairs);
}

TrainLog train_phase(LinearAdapter& adapter, sampler::Sampler<corpus::Triplet>& batches,
                     const providers::EmbeddingProvider& provider, const TrainConfig& config,
                     std::size_t steps) {
    return run_descent(adapter, batches, provider, config, steps, Phase::triplets);
}

std::pair<LinearAdapter, TrainLog> run_two_phase(const TrainConfig& config,
                                                 const TrainData& data,
                                                 const providers::EmbeddingProvider& provider) {
    if (config.steps_phase1 > 0 && data.pairs.empty()) {
        throw std::invalid_argument("two-phase training: no pair datasets");
    }
    if (config.steps_phase2 > 0 && data.triplets.empty()) {
        throw std::invalid_argument("two-phase training: no triplet datasets");
    }

    LinearAdapter adapter =
        LinearAdapter::identity_with_noise(provider.dim(), kInitNoiseSigma, config.seed);
    TrainLog combined;
    if (config.steps_phase1 > 0) {
        sampler::Sampler<corpus::TextPair> batches(data.pairs, config.batch_size,
                                                   config.seed + 1);
        TrainLog log = train_phase(adapter, batches, provider, config, config.steps_phase1);
        combined.steps.insert(combined.steps.end(), log.steps.begin(), log.steps.end());
    }
    if (config.steps_phase2 > 0) {
        sampler::Sampler<corpus::Triplet> batches(data.triplets, config.batch_size,
                                                  config.seed + 2);
        TrainLog log = train_phase(adapter, batches, provider, config, config.steps_phase2);
        combined.steps.insert(combined.steps.end(), log.steps.begin(), log.steps.end());
    }
    return {std::move(adapter), std::move(combined)};
}

}  // namespace embedkit::trainer
