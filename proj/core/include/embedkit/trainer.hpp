#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "embedkit/corpus.hpp"
#include "embedkit/losses.hpp"
#include "embedkit/matrix.hpp"
#include "embedkit/providers.hpp"
#include "embedkit/sampler.hpp"

namespace embedkit::trainer {

// Trainable d x d linear map applied on top of frozen provider embeddings;
// the desk-scale stand-in for fine-tuning an encoder.
struct LinearAdapter {
    std::size_t dim = 0;
    Matrix weights;  // dim x dim

    static LinearAdapter identity(std::size_t dim);
    // Identity plus seeded Gaussian noise: training starts near the frozen
    // baseline so improvements are attributable to the updates.
    static LinearAdapter identity_with_noise(std::size_t dim, double sigma, std::uint64_t seed);

    // Binary embedding-cache layout with rows keyed by row index. Weights
    // round through f32.
    void save(const std::filesystem::path& path) const;
    static LinearAdapter load(const std::filesystem::path& path);
};

// Rows mapped through W, then L2-normalized. Throws on dimension mismatch or
// when a mapped row has zero norm.
Matrix apply_adapter(const LinearAdapter& adapter, const Matrix& batch);

// Linear map only (no normalization); the cosine-based losses are invariant
// to row scale, so gradients w.r.t. W chain through this form.
Matrix apply_linear(const LinearAdapter& adapter, const Matrix& batch);

// Provider whose vectors are base embeddings pushed through the adapter.
class AdaptedProvider final : public providers::EmbeddingProvider {
public:
    AdaptedProvider(const providers::EmbeddingProvider& base, const LinearAdapter& adapter);

    std::size_t dim() const override { return adapter_.dim; }
    std::string identity() const override;
    providers::EmbeddingVector embed(std::string_view text) const override;

private:
    const providers::EmbeddingProvider& base_;
    const LinearAdapter& adapter_;
};

enum class Phase { pairs, triplets };

std::string to_string(Phase phase);

struct TrainConfig {
    double learning_rate = 0.05;
    std::size_t steps_phase1 = 0;
    std::size_t steps_phase2 = 0;
    std::size_t batch_size = 8;
    std::size_t warmup_steps = 0;  // linear learning-rate ramp when > 0
    std::uint64_t seed = 0;
    losses::LossParams loss;
};

struct TrainStep {
    std::string phase;
    std::size_t step = 0;
    double loss = 0.0;
};

struct TrainLog {
    std::vector<TrainStep> steps;

    std::string to_jsonl() const;
    void save_jsonl(const std::filesystem::path& path) const;
};

// Loss value and gradient w.r.t. the adapter weights for one batch of texts,
// embedded by `provider` and mapped through the adapter. For Phase::pairs
// the objective is the bidirectional pair loss; for Phase::triplets the
// combined triplet loss (negatives required).
struct StepResult {
    double loss = 0.0;
    Matrix weight_grad;  // dim x dim
};
StepResult adapter_step(const LinearAdapter& adapter,
                        const providers::EmbeddingProvider& provider,
                        const std::vector<std::string>& queries,
                        const std::vector<std::string>& positives,
                        const std::vector<std::string>& negatives,  // empty for pairs
                        const losses::LossParams& params, Phase phase);

// Plain gradient descent over `steps` batches drawn from the sampler.
// Deterministic given (adapter, sampler state, config). Aborts with the step
// index if the loss goes non-finite.
TrainLog train_phase(LinearAdapter& adapter,
                     sampler::Sampler<corpus::TextPair>& batches,
                     const providers::EmbeddingProvider& provider,
                     const TrainConfig& config, std::size_t steps);
TrainLog train_phase(LinearAdapter& adapter,
                     sampler::Sampler<corpus::Triplet>& batches,
                     const providers::EmbeddingProvider& provider,
                     const TrainConfig& config, std::size_t steps);

struct TrainData {
    std::vector<sampler::SamplerDataset<corpus::TextPair>> pairs;
    std::vector<sampler::SamplerDataset<corpus::Triplet>> triplets;
};

// Phase 1 on pairs, then phase 2 on triplets starting from the phase-1
// adapter. The adapter is seeded with config.seed; the two samplers with
// config.seed + 1 and config.seed + 2.
std::pair<LinearAdapter, TrainLog> run_two_phase(
    const TrainConfig& config, const TrainData& data,
    const providers::EmbeddingProvider& provider);

}  // namespace embedkit::trainer
