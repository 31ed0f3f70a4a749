#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "embedkit/corpus.hpp"
#include "embedkit/language_id.hpp"
#include "embedkit/providers.hpp"
#include "embedkit/text.hpp"

namespace embedkit::filters {

// Canonical text form shared with hashing and the embedders; see text.hpp.
using embedkit::normalize_text;

enum class Stage { dedup, language, consistency, denoise };

std::string to_string(Stage stage);
Stage stage_from_string(const std::string& name);

struct PipelineConfig {
    std::vector<Stage> stages;
    std::set<std::string> language_allow = {"en"};
    double language_min_confidence = 0.5;
    // Desk-scale default; production runs would sample far more.
    std::size_t reference_sample_size = 10000;
    std::size_t top_k = 2;
    double kappa = 0.2;
    std::uint64_t seed = 0;
    std::size_t threads = 1;

    void validate() const;
};

struct StageStats {
    std::string stage;
    std::size_t input = 0;
    std::size_t kept = 0;
    std::size_t removed = 0;
};

struct FilterReport {
    std::vector<StageStats> stages;
    std::size_t total_input = 0;
    std::size_t total_output = 0;

    std::string to_json() const;
};

// Stable key under which two pairs are duplicates: both sides are
// normalized, then hashed with length prefixes and a 0x1F separator so the
// field boundary cannot be forged from inside the texts.
std::uint64_t pair_key(const corpus::TextPair& pair);

// Keeps the first occurrence of each pair key; drops pairs where either side
// normalizes to empty or both sides normalize equal.
std::pair<std::vector<corpus::TextPair>, StageStats> dedup_pairs(
    std::span<const corpus::TextPair> pairs);

// ("und", 0.0) for text that normalizes to empty.
LanguageGuess detect_language(std::string_view text, const LanguageClassifier& classifier);

// Keeps a pair iff both sides classify into config.language_allow with
// confidence >= config.language_min_confidence.
std::pair<std::vector<corpus::TextPair>, StageStats> language_filter(
    std::span<const corpus::TextPair> pairs, const LanguageClassifier& classifier,
    const PipelineConfig& config);

// Keeps (q, p) iff p ranks among the top_k most query-similar passages of a
// seeded reference sample of positives, with p itself injected into the
// candidate pool and ties resolved toward keeping.
std::pair<std::vector<corpus::TextPair>, StageStats> consistency_filter(
    std::span<const corpus::TextPair> pairs, const providers::EmbeddingProvider& provider,
    const PipelineConfig& config);

// Keeps a triplet iff r(q, p) - r(q, n) > kappa, strictly.
std::pair<std::vector<corpus::Triplet>, StageStats> denoise_triplets(
    std::span<const corpus::Triplet> triplets, const providers::RelevanceScorer& scorer,
    double kappa);

struct PipelineProviders {
    const providers::EmbeddingProvider* embedder = nullptr;  // consistency stage
    const providers::RelevanceScorer* scorer = nullptr;      // denoise stage
    const LanguageClassifier* classifier = nullptr;          // language stage
};

// Checks that every configured stage applies to the dataset kind: dedup,
// language and consistency operate on pairs; denoise on triplets (including
// the triplet view of negation data). Throws std::invalid_argument otherwise.
void validate_stages(std::span<const Stage> stages, corpus::DatasetKind kind);

// Loads the dataset, applies the configured stages in order, persists the
// survivors to output_path and returns the new handle with the per-stage
// report.
std::pair<corpus::DatasetHandle, FilterReport> run_pipeline(
    const corpus::DatasetHandle& dataset, const std::filesystem::path& output_path,
    const PipelineConfig& config, const PipelineProviders& providers);

}  // namespace embedkit::filters
