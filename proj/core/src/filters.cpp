#include "embedkit/filters.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "embedkit/hash.hpp"
#include "embedkit/parallel.hpp"
#include "embedkit/rng.hpp"

namespace embedkit::filters {

namespace {

using corpus::TextPair;
using corpus::Triplet;

StageStats make_stats(const char* stage, std::size_t input, std::size_t kept) {
    return {stage, input, kept, input - kept};
}

}  // namespace

std::string to_string(Stage stage) {
    switch (stage) {
        case Stage::dedup: return "dedup";
        case Stage::language: return "language";
        case Stage::consistency: return "consistency";
        case Stage::denoise: return "denoise";
    }
    return "dedup";
}

Stage stage_from_string(const std::string& name) {
    if (name == "dedup") return Stage::dedup;
    if (name == "language") return Stage::language;
    if (name == "consistency") return Stage::consistency;
    if (name == "denoise") return Stage::denoise;
    throw std::invalid_argument("unknown pipeline stage: " + name);
}

void PipelineConfig::validate() const {
    if (top_k < 1) throw std::invalid_argument("pipeline config: top_k must be >= 1");
    if (!std::isfinite(kappa)) throw std::invalid_argument("pipeline config: kappa must be finite");
    if (reference_sample_size < top_k) {
        throw std::invalid_argument("pipeline config: reference_sample_size must be >= top_k");
    }
    if (language_min_confidence < 0.0 || language_min_confidence > 1.0) {
        throw std::invalid_argument("pipeline config: language_min_confidence must be in [0,1]");
    }
}

std::string FilterReport::to_json() const {
    nlohmann::json obj;
    obj["stages"] = nlohmann::json::array();
    for (const StageStats& s : stages) {
        obj["stages"].push_back({{"stage", s.stage},
                                 {"input", s.input},
                                 {"kept", s.kept},
                                 {"removed", s.removed}});
    }
    obj["total_input"] = total_input;
    obj["total_output"] = total_output;
    return obj.dump();
}

std::uint64_t pair_key(const TextPair& pair) {
    const std::string q = normalize_text(pair.query);
    const std::string p = normalize_text(pair.positive);
    std::uint64_t state = fnv1a64_u64(q.size(), kFnvOffsetBasis);
    state = fnv1a64(q, state);
    const unsigned char sep = 0x1F;
    state = fnv1a64(&sep, 1, state);
    state = fnv1a64_u64(p.size(), state);
    state = fnv1a64(p, state);
    return state;
}

std::pair<std::vector<TextPair>, StageStats> dedup_pairs(std::span<const TextPair> pairs) {
    std::vector<TextPair> kept;
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(pairs.size());
    for (const TextPair& pair : pairs) {
        const std::string q = normalize_text(pair.query);
        const std::string p = normalize_text(pair.positive);
        if (q.empty() || p.empty() || q == p) continue;
        if (seen.insert(pair_key(pair)).second) {
            kept.push_back(pair);
        }
    }
    StageStats stats = make_stats("dedup", pairs.size(), kept.size());
    return {std::move(kept), stats};
}

LanguageGuess detect_language(std::string_view text, const LanguageClassifier& classifier) {
    if (normalize_text(text).empty()) return {"und", 0.0};
    return classifier.classify(text);
}

std::pair<std::vector<TextPair>, StageStats> language_filter(
    std::span<const TextPair> pairs, const LanguageClassifier& classifier,
    const PipelineConfig& config) {
    const auto admissible = [&](std::string_view text) {
        const LanguageGuess guess = detect_language(text, classifier);
        return config.language_allow.contains(guess.language) &&
               guess.confidence >= config.language_min_confidence;
    };
    std::vector<TextPair> kept;
    for (const TextPair& pair : pairs) {
        if (admissible(pair.query) && admissible(pair.positive)) {
            kept.push_back(pair);
        }
    }
    StageStats stats = make_stats("language", pairs.size(), kept.size());
    return {std::move(kept), stats};
}

std::pair<std::vector<TextPair>, StageStats> consistency_filter(
    std::span<const TextPair> pairs, const providers::EmbeddingProvider& provider,
    const PipelineConfig& config) {
    config.validate();
    if (pairs.empty()) {
        return {{}, make_stats("consistency", 0, 0)};
    }

    // Seeded uniform sample (without replacement) of reference pairs.
    const std::size_t sample_size = std::min<std::size_t>(config.reference_sample_size,
                                                          pairs.size());
    std::vector<std::size_t> indices(pairs.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    Rng rng(config.seed);
    for (std::size_t i = 0; i < sample_size; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(indices.size() - i));
        std::swap(indices[i], indices[j]);
    }

    // Unit-normalized embeddings of the reference positives.
    const std::size_t dim = provider.dim();
    std::vector<std::vector<double>> references(sample_size);
    parallel_for(sample_size, config.threads, [&](std::size_t s) {
        const providers::EmbeddingVector v = provider.embed(pairs[indices[s]].positive);
        std::vector<double> unit(v.begin(), v.end());
        double sq = 0.0;
        for (double x : unit) sq += x * x;
        if (sq == 0.0) {
            throw std::runtime_error("consistency filter: reference positive " +
                                     std::to_string(indices[s]) + " embeds to zero norm");
        }
        const double norm = std::sqrt(sq);
        for (double& x : unit) x /= norm;
        references[s] = std::move(unit);
    });

    // Keep (q, p) iff fewer than top_k reference positives are strictly more
    // similar to q than p is; equivalently p's similarity reaches the
    // top_k-th largest of the pool with p injected, ties kept. Similarities
    // are dots of unit vectors, computed in one canonical order so results
    // agree exactly with a sort-based reference.
    const auto unit_embed = [&](std::string_view text, std::size_t index,
                                const char* role) {
        providers::EmbeddingVector raw;
        try {
            raw = provider.embed(text);
        } catch (const std::exception& e) {
            throw std::runtime_error("consistency filter: pair " + std::to_string(index) +
                                     ": " + e.what());
        }
        if (raw.size() != dim) {
            throw std::runtime_error("consistency filter: pair " + std::to_string(index) +
                                     ": provider dimension mismatch");
        }
        std::vector<double> out(raw.begin(), raw.end());
        double sq = 0.0;
        for (double x : out) sq += x * x;
        if (sq == 0.0) {
            throw std::runtime_error("consistency filter: pair " + std::to_string(index) +
                                     ": zero-norm " + role + " embedding");
        }
        const double norm = std::sqrt(sq);
        for (double& x : out) x /= norm;
        return out;
    };

    std::vector<char> keep(pairs.size(), 0);
    parallel_for(pairs.size(), config.threads, [&](std::size_t i) {
        const std::vector<double> q = unit_embed(pairs[i].query, i, "query");
        const std::vector<double> p = unit_embed(pairs[i].positive, i, "positive");
        double own = 0.0;
        for (std::size_t c = 0; c < dim; ++c) own += q[c] * p[c];

        std::size_t strictly_better = 0;
        for (const std::vector<double>& ref : references) {
            double dot = 0.0;
            for (std::size_t c = 0; c < dim; ++c) dot += q[c] * ref[c];
            if (dot > own) {
                if (++strictly_better >= config.top_k) break;
            }
        }
        keep[i] = strictly_better < config.top_k ? 1 : 0;
    });

    std::vector<TextPair> kept;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (keep[i]) kept.push_back(pairs[i]);
    }
    StageStats stats = make_stats("consistency", pairs.size(), kept.size());
    return {std::move(kept), stats};
}

std::pair<std::vector<Triplet>, StageStats> denoise_triplets(
    std::span<const Triplet> triplets, const providers::RelevanceScorer& scorer, double kappa) {
    if (!std::isfinite(kappa)) throw std::invalid_argument("denoise: kappa must be finite");
    std::vector<char> keep(triplets.size(), 0);
    for (std::size_t i = 0; i < triplets.size(); ++i) {
        double positive_score, negative_score;
        try {
            positive_score = scorer.score(triplets[i].query, triplets[i].positive);
            negative_score = scorer.score(triplets[i].query, triplets[i].negative);
        } catch (const std::exception& e) {
            throw std::runtime_error("denoise: triplet " + std::to_string(i) + ": " + e.what());
        }
        keep[i] = (positive_score - negative_score > kappa) ? 1 : 0;
    }
    std::vector<Triplet> kept;
    for (std::size_t i = 0; i < triplets.size(); ++i) {
        if (keep[i]) kept.push_back(triplets[i]);
    }
    StageStats stats = make_stats("denoise", triplets.size(), kept.size());
    return {std::move(kept), stats};
}

void validate_stages(std::span<const Stage> stages, corpus::DatasetKind kind) {
    const bool is_pairs = kind == corpus::DatasetKind::pairs;
    for (Stage stage : stages) {
        const bool pair_stage = stage != Stage::denoise;
        if (pair_stage && !is_pairs) {
            throw std::invalid_argument("stage '" + to_string(stage) +
                                        "' applies to pair datasets only");
        }
        if (!pair_stage && is_pairs) {
            throw std::invalid_argument("stage 'denoise' applies to triplet datasets only");
        }
    }
}

std::pair<corpus::DatasetHandle, FilterReport> run_pipeline(
    const corpus::DatasetHandle& dataset, const std::filesystem::path& output_path,
    const PipelineConfig& config, const PipelineProviders& providers) {
    config.validate();
    validate_stages(config.stages, dataset.kind);

    FilterReport report;
    corpus::DatasetHandle out_handle;
    out_handle.name = output_path.stem().string();
    out_handle.path = output_path;

    if (dataset.kind == corpus::DatasetKind::pairs) {
        std::vector<TextPair> current = corpus::load_pairs(dataset.path).records;
        report.total_input = current.size();
        for (Stage stage : config.stages) {
            std::pair<std::vector<TextPair>, StageStats> result = [&] {
                switch (stage) {
                    case Stage::dedup:
                        return dedup_pairs(current);
                    case Stage::language: {
                        if (providers.classifier == nullptr) {
                            throw std::invalid_argument(
                                "language stage requires a classifier");
                        }
                        return language_filter(current, *providers.classifier, config);
                    }
                    case Stage::consistency: {
                        if (providers.embedder == nullptr) {
                            throw std::invalid_argument(
                                "consistency stage requires an embedding provider");
                        }
                        return consistency_filter(current, *providers.embedder, config);
                    }
                    default:
                        throw std::invalid_argument("invalid stage for pairs");
                }
            }();
            current = std::move(result.first);
            report.stages.push_back(result.second);
        }
        report.total_output = current.size();
        corpus::persist(std::span<const TextPair>(current), output_path);
        out_handle.kind = corpus::DatasetKind::pairs;
        out_handle.record_count = current.size();
    } else {
        std::vector<Triplet> current;
        if (dataset.kind == corpus::DatasetKind::negation) {
            const auto loaded = corpus::load_negation(dataset.path);
            current = corpus::as_triplets(loaded.records, dataset.name);
        } else {
            current = corpus::load_triplets(dataset.path).records;
        }
        report.total_input = current.size();
        for (Stage stage : config.stages) {
            if (stage != Stage::denoise) {
                throw std::invalid_argument("invalid stage for triplets");
            }
            if (providers.scorer == nullptr) {
                throw std::invalid_argument("denoise stage requires a relevance scorer");
            }
            auto result = denoise_triplets(current, *providers.scorer, config.kappa);
            current = std::move(result.first);
            report.stages.push_back(result.second);
        }
        report.total_output = current.size();
        corpus::persist(std::span<const Triplet>(current), output_path);
        out_handle.kind = corpus::DatasetKind::triplets;
        out_handle.record_count = current.size();
    }
    return {out_handle, report};
}

}  // namespace embedkit::filters
