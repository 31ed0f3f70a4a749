#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embedkit/matrix.hpp"

namespace embedkit::providers {

using EmbeddingVector = std::vector<float>;

// Stable 64-bit key of the NFC-normalized text (FNV-1a, fixed constants).
// Distinct texts colliding on a key is treated as a hard error wherever keys
// index storage.
std::uint64_t text_key(std::string_view text);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dim() const = 0;
    virtual std::string identity() const = 0;
    // Deterministic: the same text always yields the same vector.
    virtual EmbeddingVector embed(std::string_view text) const = 0;
};

// Deterministic test embedder with no model weights: signed feature hashing
// of byte 3-grams of the normalized text, L2-normalized. Texts sharing many
// 3-grams land near each other, which is the monotone behavior the
// consistency filter needs.
EmbeddingVector hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

class HashEmbedder final : public EmbeddingProvider {
public:
    HashEmbedder(std::size_t dim, std::uint64_t seed);
    std::size_t dim() const override { return dim_; }
    std::string identity() const override;
    EmbeddingVector embed(std::string_view text) const override;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

// Rows are the provider's vectors for the texts, in input order. Provider
// failures are rethrown naming the offending index. `threads` bounds
// worker parallelism; results do not depend on it.
Matrix embed_batch(const EmbeddingProvider& provider,
                   std::span<const std::string> texts, std::size_t threads = 1);

enum class CacheFormat { binary, jsonl };

// Keyed store of precomputed embeddings. The binary layout is
//   magic "JEMB" | version u32 LE (=1) | dim u32 LE | count u64 LE |
//   count * { key u64 LE, dim * f32 LE }
// and the JSONL alternative is one {"text":..., "embedding":[...]} per line.
class EmbeddingCache {
public:
    EmbeddingCache() = default;
    explicit EmbeddingCache(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return entries_.size(); }

    // Throws if a distinct text already occupies the key.
    void insert(std::string_view text, EmbeddingVector vector);
    // Keyed directly, no backing text (so not writable as JSONL); duplicate
    // keys are an error.
    void insert_raw(std::uint64_t key, EmbeddingVector vector);
    const EmbeddingVector* find(std::uint64_t key) const;

    void save_binary(const std::filesystem::path& path) const;
    static EmbeddingCache load_binary(const std::filesystem::path& path);
    void save_jsonl(const std::filesystem::path& path) const;
    static EmbeddingCache load_jsonl(const std::filesystem::path& path);

private:
    std::size_t dim_ = 0;
    std::map<std::uint64_t, EmbeddingVector> entries_;
    // NFC text per key while building; detects key collisions and lets the
    // JSONL writer emit original texts. Binary loads have no texts.
    std::map<std::uint64_t, std::string> texts_;

    friend std::size_t build_cache(const EmbeddingProvider&, std::span<const std::string>,
                                   const std::filesystem::path&, CacheFormat);
};

// Embeds the given texts once each (duplicates collapse onto one key) and
// writes the cache. Returns the entry count.
std::size_t build_cache(const EmbeddingProvider& provider,
                        std::span<const std::string> texts,
                        const std::filesystem::path& path,
                        CacheFormat format = CacheFormat::binary);

// Provider backed by a prebuilt cache; unknown texts are an error naming the
// missing key.
class CacheProvider final : public EmbeddingProvider {
public:
    explicit CacheProvider(EmbeddingCache cache, std::string identity = "cache");
    static CacheProvider open(const std::filesystem::path& path);

    std::size_t dim() const override { return cache_.dim(); }
    std::string identity() const override { return identity_; }
    EmbeddingVector embed(std::string_view text) const override;

private:
    EmbeddingCache cache_;
    std::string identity_;
};

class RelevanceScorer {
public:
    virtual ~RelevanceScorer() = default;
    virtual std::string identity() const = 0;
    // Deterministic, finite relevance score r(query, passage).
    virtual double score(std::string_view query, std::string_view passage) const = 0;
};

// Cosine of provider embeddings.
class CosineScorer final : public RelevanceScorer {
public:
    explicit CosineScorer(const EmbeddingProvider& provider) : provider_(provider) {}
    std::string identity() const override { return "cosine(" + provider_.identity() + ")"; }
    double score(std::string_view query, std::string_view passage) const override;

private:
    const EmbeddingProvider& provider_;
};

// Lookup table of (key(query), key(passage)) -> score, loaded from JSONL
// lines {"query":..., "passage":..., "score":...}. Missing entries are an
// error naming both keys.
class FileScorer final : public RelevanceScorer {
public:
    static FileScorer load(const std::filesystem::path& path);

    std::string identity() const override { return "file:" + source_; }
    double score(std::string_view query, std::string_view passage) const override;

    std::size_t size() const { return scores_.size(); }

private:
    std::string source_;
    std::map<std::pair<std::uint64_t, std::uint64_t>, double> scores_;
};

}  // namespace embedkit::providers
