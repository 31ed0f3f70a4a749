#include "embedkit/providers.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "embedkit/hash.hpp"
#include "embedkit/parallel.hpp"
#include "embedkit/text.hpp"

namespace embedkit::providers {

namespace {

using nlohmann::json;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

void write_f32(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(out, bits);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) throw std::runtime_error("embedding cache: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw std::runtime_error("embedding cache: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

float read_f32(std::istream& in) {
    const std::uint32_t bits = read_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

constexpr char kCacheMagic[4] = {'J', 'E', 'M', 'B'};
constexpr std::uint32_t kCacheVersion = 1;

}  // namespace

std::uint64_t text_key(std::string_view text) {
    return fnv1a64(nfc(text));
}

EmbeddingVector hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
    if (dim < 2) throw std::invalid_argument("hash_embed: dim must be >= 2");
    const std::string norm = normalize_text(text);

    std::vector<double> acc(dim, 0.0);
    // Seed enters as the initial FNV state so every seed defines its own
    // feature map.
    const std::uint64_t state0 = fnv1a64_u64(seed, kFnvOffsetBasis);
    const auto add_gram = [&](std::string_view gram) {
        const std::uint64_t h = fnv1a64(gram, state0);
        const std::size_t bucket = static_cast<std::size_t>(h % dim);
        const double sign = (h >> 63) ? 1.0 : -1.0;
        acc[bucket] += sign;
    };
    const std::string padded = " " + norm + " ";
    if (padded.size() < 3) {
        add_gram(padded);
    } else {
        for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
            add_gram(std::string_view(padded).substr(i, 3));
        }
    }

    double sq = 0.0;
    for (double v : acc) sq += v * v;
    if (sq == 0.0) {
        // All grams cancelled; fall back to a single deterministic feature.
        acc[state0 % dim] = 1.0;
        sq = 1.0;
    }
    const double inv = 1.0 / std::sqrt(sq);
    EmbeddingVector out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] * inv);
    return out;
}

HashEmbedder::HashEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim < 2) throw std::invalid_argument("HashEmbedder: dim must be >= 2");
}

std::string HashEmbedder::identity() const {
    return "hash:" + std::to_string(dim_) + ":" + std::to_string(seed_);
}

EmbeddingVector HashEmbedder::embed(std::string_view text) const {
    return hash_embed(text, dim_, seed_);
}

Matrix embed_batch(const EmbeddingProvider& provider,
                   std::span<const std::string> texts, std::size_t threads) {
    if (texts.empty()) throw std::invalid_argument("embed_batch: no texts");
    Matrix out(texts.size(), provider.dim());
    parallel_for(texts.size(), threads, [&](std::size_t i) {
        EmbeddingVector v;
        try {
            v = provider.embed(texts[i]);
        } catch (const std::exception& e) {
            throw std::runtime_error("embed_batch: text at index " + std::to_string(i) +
                                     ": " + e.what());
        }
        if (v.size() != provider.dim()) {
            throw std::runtime_error("embed_batch: text at index " + std::to_string(i) +
                                     ": provider returned dimension " + std::to_string(v.size()) +
                                     ", expected " + std::to_string(provider.dim()));
        }
        for (std::size_t c = 0; c < v.size(); ++c) out.at(i, c) = v[c];
    });
    return out;
}

void EmbeddingCache::insert(std::string_view text, EmbeddingVector vector) {
    if (dim_ == 0) dim_ = vector.size();
    if (vector.size() != dim_) {
        throw std::runtime_error("embedding cache: vector dimension " +
                                 std::to_string(vector.size()) + " does not match cache dim " +
                                 std::to_string(dim_));
    }
    std::string canonical = nfc(text);
    const std::uint64_t key = fnv1a64(canonical);
    auto it = texts_.find(key);
    if (it != texts_.end()) {
        if (it->second != canonical) {
            throw std::runtime_error("embedding cache: key collision between \"" + it->second +
                                     "\" and \"" + canonical + "\" (key " + std::to_string(key) +
                                     ")");
        }
        return;  // same text, already stored
    }
    texts_.emplace(key, std::move(canonical));
    entries_.emplace(key, std::move(vector));
}

void EmbeddingCache::insert_raw(std::uint64_t key, EmbeddingVector vector) {
    if (dim_ == 0) dim_ = vector.size();
    if (vector.size() != dim_) {
        throw std::runtime_error("embedding cache: vector dimension " +
                                 std::to_string(vector.size()) + " does not match cache dim " +
                                 std::to_string(dim_));
    }
    if (!entries_.emplace(key, std::move(vector)).second) {
        throw std::runtime_error("embedding cache: duplicate key " + std::to_string(key));
    }
}

const EmbeddingVector* EmbeddingCache::find(std::uint64_t key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

void EmbeddingCache::save_binary(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out.write(kCacheMagic, 4);
    write_u32(out, kCacheVersion);
    write_u32(out, static_cast<std::uint32_t>(dim_));
    write_u64(out, entries_.size());
    for (const auto& [key, vector] : entries_) {
        write_u64(out, key);
        for (float v : vector) write_f32(out, v);
    }
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

EmbeddingCache EmbeddingCache::load_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCacheMagic, 4) != 0) {
        throw std::runtime_error("embedding cache: bad magic bytes in " + path.string());
    }
    const std::uint32_t version = read_u32(in);
    if (version != kCacheVersion) {
        throw std::runtime_error("embedding cache: unsupported version " +
                                 std::to_string(version));
    }
    EmbeddingCache cache;
    cache.dim_ = read_u32(in);
    const std::uint64_t count = read_u64(in);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t key = read_u64(in);
        EmbeddingVector vector(cache.dim_);
        for (std::size_t c = 0; c < cache.dim_; ++c) vector[c] = read_f32(in);
        if (!cache.entries_.emplace(key, std::move(vector)).second) {
            throw std::runtime_error("embedding cache: duplicate key " + std::to_string(key));
        }
    }
    return cache;
}

void EmbeddingCache::save_jsonl(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    for (const auto& [key, vector] : entries_) {
        auto text_it = texts_.find(key);
        if (text_it == texts_.end()) {
            throw std::runtime_error(
                "embedding cache: cannot write JSONL without source texts (entry " +
                std::to_string(key) + ")");
        }
        json obj;
        obj["text"] = text_it->second;
        json values = json::array();
        // Widened to double: exact, and the shortest round-trip decimal of
        // the double restores the identical f32 bits on load.
        for (float v : vector) values.push_back(static_cast<double>(v));
        obj["embedding"] = std::move(values);
        out << obj.dump() << '\n';
    }
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

EmbeddingCache EmbeddingCache::load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    EmbeddingCache cache;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object() || !obj.contains("text") ||
            !obj["text"].is_string() || !obj.contains("embedding") ||
            !obj["embedding"].is_array()) {
            throw std::runtime_error("embedding cache: malformed JSONL at line " +
                                     std::to_string(line_no) + " of " + path.string());
        }
        EmbeddingVector vector;
        vector.reserve(obj["embedding"].size());
        for (const auto& v : obj["embedding"]) {
            if (!v.is_number()) {
                throw std::runtime_error("embedding cache: non-numeric entry at line " +
                                         std::to_string(line_no));
            }
            vector.push_back(static_cast<float>(v.get<double>()));
        }
        cache.insert(obj["text"].get<std::string>(), std::move(vector));
    }
    return cache;
}

std::size_t build_cache(const EmbeddingProvider& provider,
                        std::span<const std::string> texts,
                        const std::filesystem::path& path, CacheFormat format) {
    EmbeddingCache cache(provider.dim());
    for (const std::string& text : texts) {
        const std::uint64_t key = fnv1a64(nfc(text));
        if (cache.texts_.contains(key)) {
            // insert() distinguishes an exact duplicate from a collision.
            cache.insert(text, cache.entries_.at(key));
            continue;
        }
        cache.insert(text, provider.embed(text));
    }
    if (format == CacheFormat::binary) {
        cache.save_binary(path);
    } else {
        cache.save_jsonl(path);
    }
    return cache.size();
}

CacheProvider::CacheProvider(EmbeddingCache cache, std::string identity)
    : cache_(std::move(cache)), identity_(std::move(identity)) {}

CacheProvider CacheProvider::open(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    EmbeddingCache cache = (ext == ".jsonl" || ext == ".json")
                               ? EmbeddingCache::load_jsonl(path)
                               : EmbeddingCache::load_binary(path);
    return CacheProvider(std::move(cache), "cache:" + path.string());
}

EmbeddingVector CacheProvider::embed(std::string_view text) const {
    const std::uint64_t key = text_key(text);
    const EmbeddingVector* found = cache_.find(key);
    if (found == nullptr) {
        throw std::runtime_error("embedding cache miss for key " + std::to_string(key));
    }
    return *found;
}

double CosineScorer::score(std::string_view query, std::string_view passage) const {
    const EmbeddingVector q = provider_.embed(query);
    const EmbeddingVector p = provider_.embed(passage);
    double qq = 0.0, pp = 0.0, qp = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        qq += static_cast<double>(q[i]) * q[i];
        pp += static_cast<double>(p[i]) * p[i];
        qp += static_cast<double>(q[i]) * p[i];
    }
    if (qq == 0.0 || pp == 0.0) {
        throw std::runtime_error("cosine scorer: zero-norm embedding");
    }
    const double value = qp / (std::sqrt(qq) * std::sqrt(pp));
    return std::min(1.0, std::max(-1.0, value));
}

FileScorer FileScorer::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    FileScorer scorer;
    scorer.source_ = path.string();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object() || !obj.contains("query") ||
            !obj["query"].is_string() || !obj.contains("passage") ||
            !obj["passage"].is_string() || !obj.contains("score") ||
            !obj["score"].is_number()) {
            throw std::runtime_error("score file: malformed line " + std::to_string(line_no) +
                                     " of " + path.string());
        }
        const std::uint64_t qk = text_key(obj["query"].get<std::string>());
        const std::uint64_t pk = text_key(obj["passage"].get<std::string>());
        scorer.scores_[{qk, pk}] = obj["score"].get<double>();
    }
    return scorer;
}

double FileScorer::score(std::string_view query, std::string_view passage) const {
    const std::uint64_t qk = text_key(query);
    const std::uint64_t pk = text_key(passage);
    auto it = scores_.find({qk, pk});
    if (it == scores_.end()) {
        throw std::runtime_error("score file: no entry for keys (" + std::to_string(qk) + ", " +
                                 std::to_string(pk) + ")");
    }
    return it->second;
}

}  // namespace embedkit::providers
