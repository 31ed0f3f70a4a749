#pragma once

// Shared test doubles and scratch-space helpers.

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "embedkit/providers.hpp"
#include "embedkit/rng.hpp"
#include "embedkit/utf8.hpp"

namespace testsupport {

// Provider with hand-picked vectors; unknown texts are an error.
class FixedProvider final : public embedkit::providers::EmbeddingProvider {
public:
    FixedProvider(std::size_t dim,
                  std::map<std::string, embedkit::providers::EmbeddingVector> vectors)
        : dim_(dim), vectors_(std::move(vectors)) {}

    std::size_t dim() const override { return dim_; }
    std::string identity() const override { return "fixed"; }
    embedkit::providers::EmbeddingVector embed(std::string_view text) const override {
        auto it = vectors_.find(std::string(text));
        if (it == vectors_.end()) {
            throw std::runtime_error("fixed provider: unknown text '" + std::string(text) + "'");
        }
        return it->second;
    }

private:
    std::size_t dim_;
    std::map<std::string, embedkit::providers::EmbeddingVector> vectors_;
};

// Scorer reading r(q, p) from a (query, passage) -> score table.
class MapScorer final : public embedkit::providers::RelevanceScorer {
public:
    explicit MapScorer(std::map<std::pair<std::string, std::string>, double> scores)
        : scores_(std::move(scores)) {}

    std::string identity() const override { return "map"; }
    double score(std::string_view query, std::string_view passage) const override {
        auto it = scores_.find({std::string(query), std::string(passage)});
        if (it == scores_.end()) {
            throw std::runtime_error("map scorer: no entry");
        }
        return it->second;
    }

private:
    std::map<std::pair<std::string, std::string>, double> scores_;
};

class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        const auto base = std::filesystem::temp_directory_path();
        path_ = base / ("embedkit_test_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path file(const std::string& name) const { return path_ / name; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Random printable ASCII text.
inline std::string random_ascii(embedkit::Rng& rng, std::size_t min_len, std::size_t max_len) {
    const std::size_t len = min_len + rng.next_below(max_len - min_len + 1);
    std::string out;
    out.reserve(len);
    for (std::size_t i = 0; i < len; ++i) {
        out.push_back(static_cast<char>(0x20 + rng.next_below(0x5f)));
    }
    return out;
}

// Random UTF-8 text mixing ASCII, Latin supplements, combining marks, spaces
// and a few control characters.
inline std::string random_unicode(embedkit::Rng& rng, std::size_t max_cps) {
    const std::size_t len = rng.next_below(max_cps + 1);
    std::string out;
    for (std::size_t i = 0; i < len; ++i) {
        char32_t cp;
        switch (rng.next_below(8)) {
            case 0: cp = static_cast<char32_t>(0x41 + rng.next_below(26)); break;        // A-Z
            case 1: cp = static_cast<char32_t>(0x61 + rng.next_below(26)); break;        // a-z
            case 2: cp = static_cast<char32_t>(0xC0 + rng.next_below(0x40)); break;      // Latin-1
            case 3: cp = static_cast<char32_t>(0x300 + rng.next_below(0x30)); break;     // marks
            case 4: cp = U' '; break;
            case 5: cp = (rng.next_below(2) == 0) ? U'\t' : U'\n'; break;
            case 6: cp = static_cast<char32_t>(0x3B1 + rng.next_below(16)); break;       // Greek
            default: cp = static_cast<char32_t>(0x20 + rng.next_below(0x5f)); break;
        }
        embedkit::utf8_append(out, cp);
    }
    return out;
}

}  // namespace testsupport
