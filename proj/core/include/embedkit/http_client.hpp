#pragma once

#include <chrono>
#include <cstddef>
#include <mutex>
#include <optional>
#include <span>
#include <string>

#include "embedkit/matrix.hpp"
#include "embedkit/providers.hpp"

namespace embedkit::providers {

struct HttpEmbedOptions {
    std::size_t chunk_size = 64;     // texts per request
    std::size_t max_in_flight = 4;   // concurrent requests
    std::size_t max_attempts = 3;    // total tries per chunk on transient failures
    std::chrono::milliseconds timeout{5000};
    std::string bearer_token;        // optional Authorization header
};

// POSTs {"texts":[...]} in chunks to the endpoint and reassembles the
// {"embeddings":[[...]...]} responses in input order. Connection errors and
// 5xx responses are retried idempotently up to max_attempts; inconsistent
// embedding dimensions across rows or chunks are an error.
Matrix http_embed_batch(const std::string& endpoint,
                        std::span<const std::string> texts,
                        const HttpEmbedOptions& options = {});

// EmbeddingProvider face over http_embed_batch (one text per request). The
// dimension is learned from the first response.
class HttpProvider final : public EmbeddingProvider {
public:
    explicit HttpProvider(std::string endpoint, HttpEmbedOptions options = {});

    std::size_t dim() const override;
    std::string identity() const override { return "http:" + endpoint_; }
    EmbeddingVector embed(std::string_view text) const override;

private:
    std::string endpoint_;
    HttpEmbedOptions options_;
    mutable std::mutex mutex_;
    mutable std::optional<std::size_t> dim_;
};

}  // namespace embedkit::providers
