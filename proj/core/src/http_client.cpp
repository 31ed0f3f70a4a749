#include "embedkit/http_client.hpp"

#include <stdexcept>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "embedkit/parallel.hpp"

namespace embedkit::providers {

namespace {

using nlohmann::json;

struct ParsedUrl {
    std::string base;  // scheme://host:port
    std::string path;  // leading '/'
};

ParsedUrl parse_url(const std::string& endpoint) {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw std::invalid_argument("http_embed_batch: endpoint must include a scheme: " +
                                    endpoint);
    }
    const auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {endpoint, "/"};
    }
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

// One chunk round trip; returns rows. Throws on permanent failure.
std::vector<std::vector<double>> post_chunk(const ParsedUrl& url,
                                            std::span<const std::string> texts,
                                            const HttpEmbedOptions& options,
                                            std::size_t chunk_index) {
    json request;
    request["texts"] = json::array();
    for (const std::string& t : texts) request["texts"].push_back(t);
    const std::string body = request.dump();

    const auto describe = [&](const std::string& what) {
        return "http_embed_batch: chunk " + std::to_string(chunk_index) + ": " + what;
    };

    std::string last_error;
    for (std::size_t attempt = 1; attempt <= options.max_attempts; ++attempt) {
        httplib::Client client(url.base);
        const auto seconds =
            std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
        const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
            options.timeout - seconds);
        client.set_connection_timeout(seconds.count(), micros.count());
        client.set_read_timeout(seconds.count(), micros.count());
        client.set_write_timeout(seconds.count(), micros.count());
        if (!options.bearer_token.empty()) {
            client.set_bearer_token_auth(options.bearer_token);
        }

        httplib::Result result = client.Post(url.path, body, "application/json");
        if (!result) {
            last_error = "connection error (" + httplib::to_string(result.error()) + ")";
            continue;  // transient
        }
        if (result->status >= 500) {
            last_error = "server returned " + std::to_string(result->status);
            continue;  // transient
        }
        if (result->status < 200 || result->status >= 300) {
            throw std::runtime_error(describe("server returned " +
                                              std::to_string(result->status)));
        }

        json response = json::parse(result->body, nullptr, false);
        if (response.is_discarded() || !response.is_object() ||
            !response.contains("embeddings") || !response["embeddings"].is_array()) {
            throw std::runtime_error(describe("malformed response body"));
        }
        const json& rows = response["embeddings"];
        if (rows.size() != texts.size()) {
            throw std::runtime_error(describe("response has " + std::to_string(rows.size()) +
                                              " rows for " + std::to_string(texts.size()) +
                                              " texts"));
        }
        std::vector<std::vector<double>> out;
        out.reserve(rows.size());
        for (const json& row : rows) {
            if (!row.is_array() || row.empty()) {
                throw std::runtime_error(describe("malformed embedding row"));
            }
            std::vector<double> values;
            values.reserve(row.size());
            for (const json& v : row) {
                if (!v.is_number()) throw std::runtime_error(describe("non-numeric entry"));
                values.push_back(v.get<double>());
            }
            out.push_back(std::move(values));
        }
        return out;
    }
    throw std::runtime_error(describe("failed after " + std::to_string(options.max_attempts) +
                                      " attempts: " + last_error));
}

}  // namespace

Matrix http_embed_batch(const std::string& endpoint,
                        std::span<const std::string> texts,
                        const HttpEmbedOptions& options) {
    if (texts.empty()) throw std::invalid_argument("http_embed_batch: no texts");
    if (options.chunk_size == 0 || options.max_in_flight == 0 || options.max_attempts == 0) {
        throw std::invalid_argument("http_embed_batch: chunk_size, max_in_flight and "
                                    "max_attempts must be positive");
    }
    const ParsedUrl url = parse_url(endpoint);

    const std::size_t chunk_count =
        (texts.size() + options.chunk_size - 1) / options.chunk_size;
    std::vector<std::vector<std::vector<double>>> chunks(chunk_count);

    parallel_for(chunk_count, options.max_in_flight, [&](std::size_t c) {
        const std::size_t begin = c * options.chunk_size;
        const std::size_t end = std::min(begin + options.chunk_size, texts.size());
        chunks[c] = post_chunk(url, texts.subspan(begin, end - begin), options, c);
    });

    const std::size_t dim = chunks[0][0].size();
    Matrix out(texts.size(), dim);
    std::size_t row_index = 0;
    for (std::size_t c = 0; c < chunk_count; ++c) {
        for (const std::vector<double>& row : chunks[c]) {
            if (row.size() != dim) {
                throw std::runtime_error(
                    "http_embed_batch: dimension mismatch at input index " +
                    std::to_string(row_index) + " (" + std::to_string(row.size()) + " vs " +
                    std::to_string(dim) + ")");
            }
            for (std::size_t i = 0; i < dim; ++i) out.at(row_index, i) = row[i];
            ++row_index;
        }
    }
    return out;
}

HttpProvider::HttpProvider(std::string endpoint, HttpEmbedOptions options)
    : endpoint_(std::move(endpoint)), options_(std::move(options)) {}

std::size_t HttpProvider::dim() const {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!dim_) {
        throw std::runtime_error("http provider: dimension unknown before the first embed call");
    }
    return *dim_;
}

EmbeddingVector HttpProvider::embed(std::string_view text) const {
    const std::vector<std::string> texts{std::string(text)};
    const Matrix rows = http_embed_batch(endpoint_, texts, options_);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (!dim_) {
            dim_ = rows.cols();
        } else if (*dim_ != rows.cols()) {
            throw std::runtime_error("http provider: dimension changed from " +
                                     std::to_string(*dim_) + " to " +
                                     std::to_string(rows.cols()));
        }
    }
    EmbeddingVector out(rows.cols());
    for (std::size_t i = 0; i < rows.cols(); ++i) {
        out[i] = static_cast<float>(rows.at(0, i));
    }
    return out;
}

}  // namespace embedkit::providers
