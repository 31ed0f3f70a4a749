#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "embedkit/http_client.hpp"

using namespace embedkit;
using nlohmann::json;

namespace {

// Local mock embedding service; the handler decides status and body per
// request.
class MockServer {
public:
    using Handler = std::function<void(const json& request, int call_index,
                                       httplib::Response& response)>;

    explicit MockServer(Handler handler) : handler_(std::move(handler)) {
        server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
            const int index = calls_.fetch_add(1);
            handler_(json::parse(req.body), index, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockServer() {
        server_.stop();
        thread_.join();
    }

    std::string endpoint() const {
        return "http://127.0.0.1:" + std::to_string(port_) + "/embed";
    }
    int calls() const { return calls_.load(); }

private:
    Handler handler_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<int> calls_{0};
};

// Maps "text<i>" to the vector [i, i, i].
void echo_by_index(const json& request, int, httplib::Response& response) {
    json out;
    out["embeddings"] = json::array();
    for (const auto& text : request["texts"]) {
        const std::string t = text.get<std::string>();
        const double value = std::stod(t.substr(t.find_last_of(' ') + 1));
        out["embeddings"].push_back({value, value, value});
    }
    response.set_content(out.dump(), "application/json");
}

}  // namespace

TEST_CASE("http_embed_batch reassembles chunked responses in order") {
    MockServer server(echo_by_index);
    std::vector<std::string> texts;
    for (int i = 0; i < 10; ++i) texts.push_back("text " + std::to_string(i));

    providers::HttpEmbedOptions options;
    options.chunk_size = 3;
    options.max_in_flight = 4;
    const Matrix result = providers::http_embed_batch(server.endpoint(), texts, options);
    REQUIRE(result.rows() == 10);
    REQUIRE(result.cols() == 3);
    for (int i = 0; i < 10; ++i) {
        CHECK(result.at(i, 0) == static_cast<double>(i));
        CHECK(result.at(i, 2) == static_cast<double>(i));
    }
    CHECK(server.calls() == 4);  // ceil(10 / 3)
}

TEST_CASE("transient failures are retried up to the attempt budget") {
    MockServer server([](const json& request, int call_index, httplib::Response& response) {
        if (call_index < 2) {
            response.status = 500;
            response.set_content("busy", "text/plain");
            return;
        }
        echo_by_index(request, call_index, response);
    });
    const std::vector<std::string> texts = {"text 7"};

    providers::HttpEmbedOptions options;
    options.max_attempts = 3;
    const Matrix result = providers::http_embed_batch(server.endpoint(), texts, options);
    CHECK(result.at(0, 0) == 7.0);
    CHECK(server.calls() == 3);
}

TEST_CASE("non-2xx after retries is an error") {
    MockServer server([](const json&, int, httplib::Response& response) {
        response.status = 503;
    });
    providers::HttpEmbedOptions options;
    options.max_attempts = 2;
    const std::vector<std::string> texts = {"text 1"};
    CHECK_THROWS_WITH_AS(providers::http_embed_batch(server.endpoint(), texts, options),
                         doctest::Contains("failed after 2 attempts"), std::runtime_error);
    CHECK(server.calls() == 2);
}

TEST_CASE("client errors are not retried") {
    MockServer server([](const json&, int, httplib::Response& response) {
        response.status = 404;
    });
    const std::vector<std::string> texts = {"text 1"};
    CHECK_THROWS_WITH_AS(providers::http_embed_batch(server.endpoint(), texts, {}),
                         doctest::Contains("404"), std::runtime_error);
    CHECK(server.calls() == 1);
}

TEST_CASE("dimension mismatch across chunks is rejected") {
    MockServer server([](const json& request, int call_index, httplib::Response& response) {
        json out;
        out["embeddings"] = json::array();
        for (std::size_t i = 0; i < request["texts"].size(); ++i) {
            if (call_index == 0) {
                out["embeddings"].push_back({1.0, 2.0});
            } else {
                out["embeddings"].push_back({1.0, 2.0, 3.0});
            }
        }
        response.set_content(out.dump(), "application/json");
    });
    const std::vector<std::string> texts = {"a", "b"};
    providers::HttpEmbedOptions options;
    options.chunk_size = 1;
    options.max_in_flight = 1;
    CHECK_THROWS_WITH_AS(providers::http_embed_batch(server.endpoint(), texts, options),
                         doctest::Contains("dimension mismatch"), std::runtime_error);
}

TEST_CASE("row count mismatch is rejected") {
    MockServer server([](const json&, int, httplib::Response& response) {
        response.set_content("{\"embeddings\":[[1.0,2.0]]}", "application/json");
    });
    const std::vector<std::string> texts = {"a", "b"};
    CHECK_THROWS_WITH_AS(providers::http_embed_batch(server.endpoint(), texts, {}),
                         doctest::Contains("2 texts"), std::runtime_error);
}

TEST_CASE("http provider learns its dimension from the first response") {
    MockServer server(echo_by_index);
    const providers::HttpProvider provider(server.endpoint());
    CHECK_THROWS(provider.dim());
    const auto vector = provider.embed("text 4");
    REQUIRE(vector.size() == 3);
    CHECK(vector[0] == 4.0f);
    CHECK(provider.dim() == 3);
}

TEST_CASE("connection errors surface after the retry budget") {
    providers::HttpEmbedOptions options;
    options.max_attempts = 2;
    options.timeout = std::chrono::milliseconds(300);
    const std::vector<std::string> texts = {"a"};
    // nothing listens on this port
    CHECK_THROWS_WITH_AS(
        providers::http_embed_batch("http://127.0.0.1:9/embed", texts, options),
        doctest::Contains("connection error"), std::runtime_error);
}
