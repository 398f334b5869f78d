#ifndef PERSPECTRA_LLMIO_HPP
#define PERSPECTRA_LLMIO_HPP

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "httplib.h"

#include "perspectra/embedding.hpp"
#include "perspectra/error.hpp"
#include "perspectra/tokenize.hpp"

// Client for OpenAI-compatible generation and embedding endpoints, plus the
// kit's factuality and token-probability endpoint contracts. Transient
// failures (transport errors, 429, 5xx) retry with exponential backoff and
// jitter; 400/401/404 fail immediately. The client bounds concurrent
// outstanding requests and is safe to share across threads.

namespace perspectra {

enum class EndpointKind { generation, embedding, factuality, token_probs };

inline std::string_view to_string(EndpointKind k) {
    switch (k) {
        case EndpointKind::generation: return "generation";
        case EndpointKind::embedding: return "embedding";
        case EndpointKind::factuality: return "factuality";
        case EndpointKind::token_probs: return "token-probs";
    }
    return "generation";
}

inline EndpointKind parse_endpoint_kind(std::string_view s) {
    if (s == "generation") return EndpointKind::generation;
    if (s == "embedding") return EndpointKind::embedding;
    if (s == "factuality") return EndpointKind::factuality;
    if (s == "token-probs") return EndpointKind::token_probs;
    throw ConfigError("unknown endpoint kind: '" + std::string(s) + "'");
}

struct EndpointConfig {
    std::string name;
    std::string base_url;
    std::string model;
    EndpointKind kind = EndpointKind::generation;
    bool per_token_embeddings = false;
};

struct ClientConfig {
    int max_attempts = 5;
    int base_backoff_ms = 500;   // doubles per attempt
    double jitter_frac = 0.2;    // each delay drawn from [1-j, 1+j] times nominal
    int max_in_flight = 4;
    int timeout_sec = 60;
    std::string api_key;         // usually from PERSPECTRA_API_KEY

    static ClientConfig from_env() {
        ClientConfig cfg;
        if (const char* key = std::getenv("PERSPECTRA_API_KEY")) cfg.api_key = key;
        return cfg;
    }
};

struct GenRequest {
    std::string system;
    std::string user;
    int max_tokens = 256;
    double temperature = 0.1;
    long long seed = 42;
    std::string model;  // empty means: use the endpoint's model

    void validate() const {
        if (max_tokens < 1) throw ValidationError("GenRequest: max_tokens must be >= 1");
        if (temperature < 0.0) throw ValidationError("GenRequest: temperature must be >= 0");
    }
};

struct GenResult {
    std::string text;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    long long latency_ms = 0;
    int attempts = 1;
};

namespace detail {

class BoundedSlots {
public:
    explicit BoundedSlots(int limit) : limit_(std::max(1, limit)) {}

    void acquire() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return in_use_ < limit_; });
        ++in_use_;
    }

    void release() {
        {
            std::lock_guard lock(mu_);
            --in_use_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int limit_;
    int in_use_ = 0;
};

struct SlotGuard {
    BoundedSlots& slots;
    explicit SlotGuard(BoundedSlots& s) : slots(s) { slots.acquire(); }
    ~SlotGuard() { slots.release(); }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;
};

}  // namespace detail

class LlmClient {
public:
    explicit LlmClient(ClientConfig config = ClientConfig::from_env())
        : config_(std::move(config)), slots_(config_.max_in_flight) {}

    struct PostResult {
        nlohmann::json body;
        int attempts = 1;
        long long latency_ms = 0;
    };

    // POSTs JSON with the retry/backoff policy; the in-flight bound is held
    // per HTTP attempt, not across backoff sleeps.
    PostResult post_json(const EndpointConfig& endpoint, const std::string& path,
                         const nlohmann::json& payload) {
        const auto started = std::chrono::steady_clock::now();
        const std::string body = payload.dump();
        int last_status = 0;
        std::string last_body;
        for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
            httplib::Result res = [&] {
                detail::SlotGuard guard(slots_);
                httplib::Client cli(endpoint.base_url);
                cli.set_connection_timeout(config_.timeout_sec, 0);
                cli.set_read_timeout(config_.timeout_sec, 0);
                cli.set_write_timeout(config_.timeout_sec, 0);
                if (!config_.api_key.empty()) cli.set_bearer_token_auth(config_.api_key);
                return cli.Post(path, body, "application/json");
            }();
            const auto elapsed = [&] {
                return std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - started)
                    .count();
            };
            if (res) {
                last_status = res->status;
                last_body = res->body;
                if (res->status >= 200 && res->status < 300) {
                    nlohmann::json parsed;
                    try {
                        parsed = nlohmann::json::parse(res->body);
                    } catch (const nlohmann::json::exception& e) {
                        throw HttpError("endpoint '" + endpoint.name + "' returned invalid JSON: " +
                                            e.what(),
                                        res->status, res->body, attempt);
                    }
                    return PostResult{std::move(parsed), attempt, elapsed()};
                }
                const bool retryable = res->status == 429 || res->status >= 500;
                if (!retryable)
                    throw HttpError("endpoint '" + endpoint.name + "' " + path + " failed with status " +
                                        std::to_string(res->status),
                                    res->status, res->body, attempt);
            } else {
                last_status = 0;
                last_body = httplib::to_string(res.error());
            }
            if (attempt == config_.max_attempts)
                throw HttpError("endpoint '" + endpoint.name + "' " + path + " failed after " +
                                    std::to_string(attempt) + " attempts; last status " +
                                    std::to_string(last_status),
                                last_status, last_body, attempt, /*exhausted=*/true);
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms(attempt)));
        }
        throw HttpError("unreachable", last_status, last_body, config_.max_attempts);
    }

    GenResult chat_complete(const GenRequest& request, const EndpointConfig& endpoint) {
        request.validate();
        nlohmann::json messages = nlohmann::json::array();
        if (!request.system.empty())
            messages.push_back({{"role", "system"}, {"content", request.system}});
        messages.push_back({{"role", "user"}, {"content", request.user}});
        const nlohmann::json payload = {
            {"model", request.model.empty() ? endpoint.model : request.model},
            {"messages", std::move(messages)},
            {"max_tokens", request.max_tokens},
            {"temperature", request.temperature},
            {"seed", request.seed},
        };
        PostResult post = post_json(endpoint, "/v1/chat/completions", payload);
        GenResult out;
        out.attempts = post.attempts;
        out.latency_ms = post.latency_ms;
        try {
            out.text = post.body.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw HttpError("endpoint '" + endpoint.name + "' chat response missing choices: " +
                                e.what(),
                            200, post.body.dump(), post.attempts);
        }
        if (post.body.contains("usage") && post.body["usage"].is_object()) {
            const auto& usage = post.body["usage"];
            out.prompt_tokens = usage.value("prompt_tokens", 0LL);
            out.completion_tokens = usage.value("completion_tokens", 0LL);
        }
        return out;
    }

    // Requests one vector per kit word token. Endpoints that advertise
    // per-token support get the text plus the token grid in one call; plain
    // whole-text embedding endpoints get one input per token, each wrapped in
    // a fixed +-2 token context window.
    TokenEmbeddings embed_tokens(const std::string& text, const EndpointConfig& endpoint) {
        const TokenSeq tokens = tokenize_words(text);
        if (tokens.empty())
            throw ValidationError("embed_tokens: text has no word tokens");
        nlohmann::json payload;
        if (endpoint.per_token_embeddings) {
            nlohmann::json jtokens = nlohmann::json::array();
            for (const auto& t : tokens)
                jtokens.push_back({{"text", t.text}, {"start", t.start}, {"end", t.end}});
            payload = {{"model", endpoint.model}, {"input", text}, {"tokens", std::move(jtokens)}};
        } else {
            nlohmann::json inputs = nlohmann::json::array();
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                const std::size_t lo = i >= kContextWindow ? i - kContextWindow : 0;
                const std::size_t hi = std::min(tokens.size(), i + kContextWindow + 1);
                std::string ctx;
                for (std::size_t j = lo; j < hi; ++j) {
                    if (!ctx.empty()) ctx += ' ';
                    ctx += tokens[j].text;
                }
                inputs.push_back(std::move(ctx));
            }
            payload = {{"model", endpoint.model}, {"input", std::move(inputs)}};
        }
        PostResult post = post_json(endpoint, "/v1/embeddings", payload);

        TokenEmbeddings out;
        for (const auto& t : tokens) out.tokens.push_back(t.text);
        if (!post.body.contains("data") || !post.body["data"].is_array())
            throw HttpError("endpoint '" + endpoint.name + "' embeddings response missing data",
                            200, post.body.dump(), post.attempts);
        std::vector<std::pair<long long, std::vector<double>>> rows;
        long long fallback_index = 0;
        for (const auto& item : post.body["data"]) {
            const long long idx = item.value("index", fallback_index);
            ++fallback_index;
            rows.emplace_back(idx, item.at("embedding").get<std::vector<double>>());
        }
        std::sort(rows.begin(), rows.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& [idx, vec] : rows) out.vectors.push_back(std::move(vec));
        if (out.vectors.size() != tokens.size())
            throw HttpError("endpoint '" + endpoint.name + "' returned " +
                                std::to_string(out.vectors.size()) + " embeddings for " +
                                std::to_string(tokens.size()) + " tokens",
                            200, "", post.attempts);
        const std::size_t dim = out.vectors.front().size();
        for (const auto& v : out.vectors)
            if (v.empty() || v.size() != dim)
                throw HttpError("endpoint '" + endpoint.name + "' returned ragged embedding dims",
                                200, "", post.attempts);
        return out;
    }

    // Builds a TokenEmbedder bound to one endpoint, for metric code.
    TokenEmbedder embedder_for(const EndpointConfig& endpoint) {
        return [this, endpoint](const std::string& text) { return embed_tokens(text, endpoint); };
    }

    std::pair<std::optional<double>, std::optional<double>> factuality(
        const std::string& candidate, const std::string& reference,
        const EndpointConfig& endpoint) {
        const nlohmann::json payload = {{"candidate", candidate}, {"reference", reference}};
        PostResult post = post_json(endpoint, "/v1/factuality", payload);
        std::optional<double> align, summac;
        if (post.body.contains("alignscore") && post.body["alignscore"].is_number())
            align = post.body["alignscore"].get<double>();
        if (post.body.contains("summac") && post.body["summac"].is_number())
            summac = post.body["summac"].get<double>();
        return {align, summac};
    }

    // Provider endpoint for span probabilities aligned to the kit token grid.
    std::vector<std::vector<double>> token_probs(const std::string& text, const TokenSeq& tokens,
                                                 const EndpointConfig& endpoint) {
        nlohmann::json jtokens = nlohmann::json::array();
        for (const auto& t : tokens)
            jtokens.push_back({{"text", t.text}, {"start", t.start}, {"end", t.end}});
        const nlohmann::json payload = {{"text", text}, {"tokens", std::move(jtokens)}};
        PostResult post = post_json(endpoint, "/v1/token-probs", payload);
        try {
            return post.body.at("rows").get<std::vector<std::vector<double>>>();
        } catch (const nlohmann::json::exception& e) {
            throw HttpError("endpoint '" + endpoint.name + "' token-probs response missing rows: " +
                                e.what(),
                            200, post.body.dump(), post.attempts);
        }
    }

    const ClientConfig& config() const { return config_; }

private:
    static constexpr std::size_t kContextWindow = 2;

    long long backoff_ms(int attempt) const {
        double nominal = static_cast<double>(config_.base_backoff_ms);
        for (int i = 1; i < attempt; ++i) nominal *= 2.0;
        thread_local std::mt19937_64 rng{std::random_device{}()};
        std::uniform_real_distribution<double> jitter(1.0 - config_.jitter_frac,
                                                      1.0 + config_.jitter_frac);
        return static_cast<long long>(nominal * jitter(rng));
    }

    ClientConfig config_;
    detail::BoundedSlots slots_;
};

}  // namespace perspectra

#endif
