#pragma once

#include <chrono>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rarft/core.hpp"

namespace rarft {

class EmbeddingProviderError : public Error {
public:
    using Error::Error;
};

class ZeroVector : public EmbeddingProviderError {
public:
    ZeroVector() : EmbeddingProviderError("cosine similarity of a zero vector is undefined") {}
};

class DimensionMismatch : public EmbeddingProviderError {
public:
    DimensionMismatch(size_t a, size_t b)
        : EmbeddingProviderError("vector dimensions differ: " + std::to_string(a) + " vs " +
                                 std::to_string(b)) {}
};

class EmptyText : public EmbeddingProviderError {
public:
    EmptyText() : EmbeddingProviderError("cannot embed empty text") {}
};

class AuthError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    using Error::Error;
};

/// An LLM response that cannot be parsed into the expected shape.
class LlmSchemaError : public Error {
public:
    using Error::Error;
};

/// dot(u,v)/(|u||v|), in [-1, 1]. Throws ZeroVector / DimensionMismatch.
double cosine_sim(std::span<const double> u, std::span<const double> v);

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    /// Deterministic within a provider session: same text, same vector.
    virtual std::vector<double> embed(const std::string& text) = 0;

    virtual std::vector<std::vector<double>> embed_many(const std::vector<std::string>& texts);

    virtual std::string provider_id() const = 0;
};

/// Cosine similarity of the two texts' embeddings.
double text_similarity(EmbeddingProvider& provider, const std::string& a, const std::string& b);

/// Deterministic local test double: token-level signed feature hashing into
/// a fixed number of buckets, L2-normalized. Identical texts map to identical
/// vectors on every platform (FNV-1a hashing, no std::hash); texts sharing no
/// tokens are near-orthogonal in expectation.
class HashingEmbedder : public EmbeddingProvider {
public:
    explicit HashingEmbedder(size_t dimensions = 256);

    std::vector<double> embed(const std::string& text) override;
    std::string provider_id() const override;
    size_t dimensions() const { return dimensions_; }

private:
    size_t dimensions_;
};

// ---------------------------------------------------------------------------
// LLM clients
// ---------------------------------------------------------------------------

enum class ResponseFormat { Json, Text };

struct CompletionOptions {
    ResponseFormat format = ResponseFormat::Json;
    double temperature = 0.0;
};

class LlmClient {
public:
    virtual ~LlmClient() = default;

    /// Returns the model's text completion. Implementations retry only on
    /// transport/5xx failures, never on well-formed model output.
    virtual std::string complete(const std::string& system_prompt, const std::string& user_payload,
                                 const CompletionOptions& options) = 0;

    virtual std::string model_id() const = 0;
};

/// Test double with a scripted queue of responses; records every request.
class ScriptedLlmClient : public LlmClient {
public:
    struct Request {
        std::string system_prompt;
        std::string user_payload;
        CompletionOptions options;
    };

    void push_response(std::string text);
    std::string complete(const std::string& system_prompt, const std::string& user_payload,
                         const CompletionOptions& options) override;
    std::string model_id() const override { return "scripted"; }

    size_t call_count() const;
    std::vector<Request> requests() const;

private:
    mutable std::mutex mutex_;
    std::deque<std::string> responses_;
    std::vector<Request> requests_;
};

/// Deterministic rule-based double covering the four shipped system prompts.
/// Recognizes the prompt it was sent and fabricates a schema-valid response
/// from the user payload alone, so whole pipelines run offline.
class MockLlmClient : public LlmClient {
public:
    std::string complete(const std::string& system_prompt, const std::string& user_payload,
                         const CompletionOptions& options) override;
    std::string model_id() const override { return "mock"; }
};

/// Serves responses recorded by the HTTP clients from a fixture directory;
/// raises TransportError when no fixture matches the request.
class ReplayLlmClient : public LlmClient {
public:
    explicit ReplayLlmClient(std::string fixture_dir);
    std::string complete(const std::string& system_prompt, const std::string& user_payload,
                         const CompletionOptions& options) override;
    std::string model_id() const override { return "replay"; }

private:
    std::string fixture_dir_;
};

// ---------------------------------------------------------------------------
// HTTP providers (OpenAI-compatible wire shape)
// ---------------------------------------------------------------------------

struct HttpRetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
};

struct HttpEmbedConfig {
    std::string endpoint;  // full URL, e.g. http://host:1234/v1/embeddings
    std::string model;
    std::string api_key_env = "RARFT_EMBED_API_KEY";
    size_t max_batch = 64;
    int max_in_flight = 8;
    HttpRetryPolicy retry;
    std::string record_dir;  // when set, request/response pairs are dumped here
};

/// POSTs {"model", "input": [texts]} and reads {"data": [{"embedding": [...]}]}.
/// Batches up to max_batch texts per request and caches vectors by
/// (provider_id, content hash) within the session.
class HttpEmbeddingClient : public EmbeddingProvider {
public:
    explicit HttpEmbeddingClient(HttpEmbedConfig config);
    ~HttpEmbeddingClient() override;

    std::vector<double> embed(const std::string& text) override;
    std::vector<std::vector<double>> embed_many(const std::vector<std::string>& texts) override;
    std::string provider_id() const override;

    size_t request_count() const;  // network requests issued (cache misses)

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct HttpLlmConfig {
    std::string endpoint;  // full URL, e.g. http://host:1234/v1/chat/completions
    std::string model;
    std::string api_key_env = "RARFT_LLM_API_KEY";
    std::chrono::milliseconds timeout{30000};
    HttpRetryPolicy retry;
    std::string record_dir;
};

class HttpLlmClient : public LlmClient {
public:
    explicit HttpLlmClient(HttpLlmConfig config);
    ~HttpLlmClient() override;

    std::string complete(const std::string& system_prompt, const std::string& user_payload,
                         const CompletionOptions& options) override;
    std::string model_id() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Stable fixture key for recording/replaying one completion request.
std::string completion_fixture_key(const std::string& system_prompt,
                                   const std::string& user_payload,
                                   const CompletionOptions& options);

}  // namespace rarft
