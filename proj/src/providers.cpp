#include "rarft/providers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <semaphore>
#include <set>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

#include "rarft/digest.hpp"
#include "rarft/prompts.hpp"
#include "rarft/strings.hpp"

namespace rarft {

using nlohmann::json;

namespace {

uint64_t fnv1a(std::string_view data, uint64_t seed = 1469598103934665603ULL) {
    uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

}  // namespace

double cosine_sim(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw DimensionMismatch(u.size(), v.size());
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) throw ZeroVector();
    // rounding can push the quotient marginally outside the cosine range
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::vector<std::vector<double>> EmbeddingProvider::embed_many(
    const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
}

double text_similarity(EmbeddingProvider& provider, const std::string& a, const std::string& b) {
    const auto ua = provider.embed(a);
    const auto ub = provider.embed(b);
    return cosine_sim(ua, ub);
}

// ---------------------------------------------------------------------------
// HashingEmbedder
// ---------------------------------------------------------------------------

HashingEmbedder::HashingEmbedder(size_t dimensions) : dimensions_(dimensions) {
    if (dimensions_ == 0) throw EmbeddingProviderError("embedding dimension must be positive");
}

std::vector<double> HashingEmbedder::embed(const std::string& text) {
    if (text.empty()) throw EmptyText();

    auto tokens = tokenize(text);
    if (tokens.empty()) tokens.push_back(text);  // keep the vector nonzero for symbol-only text

    std::vector<double> vec(dimensions_, 0.0);
    for (const auto& token : tokens) {
        const uint64_t h = fnv1a(token);
        const size_t bucket = h % dimensions_;
        const double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
        vec[bucket] += sign;
    }

    double norm = 0.0;
    for (double x : vec) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        // Signed counts cancelled exactly; fall back to a one-hot on the
        // whole-text hash so determinism and non-nullity both hold.
        vec.assign(dimensions_, 0.0);
        vec[fnv1a(text) % dimensions_] = 1.0;
        return vec;
    }
    for (double& x : vec) x /= norm;
    return vec;
}

std::string HashingEmbedder::provider_id() const {
    return "hash-fnv1a/" + std::to_string(dimensions_);
}

// ---------------------------------------------------------------------------
// ScriptedLlmClient
// ---------------------------------------------------------------------------

void ScriptedLlmClient::push_response(std::string text) {
    std::lock_guard lock(mutex_);
    responses_.push_back(std::move(text));
}

std::string ScriptedLlmClient::complete(const std::string& system_prompt,
                                        const std::string& user_payload,
                                        const CompletionOptions& options) {
    std::lock_guard lock(mutex_);
    requests_.push_back({system_prompt, user_payload, options});
    if (responses_.empty()) throw TransportError("scripted llm: response queue exhausted");
    std::string response = std::move(responses_.front());
    responses_.pop_front();
    return response;
}

size_t ScriptedLlmClient::call_count() const {
    std::lock_guard lock(mutex_);
    return requests_.size();
}

std::vector<ScriptedLlmClient::Request> ScriptedLlmClient::requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
}

// ---------------------------------------------------------------------------
// MockLlmClient
// ---------------------------------------------------------------------------

namespace {

json mock_extract_categories(const json& payload) {
    const std::string query = payload.at("related_query").get<std::string>();
    const auto& cats = all_categories();
    const uint64_t h = fnv1a(query);
    json eligible = json::array();
    for (int k = 0; k < 3; ++k) {
        const auto& cat = cats[(h + 4 * static_cast<uint64_t>(k)) % cats.size()];
        eligible.push_back({{"path", category_path(cat)},
                            {"reason", "mock: stable pick " + std::to_string(k) + " for this query"}});
    }
    return json{{"eligible_categories", eligible}};
}

json mock_generate_negatives(const json& payload) {
    const std::string related_query = payload.at("related_query").get<std::string>();
    json negs = json::object();
    for (const auto& plan : payload.at("plans")) {
        const std::string difficulty = plan.at("difficulty").get<std::string>();
        std::vector<std::string> paths;
        for (const auto& c : plan.at("applied_categories")) {
            paths.push_back(c.at("path").get<std::string>());
        }

        std::string joined;
        for (size_t i = 0; i < paths.size(); ++i) {
            joined += paths[i];
            if (i + 1 < paths.size()) joined += ", ";
        }

        std::string reasoning = "<irrelevant_answer>The query is not relevant to the video: it was altered along " +
                                joined + " and the described content does not appear.</irrelevant_answer>";
        json applied = json::array();
        for (const auto& path : paths) {
            applied.push_back({{"path", path}});
            const std::string tag = category_tag(parse_category_path(path));
            reasoning += "<" + tag + ">The video does not support the query's " + path +
                         " interpretation.</" + tag + ">";
        }

        negs[difficulty] = {{"irrel_query", related_query + " [" + difficulty + " variant]"},
                            {"applied_categories", applied},
                            {"reasoning", reasoning},
                            {"difficulty_tag", difficulty}};
    }
    return json{{"negs", negs}};
}

json mock_judge_categories(const json& payload) {
    const std::string text = payload.at("generated_response").get<std::string>();
    json found = json::array();
    for (const auto& cat : all_categories()) {
        if (text.find(category_path(cat)) != std::string::npos ||
            text.find(category_tag(cat)) != std::string::npos) {
            found.push_back(category_path(cat));
        }
    }
    return found;
}

std::string mock_consistency_score(const json& payload) {
    const auto gen = tokenize(payload.at("generated_response").get<std::string>());
    const auto ref = tokenize(payload.at("gt_response").get<std::string>());
    const std::set<std::string> a(gen.begin(), gen.end());
    const std::set<std::string> b(ref.begin(), ref.end());
    std::vector<std::string> inter;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
    const size_t uni = a.size() + b.size() - inter.size();
    const double jaccard = uni == 0 ? 0.0 : static_cast<double>(inter.size()) / static_cast<double>(uni);
    const double score = std::round(jaccard * 50.0) / 10.0;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "{'score': %.1f}", score);
    return buf;
}

}  // namespace

std::string MockLlmClient::complete(const std::string& system_prompt,
                                    const std::string& user_payload,
                                    const CompletionOptions& /*options*/) {
    json payload;
    try {
        payload = json::parse(user_payload);
    } catch (const json::exception& e) {
        throw TransportError(std::string("mock llm: user payload is not JSON: ") + e.what());
    }

    try {
        if (system_prompt == prompts::category_extraction()) {
            return mock_extract_categories(payload).dump();
        }
        if (system_prompt == prompts::negative_generation()) {
            return mock_generate_negatives(payload).dump();
        }
        if (system_prompt == prompts::category_judge()) {
            return mock_judge_categories(payload).dump();
        }
        if (system_prompt == prompts::consistency_score()) {
            return mock_consistency_score(payload);
        }
    } catch (const json::exception& e) {
        throw TransportError(std::string("mock llm: payload missing fields: ") + e.what());
    }
    throw TransportError("mock llm: unrecognized system prompt");
}

// ---------------------------------------------------------------------------
// Fixture record/replay
// ---------------------------------------------------------------------------

std::string completion_fixture_key(const std::string& system_prompt,
                                   const std::string& user_payload,
                                   const CompletionOptions& options) {
    json key = {{"system", system_prompt},
                {"user", user_payload},
                {"format", options.format == ResponseFormat::Json ? "json" : "text"},
                {"temperature", options.temperature}};
    return sha256_hex(key.dump());
}

namespace {

void write_fixture(const std::string& dir, const std::string& key, const json& request,
                   const std::string& response) {
    std::filesystem::create_directories(dir);
    const auto path = std::filesystem::path(dir) / (key + ".json");
    const auto tmp = std::filesystem::path(dir) / (key + ".json.tmp");
    {
        std::ofstream out(tmp);
        out << json{{"request", request}, {"response", response}}.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
}

std::optional<std::string> read_fixture(const std::string& dir, const std::string& key) {
    const auto path = std::filesystem::path(dir) / (key + ".json");
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.contains("response")) return std::nullopt;
    return doc["response"].get<std::string>();
}

}  // namespace

ReplayLlmClient::ReplayLlmClient(std::string fixture_dir) : fixture_dir_(std::move(fixture_dir)) {}

std::string ReplayLlmClient::complete(const std::string& system_prompt,
                                      const std::string& user_payload,
                                      const CompletionOptions& options) {
    const std::string key = completion_fixture_key(system_prompt, user_payload, options);
    if (auto response = read_fixture(fixture_dir_, key)) return *response;
    throw TransportError("replay llm: no fixture for request " + key + " in " + fixture_dir_);
}

// ---------------------------------------------------------------------------
// Shared HTTP plumbing
// ---------------------------------------------------------------------------

namespace {

struct ParsedUrl {
    std::string base;  // scheme://host[:port]
    std::string path;
};

ParsedUrl split_url(const std::string& endpoint) {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw TransportError("endpoint must include a scheme: " + endpoint);
    }
    const auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

std::string resolve_api_key(const std::string& env_name) {
    if (env_name.empty()) return "";
    const char* value = std::getenv(env_name.c_str());
    if (!value || !*value) {
        throw AuthError("environment variable " + env_name + " is not set");
    }
    return value;
}

// Issues one POST with the retry policy: transport failures and 5xx retry
// with exponential backoff, 401/403 raise AuthError immediately, other
// statuses raise TransportError without retry.
httplib::Result post_with_retry(httplib::Client& client, const std::string& path,
                                const httplib::Headers& headers, const std::string& body,
                                const HttpRetryPolicy& retry, const std::string& what) {
    auto backoff = retry.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        auto res = client.Post(path, headers, body, "application/json");
        if (res) {
            if (res->status == 200) return res;
            if (res->status == 401 || res->status == 403) {
                throw AuthError(what + ": authentication rejected (" +
                                std::to_string(res->status) + ")");
            }
            if (res->status < 500) {
                throw TransportError(what + ": request failed with status " +
                                     std::to_string(res->status));
            }
        }
        if (attempt >= retry.max_attempts) {
            const std::string reason =
                res ? "status " + std::to_string(res->status) : "connection failure";
            throw TransportError(what + ": giving up after " + std::to_string(attempt) +
                                 " attempts (" + reason + ")");
        }
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// HttpEmbeddingClient
// ---------------------------------------------------------------------------

struct HttpEmbeddingClient::Impl {
    HttpEmbedConfig config;
    ParsedUrl url;
    httplib::Client client;
    std::counting_semaphore<256> in_flight;

    std::mutex cache_mutex;
    std::unordered_map<std::string, std::vector<double>> cache;
    size_t requests_issued = 0;

    Impl(HttpEmbedConfig cfg)
        : config(std::move(cfg)),
          url(split_url(config.endpoint)),
          client(url.base),
          in_flight(std::min(config.max_in_flight, 256)) {
        client.set_connection_timeout(std::chrono::seconds(10));
        client.set_read_timeout(std::chrono::seconds(60));
    }
};

HttpEmbeddingClient::HttpEmbeddingClient(HttpEmbedConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpEmbeddingClient::~HttpEmbeddingClient() = default;

std::string HttpEmbeddingClient::provider_id() const {
    return "http/" + impl_->config.model;
}

size_t HttpEmbeddingClient::request_count() const {
    std::lock_guard lock(impl_->cache_mutex);
    return impl_->requests_issued;
}

std::vector<double> HttpEmbeddingClient::embed(const std::string& text) {
    return embed_many({text}).front();
}

std::vector<std::vector<double>> HttpEmbeddingClient::embed_many(
    const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out(texts.size());
    std::vector<size_t> pending;  // indices not served from cache

    {
        std::lock_guard lock(impl_->cache_mutex);
        for (size_t i = 0; i < texts.size(); ++i) {
            if (texts[i].empty()) throw EmptyText();
            auto it = impl_->cache.find(texts[i]);
            if (it != impl_->cache.end()) {
                out[i] = it->second;
            } else {
                pending.push_back(i);
            }
        }
    }

    const std::string api_key = resolve_api_key(impl_->config.api_key_env);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

    for (size_t chunk_begin = 0; chunk_begin < pending.size();
         chunk_begin += impl_->config.max_batch) {
        const size_t chunk_end = std::min(pending.size(), chunk_begin + impl_->config.max_batch);

        json request;
        request["model"] = impl_->config.model;
        request["input"] = json::array();
        for (size_t k = chunk_begin; k < chunk_end; ++k) {
            request["input"].push_back(texts[pending[k]]);
        }

        impl_->in_flight.acquire();
        httplib::Result res;
        try {
            res = post_with_retry(impl_->client, impl_->url.path, headers, request.dump(),
                                  impl_->config.retry, "embeddings");
        } catch (...) {
            impl_->in_flight.release();
            throw;
        }
        impl_->in_flight.release();

        json doc = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
        if (doc.is_discarded() || !doc.contains("data") || !doc["data"].is_array() ||
            doc["data"].size() != chunk_end - chunk_begin) {
            throw SchemaError("data", "embeddings response has unexpected shape");
        }

        std::lock_guard lock(impl_->cache_mutex);
        impl_->requests_issued += 1;
        for (size_t slot = 0; slot < doc["data"].size(); ++slot) {
            const auto& item = doc["data"][slot];
            const size_t position =
                item.contains("index") ? item["index"].get<size_t>() : slot;
            if (position >= chunk_end - chunk_begin || !item.contains("embedding") ||
                !item["embedding"].is_array()) {
                throw SchemaError("embedding", "embeddings response has unexpected shape");
            }
            std::vector<double> vec = item["embedding"].get<std::vector<double>>();
            for (double x : vec) {
                if (!std::isfinite(x)) throw SchemaError("embedding", "non-finite component");
            }
            const size_t index = pending[chunk_begin + position];
            impl_->cache[texts[index]] = vec;
            out[index] = std::move(vec);
        }

        if (!impl_->config.record_dir.empty()) {
            const std::string key = sha256_hex(request.dump());
            write_fixture(impl_->config.record_dir, key, request, res->body);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// HttpLlmClient
// ---------------------------------------------------------------------------

struct HttpLlmClient::Impl {
    HttpLlmConfig config;
    ParsedUrl url;
    httplib::Client client;

    Impl(HttpLlmConfig cfg)
        : config(std::move(cfg)), url(split_url(config.endpoint)), client(url.base) {
        client.set_connection_timeout(config.timeout);
        client.set_read_timeout(config.timeout);
    }
};

HttpLlmClient::HttpLlmClient(HttpLlmConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpLlmClient::~HttpLlmClient() = default;

std::string HttpLlmClient::model_id() const { return impl_->config.model; }

std::string HttpLlmClient::complete(const std::string& system_prompt,
                                    const std::string& user_payload,
                                    const CompletionOptions& options) {
    const std::string api_key = resolve_api_key(impl_->config.api_key_env);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

    json request;
    request["model"] = impl_->config.model;
    request["temperature"] = options.temperature;
    request["messages"] = json::array({json{{"role", "system"}, {"content", system_prompt}},
                                       json{{"role", "user"}, {"content", user_payload}}});
    if (options.format == ResponseFormat::Json) {
        request["response_format"] = {{"type", "json_object"}};
    }

    auto res = post_with_retry(impl_->client, impl_->url.path, headers, request.dump(),
                               impl_->config.retry, "chat completion");

    json doc = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty() ||
        !doc["choices"][0].contains("message") ||
        !doc["choices"][0]["message"].contains("content")) {
        throw SchemaError("choices", "chat completion response has unexpected shape");
    }
    std::string content = doc["choices"][0]["message"]["content"].get<std::string>();

    if (!impl_->config.record_dir.empty()) {
        const std::string key = completion_fixture_key(system_prompt, user_payload, options);
        write_fixture(impl_->config.record_dir, key, request, content);
    }
    return content;
}

}  // namespace rarft
