#include "rarft/config.hpp"

#include <cstdlib>
#include <fstream>

#include <json.hpp>

namespace rarft {

using nlohmann::json;

ToolConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw Error("config file is not a JSON object: " + path);
    }

    ToolConfig config;
    if (doc.contains("embed")) {
        const auto& e = doc["embed"];
        config.embed.provider = e.value("provider", config.embed.provider);
        config.embed.dimensions = e.value("dimensions", config.embed.dimensions);
        config.embed.endpoint = e.value("endpoint", config.embed.endpoint);
        config.embed.model = e.value("model", config.embed.model);
        config.embed.api_key_env = e.value("api_key_env", config.embed.api_key_env);
    }
    if (doc.contains("llm")) {
        const auto& l = doc["llm"];
        config.llm.provider = l.value("provider", config.llm.provider);
        config.llm.endpoint = l.value("endpoint", config.llm.endpoint);
        config.llm.model = l.value("model", config.llm.model);
        config.llm.api_key_env = l.value("api_key_env", config.llm.api_key_env);
        config.llm.timeout_ms = l.value("timeout_ms", config.llm.timeout_ms);
        config.llm.max_retries = l.value("max_retries", config.llm.max_retries);
        config.llm.fixture_dir = l.value("fixture_dir", config.llm.fixture_dir);
    }
    config.record_dir = doc.value("record_dir", config.record_dir);
    config.concurrency = doc.value("concurrency", config.concurrency);
    config.strict_format_gating = doc.value("strict_format_gating", config.strict_format_gating);
    config.seed = doc.value("seed", config.seed);
    return config;
}

std::unique_ptr<EmbeddingProvider> make_embedder(const ToolConfig& config) {
    if (config.embed.provider == "hash") {
        return std::make_unique<HashingEmbedder>(config.embed.dimensions);
    }
    if (config.embed.provider == "http") {
        HttpEmbedConfig http;
        http.endpoint = config.embed.endpoint;
        http.model = config.embed.model;
        http.api_key_env = config.embed.api_key_env;
        http.max_in_flight = config.concurrency;
        http.record_dir = config.record_dir;
        return std::make_unique<HttpEmbeddingClient>(std::move(http));
    }
    throw Error("unknown embed provider: " + config.embed.provider);
}

std::unique_ptr<LlmClient> make_llm(const ToolConfig& config) {
    if (config.llm.provider == "mock") return std::make_unique<MockLlmClient>();
    if (config.llm.provider == "replay") {
        if (config.llm.fixture_dir.empty()) {
            throw Error("replay llm provider needs llm.fixture_dir");
        }
        return std::make_unique<ReplayLlmClient>(config.llm.fixture_dir);
    }
    if (config.llm.provider == "http") {
        HttpLlmConfig http;
        http.endpoint = config.llm.endpoint;
        http.model = config.llm.model;
        http.api_key_env = config.llm.api_key_env;
        http.timeout = std::chrono::milliseconds(config.llm.timeout_ms);
        http.retry.max_attempts = config.llm.max_retries;
        http.record_dir = config.record_dir;
        return std::make_unique<HttpLlmClient>(std::move(http));
    }
    throw Error("unknown llm provider: " + config.llm.provider);
}

void check_provider_credentials(const ToolConfig& config, bool needs_embedder, bool needs_llm) {
    auto require_env = [](const std::string& name) {
        if (name.empty()) return;
        const char* value = std::getenv(name.c_str());
        if (!value || !*value) {
            throw AuthError("environment variable " + name + " is not set");
        }
    };
    if (needs_embedder && config.embed.provider == "http") require_env(config.embed.api_key_env);
    if (needs_llm && config.llm.provider == "http") require_env(config.llm.api_key_env);
}

}  // namespace rarft
