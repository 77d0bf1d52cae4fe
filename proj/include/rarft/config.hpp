#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "rarft/providers.hpp"

namespace rarft {

/// Toolkit configuration. Secrets are referenced by environment-variable
/// name only; the variable is resolved when a subcommand actually needs the
/// provider, not at config parse time.
struct ToolConfig {
    struct Embed {
        std::string provider = "hash";  // hash | http
        size_t dimensions = 256;        // hash provider
        std::string endpoint;           // http provider
        std::string model;
        std::string api_key_env = "RARFT_EMBED_API_KEY";
    } embed;

    struct Llm {
        std::string provider = "mock";  // mock | http | replay
        std::string endpoint;
        std::string model;
        std::string api_key_env = "RARFT_LLM_API_KEY";
        int timeout_ms = 30000;
        int max_retries = 3;
        std::string fixture_dir;  // replay provider
    } llm;

    std::string record_dir;  // when set, HTTP providers dump fixtures here
    int concurrency = 8;
    bool strict_format_gating = false;
    uint64_t seed = 0;
};

/// Loads a JSON config file; missing fields keep their defaults.
ToolConfig load_config(const std::string& path);

std::unique_ptr<EmbeddingProvider> make_embedder(const ToolConfig& config);
std::unique_ptr<LlmClient> make_llm(const ToolConfig& config);

/// Startup check for subcommands that will talk to HTTP providers: resolves
/// the configured key environment variables, raising AuthError when unset.
void check_provider_credentials(const ToolConfig& config, bool needs_embedder, bool needs_llm);

}  // namespace rarft
