#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "convocode/prompt.hpp"

namespace convocode {

enum class BackendKind { http_chat, mock };

const char* to_string(BackendKind k);

struct BackendConfig {
    BackendKind backend_kind = BackendKind::mock;
    std::string model_name = "gpt-4o";
    double temperature = 0.0;  // 0 for reproducible coding runs
    int max_retries = 3;       // capped at 5
    int request_timeout_ms = 60000;
    std::string api_key_env_var = "CONVOCODE_API_KEY";

    // http_chat only
    std::string base_url = "https://api.openai.com";
    int max_concurrent_requests = 4;
    int retry_backoff_ms = 250;

    // mock only: directory of <prompt-hash>.txt fixture files
    std::string fixture_dir;

    void validate() const;  // throws ConfigError
};

struct ChatExchange {
    std::string rendered_prompt;
    std::string raw_response;
    int attempt_count = 1;
    BackendKind backend_kind = BackendKind::mock;
};

/// Transport abstraction. Implementations throw TransportError for failures
/// that are worth retrying; anything else aborts the call immediately.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string complete(const std::string& prompt) = 0;
};

/// Deterministic backend for tests and offline runs: responses are keyed by
/// a stable FNV-1a hash of the prompt, so fixtures are order-independent.
/// Register fixtures before use; lookups are thread-safe afterwards.
class MockBackend : public ChatBackend {
public:
    MockBackend() = default;
    explicit MockBackend(const std::filesystem::path& fixture_dir);

    void register_fixture(const std::string& prompt, std::string response);
    std::string complete(const std::string& prompt) override;

    static std::string prompt_hash(const std::string& prompt);

private:
    std::map<std::string, std::string> fixtures_;  // hash -> response
};

/// Writes a fixture file (<hash>.txt) for the given prompt into a directory.
void write_mock_fixture(const std::filesystem::path& fixture_dir, const std::string& prompt,
                        const std::string& response);

/// OpenAI-style chat-completion client. Request and response bodies are
/// opaque to the rest of the pipeline. In-flight requests are bounded by
/// config.max_concurrent_requests.
class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(const BackendConfig& config);
    ~HttpChatBackend() override;

    std::string complete(const std::string& prompt) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Builds the backend named by the config (reads fixture_dir for mock,
/// resolves the API key env var for http_chat).
std::shared_ptr<ChatBackend> make_backend(const BackendConfig& config);

/// Runs one completion with retry-on-transport-failure and exponential
/// backoff; attempt_count records how many calls were made.
ChatExchange complete(ChatBackend& backend, const BackendConfig& config,
                      const std::string& prompt);

/// Config + backend bundle passed through the annotation layer.
struct Gateway {
    BackendConfig config;
    std::shared_ptr<ChatBackend> backend;

    ChatExchange complete(const std::string& prompt) const {
        return convocode::complete(*backend, config, prompt);
    }
};

Gateway make_gateway(const BackendConfig& config);

// --- structured output -----------------------------------------------------

struct CorrectedRecord {
    int id = 0;
    std::string content;
};

struct RawBehaviourRecord {
    int behaviour_id = 0;
    int start_id = 0;
    int end_id = 0;
    std::string description;
    std::string parent_utterance;
    std::string code;
};

struct RawConflictRecord {
    int scene_id = 0;
    int start_id = 0;
    int end_id = 0;
    std::string trigger;
    std::string process;
    std::string parent_behavior;
    std::string child_behavior;
    std::string conflict_type;
    std::string severity;
};

using RawRoleMap = std::map<std::string, std::string>;

using StructuredRecords = std::variant<std::vector<CorrectedRecord>, RawRoleMap,
                                       std::vector<RawBehaviourRecord>,
                                       std::vector<RawConflictRecord>>;

/// Locates the fenced code block in a model response (```json / ```python /
/// bare ```), parses it (tolerating Python-style single-quoted literals),
/// and verifies the required fields for the expected shape. Throws
/// ParseError on a missing block, a parse failure (with character offset),
/// or a missing field (naming record index and field).
StructuredRecords extract_structured_block(const std::string& raw_response, OutputShape shape);

}  // namespace convocode
