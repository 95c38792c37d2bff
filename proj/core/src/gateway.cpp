#include "convocode/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <semaphore>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "convocode/errors.hpp"

namespace convocode {

using nlohmann::json;

const char* to_string(BackendKind k) {
    return k == BackendKind::http_chat ? "http_chat" : "mock";
}

void BackendConfig::validate() const {
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (max_retries < 0 || max_retries > 5) throw ConfigError("max_retries must be in [0, 5]");
    if (request_timeout_ms <= 0) throw ConfigError("request_timeout_ms must be positive");
    if (max_concurrent_requests < 1)
        throw ConfigError("max_concurrent_requests must be >= 1");
}

// --- mock backend ------------------------------------------------------------

namespace {

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace

std::string MockBackend::prompt_hash(const std::string& prompt) {
    std::ostringstream oss;
    oss << std::hex << fnv1a(prompt);
    return oss.str();
}

MockBackend::MockBackend(const std::filesystem::path& fixture_dir) {
    if (!std::filesystem::is_directory(fixture_dir))
        throw ConfigError("mock fixture directory not found: " + fixture_dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(fixture_dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream oss;
        oss << in.rdbuf();
        fixtures_[entry.path().stem().string()] = oss.str();
    }
}

void MockBackend::register_fixture(const std::string& prompt, std::string response) {
    fixtures_[prompt_hash(prompt)] = std::move(response);
}

std::string MockBackend::complete(const std::string& prompt) {
    const std::string hash = prompt_hash(prompt);
    const auto it = fixtures_.find(hash);
    if (it == fixtures_.end())
        throw ConfigError("no fixture for prompt hash " + hash);
    return it->second;
}

void write_mock_fixture(const std::filesystem::path& fixture_dir, const std::string& prompt,
                        const std::string& response) {
    std::filesystem::create_directories(fixture_dir);
    const auto path = fixture_dir / (MockBackend::prompt_hash(prompt) + ".txt");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write fixture " + path.string());
    out << response;
}

// --- http backend ------------------------------------------------------------

struct HttpChatBackend::Impl {
    BackendConfig config;
    std::string api_key;
    std::string host;
    std::counting_semaphore<64> limiter;

    explicit Impl(const BackendConfig& cfg)
        : config(cfg), limiter(std::min(cfg.max_concurrent_requests, 64)) {
        const char* key = std::getenv(cfg.api_key_env_var.c_str());
        if (key == nullptr || *key == '\0')
            throw ConfigError("API key env var not set: " + cfg.api_key_env_var);
        api_key = key;
    }
};

HttpChatBackend::HttpChatBackend(const BackendConfig& config)
    : impl_(std::make_unique<Impl>(config)) {}

HttpChatBackend::~HttpChatBackend() = default;

std::string HttpChatBackend::complete(const std::string& prompt) {
    impl_->limiter.acquire();
    struct Release {
        std::counting_semaphore<64>& sem;
        ~Release() { sem.release(); }
    } release{impl_->limiter};

    const json body = {{"model", impl_->config.model_name},
                       {"temperature", impl_->config.temperature},
                       {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};

    httplib::Client client(impl_->config.base_url);
    client.set_connection_timeout(0, impl_->config.request_timeout_ms * 1000LL);
    client.set_read_timeout(impl_->config.request_timeout_ms / 1000,
                            (impl_->config.request_timeout_ms % 1000) * 1000);
    client.set_default_headers({{"Authorization", "Bearer " + impl_->api_key}});

    auto res = client.Post("/v1/chat/completions", body.dump(), "application/json");
    if (!res)
        throw TransportError("chat completion request failed: " +
                             httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500)
        throw TransportError("chat completion status " + std::to_string(res->status));
    if (res->status != 200)
        throw Error("chat completion status " + std::to_string(res->status) + ": " + res->body);

    try {
        const json reply = json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed chat completion response: ") + e.what());
    }
}

// --- completion with retries ---------------------------------------------------

std::shared_ptr<ChatBackend> make_backend(const BackendConfig& config) {
    config.validate();
    if (config.backend_kind == BackendKind::mock) {
        if (!config.fixture_dir.empty())
            return std::make_shared<MockBackend>(config.fixture_dir);
        return std::make_shared<MockBackend>();
    }
    return std::make_shared<HttpChatBackend>(config);
}

Gateway make_gateway(const BackendConfig& config) {
    return Gateway{config, make_backend(config)};
}

ChatExchange complete(ChatBackend& backend, const BackendConfig& config,
                      const std::string& prompt) {
    config.validate();
    ChatExchange exchange;
    exchange.rendered_prompt = prompt;
    exchange.backend_kind = config.backend_kind;

    const int max_attempts = 1 + config.max_retries;
    for (int attempt = 1;; ++attempt) {
        exchange.attempt_count = attempt;
        try {
            exchange.raw_response = backend.complete(prompt);
            return exchange;
        } catch (const TransportError&) {
            if (attempt >= max_attempts) throw;
            const auto delay = std::chrono::milliseconds(
                static_cast<long long>(config.retry_backoff_ms) << (attempt - 1));
            if (delay.count() > 0) std::this_thread::sleep_for(delay);
        }
    }
}

// --- structured output extraction ----------------------------------------------

namespace {

// Returns the content of the first fenced code block, skipping an optional
// language tag (```json / ```python) on the opening line.
std::string find_fenced_block(const std::string& text) {
    const std::size_t open = text.find("```");
    if (open == std::string::npos)
        throw ParseError("no fenced block in response");
    std::size_t content_start = open + 3;
    const std::size_t eol = text.find('\n', content_start);
    if (eol != std::string::npos) {
        const std::string first_line = text.substr(content_start, eol - content_start);
        const bool is_tag = std::all_of(first_line.begin(), first_line.end(), [](unsigned char c) {
            return std::isalnum(c) || c == '_' || c == '-' || c == ' ' || c == '\r';
        });
        if (is_tag) content_start = eol + 1;
    }
    const std::size_t close = text.find("```", content_start);
    if (close == std::string::npos)
        throw ParseError("unterminated fenced block in response");
    return text.substr(content_start, close - content_start);
}

// Rewrites Python literal syntax (single-quoted strings, True/False/None)
// into JSON so both ```json``` and ```python``` outputs parse.
std::string pythonish_to_json(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool in_double = false;
    bool in_single = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_double) {
            out.push_back(c);
            if (c == '\\' && i + 1 < s.size()) {
                out.push_back(s[++i]);
            } else if (c == '"') {
                in_double = false;
            }
            continue;
        }
        if (in_single) {
            if (c == '\\' && i + 1 < s.size()) {
                const char next = s[++i];
                if (next == '\'') {
                    out.push_back('\'');
                } else {
                    out.push_back('\\');
                    out.push_back(next);
                }
            } else if (c == '\'') {
                out.push_back('"');
                in_single = false;
            } else if (c == '"') {
                out += "\\\"";
            } else {
                out.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            in_double = true;
            out.push_back(c);
        } else if (c == '\'') {
            in_single = true;
            out.push_back('"');
        } else if (s.compare(i, 4, "True") == 0) {
            out += "true";
            i += 3;
        } else if (s.compare(i, 5, "False") == 0) {
            out += "false";
            i += 4;
        } else if (s.compare(i, 4, "None") == 0) {
            out += "null";
            i += 3;
        } else {
            out.push_back(c);
        }
    }
    return out;
}

json parse_block(const std::string& block) {
    try {
        return json::parse(block);
    } catch (const json::parse_error&) {
        // fall through to the tolerant path
    }
    try {
        return json::parse(pythonish_to_json(block));
    } catch (const json::parse_error& e) {
        throw ParseError("structured block parse failure at offset " + std::to_string(e.byte) +
                         ": " + e.what());
    }
}

const json& require_field(const json& record, const char* field, std::size_t index) {
    const auto it = record.find(field);
    if (it == record.end())
        throw ParseError("record " + std::to_string(index + 1) + ": missing field " + field);
    return *it;
}

int to_int(const json& v, const char* field, std::size_t index) {
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_string()) {
        try {
            return std::stoi(v.get<std::string>());
        } catch (...) {
        }
    }
    throw ParseError("record " + std::to_string(index + 1) + ": field " + field +
                     " is not an integer");
}

std::string to_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

}  // namespace

StructuredRecords extract_structured_block(const std::string& raw_response, OutputShape shape) {
    const json parsed = parse_block(find_fenced_block(raw_response));

    switch (shape) {
        case OutputShape::record_list: {
            if (!parsed.is_array()) throw ParseError("record_list: expected a JSON array");
            std::vector<CorrectedRecord> records;
            records.reserve(parsed.size());
            for (std::size_t i = 0; i < parsed.size(); ++i) {
                const json& r = parsed[i];
                CorrectedRecord rec;
                rec.id = to_int(require_field(r, "id", i), "id", i);
                rec.content = to_text(require_field(r, "content", i));
                records.push_back(std::move(rec));
            }
            return records;
        }
        case OutputShape::role_map: {
            if (!parsed.is_object()) throw ParseError("role_map: expected a JSON object");
            RawRoleMap roles;
            for (const auto& [label, role] : parsed.items()) {
                if (!role.is_string())
                    throw ParseError("role_map: role for \"" + label + "\" is not a string");
                roles[label] = role.get<std::string>();
            }
            return roles;
        }
        case OutputShape::behaviour_list: {
            if (!parsed.is_array()) throw ParseError("behaviour_list: expected a JSON array");
            std::vector<RawBehaviourRecord> records;
            records.reserve(parsed.size());
            for (std::size_t i = 0; i < parsed.size(); ++i) {
                const json& r = parsed[i];
                RawBehaviourRecord rec;
                rec.behaviour_id = to_int(require_field(r, "behaviour_id", i), "behaviour_id", i);
                rec.start_id = to_int(require_field(r, "Start ID", i), "Start ID", i);
                rec.end_id = to_int(require_field(r, "End ID", i), "End ID", i);
                rec.description = to_text(require_field(r, "Description of behavior", i));
                rec.code = to_text(require_field(r, "code", i));
                if (r.contains("Parent Behavior")) rec.parent_utterance = to_text(r["Parent Behavior"]);
                records.push_back(std::move(rec));
            }
            return records;
        }
        case OutputShape::conflict_list: {
            if (!parsed.is_array()) throw ParseError("conflict_list: expected a JSON array");
            std::vector<RawConflictRecord> records;
            records.reserve(parsed.size());
            for (std::size_t i = 0; i < parsed.size(); ++i) {
                const json& r = parsed[i];
                RawConflictRecord rec;
                rec.scene_id = to_int(require_field(r, "scene_id", i), "scene_id", i);
                rec.start_id = to_int(require_field(r, "Start ID", i), "Start ID", i);
                rec.end_id = to_int(require_field(r, "End ID", i), "End ID", i);
                rec.trigger = to_text(require_field(r, "trigger", i));
                rec.process = to_text(require_field(r, "process", i));
                rec.parent_behavior = to_text(require_field(r, "parent_behavior", i));
                rec.child_behavior = to_text(require_field(r, "child_behavior", i));
                rec.conflict_type = to_text(require_field(r, "conflict_type", i));
                rec.severity = to_text(require_field(r, "severity", i));
                records.push_back(std::move(rec));
            }
            return records;
        }
    }
    throw ParseError("unknown output shape");
}

}  // namespace convocode
