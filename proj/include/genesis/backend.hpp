#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "genesis/canonical_json.hpp"

namespace genesis {

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);
Role role_from_string(std::string_view name);

struct ChatMessage {
    Role role = Role::User;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

inline constexpr double kDefaultTemperature = 0.2;
inline constexpr int kDefaultMaxTokens = 2048;

struct CompletionRequest {
    std::vector<ChatMessage> messages;
    double temperature = kDefaultTemperature;
    int max_tokens = kDefaultMaxTokens;
    std::optional<std::int64_t> seed;
    std::string model_id = "default";

    bool operator==(const CompletionRequest&) const = default;

    /// Content of the last USER message, or empty if there is none.
    const std::string& last_user_content() const;
    /// Stage name from a leading "#stage: <name>" system line, if present.
    std::optional<std::string> stage_tag() const;
};

/// Throws InvalidRequest when the request breaks a type invariant.
void validate_request(const CompletionRequest& request);

/// Wire body of a chat-completion call.
Json request_to_json(const CompletionRequest& request);
CompletionRequest request_from_json(const Json& doc);

enum class FinishReason { Stop, Length, Error };

std::string_view to_string(FinishReason reason);

struct CompletionResponse {
    std::string text;
    FinishReason finish_reason = FinishReason::Stop;
    int prompt_tokens = 0;
    int completion_tokens = 0;

    bool operator==(const CompletionResponse&) const = default;
};

struct BackendConfig {
    std::string endpoint_url;
    std::optional<std::string> auth_token;
    std::chrono::milliseconds request_timeout{60'000};
    int max_retries = 2;
    std::chrono::milliseconds retry_base_delay{500};
    std::string model_id = "default";
};

/// Throws ConfigError.
void validate_backend_config(const BackendConfig& config);

/// Anything that answers chat completions. Implementations are immutable
/// after construction (or internally synchronized) and shareable.
class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionResponse complete(const CompletionRequest& request) const = 0;
};

// ---------------------------------------------------------------------------
// HTTP

struct HttpReply {
    int status = 0;
    std::string body;
};

/// One POST against the service. Throws TransportError when no reply arrives.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpReply post(const std::string& path, const std::string& body,
                           const std::map<std::string, std::string>& headers) const = 0;
};

/// cpp-httplib transport for `base_url` (scheme://host[:port]).
std::shared_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   std::chrono::milliseconds timeout);

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Chat-completions client: POST {endpoint}/chat/completions, retrying transport
/// failures with delay = retry_base_delay * 2^attempt. Service errors are never retried.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(BackendConfig config);
    HttpBackend(BackendConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleeper);

    CompletionResponse complete(const CompletionRequest& request) const override;

    const BackendConfig& config() const noexcept { return config_; }

private:
    BackendConfig config_;
    std::string path_;
    std::shared_ptr<HttpTransport> transport_;
    Sleeper sleeper_;
};

/// Parses an OpenAI-style chat completion reply body.
CompletionResponse parse_completion_reply(const std::string& body);

// ---------------------------------------------------------------------------
// Offline backends

enum class MatchKind { StageTag, ContainsText, Any };

struct MockRule {
    MatchKind matcher = MatchKind::Any;
    std::string pattern;
    std::vector<std::string> responses;

    bool operator==(const MockRule&) const = default;
};

struct MockScript {
    std::vector<MockRule> rules;
    std::string fallback;

    bool operator==(const MockScript&) const = default;
};

Json mock_script_to_json(const MockScript& script);
/// Throws ParseError / SchemaError. Every rule must carry at least one response.
MockScript mock_script_from_json(const Json& doc);

/// Deterministic scripted backend. The first matching rule answers from its
/// FIFO queue; an exhausted queue keeps replaying its last response.
class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(MockScript script);

    CompletionResponse complete(const CompletionRequest& request) const override;

    /// Number of complete() calls answered so far.
    std::size_t calls() const;

private:
    MockScript script_;
    mutable std::mutex mutex_;
    mutable std::vector<std::size_t> cursor_;
    mutable std::size_t calls_ = 0;
};

/// Replies with the last USER message verbatim.
class EchoBackend final : public Backend {
public:
    CompletionResponse complete(const CompletionRequest& request) const override;
};

/// Free-function form of the completion operation.
inline CompletionResponse complete(const Backend& backend, const CompletionRequest& request) {
    validate_request(request);
    return backend.complete(request);
}

}  // namespace genesis
