#include "genesis/backend.hpp"

#include <thread>

#include <httplib.h>

#include "genesis/error.hpp"

namespace genesis {

std::string_view to_string(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(std::string_view name) {
    if (name == "system") return Role::System;
    if (name == "user") return Role::User;
    if (name == "assistant") return Role::Assistant;
    throw SchemaError("unknown message role \"" + std::string(name) + "\"");
}

std::string_view to_string(FinishReason reason) {
    switch (reason) {
        case FinishReason::Stop: return "stop";
        case FinishReason::Length: return "length";
        case FinishReason::Error: return "error";
    }
    return "error";
}

const std::string& CompletionRequest::last_user_content() const {
    static const std::string empty;
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == Role::User) return it->content;
    }
    return empty;
}

std::optional<std::string> CompletionRequest::stage_tag() const {
    static constexpr std::string_view prefix = "#stage: ";
    for (const auto& m : messages) {
        if (m.role != Role::System) continue;
        std::string_view first = m.content;
        first = first.substr(0, first.find('\n'));
        if (first.starts_with(prefix)) return std::string(first.substr(prefix.size()));
        return std::nullopt;
    }
    return std::nullopt;
}

void validate_request(const CompletionRequest& request) {
    if (request.messages.empty()) throw InvalidRequest("request has no messages");
    Role first = request.messages.front().role;
    if (first != Role::System && first != Role::User) {
        throw InvalidRequest("first message must be a system or user message");
    }
    for (std::size_t i = 0; i < request.messages.size(); ++i) {
        if (request.messages[i].content.empty()) {
            throw InvalidRequest("message " + std::to_string(i) + " has empty content");
        }
    }
    if (!(request.temperature >= 0.0 && request.temperature <= 2.0)) {
        throw InvalidRequest("temperature outside [0, 2]");
    }
    if (request.max_tokens <= 0) throw InvalidRequest("max_tokens must be positive");
}

Json request_to_json(const CompletionRequest& request) {
    Json messages = Json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    Json doc = {
        {"model", request.model_id},
        {"messages", std::move(messages)},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
    };
    if (request.seed) doc["seed"] = *request.seed;
    return doc;
}

CompletionRequest request_from_json(const Json& doc) {
    FieldReader r(doc, "request");
    CompletionRequest out;
    out.model_id = r.string("model");
    out.temperature = r.number("temperature");
    out.max_tokens = static_cast<int>(r.integer("max_tokens"));
    out.seed = r.optional_integer("seed");
    const Json& messages = r.array("messages");
    for (const auto& m : messages) {
        FieldReader mr(m, "request.messages[]");
        ChatMessage msg;
        msg.role = role_from_string(mr.string("role"));
        msg.content = mr.string("content");
        mr.finish();
        out.messages.push_back(std::move(msg));
    }
    r.finish();
    return out;
}

void validate_backend_config(const BackendConfig& config) {
    if (config.max_retries < 0 || config.max_retries > 10) {
        throw ConfigError("backend.max_retries must be within [0, 10]");
    }
    if (config.request_timeout.count() <= 0) throw ConfigError("backend.request_timeout must be positive");
    if (config.retry_base_delay.count() < 0) throw ConfigError("backend.retry_base_delay must not be negative");
}

// ---------------------------------------------------------------------------

namespace {

class HttplibTransport final : public HttpTransport {
public:
    HttplibTransport(std::string base_url, std::chrono::milliseconds timeout)
        : base_url_(std::move(base_url)), timeout_(timeout) {}

    HttpReply post(const std::string& path, const std::string& body,
                   const std::map<std::string, std::string>& headers) const override {
        httplib::Client client(base_url_);
        if (!client.is_valid()) throw TransportError("cannot use endpoint " + base_url_);
        client.set_connection_timeout(timeout_);
        client.set_read_timeout(timeout_);
        client.set_write_timeout(timeout_);
        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);
        auto result = client.Post(path, h, body, "application/json");
        if (!result) {
            throw TransportError("POST " + base_url_ + path + " failed: " + httplib::to_string(result.error()));
        }
        return HttpReply{result->status, result->body};
    }

private:
    std::string base_url_;
    std::chrono::milliseconds timeout_;
};

// Splits "http://host:port/v1" into ("http://host:port", "/v1").
std::pair<std::string, std::string> split_endpoint(const std::string& url) {
    auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("endpoint must include a scheme: " + url);
    auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, ""};
    std::string path = url.substr(slash);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return {url.substr(0, slash), path};
}

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   std::chrono::milliseconds timeout) {
    return std::make_shared<HttplibTransport>(base_url, timeout);
}

HttpBackend::HttpBackend(BackendConfig config)
    : HttpBackend(config, nullptr, [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {}

HttpBackend::HttpBackend(BackendConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleeper)
    : config_(std::move(config)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
    validate_backend_config(config_);
    auto [base, path] = split_endpoint(config_.endpoint_url);
    path_ = path + "/chat/completions";
    if (!transport_) transport_ = make_http_transport(base, config_.request_timeout);
}

CompletionResponse parse_completion_reply(const std::string& body) {
    Json doc;
    try {
        doc = Json::parse(body);
    } catch (const Json::parse_error&) {
        throw ServiceError(200, body);
    }
    if (!doc.is_object() || !doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
        throw ServiceError(200, body);
    }
    const Json& choice = doc["choices"][0];
    CompletionResponse out;
    if (choice.contains("message") && choice["message"].is_object() &&
        choice["message"].value("content", Json()).is_string()) {
        out.text = choice["message"]["content"].get<std::string>();
    } else if (choice.value("text", Json()).is_string()) {
        out.text = choice["text"].get<std::string>();
    } else {
        throw ServiceError(200, body);
    }
    std::string reason = choice.value("finish_reason", Json()).is_string()
                             ? choice["finish_reason"].get<std::string>()
                             : "stop";
    if (reason == "stop") {
        out.finish_reason = FinishReason::Stop;
    } else if (reason == "length") {
        out.finish_reason = FinishReason::Length;
    } else {
        out.finish_reason = FinishReason::Error;
    }
    // STOP with nothing said is not a usable reply
    if (out.finish_reason == FinishReason::Stop && out.text.empty()) out.finish_reason = FinishReason::Error;
    if (doc.contains("usage") && doc["usage"].is_object()) {
        out.prompt_tokens = doc["usage"].value("prompt_tokens", 0);
        out.completion_tokens = doc["usage"].value("completion_tokens", 0);
    }
    return out;
}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) const {
    validate_request(request);
    std::map<std::string, std::string> headers;
    if (config_.auth_token) headers["Authorization"] = "Bearer " + *config_.auth_token;
    const std::string body = to_line(request_to_json(request));

    for (int attempt = 0;; ++attempt) {
        HttpReply reply;
        try {
            reply = transport_->post(path_, body, headers);
        } catch (const TransportError&) {
            if (attempt >= config_.max_retries) throw;
            sleeper_(config_.retry_base_delay * (1LL << attempt));
            continue;
        }
        if (reply.status < 200 || reply.status >= 300) throw ServiceError(reply.status, reply.body);
        return parse_completion_reply(reply.body);
    }
}

// ---------------------------------------------------------------------------

namespace {

std::string_view to_string(MatchKind kind) {
    switch (kind) {
        case MatchKind::StageTag: return "STAGE_TAG";
        case MatchKind::ContainsText: return "CONTAINS_TEXT";
        case MatchKind::Any: return "ANY";
    }
    return "ANY";
}

MatchKind match_kind_from(const std::string& name) {
    if (name == "STAGE_TAG") return MatchKind::StageTag;
    if (name == "CONTAINS_TEXT") return MatchKind::ContainsText;
    if (name == "ANY") return MatchKind::Any;
    throw SchemaError("mock rule matcher \"" + name + "\" is not one of STAGE_TAG, CONTAINS_TEXT, ANY");
}

bool rule_matches(const MockRule& rule, const CompletionRequest& request) {
    switch (rule.matcher) {
        case MatchKind::Any: return true;
        case MatchKind::StageTag: return request.stage_tag() == rule.pattern;
        case MatchKind::ContainsText:
            for (const auto& m : request.messages) {
                if (m.content.find(rule.pattern) != std::string::npos) return true;
            }
            return false;
    }
    return false;
}

CompletionResponse scripted_reply(const std::string& text) {
    return CompletionResponse{text, text.empty() ? FinishReason::Error : FinishReason::Stop, 0, 0};
}

}  // namespace

Json mock_script_to_json(const MockScript& script) {
    Json rules = Json::array();
    for (const auto& r : script.rules) {
        rules.push_back({{"matcher", to_string(r.matcher)}, {"pattern", r.pattern}, {"responses", r.responses}});
    }
    return {{"fallback", script.fallback}, {"rules", std::move(rules)}};
}

MockScript mock_script_from_json(const Json& doc) {
    FieldReader r(doc, "mock_script");
    MockScript out;
    out.fallback = r.string("fallback");
    if (const Json* rules = r.optional_array("rules")) {
        for (const auto& rule : *rules) {
            FieldReader rr(rule, "mock_script.rules[]");
            MockRule m;
            m.matcher = match_kind_from(rr.string("matcher"));
            m.pattern = rr.optional_string("pattern").value_or("");
            m.responses = rr.string_list("responses");
            rr.finish();
            if (m.responses.empty()) throw SchemaError("mock_script.rules[].responses must not be empty");
            out.rules.push_back(std::move(m));
        }
    }
    r.finish();
    return out;
}

ScriptedBackend::ScriptedBackend(MockScript script)
    : script_(std::move(script)), cursor_(script_.rules.size(), 0) {
    for (const auto& rule : script_.rules) {
        if (rule.responses.empty()) throw ConfigError("mock rule has no responses");
    }
}

CompletionResponse ScriptedBackend::complete(const CompletionRequest& request) const {
    validate_request(request);
    std::lock_guard lock(mutex_);
    ++calls_;
    for (std::size_t i = 0; i < script_.rules.size(); ++i) {
        const MockRule& rule = script_.rules[i];
        if (!rule_matches(rule, request)) continue;
        std::size_t& pos = cursor_[i];
        const std::string& text = rule.responses[pos];
        if (pos + 1 < rule.responses.size()) ++pos;
        return scripted_reply(text);
    }
    return scripted_reply(script_.fallback);
}

std::size_t ScriptedBackend::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

CompletionResponse EchoBackend::complete(const CompletionRequest& request) const {
    validate_request(request);
    return scripted_reply(request.last_user_content());
}

}  // namespace genesis
