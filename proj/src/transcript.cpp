#include "genesis/transcript.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

#include "genesis/error.hpp"

namespace genesis {

std::string utc_now() {
    using namespace std::chrono;
    const auto now = system_clock::now();
    const std::time_t secs = system_clock::to_time_t(now);
    const auto millis = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(millis));
    return buf;
}

const AgentMessage& ConversationTranscript::append(std::string sender, std::string recipient, std::string stage,
                                                   std::string content) {
    AgentMessage m;
    m.seq = static_cast<std::int64_t>(messages.size());
    m.sender = std::move(sender);
    m.recipient = std::move(recipient);
    m.stage = std::move(stage);
    m.content = std::move(content);
    m.timestamp = utc_now();
    messages.push_back(std::move(m));
    return messages.back();
}

Json message_to_json(const AgentMessage& message, bool with_timestamp) {
    Json doc = {
        {"seq", message.seq},
        {"sender", message.sender},
        {"recipient", message.recipient},
        {"stage", message.stage},
        {"content", message.content},
    };
    if (with_timestamp) doc["timestamp"] = message.timestamp;
    return doc;
}

AgentMessage message_from_json(const Json& doc) {
    FieldReader r(doc, "message");
    AgentMessage m;
    m.seq = r.integer("seq");
    m.sender = r.string("sender");
    m.recipient = r.string("recipient");
    m.stage = r.string("stage");
    m.content = r.string("content");
    m.timestamp = r.optional_string("timestamp").value_or("");
    r.finish();
    return m;
}

Json transcript_to_json(const ConversationTranscript& transcript) {
    Json messages = Json::array();
    for (const auto& m : transcript.messages) messages.push_back(message_to_json(m));
    return {{"run_id", transcript.run_id}, {"messages", std::move(messages)}};
}

ConversationTranscript transcript_from_json(const Json& doc) {
    FieldReader r(doc, "transcript");
    ConversationTranscript t;
    t.run_id = r.string("run_id");
    for (const auto& m : r.array("messages")) t.messages.push_back(message_from_json(m));
    r.finish();
    return t;
}

std::string comparison_form(const ConversationTranscript& transcript) {
    Json messages = Json::array();
    for (const auto& m : transcript.messages) messages.push_back(message_to_json(m, false));
    return to_line(messages);
}

}  // namespace genesis
