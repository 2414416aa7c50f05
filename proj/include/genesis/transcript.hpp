#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genesis/canonical_json.hpp"

namespace genesis {

/// Current UTC time as RFC 3339 with millisecond precision, e.g. 2026-10-16T09:30:00.125Z.
std::string utc_now();

inline constexpr const char* kSystemParty = "system";

struct AgentMessage {
    std::int64_t seq = 0;
    std::string sender;
    std::string recipient;
    /// Meta-pipeline stage name or generated-system step id.
    std::string stage;
    std::string content;
    std::string timestamp;

    bool operator==(const AgentMessage&) const = default;
};

struct ConversationTranscript {
    std::string run_id;
    std::vector<AgentMessage> messages;

    bool operator==(const ConversationTranscript&) const = default;

    /// Appends with the next dense sequence number and the current time.
    const AgentMessage& append(std::string sender, std::string recipient, std::string stage, std::string content);
};

Json message_to_json(const AgentMessage& message, bool with_timestamp = true);
/// Throws SchemaError.
AgentMessage message_from_json(const Json& doc);

Json transcript_to_json(const ConversationTranscript& transcript);
ConversationTranscript transcript_from_json(const Json& doc);

/// Canonical single-line form of the messages without timestamps or run id;
/// two runs of the same scripted conversation produce identical bytes.
std::string comparison_form(const ConversationTranscript& transcript);

}  // namespace genesis
