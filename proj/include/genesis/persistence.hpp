#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genesis/canonical_json.hpp"
#include "genesis/transcript.hpp"

namespace genesis {

enum class EventKind {
    RunStarted,
    Request,
    Response,
    StageStarted,
    StageEnded,
    LoopDetected,
    Injection,
    Verdict,
    BundleEmitted,
    RunEnded,
};

std::string_view to_string(EventKind kind);
std::optional<EventKind> event_kind_from(std::string_view name);

struct LogEvent {
    std::string run_id;
    std::int64_t seq = 0;
    EventKind kind = EventKind::RunStarted;
    Json payload = Json::object();
    std::string timestamp;

    bool operator==(const LogEvent&) const = default;
};

Json event_to_json(const LogEvent& event);
/// Throws SchemaError.
LogEvent event_from_json(const Json& doc);

/// Append-only per-run event log. Appends to one run are serialized; seq
/// numbers are dense from 0 and seq 0 is RUN_STARTED; nothing may follow RUN_ENDED.
class EventStore {
public:
    virtual ~EventStore() = default;

    /// Durable on return. Throws SequenceConflict or StorageError.
    void append(const LogEvent& event);
    /// Events ordered by seq. Throws UnknownRun (or CorruptLog for unreadable data).
    virtual std::vector<LogEvent> load(const std::string& run_id) const = 0;
    virtual bool contains(const std::string& run_id) const = 0;
    virtual std::vector<std::string> run_ids() const = 0;

protected:
    virtual void write(const LogEvent& event) = 0;

private:
    struct Tail {
        std::int64_t count = 0;
        bool ended = false;
    };

    std::mutex mutex_;
    std::map<std::string, Tail> tails_;
};

/// Stores each run as <dir>/<run_id>.ndjson, one canonical JSON document per line.
class FileEventStore final : public EventStore {
public:
    explicit FileEventStore(std::filesystem::path dir);

    std::vector<LogEvent> load(const std::string& run_id) const override;
    bool contains(const std::string& run_id) const override;
    std::vector<std::string> run_ids() const override;

    std::filesystem::path path_for(const std::string& run_id) const;
    const std::filesystem::path& dir() const noexcept { return dir_; }

protected:
    void write(const LogEvent& event) override;

private:
    std::filesystem::path dir_;
};

class MemoryEventStore final : public EventStore {
public:
    std::vector<LogEvent> load(const std::string& run_id) const override;
    bool contains(const std::string& run_id) const override;
    std::vector<std::string> run_ids() const override;

protected:
    void write(const LogEvent& event) override;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::vector<LogEvent>> runs_;
};

inline void append_event(EventStore& store, const LogEvent& event) { store.append(event); }
inline std::vector<LogEvent> load_run(const EventStore& store, const std::string& run_id) {
    return store.load(run_id);
}

struct RunRecord {
    std::string run_id;
    std::string started_at;
    std::optional<std::string> ended_at;
    std::optional<std::string> terminal_status;
};

/// Summary of one run from its events. Throws CorruptLog when the events do not start with RUN_STARTED.
RunRecord run_record(const std::vector<LogEvent>& events);

/// Rebuilds the conversation from REQUEST and RESPONSE events. Throws
/// CorruptLog on a seq gap, mixed run ids, or an unreadable message payload.
ConversationTranscript replay_transcript(const std::vector<LogEvent>& events);

}  // namespace genesis
