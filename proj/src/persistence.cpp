#include "genesis/persistence.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <unistd.h>

#include "genesis/blueprint.hpp"
#include "genesis/error.hpp"

namespace genesis {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 10> kKinds = {{
    {EventKind::RunStarted, "RUN_STARTED"},
    {EventKind::Request, "REQUEST"},
    {EventKind::Response, "RESPONSE"},
    {EventKind::StageStarted, "STAGE_STARTED"},
    {EventKind::StageEnded, "STAGE_ENDED"},
    {EventKind::LoopDetected, "LOOP_DETECTED"},
    {EventKind::Injection, "INJECTION"},
    {EventKind::Verdict, "VERDICT"},
    {EventKind::BundleEmitted, "BUNDLE_EMITTED"},
    {EventKind::RunEnded, "RUN_ENDED"},
}};

}  // namespace

std::string_view to_string(EventKind kind) {
    for (const auto& [k, name] : kKinds) {
        if (k == kind) return name;
    }
    return "?";
}

std::optional<EventKind> event_kind_from(std::string_view name) {
    for (const auto& [k, n] : kKinds) {
        if (n == name) return k;
    }
    return std::nullopt;
}

Json event_to_json(const LogEvent& event) {
    return {
        {"run_id", event.run_id},
        {"seq", event.seq},
        {"kind", to_string(event.kind)},
        {"payload", event.payload},
        {"timestamp", event.timestamp},
    };
}

LogEvent event_from_json(const Json& doc) {
    FieldReader r(doc, "event");
    LogEvent e;
    e.run_id = r.string("run_id");
    e.seq = r.integer("seq");
    auto kind = event_kind_from(r.string("kind"));
    if (!kind) throw SchemaError("event.kind: unknown event kind");
    e.kind = *kind;
    e.payload = r.object("payload");
    e.timestamp = r.string("timestamp");
    r.finish();
    return e;
}

// ---------------------------------------------------------------------------

void EventStore::append(const LogEvent& event) {
    if (!is_identifier(event.run_id)) throw StorageError("run id \"" + event.run_id + "\" is not an identifier");
    std::lock_guard lock(mutex_);
    auto it = tails_.find(event.run_id);
    if (it == tails_.end()) {
        Tail tail;
        if (contains(event.run_id)) {
            auto existing = load(event.run_id);
            tail.count = static_cast<std::int64_t>(existing.size());
            tail.ended = !existing.empty() && existing.back().kind == EventKind::RunEnded;
        }
        it = tails_.emplace(event.run_id, tail).first;
    }
    Tail& tail = it->second;
    if (event.seq != tail.count) {
        throw SequenceConflict("run " + event.run_id + " expects seq " + std::to_string(tail.count) + ", got " +
                               std::to_string(event.seq));
    }
    if (tail.count == 0 && event.kind != EventKind::RunStarted) {
        throw SequenceConflict("run " + event.run_id + " must start with RUN_STARTED");
    }
    if (tail.ended) throw SequenceConflict("run " + event.run_id + " has already ended");
    write(event);
    ++tail.count;
    tail.ended = event.kind == EventKind::RunEnded;
}

FileEventStore::FileEventStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path FileEventStore::path_for(const std::string& run_id) const { return dir_ / (run_id + ".ndjson"); }

void FileEventStore::write(const LogEvent& event) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw StorageError("cannot create " + dir_.string() + ": " + ec.message());

    const std::string line = to_line(event_to_json(event)) + "\n";
    const auto path = path_for(event.run_id);
    std::FILE* f = std::fopen(path.c_str(), "ab");
    if (f == nullptr) throw StorageError("cannot open " + path.string() + ": " + std::strerror(errno));
    const bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size() && std::fflush(f) == 0 &&
                    ::fsync(::fileno(f)) == 0;
    const int saved = errno;
    std::fclose(f);
    if (!ok) throw StorageError("cannot append to " + path.string() + ": " + std::strerror(saved));
}

std::vector<LogEvent> FileEventStore::load(const std::string& run_id) const {
    if (!contains(run_id)) throw UnknownRun("no run " + run_id + " in " + dir_.string());
    std::ifstream in(path_for(run_id), std::ios::binary);
    if (!in) throw StorageError("cannot read " + path_for(run_id).string());
    std::vector<LogEvent> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            events.push_back(event_from_json(parse_json(line)));
        } catch (const Error& e) {
            throw CorruptLog(path_for(run_id).string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    std::stable_sort(events.begin(), events.end(), [](const LogEvent& a, const LogEvent& b) { return a.seq < b.seq; });
    return events;
}

bool FileEventStore::contains(const std::string& run_id) const {
    return is_identifier(run_id) && std::filesystem::is_regular_file(path_for(run_id));
}

std::vector<std::string> FileEventStore::run_ids() const {
    std::vector<std::string> out;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir_, ec)) {
        if (entry.path().extension() == ".ndjson") out.push_back(entry.path().stem().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void MemoryEventStore::write(const LogEvent& event) {
    std::lock_guard lock(mutex_);
    runs_[event.run_id].push_back(event);
}

std::vector<LogEvent> MemoryEventStore::load(const std::string& run_id) const {
    std::lock_guard lock(mutex_);
    auto it = runs_.find(run_id);
    if (it == runs_.end()) throw UnknownRun("no run " + run_id);
    return it->second;
}

bool MemoryEventStore::contains(const std::string& run_id) const {
    std::lock_guard lock(mutex_);
    return runs_.contains(run_id);
}

std::vector<std::string> MemoryEventStore::run_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _] : runs_) out.push_back(id);
    return out;
}

// ---------------------------------------------------------------------------

RunRecord run_record(const std::vector<LogEvent>& events) {
    if (events.empty() || events.front().kind != EventKind::RunStarted) {
        throw CorruptLog("run does not begin with RUN_STARTED");
    }
    RunRecord rec;
    rec.run_id = events.front().run_id;
    rec.started_at = events.front().timestamp;
    if (events.back().kind == EventKind::RunEnded) {
        rec.ended_at = events.back().timestamp;
        const Json& p = events.back().payload;
        rec.terminal_status = p.contains("status") && p["status"].is_string() ? p["status"].get<std::string>() : "UNKNOWN";
    }
    return rec;
}

ConversationTranscript replay_transcript(const std::vector<LogEvent>& events) {
    ConversationTranscript t;
    if (!events.empty()) t.run_id = events.front().run_id;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const LogEvent& e = events[i];
        if (e.seq != static_cast<std::int64_t>(i)) {
            throw CorruptLog("event seq " + std::to_string(e.seq) + " found where " + std::to_string(i) + " was expected");
        }
        if (e.run_id != t.run_id) throw CorruptLog("events from more than one run");
        if (e.kind != EventKind::Request && e.kind != EventKind::Response) continue;
        if (!e.payload.contains("message")) throw CorruptLog("event " + std::to_string(e.seq) + " carries no message");
        AgentMessage m;
        try {
            m = message_from_json(e.payload["message"]);
        } catch (const Error& err) {
            throw CorruptLog("event " + std::to_string(e.seq) + ": " + err.what());
        }
        if (m.seq != static_cast<std::int64_t>(t.messages.size())) {
            throw CorruptLog("message seq " + std::to_string(m.seq) + " breaks the transcript order");
        }
        t.messages.push_back(std::move(m));
    }
    return t;
}

}  // namespace genesis
