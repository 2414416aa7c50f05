#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "genesis/backend.hpp"
#include "genesis/blueprint.hpp"
#include "genesis/loop_guard.hpp"
#include "genesis/stages.hpp"
#include "genesis/transcript.hpp"

namespace genesis {

inline constexpr const char* kBundleFormatVersion = "1";
inline constexpr int kDefaultMaxSteps = 32;

struct BundleManifest {
    std::string system_name;
    std::string format_version = kBundleFormatVersion;
    std::string created_at;
    std::string entry_agent;
    std::string exit_agent;
    int max_steps = kDefaultMaxSteps;

    bool operator==(const BundleManifest&) const = default;
};

/// A deployable generated system:
///   <out_dir>/<system_name>/manifest.json
///                          /blueprint.json
///                          /prompts/<agent_name>.txt
///                          /docs.md
///                          /supervision.json
struct GeneratedSystemBundle {
    BundleManifest manifest;
    SystemBlueprint blueprint;
    std::map<std::string, std::string> prompts;
    std::string docs;
    std::vector<SupervisionPair> supervision;

    bool operator==(const GeneratedSystemBundle&) const = default;
};

Json manifest_to_json(const BundleManifest& manifest);

/// Throws ValidationFailed or SchemaError when the bundle breaks an invariant.
void validate_bundle(const GeneratedSystemBundle& bundle);

/// Assembles the bundle value from a completed context. Throws
/// IncompleteContext naming the first absent field, ValidationFailed for an
/// invalid blueprint.
GeneratedSystemBundle make_bundle(const StageContext& ctx, std::string created_at = utc_now());

/// Writes the bundle under `out_dir`, replacing an earlier bundle of the same
/// name, then loads it back and checks it equals `bundle`. Returns the bundle directory.
std::filesystem::path write_bundle(const GeneratedSystemBundle& bundle, const std::filesystem::path& out_dir);

inline std::filesystem::path emit_bundle(const StageContext& ctx, const std::filesystem::path& out_dir) {
    return write_bundle(make_bundle(ctx), out_dir);
}

/// Throws ParseError, SchemaError (missing or unexpected files included),
/// UnsupportedVersion or ValidationFailed.
GeneratedSystemBundle load_bundle(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Interpreter

enum class Termination { ExitAgent, MaxSteps, LoopAbort, QueueDrained };

std::string_view to_string(Termination t);

struct RunResult {
    ConversationTranscript transcript;
    Termination terminated_by = Termination::MaxSteps;
    std::string final_output;
    int backend_calls = 0;
    int loop_incidents = 0;
};

struct InterpreterOptions {
    std::string run_id = "simulation";
    /// Stage label written on every transcript message.
    std::string stage = "simulate";
    std::string model_id = "default";
    int max_tokens = kDefaultMaxTokens;
    std::optional<std::int64_t> seed;
};

/// One routed exchange: `sender` hands the request to agent `recipient`.
using ExchangeFn = std::function<CompletionResponse(const CompletionRequest&, const std::string& sender,
                                                    const std::string& recipient)>;

/// Runs a bundle step by step. Step 0 hands `input` to the entry agent; each
/// step sends the current agent's system prompt plus its payload to the
/// backend and routes the reply along the agent's outgoing flows in
/// blueprint order (breadth-first; fan-out copies the payload). Ends when the
/// exit agent replies, after manifest.max_steps backend calls, on a loop-guard
/// abort, or when no deliveries remain. Repeated replies of an agent are
/// retried with a perturbation sentence like the meta-pipeline does.
///
/// Throws InvalidBundle for an unusable bundle or empty input and BackendFailed
/// when the backend raises a transport, service or request error.
RunResult run_generated_system(const GeneratedSystemBundle& bundle, const std::string& input, const ExchangeFn& exchange,
                               const LoopGuardConfig& guard_cfg, const InterpreterOptions& options = {});

RunResult run_generated_system(const GeneratedSystemBundle& bundle, const std::string& input, const Backend& backend,
                               const LoopGuardConfig& guard_cfg, const InterpreterOptions& options = {});

}  // namespace genesis
