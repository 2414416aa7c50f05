#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "genesis/backend.hpp"
#include "genesis/hierarchy.hpp"
#include "genesis/loop_guard.hpp"
#include "genesis/persistence.hpp"
#include "genesis/stages.hpp"
#include "genesis/transcript.hpp"

namespace genesis {

enum class StageStatus { Completed, Escalated, LoopAborted, TimedOut, BackendFailed };

inline constexpr std::array<StageStatus, 5> kAllStageStatuses = {
    StageStatus::Completed, StageStatus::Escalated, StageStatus::LoopAborted, StageStatus::TimedOut,
    StageStatus::BackendFailed,
};

std::string_view to_string(StageStatus status);
std::optional<StageStatus> stage_status_from(std::string_view name);

struct StageOutcome {
    StageId stage = StageId::Understanding;
    StageStatus status = StageStatus::Completed;
    int rounds_used = 0;
    int loop_incidents = 0;
    /// Context field the stage filled in; present iff the stage completed.
    std::optional<std::string> artifact_ref;
    /// Failure description for non-completed stages.
    std::string detail;
};

struct PipelineConfig {
    LoopGuardConfig guard;
    SupervisedStepConfig supervised;
    BackendConfig backend;
    int max_feedback_iterations = 1;
    std::filesystem::path output_dir = "out";
};

/// Throws ConfigError.
void validate_pipeline_config(const PipelineConfig& cfg);

/// Applies a JSON config document (durations in integer milliseconds) on top
/// of `base`. Every key is optional; unknown keys raise ConfigError.
PipelineConfig pipeline_config_from_json(const Json& doc, PipelineConfig base = {});
Json pipeline_config_to_json(const PipelineConfig& cfg);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_environment();

/// GENESIS_ENDPOINT, GENESIS_AUTH_TOKEN and GENESIS_SEED override config fields.
void apply_environment(PipelineConfig& cfg, const EnvLookup& env);

struct PipelineResult {
    std::string run_id;
    std::vector<StageOutcome> outcomes;
    StageContext final_context;
    std::optional<std::filesystem::path> bundle_path;
    /// Live transcript as captured during the run.
    ConversationTranscript transcript;

    /// Status of the last outcome (COMPLETED when every stage completed).
    StageStatus terminal_status() const;
};

/// Next stage after `current` ended with `status`; nullopt means the run is
/// over. Failures are terminal. FEEDBACK re-enters OPTIMIZATION when the
/// report asks for revisions and iterations remain.
std::optional<StageId> stage_transition(StageId current, StageStatus status, bool revisions_requested = false,
                                        int remaining_iterations = 0);

struct RunOptions {
    /// Fixed run id; generated from the clock and a random suffix otherwise.
    std::optional<std::string> run_id;
};

std::string new_run_id();

/// Drives the ten stages in order, each as a supervised step behind the loop
/// guard, with every exchange appended to the transcript and event log
/// before the next call. Stage failures end the run and are reported as the
/// last outcome; only ConfigError (before anything is recorded) and
/// StorageError are thrown.
PipelineResult run_pipeline(const std::string& user_prompt, const PipelineConfig& cfg,
                            std::shared_ptr<const Backend> backend, EventStore& store, const RunOptions& options = {});

}  // namespace genesis
