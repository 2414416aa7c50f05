#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genesis/backend.hpp"
#include "genesis/loop_guard.hpp"
#include "genesis/stages.hpp"

namespace genesis {

enum class Decision { Approve, Reject };

struct Verdict {
    Decision decision = Decision::Approve;
    std::string critique;

    bool operator==(const Verdict&) const = default;
};

/// The first line reading "VERDICT: APPROVE" or "VERDICT: REJECT" (surrounding
/// blanks ignored) decides; the critique is everything after that line.
/// Throws MalformedVerdict when there is no such line or a REJECT has no critique.
Verdict parse_verdict(std::string_view text);

struct SupervisedStepConfig {
    int max_rounds = 3;
    int malformed_verdict_limit = 2;
};

/// Throws ConfigError.
void validate_supervised_config(const SupervisedStepConfig& cfg);

struct SupervisedResult {
    std::string artifact_text;
    int rounds_used = 0;
    std::vector<std::string> critiques;
};

inline constexpr std::string_view kMalformedVerdictCritique = "malformed verdict";

enum class CallRole { Worker, Approver };

/// Performs one backend exchange. The runtime supplies a version that logs
/// and enforces deadlines; `backend_caller` adapts a plain Backend.
using StepCaller = std::function<CompletionResponse(const CompletionRequest&, CallRole)>;
StepCaller backend_caller(const Backend& backend);

using ApproverBuilder = std::function<CompletionRequest(const std::string& artifact_text)>;

struct SupervisionHooks {
    /// Loop-guard key of the worker conversation.
    std::string guard_key = "worker";
    /// Template producing the retry prompt; defaults to the built-in worker_retry.
    std::optional<PromptTemplate> retry_template;
    /// Rejects an unusable worker artifact before the approver sees it; the
    /// returned message becomes that round's critique.
    std::function<std::optional<std::string>(const std::string& artifact_text)> check_artifact;
    std::function<void(const Verdict&, int round)> on_verdict;
};

/// Previous request with `critique` appended under "Reviewer feedback:".
CompletionRequest with_reviewer_feedback(const CompletionRequest& request, const std::string& critique,
                                         const PromptTemplate& retry_template);

/// Worker/approver protocol. Each round the worker answers, the output passes
/// the loop guard, then the approver judges it. A rejection feeds its critique
/// into the next worker prompt. Repeated outputs are retried with an injected
/// perturbation sentence without consuming a round.
///
/// Throws StageEscalation after max_rounds rejections (carrying every
/// critique), ApproverProtocolError after more than malformed_verdict_limit
/// consecutive malformed verdicts, LoopAborted from the guard, and whatever
/// the caller throws.
SupervisedResult run_supervised_step(const CompletionRequest& worker_request, const ApproverBuilder& approver_builder,
                                     const StepCaller& call, LoopGuard& guard, const SupervisedStepConfig& cfg,
                                     const SupervisionHooks& hooks = {});

inline SupervisedResult run_supervised_step(const CompletionRequest& worker_request,
                                            const ApproverBuilder& approver_builder, const Backend& backend,
                                            LoopGuard& guard, const SupervisedStepConfig& cfg,
                                            const SupervisionHooks& hooks = {}) {
    return run_supervised_step(worker_request, approver_builder, backend_caller(backend), guard, cfg, hooks);
}

}  // namespace genesis
