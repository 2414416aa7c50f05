#include "genesis/hierarchy.hpp"

#include "genesis/error.hpp"

namespace genesis {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string_view trim_newlines(std::string_view s) {
    while (!s.empty() && (s.front() == '\n' || s.front() == '\r' || s.front() == ' ')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    return s;
}

}  // namespace

Verdict parse_verdict(std::string_view text) {
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = trim(text.substr(start, end - start));
        if (line == "VERDICT: APPROVE" || line == "VERDICT: REJECT") {
            Verdict v;
            v.decision = line.ends_with("APPROVE") ? Decision::Approve : Decision::Reject;
            if (end < text.size()) v.critique = std::string(trim_newlines(text.substr(end + 1)));
            if (v.decision == Decision::Reject && v.critique.empty()) {
                throw MalformedVerdict("REJECT verdict without a critique");
            }
            return v;
        }
        start = end + 1;
    }
    throw MalformedVerdict("no VERDICT: APPROVE or VERDICT: REJECT line");
}

void validate_supervised_config(const SupervisedStepConfig& cfg) {
    if (cfg.max_rounds < 1) throw ConfigError("supervised.max_rounds must be at least 1");
    if (cfg.malformed_verdict_limit < 1) throw ConfigError("supervised.malformed_verdict_limit must be at least 1");
}

StepCaller backend_caller(const Backend& backend) {
    return [&backend](const CompletionRequest& req, CallRole) { return backend.complete(req); };
}

CompletionRequest with_reviewer_feedback(const CompletionRequest& request, const std::string& critique,
                                         const PromptTemplate& retry_template) {
    CompletionRequest out = request;
    for (auto it = out.messages.rbegin(); it != out.messages.rend(); ++it) {
        if (it->role != Role::User) continue;
        it->content = render_template(retry_template, {{"previous_prompt", it->content}, {"critique", critique}});
        return out;
    }
    out.messages.push_back({Role::User, render_template(retry_template, {{"previous_prompt", ""}, {"critique", critique}})});
    return out;
}

SupervisedResult run_supervised_step(const CompletionRequest& worker_request, const ApproverBuilder& approver_builder,
                                     const StepCaller& call, LoopGuard& guard, const SupervisedStepConfig& cfg,
                                     const SupervisionHooks& hooks) {
    validate_supervised_config(cfg);
    validate_request(worker_request);
    const PromptTemplate retry_template =
        hooks.retry_template ? *hooks.retry_template : default_templates().at(std::string(kWorkerRetryTemplate));

    std::vector<std::string> critiques;
    CompletionRequest round_request = worker_request;
    int malformed_streak = 0;

    for (int round = 1; round <= cfg.max_rounds; ++round) {
        // The guard may ask for perturbed retries of this round's prompt.
        CompletionRequest attempt = round_request;
        std::string artifact;
        for (;;) {
            artifact = call(attempt, CallRole::Worker).text;
            auto decision = guard.review(hooks.guard_key, artifact, round_request);
            if (decision.action == LoopGuard::Action::Accept) break;
            attempt = std::move(decision.retry_request);
        }

        std::optional<std::string> critique;
        if (hooks.check_artifact) critique = hooks.check_artifact(artifact);

        if (!critique) {
            std::string reply = call(approver_builder(artifact), CallRole::Approver).text;
            Verdict verdict;
            try {
                verdict = parse_verdict(reply);
                malformed_streak = 0;
            } catch (const MalformedVerdict&) {
                if (++malformed_streak > cfg.malformed_verdict_limit) {
                    throw ApproverProtocolError(std::to_string(malformed_streak) + " consecutive malformed verdicts");
                }
                verdict = Verdict{Decision::Reject, std::string(kMalformedVerdictCritique)};
            }
            if (hooks.on_verdict) hooks.on_verdict(verdict, round);
            if (verdict.decision == Decision::Approve) {
                return SupervisedResult{std::move(artifact), round, std::move(critiques)};
            }
            critique = verdict.critique;
        } else if (hooks.on_verdict) {
            hooks.on_verdict(Verdict{Decision::Reject, *critique}, round);
        }

        critiques.push_back(*critique);
        round_request = with_reviewer_feedback(round_request, *critique, retry_template);
    }
    throw StageEscalation(std::move(critiques));
}

}  // namespace genesis
