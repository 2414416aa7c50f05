#include "genesis/runtime.hpp"

#include <chrono>
#include <cstdlib>
#include <future>
#include <random>
#include <sstream>
#include <thread>

#include "genesis/artifact.hpp"
#include "genesis/emitter.hpp"
#include "genesis/error.hpp"

namespace genesis {

using Clock = std::chrono::steady_clock;

std::string_view to_string(StageStatus status) {
    switch (status) {
        case StageStatus::Completed: return "COMPLETED";
        case StageStatus::Escalated: return "ESCALATED";
        case StageStatus::LoopAborted: return "LOOP_ABORTED";
        case StageStatus::TimedOut: return "TIMED_OUT";
        case StageStatus::BackendFailed: return "BACKEND_FAILED";
    }
    return "?";
}

std::optional<StageStatus> stage_status_from(std::string_view name) {
    for (auto s : kAllStageStatuses) {
        if (to_string(s) == name) return s;
    }
    return std::nullopt;
}

void validate_pipeline_config(const PipelineConfig& cfg) {
    validate_guard_config(cfg.guard);
    validate_supervised_config(cfg.supervised);
    validate_backend_config(cfg.backend);
    if (cfg.max_feedback_iterations < 0) throw ConfigError("max_feedback_iterations must not be negative");
    if (cfg.output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

namespace {

std::chrono::milliseconds millis(FieldReader& r, const std::string& key, std::chrono::milliseconds fallback) {
    auto v = r.optional_integer(key);
    return v ? std::chrono::milliseconds(*v) : fallback;
}

int optional_int(FieldReader& r, const std::string& key, int fallback) {
    auto v = r.optional_integer(key);
    return v ? static_cast<int>(*v) : fallback;
}

}  // namespace

PipelineConfig pipeline_config_from_json(const Json& doc, PipelineConfig cfg) {
    try {
        FieldReader r(doc, "config");
        if (r.has("backend")) {
            FieldReader b(r.object("backend"), "config.backend");
            cfg.backend.endpoint_url = b.optional_string("endpoint_url").value_or(cfg.backend.endpoint_url);
            if (auto token = b.optional_string("auth_token")) cfg.backend.auth_token = token;
            cfg.backend.request_timeout = millis(b, "request_timeout_ms", cfg.backend.request_timeout);
            cfg.backend.max_retries = optional_int(b, "max_retries", cfg.backend.max_retries);
            cfg.backend.retry_base_delay = millis(b, "retry_base_delay_ms", cfg.backend.retry_base_delay);
            cfg.backend.model_id = b.optional_string("model_id").value_or(cfg.backend.model_id);
            b.finish();
        }
        if (r.has("guard")) {
            FieldReader g(r.object("guard"), "config.guard");
            cfg.guard.lookback_window = optional_int(g, "lookback_window", cfg.guard.lookback_window);
            cfg.guard.max_injections = optional_int(g, "max_injections", cfg.guard.max_injections);
            cfg.guard.stage_timeout = millis(g, "stage_timeout_ms", cfg.guard.stage_timeout);
            if (g.has("perturbation_sentences")) cfg.guard.perturbation_sentences = g.string_list("perturbation_sentences");
            cfg.guard.rng_seed = g.optional_integer("rng_seed").value_or(cfg.guard.rng_seed);
            g.finish();
        }
        if (r.has("supervised")) {
            FieldReader s(r.object("supervised"), "config.supervised");
            cfg.supervised.max_rounds = optional_int(s, "max_rounds", cfg.supervised.max_rounds);
            cfg.supervised.malformed_verdict_limit =
                optional_int(s, "malformed_verdict_limit", cfg.supervised.malformed_verdict_limit);
            s.finish();
        }
        cfg.max_feedback_iterations = optional_int(r, "max_feedback_iterations", cfg.max_feedback_iterations);
        if (auto dir = r.optional_string("output_dir")) cfg.output_dir = *dir;
        r.finish();
    } catch (const SchemaError& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

Json pipeline_config_to_json(const PipelineConfig& cfg) {
    // auth_token omitted
    return {
        {"backend",
         {{"endpoint_url", cfg.backend.endpoint_url},
          {"request_timeout_ms", cfg.backend.request_timeout.count()},
          {"max_retries", cfg.backend.max_retries},
          {"retry_base_delay_ms", cfg.backend.retry_base_delay.count()},
          {"model_id", cfg.backend.model_id}}},
        {"guard",
         {{"lookback_window", cfg.guard.lookback_window},
          {"max_injections", cfg.guard.max_injections},
          {"stage_timeout_ms", cfg.guard.stage_timeout.count()},
          {"perturbation_sentences", cfg.guard.perturbation_sentences},
          {"rng_seed", cfg.guard.rng_seed}}},
        {"supervised",
         {{"max_rounds", cfg.supervised.max_rounds},
          {"malformed_verdict_limit", cfg.supervised.malformed_verdict_limit}}},
        {"max_feedback_iterations", cfg.max_feedback_iterations},
        {"output_dir", cfg.output_dir.string()},
    };
}

EnvLookup process_environment() {
    return [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (v == nullptr) return std::nullopt;
        return std::string(v);
    };
}

void apply_environment(PipelineConfig& cfg, const EnvLookup& env) {
    if (auto v = env("GENESIS_ENDPOINT")) cfg.backend.endpoint_url = *v;
    if (auto v = env("GENESIS_AUTH_TOKEN")) cfg.backend.auth_token = *v;
    if (auto v = env("GENESIS_SEED")) {
        try {
            std::size_t used = 0;
            cfg.guard.rng_seed = std::stoll(*v, &used);
            if (used != v->size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ConfigError("GENESIS_SEED is not an integer: " + *v);
        }
    }
}

StageStatus PipelineResult::terminal_status() const {
    return outcomes.empty() ? StageStatus::Completed : outcomes.back().status;
}

std::optional<StageId> stage_transition(StageId current, StageStatus status, bool revisions_requested,
                                        int remaining_iterations) {
    if (status != StageStatus::Completed) return std::nullopt;
    if (current == StageId::Feedback) {
        if (revisions_requested && remaining_iterations > 0) return StageId::Optimization;
        return std::nullopt;
    }
    return static_cast<StageId>(static_cast<int>(current) + 1);
}

std::string new_run_id() {
    std::string stamp = utc_now();  // 2026-10-16T09:30:00.125Z
    std::string compact;
    for (char c : stamp) {
        if (c >= '0' && c <= '9') compact += c;
    }
    std::random_device rd;
    std::ostringstream out;
    out << "run_" << compact << "_" << std::hex << (rd() & 0xffffffu);
    return out.str();
}

namespace {

class PipelineRun {
public:
    PipelineRun(const std::string& user_prompt, const PipelineConfig& cfg, std::shared_ptr<const Backend> backend,
                EventStore& store, std::string run_id)
        : cfg_(cfg),
          guard_cfg_(shuffle_perturbations(cfg.guard)),
          backend_(std::move(backend)),
          store_(store),
          run_id_(std::move(run_id)),
          guard_(guard_cfg_) {
        ctx_.user_prompt = user_prompt;
        transcript_.run_id = run_id_;
        guard_.on_loop = [this](const std::string& key, int incident) {
            record(EventKind::LoopDetected, {{"stage", stage_label()}, {"key", key}, {"incident", incident}});
        };
        guard_.on_injection = [this](const std::string& key, int index, const std::string& sentence) {
            record(EventKind::Injection,
                   {{"stage", stage_label()}, {"key", key}, {"index", index}, {"sentence", sentence}});
        };
    }

    PipelineResult execute() {
        record(EventKind::RunStarted, {{"user_prompt", ctx_.user_prompt}, {"config", pipeline_config_to_json(cfg_)}});

        StageId stage = StageId::Understanding;
        int iterations_left = cfg_.max_feedback_iterations;
        for (;;) {
            current_ = stage;
            record(EventKind::StageStarted, {{"stage", stage_label()}});
            StageOutcome outcome = run_stage(stage);
            Json ended = {{"stage", stage_label()},
                          {"status", to_string(outcome.status)},
                          {"rounds_used", outcome.rounds_used},
                          {"loop_incidents", outcome.loop_incidents}};
            if (outcome.artifact_ref) ended["artifact_ref"] = *outcome.artifact_ref;
            if (!outcome.detail.empty()) ended["detail"] = outcome.detail;
            record(EventKind::StageEnded, std::move(ended));
            outcomes_.push_back(outcome);

            const bool revise = stage == StageId::Feedback && outcome.status == StageStatus::Completed &&
                                feedback_requests_revision(ctx_.feedback_report.value_or(""));
            auto next = stage_transition(stage, outcome.status, revise, iterations_left);
            if (!next) break;
            if (stage == StageId::Feedback) {
                --iterations_left;
                ++pass_;
            }
            stage = *next;
        }

        PipelineResult result;
        result.run_id = run_id_;
        result.outcomes = outcomes_;
        result.final_context = ctx_;
        result.bundle_path = bundle_path_;
        result.transcript = transcript_;

        Json ended = {{"stage", stage_label()}, {"status", to_string(result.terminal_status())}};
        if (bundle_path_) ended["bundle_path"] = bundle_path_->string();
        record(EventKind::RunEnded, std::move(ended));
        return result;
    }

private:
    std::string stage_label() const { return std::string(stage_name(current_)); }

    void record(EventKind kind, Json payload) {
        LogEvent e{run_id_, next_seq_, kind, std::move(payload), utc_now()};
        store_.append(e);
        ++next_seq_;
    }

    RequestOptions request_options() const {
        RequestOptions o;
        o.model_id = cfg_.backend.model_id;
        o.seed = cfg_.guard.rng_seed;
        return o;
    }

    // Runs one backend call on a helper thread so the stage deadline holds even
    // when the backend hangs. A call that misses the deadline is abandoned.
    CompletionResponse timed_call(const CompletionRequest& request) {
        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline_ - Clock::now());
        if (remaining.count() <= 0) throw StageTimeout("stage " + stage_label() + " ran out of time");
        auto promise = std::make_shared<std::promise<CompletionResponse>>();
        auto future = promise->get_future();
        std::thread([backend = backend_, request, promise] {
            try {
                promise->set_value(complete(*backend, request));
            } catch (...) {
                promise->set_exception(std::current_exception());
            }
        }).detach();
        if (future.wait_for(remaining) == std::future_status::timeout) {
            throw StageTimeout("backend call in stage " + stage_label() + " exceeded " +
                               std::to_string(cfg_.guard.stage_timeout.count()) + " ms");
        }
        return future.get();
    }

    CompletionResponse exchange(const CompletionRequest& request, const std::string& sender,
                                const std::string& recipient, std::string_view role) {
        const AgentMessage& asked = transcript_.append(sender, recipient, stage_label(), request.last_user_content());
        record(EventKind::Request, {{"stage", stage_label()},
                                    {"role", role},
                                    {"message", message_to_json(asked)},
                                    {"request", request_to_json(request)}});
        CompletionResponse response = timed_call(request);
        const AgentMessage& answered = transcript_.append(recipient, sender, stage_label(), response.text);
        record(EventKind::Response, {{"stage", stage_label()},
                                     {"role", role},
                                     {"message", message_to_json(answered)},
                                     {"finish_reason", to_string(response.finish_reason)},
                                     {"prompt_tokens", response.prompt_tokens},
                                     {"completion_tokens", response.completion_tokens}});
        return response;
    }

    static bool is_reserved_template(const std::string& id) {
        static const PromptLibrary defaults = default_templates();
        return defaults.contains(id);
    }

    // Returns a critique when the worker artifact cannot be used; nullopt otherwise.
    std::optional<std::string> check_artifact(StageId stage, const std::string& text) const {
        try {
            StageOutput output = parse_stage_output(stage, text);
            switch (stage) {
                case StageId::Design: {
                    auto report = validate_blueprint(expect_output<SystemBlueprint>(output));
                    if (!report.valid()) return "The blueprint is invalid: " + to_line(report_to_json(report));
                    break;
                }
                case StageId::PromptDesign: {
                    PromptLibrary merged = ctx_.prompt_library;
                    for (const auto& [id, t] : expect_output<PromptLibrary>(output)) {
                        if (is_reserved_template(id)) return "Template id " + id + " is reserved by the pipeline.";
                        merged[id] = t;
                    }
                    for (const auto& a : ctx_.blueprint->agents) {
                        if (!merged.contains(a.prompt_template_id)) {
                            return "No template for " + a.prompt_template_id + " used by agent " + a.name + ".";
                        }
                    }
                    break;
                }
                case StageId::HierarchyAssign: {
                    SystemBlueprint bp = *ctx_.blueprint;
                    bp.supervision = expect_output<std::vector<SupervisionPair>>(output);
                    auto report = validate_blueprint(bp);
                    if (!report.valid()) return "The supervision assignment is invalid: " + to_line(report_to_json(report));
                    break;
                }
                case StageId::Generation: {
                    const auto& agents = expect_output<GeneratedAgentSet>(output);
                    for (const auto& a : ctx_.blueprint->agents) {
                        if (!agents.contains(a.name)) return "No module generated for agent " + a.name + ".";
                    }
                    for (const auto& [name, _] : agents) {
                        if (ctx_.blueprint->find_agent(name) == nullptr) return "Agent " + name + " is not in the blueprint.";
                    }
                    break;
                }
                case StageId::Optimization: {
                    auto revisions = parse_prompt_revisions(expect_output<TextReport>(output).text);
                    if (!revisions) break;
                    for (const auto& [id, _] : revisions->templates) {
                        if (is_reserved_template(id)) return "Template id " + id + " is reserved by the pipeline.";
                    }
                    for (const auto& [name, _] : revisions->temperatures) {
                        if (ctx_.blueprint->find_agent(name) == nullptr) return "Agent " + name + " is not in the blueprint.";
                    }
                    break;
                }
                default:
                    if (const auto* report = std::get_if<TextReport>(&output); report && report->text.empty()) {
                        return std::string("The report is empty.");
                    }
                    break;
            }
        } catch (const Error& e) {
            return std::string(e.kind()) + ": " + e.what();
        }
        return std::nullopt;
    }

    // Folds an approved artifact into the context; returns the field it filled.
    std::string merge(StageId stage, const std::string& text) {
        StageOutput output = parse_stage_output(stage, text);
        switch (stage) {
            case StageId::Understanding:
                ctx_.specification = expect_output<SystemSpecification>(output);
                return "specification";
            case StageId::Design:
                ctx_.blueprint = expect_output<SystemBlueprint>(output);
                return "blueprint";
            case StageId::PromptDesign:
                for (const auto& [id, t] : expect_output<PromptLibrary>(output)) ctx_.prompt_library[id] = t;
                return "prompt_library";
            case StageId::HierarchyAssign:
                ctx_.blueprint->supervision = expect_output<std::vector<SupervisionPair>>(output);
                return "blueprint.supervision";
            case StageId::Generation:
                ctx_.generated_agents = expect_output<GeneratedAgentSet>(output);
                return "generated_agents";
            case StageId::IntegrationTest:
                ctx_.test_report = expect_output<TextReport>(output).text;
                return "test_report";
            case StageId::Optimization: {
                const std::string& notes = expect_output<TextReport>(output).text;
                if (auto revisions = parse_prompt_revisions(notes)) {
                    for (const auto& [id, t] : revisions->templates) ctx_.prompt_library[id] = t;
                    for (auto& a : ctx_.blueprint->agents) {
                        if (auto it = revisions->temperatures.find(a.name); it != revisions->temperatures.end()) {
                            a.temperature = it->second;
                        }
                    }
                }
                ctx_.optimization_notes = notes;
                return "optimization_notes";
            }
            case StageId::Documentation:
                ctx_.documentation = expect_output<TextReport>(output).text;
                return "documentation";
            case StageId::Deployment: {
                bundle_path_ = emit_bundle(ctx_, cfg_.output_dir);
                record(EventKind::BundleEmitted, {{"stage", stage_label()}, {"path", bundle_path_->string()}});
                return "bundle_path";
            }
            case StageId::Feedback:
                ctx_.feedback_report = expect_output<TextReport>(output).text;
                return "feedback_report";
        }
        return {};
    }

    void smoke_test() {
        if (!ctx_.blueprint) throw MissingContext("blueprint");
        if (!ctx_.generated_agents) throw MissingContext("generated_agents");
        StageContext draft = ctx_;
        if (!draft.documentation) draft.documentation = "";
        GeneratedSystemBundle bundle = make_bundle(draft, utc_now());

        InterpreterOptions opts;
        opts.run_id = run_id_;
        opts.stage = stage_label();
        opts.model_id = cfg_.backend.model_id;
        opts.seed = cfg_.guard.rng_seed;
        ExchangeFn ex = [this](const CompletionRequest& req, const std::string& sender, const std::string& recipient) {
            return exchange(req, sender, recipient, "smoke");
        };
        const std::string input = ctx_.specification ? ctx_.specification->goal : ctx_.user_prompt;
        RunResult run = run_generated_system(bundle, input, ex, guard_cfg_, opts);

        std::ostringstream s;
        s << "input: " << input << "\n"
          << "terminated_by: " << to_string(run.terminated_by) << "\n"
          << "backend_calls: " << run.backend_calls << "\n"
          << "transcript_messages: " << run.transcript.messages.size() << "\n"
          << "loop_incidents: " << run.loop_incidents << "\n"
          << "final_output:\n" << run.final_output << "\n"
          << "transcript:\n";
        for (const auto& m : run.transcript.messages) {
            s << "[" << m.seq << "] " << m.sender << " -> " << m.recipient << ": " << m.content << "\n";
        }
        ctx_.smoke_summary = s.str();
    }

    std::string run_summary() const {
        std::ostringstream s;
        for (const auto& o : outcomes_) {
            s << "stage " << stage_name(o.stage) << ": " << to_string(o.status) << " rounds=" << o.rounds_used
              << " loop_incidents=" << o.loop_incidents << "\n";
        }
        s << "transcript_messages: " << transcript_.messages.size() << "\n";
        s << "loop_incidents_total: " << guard_.total_incidents() << "\n";
        return s.str();
    }

    StageOutcome run_stage(StageId stage) {
        deadline_ = Clock::now() + cfg_.guard.stage_timeout;
        // one guard history per feedback pass
        const std::string key = stage_label() + "_worker" + (pass_ > 0 ? "_" + std::to_string(pass_ + 1) : "");
        StageOutcome out;
        out.stage = stage;
        int verdicts = 0;

        auto fail = [&](StageStatus status, const std::string& detail) {
            out.status = status;
            out.detail = detail;
            out.rounds_used = status == StageStatus::Escalated ? verdicts : verdicts + 1;
        };

        try {
            if (stage == StageId::IntegrationTest) smoke_test();
            if (stage == StageId::Feedback) ctx_.run_log_summary = run_summary();

            const RequestOptions options = request_options();
            const CompletionRequest worker_request = build_stage_prompt(stage, ctx_, options);

            SupervisionHooks hooks;
            hooks.guard_key = key;
            if (auto it = ctx_.prompt_library.find(std::string(kWorkerRetryTemplate)); it != ctx_.prompt_library.end()) {
                hooks.retry_template = it->second;
            }
            hooks.check_artifact = [&](const std::string& text) { return check_artifact(stage, text); };
            hooks.on_verdict = [&](const Verdict& v, int round) {
                ++verdicts;
                record(EventKind::Verdict, {{"stage", stage_label()},
                                            {"round", round},
                                            {"decision", v.decision == Decision::Approve ? "APPROVE" : "REJECT"},
                                            {"critique", v.critique}});
            };
            const std::string worker = stage_label() + "_worker";
            const std::string approver = stage_label() + "_approver";
            StepCaller call = [&](const CompletionRequest& req, CallRole role) {
                return role == CallRole::Worker ? exchange(req, "orchestrator", worker, "worker")
                                                : exchange(req, "orchestrator", approver, "approver");
            };
            ApproverBuilder build_approver = [&](const std::string& artifact) {
                return build_approver_prompt(stage, ctx_, worker_request, artifact, options);
            };

            SupervisedResult result =
                run_supervised_step(worker_request, build_approver, call, guard_, cfg_.supervised, hooks);
            out.artifact_ref = merge(stage, result.artifact_text);
            out.rounds_used = result.rounds_used;
            out.status = StageStatus::Completed;
        } catch (const StorageError&) {
            throw;
        } catch (const LoopAborted& e) {
            fail(StageStatus::LoopAborted, e.what());
        } catch (const StageEscalation& e) {
            fail(StageStatus::Escalated, e.what());
        } catch (const ApproverProtocolError& e) {
            fail(StageStatus::Escalated, e.what());
        } catch (const StageTimeout& e) {
            fail(StageStatus::TimedOut, e.what());
        } catch (const TransportError& e) {
            fail(StageStatus::BackendFailed, e.what());
        } catch (const ServiceError& e) {
            fail(StageStatus::BackendFailed, std::string(e.what()) + ": " + e.body());
        } catch (const InvalidRequest& e) {
            fail(StageStatus::BackendFailed, e.what());
        } catch (const BackendFailed& e) {
            fail(StageStatus::BackendFailed, e.what());
        } catch (const Error& e) {
            fail(StageStatus::Escalated, e.kind() + ": " + e.what());
        }
        out.loop_incidents = guard_.incidents(key);
        return out;
    }

    const PipelineConfig& cfg_;
    LoopGuardConfig guard_cfg_;
    std::shared_ptr<const Backend> backend_;
    EventStore& store_;
    std::string run_id_;
    LoopGuard guard_;

    StageContext ctx_;
    ConversationTranscript transcript_;
    std::vector<StageOutcome> outcomes_;
    std::optional<std::filesystem::path> bundle_path_;
    StageId current_ = StageId::Understanding;
    Clock::time_point deadline_;
    std::int64_t next_seq_ = 0;
    int pass_ = 0;
};

}  // namespace

PipelineResult run_pipeline(const std::string& user_prompt, const PipelineConfig& cfg,
                            std::shared_ptr<const Backend> backend, EventStore& store, const RunOptions& options) {
    if (user_prompt.empty()) throw ConfigError("user prompt must not be empty");
    if (!backend) throw ConfigError("no backend configured");
    validate_pipeline_config(cfg);
    std::string run_id = options.run_id.value_or(new_run_id());
    if (!is_identifier(run_id)) throw ConfigError("run id \"" + run_id + "\" is not an identifier");
    if (store.contains(run_id)) throw ConfigError("run " + run_id + " already exists");

    PipelineRun run(user_prompt, cfg, std::move(backend), store, std::move(run_id));
    return run.execute();
}

}  // namespace genesis
