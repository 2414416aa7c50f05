#include "genesis/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "genesis/emitter.hpp"
#include "genesis/error.hpp"
#include "genesis/persistence.hpp"

namespace genesis {

ExitCode exit_code_for(StageStatus status) {
    switch (status) {
        case StageStatus::Completed: return ExitCode::Success;
        case StageStatus::Escalated: return ExitCode::Escalation;
        case StageStatus::LoopAborted: return ExitCode::LoopAbort;
        case StageStatus::TimedOut: return ExitCode::Backend;
        case StageStatus::BackendFailed: return ExitCode::Backend;
    }
    return ExitCode::Internal;
}

namespace {

namespace fs = std::filesystem;

int code(ExitCode c) { return static_cast<int>(c); }

class UsageError : public Error {
public:
    explicit UsageError(const std::string& message) : Error("UsageError", message) {}
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Json error_json(const Error& e) { return {{"kind", e.kind()}, {"message", e.what()}}; }

struct BackendFlags {
    std::string endpoint;
    std::string mock;
    bool echo = false;
};

void add_backend_flags(CLI::App* cmd, BackendFlags& flags) {
    cmd->add_option("--endpoint", flags.endpoint, "Chat-completions base URL");
    cmd->add_option("--mock", flags.mock, "Mock script file (JSON)");
    cmd->add_flag("--echo", flags.echo, "Use the echo backend");
}

std::shared_ptr<const Backend> make_backend(const BackendFlags& flags, const BackendConfig& config) {
    const int chosen = int(!flags.mock.empty()) + int(flags.echo);
    if (chosen > 1) throw UsageError("--mock and --echo are mutually exclusive");
    if (!flags.mock.empty()) {
        Json doc;
        try {
            doc = parse_json(read_file(flags.mock));
            return std::make_shared<ScriptedBackend>(mock_script_from_json(doc));
        } catch (const ParseError& e) {
            throw UsageError("mock script " + flags.mock + ": " + e.what());
        } catch (const SchemaError& e) {
            throw UsageError("mock script " + flags.mock + ": " + e.what());
        }
    }
    if (flags.echo) return std::make_shared<EchoBackend>();
    if (config.endpoint_url.empty()) throw UsageError("no backend: pass --endpoint, --mock or --echo");
    return std::make_shared<HttpBackend>(config);
}

struct RunArgs {
    std::string prompt;
    std::string prompt_file;
    std::string config_file;
    BackendFlags backend;
    std::optional<std::int64_t> seed;
    std::string out_dir;
    std::string runs_dir = "runs";
    std::optional<int> max_rounds;
    std::optional<std::int64_t> timeout_ms;
};

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
    std::string prompt = args.prompt;
    if (!args.prompt_file.empty()) {
        if (!prompt.empty()) throw UsageError("give either a prompt or --prompt-file");
        prompt = read_file(args.prompt_file);
    }
    if (prompt.find_first_not_of(" \t\r\n") == std::string::npos) throw UsageError("prompt is empty");

    PipelineConfig cfg;
    if (!args.config_file.empty()) {
        try {
            cfg = pipeline_config_from_json(parse_json(read_file(args.config_file)), cfg);
        } catch (const ParseError& e) {
            throw UsageError("config " + args.config_file + ": " + e.what());
        }
    }
    apply_environment(cfg, process_environment());
    if (!args.backend.endpoint.empty()) cfg.backend.endpoint_url = args.backend.endpoint;
    if (args.seed) cfg.guard.rng_seed = *args.seed;
    if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
    if (args.max_rounds) cfg.supervised.max_rounds = *args.max_rounds;
    if (args.timeout_ms) cfg.guard.stage_timeout = std::chrono::milliseconds(*args.timeout_ms);
    validate_pipeline_config(cfg);

    auto backend = make_backend(args.backend, cfg.backend);
    FileEventStore store(args.runs_dir);
    PipelineResult result = run_pipeline(prompt, cfg, backend, store);

    const StageStatus status = result.terminal_status();
    Json line = {{"run_id", result.run_id},
                 {"status", to_string(status)},
                 {"stage", stage_name(result.outcomes.back().stage)}};
    if (result.bundle_path) line["bundle_path"] = result.bundle_path->string();
    out << to_line(line) << "\n";
    if (status != StageStatus::Completed) {
        err << "stage " << stage_name(result.outcomes.back().stage) << " ended " << to_string(status) << ": "
            << result.outcomes.back().detail << "\n";
    }
    return code(exit_code_for(status));
}

int report_invalid(const Error& e, std::ostream& out, std::ostream& err) {
    out << to_line({{"valid", false}, {"violations", Json::array()}, {"error", error_json(e)}}) << "\n";
    err << e.kind() << ": " << e.what() << "\n";
    return code(ExitCode::Validation);
}

int cmd_validate(const std::string& path_text, std::ostream& out, std::ostream& err) {
    const fs::path path = path_text;
    std::error_code ec;
    if (!fs::exists(path, ec)) throw UsageError("no such path: " + path_text);

    const fs::path blueprint_file = fs::is_directory(path) ? path / "blueprint.json" : path;
    std::string text;
    try {
        text = read_file(blueprint_file);
    } catch (const UsageError&) {
        if (fs::is_directory(path)) {
            return report_invalid(SchemaError("bundle has no blueprint.json"), out, err);
        }
        throw;
    }

    ValidationReport report;
    try {
        report = validate_blueprint(parse_blueprint(text));
    } catch (const ParseError& e) {
        return report_invalid(e, out, err);
    } catch (const SchemaError& e) {
        return report_invalid(e, out, err);
    }
    if (report.valid() && fs::is_directory(path)) {
        try {
            load_bundle(path);
        } catch (const Error& e) {
            return report_invalid(e, out, err);
        }
    }
    out << to_line(report_to_json(report)) << "\n";
    return code(report.valid() ? ExitCode::Success : ExitCode::Validation);
}

int cmd_replay(const std::string& run_id, const std::string& runs_dir, std::ostream& out, std::ostream& err) {
    FileEventStore store(runs_dir);
    if (!store.contains(run_id)) throw UsageError("unknown run " + run_id);
    try {
        ConversationTranscript transcript = replay_transcript(store.load(run_id));
        out << to_line(transcript_to_json(transcript)) << "\n";
        return code(ExitCode::Success);
    } catch (const CorruptLog& e) {
        err << "CorruptLog: " << e.what() << "\n";
        return code(ExitCode::Internal);
    } catch (const SchemaError& e) {
        err << "CorruptLog: " << e.what() << "\n";
        return code(ExitCode::Internal);
    }
}

struct SimulateArgs {
    std::string bundle;
    std::string input;
    BackendFlags backend;
    std::optional<std::int64_t> seed;
    std::optional<int> max_steps;
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
    if (args.input.empty()) throw UsageError("input is empty");
    std::error_code ec;
    if (!fs::is_directory(args.bundle, ec)) throw UsageError("no bundle directory at " + args.bundle);

    PipelineConfig cfg;
    apply_environment(cfg, process_environment());
    if (!args.backend.endpoint.empty()) cfg.backend.endpoint_url = args.backend.endpoint;
    if (args.seed) cfg.guard.rng_seed = *args.seed;
    auto backend = make_backend(args.backend, cfg.backend);

    GeneratedSystemBundle bundle;
    try {
        bundle = load_bundle(args.bundle);
    } catch (const Error& e) {
        err << e.kind() << ": " << e.what() << "\n";
        return code(ExitCode::Validation);
    }
    if (args.max_steps) {
        if (*args.max_steps < 1) throw UsageError("--max-steps must be at least 1");
        bundle.manifest.max_steps = *args.max_steps;
    }

    InterpreterOptions options;
    options.model_id = cfg.backend.model_id;
    options.seed = cfg.guard.rng_seed;
    RunResult result;
    try {
        result = run_generated_system(bundle, args.input, *backend, shuffle_perturbations(cfg.guard), options);
    } catch (const InvalidBundle& e) {
        err << e.kind() << ": " << e.what() << "\n";
        return code(ExitCode::Validation);
    } catch (const BackendFailed& e) {
        err << e.kind() << ": " << e.what() << "\n";
        return code(ExitCode::Backend);
    }

    out << to_line({{"terminated_by", to_string(result.terminated_by)},
                    {"final_output", result.final_output},
                    {"backend_calls", result.backend_calls},
                    {"loop_incidents", result.loop_incidents}})
        << "\n";
    return code(result.terminated_by == Termination::LoopAbort ? ExitCode::LoopAbort : ExitCode::Success);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Builds multi-agent systems from a prompt and runs the generated bundles.", "genesis"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run the meta-pipeline on a prompt");
    run_cmd->add_option("prompt", run.prompt, "User prompt");
    run_cmd->add_option("--prompt-file", run.prompt_file, "Read the prompt from a file");
    run_cmd->add_option("--config", run.config_file, "Pipeline config file (JSON, durations in ms)");
    add_backend_flags(run_cmd, run.backend);
    run_cmd->add_option("--seed", run.seed, "Seed for perturbation order and backend requests");
    run_cmd->add_option("--out-dir", run.out_dir, "Bundle output directory");
    run_cmd->add_option("--runs-dir", run.runs_dir, "Event log directory")->capture_default_str();
    run_cmd->add_option("--max-rounds", run.max_rounds, "Supervision rounds per stage");
    run_cmd->add_option("--timeout-ms", run.timeout_ms, "Per-stage deadline in milliseconds");

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "Validate a blueprint file or bundle directory");
    validate_cmd->add_option("path", validate_path, "Blueprint JSON file or bundle directory")->required();

    std::string replay_id;
    std::string replay_runs_dir = "runs";
    auto* replay_cmd = app.add_subcommand("replay", "Print the transcript of a logged run");
    replay_cmd->add_option("run_id", replay_id, "Run id")->required();
    replay_cmd->add_option("--runs-dir", replay_runs_dir, "Event log directory")->capture_default_str();

    SimulateArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "Run a generated bundle on one input");
    simulate_cmd->add_option("bundle", sim.bundle, "Bundle directory")->required();
    simulate_cmd->add_option("input", sim.input, "Input text")->required();
    add_backend_flags(simulate_cmd, sim.backend);
    simulate_cmd->add_option("--seed", sim.seed, "Seed for perturbation order and backend requests");
    simulate_cmd->add_option("--max-steps", sim.max_steps, "Override the manifest step limit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return code(ExitCode::Success);
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return code(ExitCode::Usage);
    }

    try {
        if (run_cmd->parsed()) return cmd_run(run, out, err);
        if (validate_cmd->parsed()) return cmd_validate(validate_path, out, err);
        if (replay_cmd->parsed()) return cmd_replay(replay_id, replay_runs_dir, out, err);
        if (simulate_cmd->parsed()) return cmd_simulate(sim, out, err);
    } catch (const UsageError& e) {
        err << "usage: " << e.what() << "\n";
        return code(ExitCode::Usage);
    } catch (const ConfigError& e) {
        err << "usage: " << e.what() << "\n";
        return code(ExitCode::Usage);
    } catch (const Error& e) {
        err << e.kind() << ": " << e.what() << "\n";
        return code(ExitCode::Internal);
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return code(ExitCode::Internal);
    }
    return code(ExitCode::Usage);
}

}  // namespace genesis
