#include "genesis/emitter.hpp"

#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "genesis/error.hpp"

namespace fs = std::filesystem;

namespace genesis {

namespace {

std::string describe(const ValidationReport& report) {
    std::string out;
    for (const auto& v : report.violations) {
        if (!out.empty()) out += "; ";
        out += to_string(v.code);
        out += ": ";
        out += v.detail;
    }
    return out;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw StorageError("cannot write " + path.string());
}

std::string read_file(const fs::path& path, const std::string& what) {
    if (!fs::is_regular_file(path)) throw SchemaError("bundle lacks " + what + " (" + path.string() + ")");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

BundleManifest manifest_from_json(const Json& doc) {
    if (doc.is_object() && doc.contains("format_version") &&
        !(doc["format_version"].is_string() && doc["format_version"] == kBundleFormatVersion)) {
        throw UnsupportedVersion("bundle format_version " + doc["format_version"].dump() + " is not supported");
    }
    FieldReader r(doc, "manifest");
    BundleManifest m;
    m.system_name = r.string("system_name");
    m.format_version = r.string("format_version");
    m.created_at = r.string("created_at");
    m.entry_agent = r.string("entry_agent");
    m.exit_agent = r.string("exit_agent");
    auto steps = r.integer("max_steps");
    if (steps < 1 || steps > 1'000'000) throw SchemaError("manifest.max_steps must be a positive integer");
    m.max_steps = static_cast<int>(steps);
    r.finish();
    return m;
}

}  // namespace

Json manifest_to_json(const BundleManifest& manifest) {
    return {
        {"system_name", manifest.system_name},
        {"format_version", manifest.format_version},
        {"created_at", manifest.created_at},
        {"entry_agent", manifest.entry_agent},
        {"exit_agent", manifest.exit_agent},
        {"max_steps", manifest.max_steps},
    };
}

void validate_bundle(const GeneratedSystemBundle& bundle) {
    if (bundle.manifest.format_version != kBundleFormatVersion) {
        throw UnsupportedVersion("bundle format_version \"" + bundle.manifest.format_version + "\" is not supported");
    }
    auto report = validate_blueprint(bundle.blueprint);
    if (!report.valid()) throw ValidationFailed("blueprint is invalid: " + describe(report));

    const auto& m = bundle.manifest;
    const auto& bp = bundle.blueprint;
    if (m.system_name != bp.system_name) throw SchemaError("manifest.system_name differs from the blueprint");
    if (m.entry_agent != bp.entry_agent) throw SchemaError("manifest.entry_agent differs from the blueprint");
    if (m.exit_agent != bp.exit_agent) throw SchemaError("manifest.exit_agent differs from the blueprint");
    if (m.max_steps < 1) throw SchemaError("manifest.max_steps must be at least 1");
    if (bundle.supervision != bp.supervision) throw SchemaError("supervision.json differs from the blueprint supervision");

    for (const auto& a : bp.agents) {
        auto it = bundle.prompts.find(a.name);
        if (it == bundle.prompts.end()) throw SchemaError("no prompt for agent " + a.name);
        if (it->second.empty()) throw SchemaError("empty prompt for agent " + a.name);
    }
    for (const auto& [name, _] : bundle.prompts) {
        if (bp.find_agent(name) == nullptr) throw SchemaError("prompt for unknown agent " + name);
    }
}

GeneratedSystemBundle make_bundle(const StageContext& ctx, std::string created_at) {
    if (!ctx.blueprint) throw IncompleteContext("blueprint");
    if (!ctx.generated_agents) throw IncompleteContext("generated_agents");
    if (!ctx.documentation) throw IncompleteContext("documentation");

    const SystemBlueprint& bp = *ctx.blueprint;
    auto report = validate_blueprint(bp);
    if (!report.valid()) throw ValidationFailed("blueprint is invalid: " + describe(report));

    GeneratedSystemBundle b;
    b.manifest.system_name = bp.system_name;
    b.manifest.created_at = std::move(created_at);
    b.manifest.entry_agent = bp.entry_agent;
    b.manifest.exit_agent = bp.exit_agent;
    b.blueprint = bp;
    b.docs = *ctx.documentation;
    b.supervision = bp.supervision;
    for (const auto& a : bp.agents) {
        auto it = ctx.generated_agents->find(a.name);
        if (it == ctx.generated_agents->end()) throw ValidationFailed("no generated module for agent " + a.name);
        b.prompts[a.name] = it->second.system_prompt;
    }
    if (ctx.generated_agents->size() != bp.agents.size()) {
        throw ValidationFailed("generated modules do not match the blueprint agents");
    }
    validate_bundle(b);
    return b;
}

fs::path write_bundle(const GeneratedSystemBundle& bundle, const fs::path& out_dir) {
    validate_bundle(bundle);
    const std::string& name = bundle.manifest.system_name;
    const fs::path target = out_dir / name;
    const fs::path staging = out_dir / ("." + name + ".staging");

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw StorageError("cannot create " + out_dir.string() + ": " + ec.message());
    if (fs::exists(target) && !fs::is_regular_file(target / "manifest.json")) {
        throw StorageError(target.string() + " exists and is not a bundle; refusing to replace it");
    }
    fs::remove_all(staging, ec);
    fs::create_directories(staging / "prompts", ec);
    if (ec) throw StorageError("cannot create " + staging.string() + ": " + ec.message());

    write_file(staging / "manifest.json", to_document(manifest_to_json(bundle.manifest)));
    write_file(staging / "blueprint.json", serialize_blueprint(bundle.blueprint));
    write_file(staging / "supervision.json", to_document(supervision_to_json(bundle.supervision)));
    write_file(staging / "docs.md", bundle.docs);
    for (const auto& [agent, prompt] : bundle.prompts) write_file(staging / "prompts" / (agent + ".txt"), prompt);

    fs::remove_all(target, ec);
    if (ec) throw StorageError("cannot replace " + target.string() + ": " + ec.message());
    fs::rename(staging, target, ec);
    if (ec) throw StorageError("cannot move bundle into " + target.string() + ": " + ec.message());

    GeneratedSystemBundle reread;
    try {
        reread = load_bundle(target);
    } catch (const Error& e) {
        throw StorageError(std::string("bundle written to ") + target.string() + " does not load back: " + e.what());
    }
    if (!(reread == bundle)) throw StorageError("bundle written to " + target.string() + " differs from the source");
    return target;
}

GeneratedSystemBundle load_bundle(const fs::path& dir) {
    GeneratedSystemBundle b;
    b.manifest = manifest_from_json(parse_json(read_file(dir / "manifest.json", "manifest.json")));
    b.blueprint = parse_blueprint(read_file(dir / "blueprint.json", "blueprint.json"));
    // identifiers are checked before they are used as file names
    auto report = validate_blueprint(b.blueprint);
    if (!report.valid()) throw ValidationFailed("blueprint is invalid: " + describe(report));

    std::set<std::string> expected;
    for (const auto& a : b.blueprint.agents) {
        expected.insert(a.name + ".txt");
        const fs::path p = dir / "prompts" / (a.name + ".txt");
        if (!fs::is_regular_file(p)) throw SchemaError("bundle has no prompt file for agent " + a.name);
        b.prompts[a.name] = read_file(p, "prompts/" + a.name + ".txt");
    }
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir / "prompts", ec)) {
        if (!expected.contains(entry.path().filename().string())) {
            throw SchemaError("unexpected file prompts/" + entry.path().filename().string());
        }
    }
    b.docs = read_file(dir / "docs.md", "docs.md");
    b.supervision = supervision_from_json(parse_json(read_file(dir / "supervision.json", "supervision.json")));
    validate_bundle(b);
    return b;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::ExitAgent: return "EXIT_AGENT";
        case Termination::MaxSteps: return "MAX_STEPS";
        case Termination::LoopAbort: return "LOOP_ABORT";
        case Termination::QueueDrained: return "QUEUE_DRAINED";
    }
    return "?";
}

RunResult run_generated_system(const GeneratedSystemBundle& bundle, const std::string& input, const ExchangeFn& exchange,
                               const LoopGuardConfig& guard_cfg, const InterpreterOptions& options) {
    try {
        validate_bundle(bundle);
    } catch (const Error& e) {
        throw InvalidBundle(e.what());
    }
    if (input.empty()) throw InvalidBundle("simulation input must not be empty");

    struct Delivery {
        std::string sender;
        std::string recipient;
        std::string payload;
    };

    const SystemBlueprint& bp = bundle.blueprint;
    LoopGuard guard(guard_cfg);
    RunResult result;
    result.transcript.run_id = options.run_id;
    auto& transcript = result.transcript;

    std::deque<Delivery> queue;
    transcript.append(kSystemParty, bp.entry_agent, options.stage, input);
    queue.push_back({kSystemParty, bp.entry_agent, input});

    auto finish = [&](Termination how, std::string output) {
        result.terminated_by = how;
        result.final_output = std::move(output);
        result.loop_incidents = guard.total_incidents();
        return result;
    };

    std::string last_output;
    while (!queue.empty()) {
        Delivery d = std::move(queue.front());
        queue.pop_front();
        const AgentDefinition& agent = *bp.find_agent(d.recipient);

        CompletionRequest request;
        request.messages = {{Role::System, bundle.prompts.at(agent.name)}, {Role::User, d.payload}};
        request.temperature = agent.temperature;
        request.model_id = options.model_id;
        request.max_tokens = options.max_tokens;
        request.seed = options.seed;

        CompletionRequest attempt = request;
        std::string sender = d.sender;
        std::string reply;
        for (;;) {
            if (result.backend_calls >= bundle.manifest.max_steps) return finish(Termination::MaxSteps, last_output);
            try {
                reply = exchange(attempt, sender, agent.name).text;
            } catch (const TransportError& e) {
                throw BackendFailed(e.what());
            } catch (const ServiceError& e) {
                throw BackendFailed(e.what());
            } catch (const InvalidRequest& e) {
                throw BackendFailed(e.what());
            }
            ++result.backend_calls;

            LoopGuard::Decision decision;
            try {
                decision = guard.review(agent.name, reply, request);
            } catch (const LoopAborted&) {
                transcript.append(agent.name, kSystemParty, options.stage, reply);
                return finish(Termination::LoopAbort, reply);
            }
            if (decision.action == LoopGuard::Action::Accept) break;
            transcript.append(agent.name, kSystemParty, options.stage, reply);
            attempt = std::move(decision.retry_request);
            transcript.append(kSystemParty, agent.name, options.stage, attempt.last_user_content());
            sender = kSystemParty;
        }
        last_output = reply;

        if (agent.name == bp.exit_agent) {
            transcript.append(agent.name, kSystemParty, options.stage, reply);
            return finish(Termination::ExitAgent, reply);
        }
        bool routed = false;
        for (const auto& f : bp.flows) {
            if (f.from_agent != agent.name) continue;
            transcript.append(agent.name, f.to_agent, options.stage, reply);
            queue.push_back({agent.name, f.to_agent, reply});
            routed = true;
        }
        if (!routed) transcript.append(agent.name, kSystemParty, options.stage, reply);
    }
    return finish(Termination::QueueDrained, last_output);
}

RunResult run_generated_system(const GeneratedSystemBundle& bundle, const std::string& input, const Backend& backend,
                               const LoopGuardConfig& guard_cfg, const InterpreterOptions& options) {
    ExchangeFn exchange = [&backend](const CompletionRequest& req, const std::string&, const std::string&) {
        return backend.complete(req);
    };
    return run_generated_system(bundle, input, exchange, guard_cfg, options);
}

}  // namespace genesis
