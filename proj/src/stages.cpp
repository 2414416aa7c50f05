#include "genesis/stages.hpp"

#include "genesis/artifact.hpp"
#include "genesis/error.hpp"

namespace genesis {

namespace {

struct StageInfo {
    StageId id;
    std::string_view name;
    std::string_view title;
    std::string_view duty;
    std::string_view format;
};

// clang-format off
constexpr std::array<StageInfo, 10> kStages = {{
    {StageId::Understanding, "understanding", "System Understanding",
     "Interpret the user's request and extract the goal, the functional requirements, the kinds of agents needed and how they are expected to interact.",
     "The artifact is a JSON object with the fields goal (string), functional_requirements (non-empty array of strings), suggested_agent_kinds, interaction_notes and constraints (arrays of strings)."},
    {StageId::Design, "design", "System Design",
     "Architect the target system: decide the number and type of agents, their roles, the data flows between them, the entry agent and the exit agent.",
     "The artifact is a JSON blueprint with the fields system_name, agents (array of {name, role, prompt_template_id, temperature, max_rounds}), flows (array of {from_agent, to_agent, payload_description}), entry_agent, exit_agent and supervision (may be empty). Names use lowercase letters, digits and underscores and start with a letter."},
    {StageId::PromptDesign, "prompt_design", "LLM Prompt Design",
     "Write one clear, relevant prompt template for every prompt_template_id used by the blueprint's agents.",
     "The artifact is a JSON object mapping each template id to {body, required_placeholders}. Placeholders are written {{name}} and every placeholder in a body must be listed in required_placeholders."},
    {StageId::HierarchyAssign, "hierarchy_assign", "Hierarchy",
     "Make sure every step of the designed system has one agent doing the work and a different agent approving or rejecting it.",
     "The artifact is a JSON array of {step_id, worker, approver}; worker and approver name different agents of the blueprint and no chain of approvals may loop back on itself."},
    {StageId::Generation, "generation", "Agent Generator",
     "Translate the blueprint into deployable agent modules: write the complete system prompt each agent runs with.",
     "The artifact is a JSON object mapping every agent name of the blueprint to {system_prompt, notes}."},
    {StageId::IntegrationTest, "integration_test", "Integration and Testing",
     "Assess the smoke run of the assembled system and report whether the agents interact correctly and fulfil the requirements.",
     "The artifact is a plain-text test report."},
    {StageId::Optimization, "optimization", "Optimization and Tuning",
     "Assess the system against its metrics (smoke-test verdict, transcript length, loop-guard incidents) and propose improvements to prompts and agent temperatures.",
     "The artifact is either a plain-text note or a JSON object with optional fields templates (template id -> {body, required_placeholders}) and temperatures (agent name -> number between 0 and 2)."},
    {StageId::Documentation, "documentation", "Documentation and Training",
     "Write documentation for the system: architecture, operating procedure and maintenance guidance.",
     "The artifact is Markdown text."},
    {StageId::Deployment, "deployment", "Deployment",
     "Confirm the optimized system is ready to be packaged as a bundle and list the deployment notes operators need.",
     "The artifact is a plain-text deployment report."},
    {StageId::Feedback, "feedback", "Feedback and Iteration",
     "Analyse the run summary, identify improvements and decide whether the configuration should be revised.",
     "The artifact is a plain-text report. Include the line REVISIONS: REQUIRED if the configuration must be revised, otherwise REVISIONS: NONE."},
}};

const std::map<std::string, std::string>& default_bodies() {
    static const std::map<std::string, std::string> bodies = {
        {"understanding",
         "A user wants a multi-agent system built for them. Their request:\n\n{{user_prompt}}\n\n"
         "Produce the system specification for this request."},
        {"design",
         "System specification:\n\n{{specification}}\n\n"
         "Design the blueprint of a multi-agent system that satisfies this specification."},
        {"prompt_design",
         "Blueprint:\n\n{{blueprint}}\n\n"
         "Write the prompt templates referenced by the agents of this blueprint."},
        {"hierarchy_assign",
         "Blueprint:\n\n{{blueprint}}\n\n"
         "Assign a worker and a distinct approver to every step of this system."},
        {"generation",
         "Blueprint:\n\n{{blueprint}}\n\nPrompt templates of its agents:\n\n{{agent_templates}}\n\n"
         "Generate the system prompt of every agent."},
        {"integration_test",
         "Generated agents:\n\n{{agents}}\n\nSmoke run of the assembled system:\n\n{{smoke_run}}\n\n"
         "Write the test report."},
        {"optimization",
         "Test report:\n\n{{test_report}}\n\nSmoke run metrics:\n\n{{smoke_run}}\n\n"
         "Current prompt templates:\n\n{{agent_templates}}\n\nPropose optimizations."},
        {"documentation",
         "Blueprint:\n\n{{blueprint}}\n\nGenerated agents:\n\n{{agents}}\n\n"
         "Write the documentation and training material."},
        {"deployment",
         "Specification:\n\n{{specification}}\n\nBlueprint:\n\n{{blueprint}}\n\nGenerated agents:\n\n{{agents}}\n\n"
         "Test report:\n\n{{test_report}}\n\nOptimization notes:\n\n{{optimization_notes}}\n\n"
         "Documentation:\n\n{{documentation}}\n\nPrepare the deployment report."},
        {"feedback",
         "Run summary:\n\n{{run_summary}}\n\nAnalyse the run and report on improvements."},
        {"worker_retry", "{{previous_prompt}}\n\nReviewer feedback:\n{{critique}}"},
        {"approver",
         "Review the artifact produced for the {{stage}} stage.\n\n"
         "Task given to the worker:\n\n{{task}}\n\nArtifact:\n\n{{artifact}}\n\n"
         "Give your assessment, then end with a line that starts with\n"
         "VERDICT:\n"
         "followed by APPROVE or REJECT, for example \"VERDICT: APPROVE\". "
         "After VERDICT: REJECT, state on the following lines exactly what must change."},
    };
    return bodies;
}
// clang-format on

const StageInfo& info(StageId stage) { return kStages[static_cast<std::size_t>(stage)]; }

bool is_name_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; }

// Calls on_placeholder(start, end, name) for each {{name}} occurrence.
template <class F>
void scan_placeholders(std::string_view body, F&& on_placeholder) {
    std::size_t pos = 0;
    while ((pos = body.find("{{", pos)) != std::string_view::npos) {
        std::size_t end = body.find("}}", pos + 2);
        if (end == std::string_view::npos) return;
        std::string_view name = body.substr(pos + 2, end - pos - 2);
        bool ok = !name.empty() && !(name[0] >= '0' && name[0] <= '9');
        for (char c : name) ok = ok && is_name_char(c);
        if (ok) {
            on_placeholder(pos, end + 2, name);
            pos = end + 2;
        } else {
            pos += 2;
        }
    }
}

PromptTemplate template_from_json(const std::string& id, const Json& doc) {
    FieldReader r(doc, "templates." + id);
    PromptTemplate t;
    t.template_id = id;
    t.body = r.non_empty_string("body");
    auto required = r.string_list("required_placeholders");
    t.required_placeholders = {required.begin(), required.end()};
    r.finish();
    try {
        validate_template(t);
    } catch (const TemplateError& e) {
        throw SchemaError(e.what());
    }
    return t;
}

std::string agent_templates_text(const StageContext& ctx) {
    PromptLibrary used;
    for (const auto& a : ctx.blueprint->agents) {
        auto it = ctx.prompt_library.find(a.prompt_template_id);
        if (it == ctx.prompt_library.end()) throw MissingContext("prompt_library." + a.prompt_template_id);
        used.emplace(it->first, it->second);
    }
    return to_document(library_to_json(used));
}

std::string system_header(StageId stage, std::string_view role) {
    std::string s = "#stage: ";
    s += stage_name(stage);
    s += "\nrole: ";
    s += role;
    s += '\n';
    return s;
}

}  // namespace

std::string_view stage_name(StageId stage) { return info(stage).name; }

std::optional<StageId> stage_from_name(std::string_view name) {
    for (const auto& s : kStages) {
        if (s.name == name) return s.id;
    }
    return std::nullopt;
}

std::set<std::string> placeholders_in(std::string_view body) {
    std::set<std::string> names;
    scan_placeholders(body, [&](std::size_t, std::size_t, std::string_view n) { names.emplace(n); });
    return names;
}

void validate_template(const PromptTemplate& tmpl) {
    auto present = placeholders_in(tmpl.body);
    for (const auto& name : tmpl.required_placeholders) {
        if (!present.contains(name)) {
            throw TemplateError("template " + tmpl.template_id + ": required placeholder {{" + name + "}} not in body");
        }
    }
    for (const auto& name : present) {
        if (!tmpl.required_placeholders.contains(name)) {
            throw TemplateError("template " + tmpl.template_id + ": undeclared placeholder {{" + name + "}}");
        }
    }
}

std::string render_template(const PromptTemplate& tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.body.size());
    std::size_t copied = 0;
    scan_placeholders(tmpl.body, [&](std::size_t start, std::size_t end, std::string_view name) {
        auto it = values.find(std::string(name));
        if (it == values.end()) {
            throw TemplateError("template " + tmpl.template_id + ": no value for {{" + std::string(name) + "}}");
        }
        out.append(tmpl.body, copied, start - copied);
        out += it->second;
        copied = end;
    });
    out.append(tmpl.body, copied);
    return out;
}

Json library_to_json(const PromptLibrary& library) {
    Json out = Json::object();
    for (const auto& [id, t] : library) {
        out[id] = {{"body", t.body}, {"required_placeholders", t.required_placeholders}};
    }
    return out;
}

PromptLibrary library_from_json(const Json& doc) {
    if (!doc.is_object()) throw SchemaError("templates: expected an object of template_id -> template");
    PromptLibrary out;
    for (const auto& [id, t] : doc.items()) {
        if (!is_identifier(id)) throw SchemaError("templates: \"" + id + "\" is not a valid template id");
        out.emplace(id, template_from_json(id, t));
    }
    return out;
}

PromptLibrary default_templates() {
    PromptLibrary out;
    for (const auto& [id, body] : default_bodies()) {
        PromptTemplate t{id, body, placeholders_in(body)};
        out.emplace(id, std::move(t));
    }
    return out;
}

Json agents_to_json(const GeneratedAgentSet& agents) {
    Json out = Json::object();
    for (const auto& [name, a] : agents) out[name] = {{"system_prompt", a.system_prompt}, {"notes", a.notes}};
    return out;
}

GeneratedAgentSet agents_from_json(const Json& doc) {
    if (!doc.is_object()) throw SchemaError("agents: expected an object of agent name -> module");
    GeneratedAgentSet out;
    for (const auto& [name, a] : doc.items()) {
        FieldReader r(a, "agents." + name);
        GeneratedAgent g;
        g.system_prompt = r.non_empty_string("system_prompt");
        g.notes = r.optional_string("notes").value_or("");
        r.finish();
        out.emplace(name, std::move(g));
    }
    return out;
}

std::size_t output_index(StageId stage) {
    switch (stage) {
        case StageId::Understanding: return 0;
        case StageId::Design: return 1;
        case StageId::PromptDesign: return 2;
        case StageId::HierarchyAssign: return 3;
        case StageId::Generation: return 4;
        case StageId::IntegrationTest:
        case StageId::Optimization:
        case StageId::Documentation:
        case StageId::Deployment:
        case StageId::Feedback: return 5;
    }
    return 5;
}

template <class T>
const T& expect_output(const StageOutput& output) {
    if (const T* v = std::get_if<T>(&output)) return *v;
    throw WrongVariant("stage output holds variant " + std::to_string(output.index()));
}

template const SystemSpecification& expect_output<SystemSpecification>(const StageOutput&);
template const SystemBlueprint& expect_output<SystemBlueprint>(const StageOutput&);
template const PromptLibrary& expect_output<PromptLibrary>(const StageOutput&);
template const std::vector<SupervisionPair>& expect_output<std::vector<SupervisionPair>>(const StageOutput&);
template const GeneratedAgentSet& expect_output<GeneratedAgentSet>(const StageOutput&);
template const TextReport& expect_output<TextReport>(const StageOutput&);

CompletionRequest build_stage_prompt(StageId stage, const StageContext& ctx, const RequestOptions& options) {
    auto need = [](const auto& field, const char* name) {
        if (!field) throw MissingContext(name);
    };
    std::map<std::string, std::string> values;
    switch (stage) {
        case StageId::Understanding:
            if (ctx.user_prompt.empty()) throw MissingContext("user_prompt");
            values["user_prompt"] = ctx.user_prompt;
            break;
        case StageId::Design:
            need(ctx.specification, "specification");
            values["specification"] = to_document(specification_to_json(*ctx.specification));
            break;
        case StageId::PromptDesign:
        case StageId::HierarchyAssign:
            need(ctx.blueprint, "blueprint");
            values["blueprint"] = serialize_blueprint(*ctx.blueprint);
            break;
        case StageId::Generation:
            need(ctx.blueprint, "blueprint");
            values["blueprint"] = serialize_blueprint(*ctx.blueprint);
            values["agent_templates"] = agent_templates_text(ctx);
            break;
        case StageId::IntegrationTest:
            need(ctx.generated_agents, "generated_agents");
            need(ctx.smoke_summary, "smoke_summary");
            values["agents"] = to_document(agents_to_json(*ctx.generated_agents));
            values["smoke_run"] = *ctx.smoke_summary;
            break;
        case StageId::Optimization:
            need(ctx.test_report, "test_report");
            need(ctx.smoke_summary, "smoke_summary");
            need(ctx.blueprint, "blueprint");
            values["test_report"] = *ctx.test_report;
            values["smoke_run"] = *ctx.smoke_summary;
            values["agent_templates"] = agent_templates_text(ctx);
            break;
        case StageId::Documentation:
            need(ctx.blueprint, "blueprint");
            need(ctx.generated_agents, "generated_agents");
            values["blueprint"] = serialize_blueprint(*ctx.blueprint);
            values["agents"] = to_document(agents_to_json(*ctx.generated_agents));
            break;
        case StageId::Deployment:
            need(ctx.specification, "specification");
            need(ctx.blueprint, "blueprint");
            need(ctx.generated_agents, "generated_agents");
            need(ctx.test_report, "test_report");
            need(ctx.optimization_notes, "optimization_notes");
            need(ctx.documentation, "documentation");
            values["specification"] = to_document(specification_to_json(*ctx.specification));
            values["blueprint"] = serialize_blueprint(*ctx.blueprint);
            values["agents"] = to_document(agents_to_json(*ctx.generated_agents));
            values["test_report"] = *ctx.test_report;
            values["optimization_notes"] = *ctx.optimization_notes;
            values["documentation"] = *ctx.documentation;
            break;
        case StageId::Feedback:
            need(ctx.run_log_summary, "run_log_summary");
            values["run_summary"] = *ctx.run_log_summary;
            break;
    }

    auto tmpl = ctx.prompt_library.find(std::string(stage_name(stage)));
    if (tmpl == ctx.prompt_library.end()) throw MissingContext("prompt_library." + std::string(stage_name(stage)));

    const StageInfo& s = info(stage);
    std::string system = system_header(stage, "worker");
    system += "You are the ";
    system += s.title;
    system += " agent of a pipeline that designs and builds multi-agent systems.\n";
    system += s.duty;
    system += "\n";
    system += s.format;
    system += "\nPlace the artifact between a line reading exactly BEGIN_ARTIFACT and a line reading exactly END_ARTIFACT.";

    CompletionRequest req;
    req.messages = {{Role::System, std::move(system)}, {Role::User, render_template(tmpl->second, values)}};
    req.model_id = options.model_id;
    req.temperature = options.temperature;
    req.max_tokens = options.max_tokens;
    req.seed = options.seed;
    return req;
}

CompletionRequest build_approver_prompt(StageId stage, const StageContext& ctx, const CompletionRequest& worker_request,
                                        const std::string& artifact_text, const RequestOptions& options) {
    auto tmpl = ctx.prompt_library.find(std::string(kApproverTemplate));
    if (tmpl == ctx.prompt_library.end()) throw MissingContext("prompt_library.approver");

    std::string system = system_header(stage, "approver");
    system += "You review the work of the ";
    system += info(stage).title;
    system += " agent and either approve it or reject it with a critique.";

    std::map<std::string, std::string> values = {
        {"stage", std::string(stage_name(stage))},
        {"task", worker_request.last_user_content()},
        {"artifact", artifact_text},
    };
    CompletionRequest req;
    req.messages = {{Role::System, std::move(system)}, {Role::User, render_template(tmpl->second, values)}};
    req.model_id = options.model_id;
    req.temperature = options.temperature;
    req.max_tokens = options.max_tokens;
    req.seed = options.seed;
    return req;
}

StageOutput parse_stage_output(StageId stage, std::string_view text) {
    std::string block = extract_artifact(text);
    switch (output_index(stage)) {
        case 0: return specification_from_json(parse_json(block));
        case 1: return blueprint_from_json(parse_json(block));
        case 2: return library_from_json(parse_json(block));
        case 3: return supervision_from_json(parse_json(block));
        case 4: return agents_from_json(parse_json(block));
        default: return TextReport{std::move(block)};
    }
}

std::optional<PromptRevisions> parse_prompt_revisions(std::string_view report) {
    Json doc = Json::parse(report, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || doc.empty()) return std::nullopt;
    for (const auto& [key, _] : doc.items()) {
        if (key != "templates" && key != "temperatures") return std::nullopt;
    }
    PromptRevisions out;
    if (doc.contains("templates")) out.templates = library_from_json(doc["templates"]);
    if (doc.contains("temperatures")) {
        const Json& temps = doc["temperatures"];
        if (!temps.is_object()) throw SchemaError("temperatures: expected an object of agent name -> number");
        for (const auto& [name, value] : temps.items()) {
            if (!value.is_number()) throw SchemaError("temperatures." + name + ": expected a number");
            double t = value.get<double>();
            if (!(t >= 0.0 && t <= 2.0)) throw SchemaError("temperatures." + name + " outside [0, 2]");
            out.temperatures[name] = t;
        }
    }
    return out;
}

bool feedback_requests_revision(std::string_view report) {
    std::size_t start = 0;
    while (start <= report.size()) {
        std::size_t end = report.find('\n', start);
        if (end == std::string_view::npos) end = report.size();
        std::string_view line = report.substr(start, end - start);
        while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r')) line.remove_suffix(1);
        if (line == kRevisionsRequired) return true;
        start = end + 1;
    }
    return false;
}

}  // namespace genesis
