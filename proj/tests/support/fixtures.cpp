#include "fixtures.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <regex>

#include "genesis/artifact.hpp"

namespace fixtures {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
    std::random_device rd;
    for (;;) {
        path_ = fs::temp_directory_path() / ("genesis_" + tag + "_" + std::to_string(rd()));
        if (fs::create_directories(path_)) break;
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

SystemSpecification content_specification() {
    SystemSpecification s;
    s.goal = "Create, manage and adapt marketing content";
    s.functional_requirements = {"draft articles from a brief", "track content status", "adapt content per channel"};
    s.suggested_agent_kinds = {"creator", "manager", "adapter"};
    s.interaction_notes = {"drafts flow from creator to manager to adapter"};
    s.constraints = {"plain text output"};
    return s;
}

SystemBlueprint content_blueprint() {
    SystemBlueprint bp;
    bp.system_name = "content_studio";
    bp.agents = {
        {"content_creator", "Writes first drafts from the brief", "creator_prompt", 0.7, 3},
        {"content_manager", "Reviews and organises drafts", "manager_prompt", 0.2, 3},
        {"content_adapter", "Adapts approved content per channel", "adapter_prompt", 0.4, 2},
    };
    bp.flows = {
        {"content_creator", "content_manager", "draft article"},
        {"content_manager", "content_adapter", "approved article"},
    };
    bp.entry_agent = "content_creator";
    bp.exit_agent = "content_adapter";
    bp.supervision = {
        {"draft", "content_creator", "content_manager"},
        {"manage", "content_manager", "content_adapter"},
    };
    return bp;
}

PromptLibrary content_templates() {
    PromptLibrary lib;
    lib["creator_prompt"] = {"creator_prompt", "Write a draft about {{brief}}.", {"brief"}};
    lib["manager_prompt"] = {"manager_prompt", "Review the draft and tag its status.", {}};
    lib["adapter_prompt"] = {"adapter_prompt", "Adapt the article for {{channel}}.", {"channel"}};
    return lib;
}

GeneratedAgentSet content_agents() {
    return {
        {"content_creator", {"You are content_creator. Write a first draft from the brief you receive.", "creative"}},
        {"content_manager", {"You are content_manager. Review drafts and mark them approved.", "strict"}},
        {"content_adapter", {"You are content_adapter. Rewrite approved articles for social media.", ""}},
    };
}

namespace {

Json spec_doc() {
    return {
        {"goal", "Create, manage and adapt marketing content"},
        {"functional_requirements", {"draft articles from a brief", "track content status", "adapt content per channel"}},
        {"suggested_agent_kinds", {"creator", "manager", "adapter"}},
        {"interaction_notes", {"drafts flow from creator to manager to adapter"}},
        {"constraints", {"plain text output"}},
    };
}

Json agent_doc(const char* name, const char* role, const char* tmpl, double t, int rounds) {
    return {{"name", name}, {"role", role}, {"prompt_template_id", tmpl}, {"temperature", t}, {"max_rounds", rounds}};
}

Json blueprint_doc(bool with_supervision) {
    Json supervision = Json::array();
    if (with_supervision) {
        supervision.push_back({{"step_id", "draft"}, {"worker", "content_creator"}, {"approver", "content_manager"}});
        supervision.push_back({{"step_id", "manage"}, {"worker", "content_manager"}, {"approver", "content_adapter"}});
    }
    return {
        {"system_name", "content_studio"},
        {"agents",
         {agent_doc("content_creator", "Writes first drafts from the brief", "creator_prompt", 0.7, 3),
          agent_doc("content_manager", "Reviews and organises drafts", "manager_prompt", 0.2, 3),
          agent_doc("content_adapter", "Adapts approved content per channel", "adapter_prompt", 0.4, 2)}},
        {"flows",
         {{{"from_agent", "content_creator"}, {"to_agent", "content_manager"}, {"payload_description", "draft article"}},
          {{"from_agent", "content_manager"}, {"to_agent", "content_adapter"}, {"payload_description", "approved article"}}}},
        {"entry_agent", "content_creator"},
        {"exit_agent", "content_adapter"},
        {"supervision", supervision},
    };
}

}  // namespace

std::map<StageId, std::string> content_artifacts() {
    Json templates = {
        {"creator_prompt", {{"body", "Write a draft about {{brief}}."}, {"required_placeholders", {"brief"}}}},
        {"manager_prompt", {{"body", "Review the draft and tag its status."}, {"required_placeholders", Json::array()}}},
        {"adapter_prompt", {{"body", "Adapt the article for {{channel}}."}, {"required_placeholders", {"channel"}}}},
    };
    Json pairs = blueprint_doc(true)["supervision"];
    Json agents = Json::object();
    for (const auto& [name, a] : content_agents()) agents[name] = {{"system_prompt", a.system_prompt}, {"notes", a.notes}};

    return {
        {StageId::Understanding, spec_doc().dump(2)},
        {StageId::Design, blueprint_doc(false).dump(2)},
        {StageId::PromptDesign, templates.dump(2)},
        {StageId::HierarchyAssign, pairs.dump(2)},
        {StageId::Generation, agents.dump(2)},
        {StageId::IntegrationTest, "Smoke run reached the exit agent.\nAll three agents replied."},
        {StageId::Optimization, "Metrics: smoke verdict pass, 6 messages, 0 loop incidents.\nNo changes proposed."},
        {StageId::Documentation, "# Content studio\n\nThree agents draft, review and adapt content.\n"},
        {StageId::Deployment, "Bundle written for content_studio."},
        {StageId::Feedback, "Users asked for shorter drafts.\nREVISIONS: NONE"},
    };
}

StageContext complete_context() {
    StageContext ctx;
    ctx.user_prompt = "Build a system for content creation, management, and adaptation.";
    ctx.specification = content_specification();
    ctx.blueprint = content_blueprint();
    for (auto& [id, t] : content_templates()) ctx.prompt_library[id] = t;
    ctx.generated_agents = content_agents();
    auto arts = content_artifacts();
    ctx.smoke_summary = "smoke";
    ctx.test_report = arts[StageId::IntegrationTest];
    ctx.optimization_notes = arts[StageId::Optimization];
    ctx.documentation = arts[StageId::Documentation];
    return ctx;
}

std::string worker_reply(const std::string& content) {
    return "Here is the artifact.\n" + wrap_artifact(content) + "\nLet me know if anything is missing.";
}

MockScript approve_all_script() {
    MockScript script;
    script.rules.push_back({MatchKind::ContainsText, kApproverMarker, {"The work meets the brief.\nVERDICT: APPROVE"}});
    for (const auto& [stage, content] : content_artifacts()) {
        script.rules.push_back({MatchKind::StageTag, std::string(stage_name(stage)), {worker_reply(content)}});
    }
    script.fallback = kSmokeReply;
    return script;
}

MockScript with_stage_responses(MockScript script, StageId stage, std::vector<std::string> responses) {
    for (auto& rule : script.rules) {
        if (rule.matcher == MatchKind::StageTag && rule.pattern == stage_name(stage)) rule.responses = responses;
    }
    return script;
}

MockScript with_approver_responses(MockScript script, std::vector<std::string> responses) {
    for (auto& rule : script.rules) {
        if (rule.matcher == MatchKind::ContainsText && rule.pattern == kApproverMarker) rule.responses = responses;
    }
    return script;
}

// ---------------------------------------------------------------------------
// Random blueprints

namespace {

int pick(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

bool chance(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

const std::vector<std::string>& name_pool() {
    static const std::vector<std::string> pool = {"a", "b", "c", "d", "e", "f", "planner", "coder_2"};
    return pool;
}

const std::vector<std::string>& bad_names() {
    static const std::vector<std::string> pool = {"Bad", "9lives", "", "has space", "x-y"};
    return pool;
}

std::string any_name(std::mt19937_64& rng) {
    if (chance(rng, 0.05)) return bad_names()[pick(rng, 0, static_cast<int>(bad_names().size()) - 1)];
    return name_pool()[pick(rng, 0, static_cast<int>(name_pool().size()) - 1)];
}

std::string random_text(std::mt19937_64& rng) {
    static const std::vector<std::string> words = {"draft", "review", "Émile", "naïve", "データ", "plan", "\"quoted\"",
                                                   "tab\there", "line\nbreak", "∑", "back\\slash"};
    std::string out;
    int n = pick(rng, 1, 4);
    for (int i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += words[pick(rng, 0, static_cast<int>(words.size()) - 1)];
    }
    return out;
}

AgentDefinition random_agent(std::mt19937_64& rng, std::string name) {
    AgentDefinition a;
    a.name = std::move(name);
    a.role = random_text(rng);
    a.prompt_template_id = "t_" + std::to_string(pick(rng, 0, 9));
    a.temperature = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    a.max_rounds = pick(rng, 1, 5);
    return a;
}

std::string some_agent(std::mt19937_64& rng, const SystemBlueprint& bp) {
    return bp.agents[pick(rng, 0, static_cast<int>(bp.agents.size()) - 1)].name;
}

// Breaks (or occasionally keeps) one rule of a blueprint.
void mutate(std::mt19937_64& rng, SystemBlueprint& bp) {
    const bool room = bp.flows.size() < 10;
    switch (pick(rng, 0, 11)) {
        case 0: bp.agents.clear(); break;
        case 1: bp.agents[pick(rng, 0, static_cast<int>(bp.agents.size()) - 1)].name = some_agent(rng, bp); break;
        case 2: bp.agents[pick(rng, 0, static_cast<int>(bp.agents.size()) - 1)].name = any_name(rng); break;
        case 3:
            if (chance(rng, 0.5)) bp.system_name = "Bad Name";
            else bp.agents.front().prompt_template_id = "Tmpl";
            break;
        case 4:
            if (room) bp.flows.push_back({some_agent(rng, bp), any_name(rng), random_text(rng)});
            break;
        case 5:
            if (room) {
                auto n = some_agent(rng, bp);
                bp.flows.push_back({n, n, random_text(rng)});
            }
            break;
        case 6: bp.entry_agent = any_name(rng); break;
        case 7: bp.exit_agent = any_name(rng); break;
        case 8:
            if (!bp.flows.empty()) bp.flows.erase(bp.flows.begin() + pick(rng, 0, static_cast<int>(bp.flows.size()) - 1));
            break;
        case 9:
            if (!bp.supervision.empty()) {
                const auto& p = bp.supervision[pick(rng, 0, static_cast<int>(bp.supervision.size()) - 1)];
                bp.supervision.push_back({"back", p.approver, p.worker});
            } else {
                bp.supervision.push_back({"pair", some_agent(rng, bp), some_agent(rng, bp)});
            }
            break;
        case 10: {
            auto n = some_agent(rng, bp);
            bp.supervision.push_back({chance(rng, 0.3) ? "Step" : "self", n, chance(rng, 0.7) ? n : any_name(rng)});
            break;
        }
        default:
            bp.agents.push_back(random_agent(rng, any_name(rng)));
            if (bp.agents.size() > 6) bp.agents.erase(bp.agents.begin());
            break;
    }
}

}  // namespace

SystemBlueprint random_valid_blueprint(std::mt19937_64& rng) {
    SystemBlueprint bp;
    bp.system_name = "sys_" + std::to_string(pick(rng, 0, 999));
    const int agents = pick(rng, 1, 6);
    std::vector<std::string> names;
    for (int i = 0; i < agents; ++i) {
        names.push_back("agent_" + std::to_string(i) + (chance(rng, 0.5) ? "x" : ""));
        bp.agents.push_back(random_agent(rng, names.back()));
    }
    // spanning tree first, then extra flows
    for (int i = 1; i < agents; ++i) {
        int j = pick(rng, 0, i - 1);
        if (chance(rng, 0.5)) bp.flows.push_back({names[j], names[i], random_text(rng)});
        else bp.flows.push_back({names[i], names[j], random_text(rng)});
    }
    while (agents > 1 && static_cast<int>(bp.flows.size()) < 10 && chance(rng, 0.5)) {
        int i = pick(rng, 0, agents - 1), j = pick(rng, 0, agents - 1);
        if (i != j) bp.flows.push_back({names[i], names[j], random_text(rng)});
    }
    std::shuffle(bp.flows.begin(), bp.flows.end(), rng);
    bp.entry_agent = names[pick(rng, 0, agents - 1)];
    bp.exit_agent = names[pick(rng, 0, agents - 1)];
    // supervision points from lower to higher index only
    if (agents > 1) {
        const int pairs = pick(rng, 0, 4);
        for (int k = 0; k < pairs; ++k) {
            int i = pick(rng, 0, agents - 2);
            int j = pick(rng, i + 1, agents - 1);
            bp.supervision.push_back({"step_" + std::to_string(k), names[i], names[j]});
        }
    }
    return bp;
}

SystemBlueprint random_blueprint(std::mt19937_64& rng) {
    SystemBlueprint bp = random_valid_blueprint(rng);
    const int mutations = pick(rng, 0, 3);
    for (int i = 0; i < mutations && !bp.agents.empty(); ++i) mutate(rng, bp);
    return bp;
}

GeneratedSystemBundle random_bundle(std::mt19937_64& rng) {
    GeneratedSystemBundle b;
    b.blueprint = random_valid_blueprint(rng);
    b.manifest.system_name = b.blueprint.system_name;
    b.manifest.created_at = "2026-10-16T09:30:00." + std::to_string(100 + pick(rng, 0, 899)) + "Z";
    b.manifest.entry_agent = b.blueprint.entry_agent;
    b.manifest.exit_agent = b.blueprint.exit_agent;
    b.manifest.max_steps = pick(rng, 1, 64);
    b.supervision = b.blueprint.supervision;
    for (const auto& a : b.blueprint.agents) {
        std::string prompt = "You are " + a.name + ". " + random_text(rng);
        if (chance(rng, 0.3)) prompt += "\n";
        if (chance(rng, 0.2)) prompt += "\r\nsecond line\n\n";
        b.prompts[a.name] = prompt;
    }
    b.docs = chance(rng, 0.1) ? "" : "# " + b.blueprint.system_name + "\n\n" + random_text(rng) + "\n";
    return b;
}

// ---------------------------------------------------------------------------
// Brute-force oracle

std::set<ViolationCode> oracle_codes(const SystemBlueprint& bp) {
    static const std::regex ident("[a-z][a-z0-9_]{0,63}");
    auto ok = [](const std::string& s) { return std::regex_match(s, ident); };
    std::set<ViolationCode> codes;

    if (!ok(bp.system_name)) codes.insert(ViolationCode::BadIdentifier);
    if (bp.agents.empty()) {
        codes.insert(ViolationCode::NoAgents);
        return codes;
    }

    auto has = [&](const std::string& n) {
        return std::any_of(bp.agents.begin(), bp.agents.end(), [&](const auto& a) { return a.name == n; });
    };
    for (std::size_t i = 0; i < bp.agents.size(); ++i) {
        if (!ok(bp.agents[i].name) || !ok(bp.agents[i].prompt_template_id)) codes.insert(ViolationCode::BadIdentifier);
        for (std::size_t j = i + 1; j < bp.agents.size(); ++j) {
            if (bp.agents[i].name == bp.agents[j].name) codes.insert(ViolationCode::DupName);
        }
    }
    if (!has(bp.entry_agent)) codes.insert(ViolationCode::MissingEntry);
    if (!has(bp.exit_agent)) codes.insert(ViolationCode::MissingExit);

    for (const auto& f : bp.flows) {
        if (f.from_agent == f.to_agent) codes.insert(ViolationCode::SelfEdge);
        if (!has(f.from_agent) || !has(f.to_agent)) codes.insert(ViolationCode::DanglingEdge);
    }

    // BFS over the undirected graph from the first agent
    std::set<std::string> seen{bp.agents.front().name};
    std::queue<std::string> frontier;
    frontier.push(bp.agents.front().name);
    while (!frontier.empty()) {
        std::string cur = frontier.front();
        frontier.pop();
        for (const auto& f : bp.flows) {
            if (!has(f.from_agent) || !has(f.to_agent)) continue;
            for (const auto& [x, y] : {std::pair{f.from_agent, f.to_agent}, std::pair{f.to_agent, f.from_agent}}) {
                if (x == cur && !seen.count(y)) {
                    seen.insert(y);
                    frontier.push(y);
                }
            }
        }
    }
    for (const auto& a : bp.agents) {
        if (!seen.count(a.name)) codes.insert(ViolationCode::Disconnected);
    }

    for (const auto& p : bp.supervision) {
        if (!ok(p.step_id)) codes.insert(ViolationCode::BadIdentifier);
        if (!has(p.worker) || !has(p.approver)) codes.insert(ViolationCode::DanglingEdge);
        if (p.worker == p.approver) codes.insert(ViolationCode::SelfSupervision);
    }

    // exhaustive search for a simple path that returns to its start
    std::function<bool(const std::string&, const std::string&, std::vector<std::string>&)> returns_to;
    returns_to = [&](const std::string& start, const std::string& cur, std::vector<std::string>& path) {
        for (const auto& p : bp.supervision) {
            if (p.worker != cur || p.worker == p.approver) continue;
            if (p.approver == start) return true;
            if (std::find(path.begin(), path.end(), p.approver) != path.end()) continue;
            path.push_back(p.approver);
            if (returns_to(start, p.approver, path)) return true;
            path.pop_back();
        }
        return false;
    };
    for (const auto& p : bp.supervision) {
        std::vector<std::string> path{p.worker};
        if (returns_to(p.worker, p.worker, path)) codes.insert(ViolationCode::SupervisionCycle);
    }
    return codes;
}

std::set<ViolationCode> codes_of(const ValidationReport& report) {
    std::set<ViolationCode> codes;
    for (const auto& v : report.violations) codes.insert(v.code);
    return codes;
}

GeneratedSystemBundle topology_bundle(const std::vector<std::string>& agents,
                                      const std::vector<std::pair<std::string, std::string>>& flows,
                                      const std::string& entry, const std::string& exit, int max_steps) {
    GeneratedSystemBundle b;
    b.blueprint.system_name = "topology";
    for (const auto& n : agents) b.blueprint.agents.push_back({n, "relay", n + "_prompt", 0.2, 3});
    for (const auto& [from, to] : flows) b.blueprint.flows.push_back({from, to, "payload"});
    b.blueprint.entry_agent = entry;
    b.blueprint.exit_agent = exit;
    b.manifest.system_name = "topology";
    b.manifest.created_at = "2026-10-16T00:00:00.000Z";
    b.manifest.entry_agent = entry;
    b.manifest.exit_agent = exit;
    b.manifest.max_steps = max_steps;
    for (const auto& n : agents) b.prompts[n] = "You are " + n + ".";
    b.docs = "topology fixture\n";
    return b;
}

}  // namespace fixtures
