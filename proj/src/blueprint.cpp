#include "genesis/blueprint.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "genesis/artifact.hpp"
#include "genesis/error.hpp"

namespace genesis {

bool is_identifier(std::string_view text) {
    if (text.empty() || text.size() > 64) return false;
    if (text[0] < 'a' || text[0] > 'z') return false;
    return std::all_of(text.begin() + 1, text.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

const AgentDefinition* SystemBlueprint::find_agent(std::string_view name) const {
    for (const auto& a : agents) {
        if (a.name == name) return &a;
    }
    return nullptr;
}

std::string_view to_string(ViolationCode code) {
    switch (code) {
        case ViolationCode::NoAgents: return "NO_AGENTS";
        case ViolationCode::DupName: return "DUP_NAME";
        case ViolationCode::DanglingEdge: return "DANGLING_EDGE";
        case ViolationCode::SelfEdge: return "SELF_EDGE";
        case ViolationCode::MissingEntry: return "MISSING_ENTRY";
        case ViolationCode::MissingExit: return "MISSING_EXIT";
        case ViolationCode::Disconnected: return "DISCONNECTED";
        case ViolationCode::SupervisionCycle: return "SUPERVISION_CYCLE";
        case ViolationCode::SelfSupervision: return "SELF_SUPERVISION";
        case ViolationCode::BadIdentifier: return "BAD_IDENTIFIER";
    }
    return "?";
}

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

private:
    std::vector<std::size_t> parent_;
};

// Tarjan's strongly connected components; returns the nodes that lie on a
// directed cycle (members of components with more than one node).
std::set<std::string> nodes_on_cycles(const std::map<std::string, std::set<std::string>>& adj) {
    std::map<std::string, int> index, low;
    std::set<std::string> on_stack;
    std::vector<std::string> stack;
    std::set<std::string> result;
    int counter = 0;

    auto strongconnect = [&](auto&& self, const std::string& v) -> void {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack.insert(v);
        if (auto it = adj.find(v); it != adj.end()) {
            for (const auto& w : it->second) {
                if (!index.contains(w)) {
                    self(self, w);
                    low[v] = std::min(low[v], low[w]);
                } else if (on_stack.contains(w)) {
                    low[v] = std::min(low[v], index[w]);
                }
            }
        }
        if (low[v] == index[v]) {
            std::vector<std::string> component;
            std::string w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack.erase(w);
                component.push_back(w);
            } while (w != v);
            if (component.size() > 1) result.insert(component.begin(), component.end());
        }
    };

    for (const auto& [v, _] : adj) {
        if (!index.contains(v)) strongconnect(strongconnect, v);
    }
    return result;
}

}  // namespace

ValidationReport validate_blueprint(const SystemBlueprint& bp) {
    std::set<Violation> found;
    auto add = [&](ViolationCode code, std::string detail) { found.insert({code, std::move(detail)}); };

    if (!is_identifier(bp.system_name)) add(ViolationCode::BadIdentifier, "system_name: " + bp.system_name);

    if (bp.agents.empty()) {
        add(ViolationCode::NoAgents, "blueprint " + bp.system_name + " declares no agents");
        return ValidationReport{{found.begin(), found.end()}};
    }

    std::map<std::string, int> name_count;
    for (const auto& a : bp.agents) {
        ++name_count[a.name];
        if (!is_identifier(a.name)) add(ViolationCode::BadIdentifier, "agent: " + a.name);
        if (!is_identifier(a.prompt_template_id)) {
            add(ViolationCode::BadIdentifier, "prompt_template_id of " + a.name + ": " + a.prompt_template_id);
        }
    }
    for (const auto& [name, count] : name_count) {
        if (count > 1) add(ViolationCode::DupName, name);
    }
    auto exists = [&](const std::string& n) { return name_count.contains(n); };

    if (!exists(bp.entry_agent)) add(ViolationCode::MissingEntry, bp.entry_agent);
    if (!exists(bp.exit_agent)) add(ViolationCode::MissingExit, bp.exit_agent);

    std::vector<std::string> names;
    std::map<std::string, std::size_t> slot;
    for (const auto& [name, _] : name_count) {
        slot[name] = names.size();
        names.push_back(name);
    }
    DisjointSets sets(names.size());

    for (const auto& f : bp.flows) {
        const std::string edge = f.from_agent + "->" + f.to_agent;
        if (f.from_agent == f.to_agent) add(ViolationCode::SelfEdge, edge);
        if (!exists(f.from_agent)) add(ViolationCode::DanglingEdge, "flow " + edge + ": " + f.from_agent);
        if (!exists(f.to_agent)) add(ViolationCode::DanglingEdge, "flow " + edge + ": " + f.to_agent);
        if (exists(f.from_agent) && exists(f.to_agent)) sets.unite(slot[f.from_agent], slot[f.to_agent]);
    }

    std::vector<std::string> outside;
    const std::size_t root = sets.find(slot[bp.agents.front().name]);
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (sets.find(i) != root) outside.push_back(names[i]);
    }
    if (!outside.empty()) add(ViolationCode::Disconnected, "unreachable from " + bp.agents.front().name + ": " + join(outside, ","));

    std::map<std::string, std::set<std::string>> supervises;
    for (const auto& p : bp.supervision) {
        const std::string pair = p.step_id + " (" + p.worker + "->" + p.approver + ")";
        if (!is_identifier(p.step_id)) add(ViolationCode::BadIdentifier, "step_id: " + p.step_id);
        if (!exists(p.worker)) add(ViolationCode::DanglingEdge, "supervision " + pair + ": " + p.worker);
        if (!exists(p.approver)) add(ViolationCode::DanglingEdge, "supervision " + pair + ": " + p.approver);
        if (p.worker == p.approver) {
            add(ViolationCode::SelfSupervision, p.worker);
        } else {
            supervises[p.worker].insert(p.approver);
            supervises[p.approver];
        }
    }
    auto cyclic = nodes_on_cycles(supervises);
    if (!cyclic.empty()) {
        add(ViolationCode::SupervisionCycle, join({cyclic.begin(), cyclic.end()}, ","));
    }

    return ValidationReport{{found.begin(), found.end()}};
}

Json report_to_json(const ValidationReport& report) {
    Json violations = Json::array();
    for (const auto& v : report.violations) {
        violations.push_back({{"code", to_string(v.code)}, {"detail", v.detail}});
    }
    return {{"valid", report.valid()}, {"violations", std::move(violations)}};
}

// ---------------------------------------------------------------------------

Json specification_to_json(const SystemSpecification& spec) {
    return {
        {"goal", spec.goal},
        {"functional_requirements", spec.functional_requirements},
        {"suggested_agent_kinds", spec.suggested_agent_kinds},
        {"interaction_notes", spec.interaction_notes},
        {"constraints", spec.constraints},
    };
}

SystemSpecification specification_from_json(const Json& doc) {
    FieldReader r(doc, "specification");
    SystemSpecification out;
    out.goal = r.non_empty_string("goal");
    out.functional_requirements = r.string_list("functional_requirements");
    if (out.functional_requirements.empty()) {
        throw SchemaError("specification.functional_requirements must not be empty");
    }
    out.suggested_agent_kinds = r.optional_string_list("suggested_agent_kinds");
    out.interaction_notes = r.optional_string_list("interaction_notes");
    out.constraints = r.optional_string_list("constraints");
    r.finish();
    return out;
}

Json agent_to_json(const AgentDefinition& agent) {
    return {
        {"name", agent.name},
        {"role", agent.role},
        {"prompt_template_id", agent.prompt_template_id},
        {"temperature", agent.temperature},
        {"max_rounds", agent.max_rounds},
    };
}

namespace {

AgentDefinition agent_from_json(const Json& doc) {
    FieldReader r(doc, "blueprint.agents[]");
    AgentDefinition a;
    a.name = r.string("name");
    a.role = r.non_empty_string("role");
    a.prompt_template_id = r.string("prompt_template_id");
    a.temperature = r.number("temperature");
    if (!(a.temperature >= 0.0 && a.temperature <= 2.0)) {
        throw SchemaError("blueprint.agents[" + a.name + "].temperature outside [0, 2]");
    }
    auto rounds = r.integer("max_rounds");
    if (rounds < 1 || rounds > 1'000'000) {
        throw SchemaError("blueprint.agents[" + a.name + "].max_rounds must be a positive integer");
    }
    a.max_rounds = static_cast<int>(rounds);
    r.finish();
    return a;
}

DataFlowEdge flow_from_json(const Json& doc) {
    FieldReader r(doc, "blueprint.flows[]");
    DataFlowEdge f;
    f.from_agent = r.string("from_agent");
    f.to_agent = r.string("to_agent");
    f.payload_description = r.string("payload_description");
    r.finish();
    return f;
}

SupervisionPair pair_from_json(const Json& doc) {
    FieldReader r(doc, "supervision[]");
    SupervisionPair p;
    p.step_id = r.string("step_id");
    p.worker = r.string("worker");
    p.approver = r.string("approver");
    r.finish();
    return p;
}

}  // namespace

Json supervision_to_json(const std::vector<SupervisionPair>& pairs) {
    Json out = Json::array();
    for (const auto& p : pairs) {
        out.push_back({{"step_id", p.step_id}, {"worker", p.worker}, {"approver", p.approver}});
    }
    return out;
}

std::vector<SupervisionPair> supervision_from_json(const Json& doc) {
    if (!doc.is_array()) throw SchemaError("supervision: expected an array of pairs");
    std::vector<SupervisionPair> out;
    for (const auto& item : doc) {
        SupervisionPair p = pair_from_json(item);
        if (p.worker == p.approver) {
            throw SchemaError("supervision step " + p.step_id + ": worker and approver are both " + p.worker);
        }
        out.push_back(std::move(p));
    }
    return out;
}

Json blueprint_to_json(const SystemBlueprint& bp) {
    Json agents = Json::array();
    for (const auto& a : bp.agents) agents.push_back(agent_to_json(a));
    Json flows = Json::array();
    for (const auto& f : bp.flows) {
        flows.push_back({{"from_agent", f.from_agent}, {"to_agent", f.to_agent}, {"payload_description", f.payload_description}});
    }
    return {
        {"system_name", bp.system_name},
        {"agents", std::move(agents)},
        {"flows", std::move(flows)},
        {"entry_agent", bp.entry_agent},
        {"exit_agent", bp.exit_agent},
        {"supervision", supervision_to_json(bp.supervision)},
    };
}

SystemBlueprint blueprint_from_json(const Json& doc) {
    FieldReader r(doc, "blueprint");
    SystemBlueprint bp;
    bp.system_name = r.string("system_name");
    for (const auto& a : r.array("agents")) bp.agents.push_back(agent_from_json(a));
    if (const Json* flows = r.optional_array("flows")) {
        for (const auto& f : *flows) bp.flows.push_back(flow_from_json(f));
    }
    bp.entry_agent = r.string("entry_agent");
    bp.exit_agent = r.string("exit_agent");
    if (const Json* pairs = r.optional_array("supervision")) {
        // self-supervision is a validation finding here, not a schema error
        for (const auto& p : *pairs) bp.supervision.push_back(pair_from_json(p));
    }
    r.finish();
    return bp;
}

std::string serialize_blueprint(const SystemBlueprint& bp) { return to_document(blueprint_to_json(bp)); }

SystemBlueprint parse_blueprint(std::string_view doc) { return blueprint_from_json(parse_json(doc)); }

SystemSpecification parse_specification(std::string_view text) {
    return specification_from_json(parse_json(extract_artifact(text)));
}

}  // namespace genesis
