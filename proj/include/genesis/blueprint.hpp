#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "genesis/canonical_json.hpp"

namespace genesis {

/// [a-z][a-z0-9_]{0,63}; safe as a file name and a manifest key.
bool is_identifier(std::string_view text);

/// Output of the understanding stage.
struct SystemSpecification {
    std::string goal;
    std::vector<std::string> functional_requirements;
    std::vector<std::string> suggested_agent_kinds;
    std::vector<std::string> interaction_notes;
    std::vector<std::string> constraints;

    bool operator==(const SystemSpecification&) const = default;
};

struct AgentDefinition {
    std::string name;
    std::string role;
    std::string prompt_template_id;
    double temperature = 0.2;
    int max_rounds = 3;

    bool operator==(const AgentDefinition&) const = default;
};

struct DataFlowEdge {
    std::string from_agent;
    std::string to_agent;
    std::string payload_description;

    bool operator==(const DataFlowEdge&) const = default;
};

/// One supervised step of the generated system: `worker` produces, `approver` judges.
struct SupervisionPair {
    std::string step_id;
    std::string worker;
    std::string approver;

    bool operator==(const SupervisionPair&) const = default;
};

struct SystemBlueprint {
    std::string system_name;
    std::vector<AgentDefinition> agents;
    std::vector<DataFlowEdge> flows;
    std::string entry_agent;
    std::string exit_agent;
    std::vector<SupervisionPair> supervision;

    bool operator==(const SystemBlueprint&) const = default;

    const AgentDefinition* find_agent(std::string_view name) const;
};

enum class ViolationCode {
    NoAgents,
    DupName,
    DanglingEdge,
    SelfEdge,
    MissingEntry,
    MissingExit,
    Disconnected,
    SupervisionCycle,
    SelfSupervision,
    BadIdentifier,
};

std::string_view to_string(ViolationCode code);

struct Violation {
    ViolationCode code;
    std::string detail;

    bool operator==(const Violation&) const = default;
    auto operator<=>(const Violation&) const = default;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool valid() const noexcept { return violations.empty(); }
    bool operator==(const ValidationReport&) const = default;
};

/// Reports every structural problem of `bp`, ordered by code then detail.
///
/// Rules:
///  - no agents: NO_AGENTS; nothing that refers to agents is checked further.
///  - each repeated agent name: DUP_NAME.
///  - system_name, agent names, prompt_template_ids and step_ids must be
///    identifiers: BAD_IDENTIFIER.
///  - flow with from == to: SELF_EDGE; flow endpoint or supervision member
///    that names no agent: DANGLING_EDGE.
///  - entry/exit naming no agent: MISSING_ENTRY / MISSING_EXIT.
///  - the undirected graph over agents and their resolvable flows has more
///    than one component: DISCONNECTED (detail lists the agents outside the
///    component of the first agent).
///  - worker == approver: SELF_SUPERVISION; a directed cycle among the
///    remaining worker -> approver pairs: SUPERVISION_CYCLE (detail lists the
///    agents on cycles).
ValidationReport validate_blueprint(const SystemBlueprint& bp);

Json report_to_json(const ValidationReport& report);

Json specification_to_json(const SystemSpecification& spec);
SystemSpecification specification_from_json(const Json& doc);

Json agent_to_json(const AgentDefinition& agent);
Json supervision_to_json(const std::vector<SupervisionPair>& pairs);
/// Expects an array of {step_id, worker, approver}; rejects worker == approver.
std::vector<SupervisionPair> supervision_from_json(const Json& doc);

Json blueprint_to_json(const SystemBlueprint& bp);
SystemBlueprint blueprint_from_json(const Json& doc);

/// Canonical document: sorted keys, two-space indent, LF, trailing newline.
/// The top-level key order is therefore agents, entry_agent, exit_agent,
/// flows, supervision, system_name.
std::string serialize_blueprint(const SystemBlueprint& bp);

/// Throws ParseError for malformed JSON and SchemaError for a document that
/// does not describe a blueprint (wrong types, unknown or missing fields,
/// out-of-range temperature or max_rounds). Identifier patterns are left to
/// validate_blueprint so they surface as BAD_IDENTIFIER.
SystemBlueprint parse_blueprint(std::string_view doc);

/// Decodes the specification in the first artifact block of `text`.
SystemSpecification parse_specification(std::string_view text);

}  // namespace genesis
