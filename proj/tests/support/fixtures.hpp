#pragma once

#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>

#include "genesis/backend.hpp"
#include "genesis/blueprint.hpp"
#include "genesis/emitter.hpp"
#include "genesis/stages.hpp"

namespace fixtures {

using namespace genesis;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& child) const { return path_ / child; }

private:
    std::filesystem::path path_;
};

SystemSpecification content_specification();

/// content_creator -> content_manager -> content_adapter, each supervised by the next.
SystemBlueprint content_blueprint();
PromptLibrary content_templates();
GeneratedAgentSet content_agents();

/// Raw artifact text each stage worker emits in the approve-all fixture.
std::map<StageId, std::string> content_artifacts();

/// Context as it stands once every stage of the approve-all fixture completed.
StageContext complete_context();

/// Worker reply carrying `content` in an artifact block, with a chatty preamble.
std::string worker_reply(const std::string& content);

inline constexpr const char* kApproverMarker = "role: approver";
inline constexpr const char* kSmokeReply = "content ready";

/// Approver rule first, then one STAGE_TAG rule per stage; smoke-run agents hit the fallback.
MockScript approve_all_script();

/// Replaces the responses of the STAGE_TAG rule for `stage`.
MockScript with_stage_responses(MockScript script, StageId stage, std::vector<std::string> responses);

/// Replaces the approver rule responses.
MockScript with_approver_responses(MockScript script, std::vector<std::string> responses);

/// Blueprint whose names, edges and supervision are drawn at random, valid or not:
/// at most 6 agents and 10 flows.
SystemBlueprint random_blueprint(std::mt19937_64& rng);

/// Random blueprint that satisfies every validation rule.
SystemBlueprint random_valid_blueprint(std::mt19937_64& rng);

GeneratedSystemBundle random_bundle(std::mt19937_64& rng);

/// Violation codes found by checking each rule by exhaustive enumeration.
std::set<ViolationCode> oracle_codes(const SystemBlueprint& bp);

std::set<ViolationCode> codes_of(const ValidationReport& report);

/// Bundle with the given agents, flows and endpoints; prompts name the agent.
GeneratedSystemBundle topology_bundle(const std::vector<std::string>& agents,
                                      const std::vector<std::pair<std::string, std::string>>& flows,
                                      const std::string& entry, const std::string& exit, int max_steps = 32);

}  // namespace fixtures
