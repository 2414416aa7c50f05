#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "genesis/backend.hpp"
#include "genesis/blueprint.hpp"

namespace genesis {

/// The meta-pipeline stages in execution order.
enum class StageId {
    Understanding,
    Design,
    PromptDesign,
    HierarchyAssign,
    Generation,
    IntegrationTest,
    Optimization,
    Documentation,
    Deployment,
    Feedback,
};

inline constexpr std::array<StageId, 10> kStageOrder = {
    StageId::Understanding, StageId::Design,          StageId::PromptDesign,  StageId::HierarchyAssign,
    StageId::Generation,    StageId::IntegrationTest, StageId::Optimization,  StageId::Documentation,
    StageId::Deployment,    StageId::Feedback,
};

/// Lowercase name used in the "#stage: <name>" header and in logs.
std::string_view stage_name(StageId stage);
std::optional<StageId> stage_from_name(std::string_view name);

struct PromptTemplate {
    std::string template_id;
    std::string body;
    std::set<std::string> required_placeholders;

    bool operator==(const PromptTemplate&) const = default;
};

using PromptLibrary = std::map<std::string, PromptTemplate>;

/// Names of every {{name}} placeholder in `body`.
std::set<std::string> placeholders_in(std::string_view body);

/// Throws TemplateError if the body and required set disagree.
void validate_template(const PromptTemplate& tmpl);

/// Single-pass substitution: inserted values are not re-scanned. Throws
/// TemplateError when a required placeholder has no value.
std::string render_template(const PromptTemplate& tmpl, const std::map<std::string, std::string>& values);

Json library_to_json(const PromptLibrary& library);
/// Object of template_id -> {body, required_placeholders}. Throws SchemaError.
PromptLibrary library_from_json(const Json& doc);

inline constexpr std::string_view kWorkerRetryTemplate = "worker_retry";
inline constexpr std::string_view kApproverTemplate = "approver";

/// One template per stage (keyed by stage name) plus worker_retry and approver.
PromptLibrary default_templates();

struct GeneratedAgent {
    std::string system_prompt;
    std::string notes;

    bool operator==(const GeneratedAgent&) const = default;
};

using GeneratedAgentSet = std::map<std::string, GeneratedAgent>;

Json agents_to_json(const GeneratedAgentSet& agents);
GeneratedAgentSet agents_from_json(const Json& doc);

/// Everything produced so far by the meta-pipeline. A field is set once the
/// stage producing it has completed.
struct StageContext {
    std::string user_prompt;
    std::optional<SystemSpecification> specification;
    std::optional<SystemBlueprint> blueprint;
    PromptLibrary prompt_library = default_templates();
    std::optional<GeneratedAgentSet> generated_agents;
    std::optional<std::string> smoke_summary;
    std::optional<std::string> test_report;
    std::optional<std::string> optimization_notes;
    std::optional<std::string> documentation;
    std::optional<std::string> run_log_summary;
    std::optional<std::string> feedback_report;

    bool operator==(const StageContext&) const = default;
};

struct TextReport {
    std::string text;

    bool operator==(const TextReport&) const = default;
};

using StageOutput = std::variant<SystemSpecification, SystemBlueprint, PromptLibrary,
                                 std::vector<SupervisionPair>, GeneratedAgentSet, TextReport>;

/// Variant index (into StageOutput) that `stage` produces.
std::size_t output_index(StageId stage);

template <class T>
const T& expect_output(const StageOutput& output);

struct RequestOptions {
    std::string model_id = "default";
    double temperature = kDefaultTemperature;
    int max_tokens = kDefaultMaxTokens;
    std::optional<std::int64_t> seed;
};

/// Worker request for `stage`. The system message starts with
/// "#stage: <name>" and "role: worker"; the user message is the rendered
/// stage template. Throws MissingContext for an absent prerequisite.
CompletionRequest build_stage_prompt(StageId stage, const StageContext& ctx, const RequestOptions& options = {});

/// Approver request judging `artifact_text` produced for `worker_request`.
CompletionRequest build_approver_prompt(StageId stage, const StageContext& ctx, const CompletionRequest& worker_request,
                                        const std::string& artifact_text, const RequestOptions& options = {});

/// Decodes the first artifact block of `text` into the variant the stage produces.
StageOutput parse_stage_output(StageId stage, std::string_view text);

/// Revised templates and agent temperatures proposed by the optimization stage.
struct PromptRevisions {
    PromptLibrary templates;
    std::map<std::string, double> temperatures;
};

/// Returns the revisions when `report` is a JSON object with only
/// "templates" and/or "temperatures"; plain-prose reports yield nullopt.
std::optional<PromptRevisions> parse_prompt_revisions(std::string_view report);

inline constexpr std::string_view kRevisionsRequired = "REVISIONS: REQUIRED";

/// True when a line of the feedback report reads "REVISIONS: REQUIRED".
bool feedback_requests_revision(std::string_view report);

}  // namespace genesis
