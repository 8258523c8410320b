// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <morphoforge/pipeline/edits.hpp>
#include <morphoforge/pipeline/session.hpp>
#include <morphoforge/render/renderer.hpp>
#include <morphoforge/vlm/gateway.hpp>

#include <optional>
#include <string>
#include <vector>

namespace morphoforge::pipeline
{

struct PipelineConfig
{
    render::RenderOptions render;
    /// Visual rounds run_full attempts; never more than max_visual_rounds.
    int visual_rounds = max_visual_rounds;
    std::string model = "gpt-4o";
};

struct FinalResult
{
    KinematicTree tree;
    std::string mjcf;
    validate::ValidationReport report;
};

[[nodiscard]] auto new_session(std::string id, std::string label, std::optional<std::string> reference_png = {},
                               BuildConstraints constraints = {}, validate::Tolerances tolerances = {})
    -> DesignSession;

/// Drives one session at a time through structure, build, visual and human stages.
/// Every method leaves the session consistent when it throws.
class Pipeline
{
  public:
    explicit Pipeline(vlm::Backend& backend, PipelineConfig config = {});

    /// Created -> Structured. Throws ParseFailure (after one re-prompt), PlanViolatesConstraints.
    auto synthesize_structure(DesignSession& session) -> StructurePlan;
    /// Structured -> Built. One exchange per plan node; right sides are mirrored.
    /// Throws ToolCallInvalid (after one re-prompt), AnchorSolveFailure, ValidationFailed.
    auto build(DesignSession& session) -> KinematicTree;
    /// One render-compare-edit round. An empty answer ends refinement early.
    /// Throws BudgetExhausted, MissingReference, EditRejected (the round still counts).
    auto visual_feedback_round(DesignSession& session) -> std::vector<EditCommand>;
    /// Rounds until an empty answer, the configured count or the budget; then VisualRefined.
    /// Returns the number of rounds run.
    auto visual_refinement(DesignSession& session) -> int;
    /// Throws InvalidArgument (empty text), BudgetExhausted, EditRejected, SessionClosed.
    auto human_feedback(DesignSession& session, std::string_view text) -> std::vector<EditCommand>;
    /// Marks the session Finalized; with `close`, later feedback is refused.
    auto finalize(DesignSession& session, bool close = false) -> FinalResult;
    /// Structure, build, visual refinement and finalize, from Created.
    auto run_full(DesignSession& session) -> FinalResult;

    [[nodiscard]] auto config() const -> PipelineConfig const& { return _config; }

  private:
    auto exchange(std::vector<vlm::ChatMessage> messages, std::vector<vlm::ToolSchema> tools = {})
        -> vlm::CompletionResponse;
    auto request_call(DesignSession const& session, StructurePlan const& plan, PlanNode const& node,
                      KinematicTree const& tree) -> AttachBodyCall;
    auto request_edits(std::vector<vlm::ChatMessage> messages) -> std::vector<EditCommand>;
    void commit(DesignSession& session, KinematicTree tree, std::string origin);

    vlm::Backend& _backend;
    PipelineConfig _config;
};

} // namespace morphoforge::pipeline
