// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/core/error.hpp>
#include <morphoforge/geometry/placement.hpp>
#include <morphoforge/mjcf/mjcf.hpp>
#include <morphoforge/pipeline/pipeline.hpp>
#include <morphoforge/pipeline/prompts.hpp>

#include <algorithm>

namespace morphoforge::pipeline
{

namespace
{
    auto symmetry_rule(BuildConstraints const& c) -> std::string
    {
        return c.require_symmetry
                   ? "Paired limbs are required: list both sides and tag them. Only the left side is built by hand; "
                     "the right side is its mirror image across y = 0."
                   : "Symmetry tags are optional and every body is built by hand.";
    }

    auto summary_of(KinematicTree const& tree) -> std::string
    {
        return tree.empty() ? std::string("(no bodies yet)\n") : mjcf::summarize(tree);
    }

    auto with_images(vlm::ChatMessage message, std::vector<std::string> const& pngs) -> vlm::ChatMessage
    {
        for (auto const& png: pngs)
            message.parts.emplace_back(vlm::ImagePart { png, "image/png" });
        return message;
    }

    auto view_pngs(KinematicTree const& tree, render::RenderOptions const& options) -> std::vector<std::string>
    {
        std::vector<std::string> out;
        for (auto const& image: render::render_contact_views(tree, options))
            out.push_back(render::encode_png(image));
        return out;
    }

    /// The tree as it reads back from its MJCF text, so in-memory and reloaded sessions agree.
    auto canonical(KinematicTree const& tree, std::string const& label) -> KinematicTree
    {
        return mjcf::parse(mjcf::emit(tree, label));
    }

    /// Same bodies, re-added depth first with siblings in plan order.
    auto in_plan_order(KinematicTree const& tree, StructurePlan const& plan) -> KinematicTree
    {
        auto const rank = [&](NodeId id) {
            auto const& name = tree.node(id).name;
            for (std::size_t i = 0; i < plan.nodes.size(); ++i)
                if (plan.nodes[i].name == name)
                    return i;
            return plan.nodes.size();
        };
        KinematicTree out;
        auto const visit = [&](auto const& self, NodeId id, std::optional<NodeId> parent) -> void {
            auto const added = out.add_node(parent, tree.node(id));
            auto const span = tree.children(id);
            std::vector<NodeId> kids(span.begin(), span.end());
            std::stable_sort(kids.begin(), kids.end(), [&](NodeId a, NodeId b) { return rank(a) < rank(b); });
            for (auto kid: kids)
                self(self, kid, added);
        };
        visit(visit, tree.root(), std::nullopt);
        return out;
    }

    auto is_parse_error(ErrorCode code) -> bool
    {
        return code == ErrorCode::ParseFailure || code == ErrorCode::NoJsonFound || code == ErrorCode::MalformedJson;
    }

    void require_open(DesignSession const& session)
    {
        if (session.closed)
            throw Error(ErrorCode::SessionClosed, "session '" + session.id + "' is finalized");
    }
} // namespace

auto new_session(std::string id, std::string label, std::optional<std::string> reference_png,
                 BuildConstraints constraints, validate::Tolerances tolerances) -> DesignSession
{
    DesignSession s;
    s.id = std::move(id);
    s.label = std::move(label);
    s.reference_png = std::move(reference_png);
    s.constraints = std::move(constraints);
    s.tolerances = tolerances;
    return s;
}

Pipeline::Pipeline(vlm::Backend& backend, PipelineConfig config): _backend(backend), _config(std::move(config))
{
    if (_config.visual_rounds < 0 || _config.visual_rounds > max_visual_rounds)
        throw Error(ErrorCode::ConfigError, "visual rounds must be within 0.." + std::to_string(max_visual_rounds));
}

auto Pipeline::exchange(std::vector<vlm::ChatMessage> messages, std::vector<vlm::ToolSchema> tools)
    -> vlm::CompletionResponse
{
    vlm::CompletionRequest request;
    request.messages = std::move(messages);
    request.tools = std::move(tools);
    request.model = _config.model;
    return _backend.complete(request);
}

auto Pipeline::synthesize_structure(DesignSession& session) -> StructurePlan
{
    if (session.stage != Stage::Created)
        throw Error(ErrorCode::StageViolation, "structure synthesis needs a new session");
    if (session.label.find_first_not_of(" \t\r\n") == std::string::npos)
        throw Error(ErrorCode::InvalidArgument, "creature label is empty");

    auto const& c = session.constraints;
    auto const system = fill_template(prompt_template(PromptKind::Structure),
                                      { { "max_components", std::to_string(c.max_components) },
                                        { "max_links", std::to_string(c.max_links_per_component) },
                                        { "symmetry_rule", symmetry_rule(c) } });
    auto user = vlm::ChatMessage::user("Creature: " + session.label
                                       + (session.reference_png ? "\nA reference image is attached." : ""));
    if (session.reference_png)
        user = with_images(user, { *session.reference_png });
    std::vector<vlm::ChatMessage> messages { vlm::ChatMessage::system(system), user };

    std::optional<StructurePlan> plan;
    for (int attempt = 0; attempt < 2 && !plan; ++attempt)
    {
        auto const reply = exchange(messages);
        try
        {
            plan = parse_plan(vlm::extract_json(reply.text));
        }
        catch (Error const& e)
        {
            if (!is_parse_error(e.code()))
                throw;
            session.log.push_back({ "structure_parse_error", e.detail() });
            if (attempt == 1)
                throw Error(ErrorCode::ParseFailure, "structure plan unusable after a re-prompt: " + e.detail());
            messages.push_back(vlm::ChatMessage::assistant(reply.text));
            messages.push_back(vlm::ChatMessage::user("That reply could not be used: " + e.detail()
                                                      + ". Reply with the corrected JSON plan only."));
        }
    }
    check_plan(*plan, c);
    session.plan = *plan;
    session.advance(Stage::Structured);
    session.log.push_back({ "structured", std::to_string(plan->nodes.size()) + " nodes" });
    return *plan;
}

auto Pipeline::request_call(DesignSession const& session, StructurePlan const& plan, PlanNode const& node,
                            KinematicTree const& tree) -> AttachBodyCall
{
    auto const tool = attach_body_schema();
    auto const system
        = fill_template(prompt_template(PromptKind::Build), { { "symmetry_rule", symmetry_rule(session.constraints) } });
    auto const user = "Creature: " + session.label + "\nPlan:\n" + plan.to_json().dump(2) + "\nCurrent model:\n"
                      + summary_of(tree) + "Next node: " + node.name + "\nParent: "
                      + (node.parent.empty() ? std::string("none (root)") : node.parent) + "\nPurpose: " + node.purpose
                      + "\nSymmetry: " + node.symmetry.to_string() + "\nCall attach_body for this node.";
    std::vector<vlm::ChatMessage> messages { vlm::ChatMessage::system(system), vlm::ChatMessage::user(user) };

    for (int attempt = 0;; ++attempt)
    {
        auto const reply = exchange(messages, { tool });
        std::string shown = reply.text;
        try
        {
            json args;
            if (!reply.tool_calls.empty())
            {
                auto const& call = reply.tool_calls.front();
                shown = "attach_body " + call.arguments.dump();
                auto const problems = vlm::check_tool_call({ tool }, call);
                if (!problems.empty())
                    throw Error(ErrorCode::ToolCallInvalid, problems.front());
                args = call.arguments;
            }
            else
                args = vlm::extract_json(reply.text);

            auto call = AttachBodyCall::from_json(args, session.constraints);
            if (call.name != node.name)
                throw Error(ErrorCode::ToolCallInvalid, "expected node '" + node.name + "', got '" + call.name + "'");
            if (call.parent != node.parent)
                throw Error(ErrorCode::ToolCallInvalid,
                            "'" + node.name + "' must hang off '" + node.parent + "', not '" + call.parent + "'");
            if (call.symmetry.tagged() && call.symmetry != node.symmetry)
                throw Error(ErrorCode::ToolCallInvalid, "symmetry tag disagrees with the plan");
            call.symmetry = node.symmetry;
            return call;
        }
        catch (Error const& e)
        {
            if (e.code() != ErrorCode::ToolCallInvalid && !is_parse_error(e.code()))
                throw;
            if (attempt == 1)
                throw Error(ErrorCode::ToolCallInvalid,
                            "attach_body for '" + node.name + "' still invalid after a re-prompt: " + e.detail());
            messages.push_back(vlm::ChatMessage::assistant(shown.empty() ? std::string("(no tool call)") : shown));
            messages.push_back(vlm::ChatMessage::user("The attach_body call was rejected: " + e.detail()
                                                      + ". Call attach_body again for '" + node.name
                                                      + "' with corrected arguments."));
        }
    }
}

auto Pipeline::build(DesignSession& session) -> KinematicTree
{
    if (session.stage != Stage::Structured || !session.plan)
        throw Error(ErrorCode::StageViolation, "build needs a structured session");
    auto const mirror = session.constraints.require_symmetry;
    auto const plan = mirror ? *session.plan : without_symmetry(*session.plan);

    KinematicTree tree;
    for (auto const& node: plan.nodes)
    {
        if (mirror && node.symmetry.side == Side::Right)
            continue;
        auto const call = request_call(session, plan, node, tree);
        auto body = node_from_call(call);
        if (call.parent.empty())
            tree.add_node(std::nullopt, std::move(body));
        else
        {
            auto const id = tree.add_node(tree.id_of(call.parent), std::move(body));
            geometry::place_node(tree, id);
        }
    }
    if (mirror)
        for (auto const& node: plan.nodes)
        {
            if (node.symmetry.side != Side::Right || plan.find(node.parent)->symmetry.side == Side::Right)
                continue;
            mirror_subtree(tree, tree.id_of(mirrored_name(node.name, Side::Left)));
        }

    tree = canonical(in_plan_order(tree, plan), session.label);
    auto const report = validate::validate(tree, session.tolerances);
    if (!report.passed())
    {
        session.error = report.to_json().dump();
        throw Error(ErrorCode::ValidationFailed, "built model has " + std::to_string(report.errors.size())
                                                     + " validation error(s): " + report.errors.front().message);
    }
    commit(session, tree, "build");
    session.advance(Stage::Built);
    return tree;
}

void Pipeline::commit(DesignSession& session, KinematicTree tree, std::string origin)
{
    auto const index = static_cast<int>(session.snapshots.size());
    session.snapshots.push_back({ index, origin, std::move(tree) });
    session.log.push_back({ "snapshot", std::to_string(index) + " from " + origin });
}

auto Pipeline::request_edits(std::vector<vlm::ChatMessage> messages) -> std::vector<EditCommand>
{
    auto const reply = exchange(std::move(messages));
    try
    {
        return parse_edits(vlm::extract_json(reply.text));
    }
    catch (Error const& e)
    {
        if (!is_parse_error(e.code()))
            throw;
        throw Error(ErrorCode::EditRejected, "edit list unusable: " + e.detail());
    }
}

auto Pipeline::visual_feedback_round(DesignSession& session) -> std::vector<EditCommand>
{
    if (session.stage < Stage::Built || !session.current())
        throw Error(ErrorCode::StageViolation, "visual feedback needs a built model");
    require_open(session);
    if (session.visual_rounds_used >= max_visual_rounds)
        throw Error(ErrorCode::BudgetExhausted,
                    "all " + std::to_string(max_visual_rounds) + " visual feedback rounds are used");
    if (session.stage == Stage::Finalized)
        throw Error(ErrorCode::StageViolation, "visual feedback ends when the session is finalized");
    if (!session.reference_png)
        throw Error(ErrorCode::MissingReference, "visual feedback needs a reference image");

    auto const round = session.visual_rounds_used + 1;
    auto const& tree = session.current()->tree;
    auto const text = "Creature: " + session.label + "\nRound " + std::to_string(round) + " of "
                      + std::to_string(max_visual_rounds) + ".\nCurrent model:\n" + summary_of(tree);
    auto images = view_pngs(tree, _config.render);
    images.insert(images.begin(), *session.reference_png);
    std::vector<vlm::ChatMessage> messages { vlm::ChatMessage::system(std::string(prompt_template(PromptKind::Visual))),
                                             with_images(vlm::ChatMessage::user(text), images) };

    session.visual_rounds_used = round;
    auto const finish = [&] {
        if (session.visual_rounds_used >= max_visual_rounds)
            session.advance(Stage::VisualRefined);
    };
    try
    {
        auto const edits = request_edits(std::move(messages));
        if (edits.empty())
        {
            session.log.push_back({ "visual_round", std::to_string(round) + ": no edits" });
            session.advance(Stage::VisualRefined);
            return edits;
        }
        auto next = apply_edits(tree, edits, session.tolerances, session.constraints);
        commit(session, canonical(next, session.label), "visual:" + std::to_string(round));
        session.log.push_back({ "visual_round", std::to_string(round) + ": " + std::to_string(edits.size()) + " edits applied" });
        finish();
        return edits;
    }
    catch (Error const& e)
    {
        if (e.code() != ErrorCode::EditRejected && e.code() != ErrorCode::UnknownNode)
        {
            session.visual_rounds_used = round - 1;
            throw;
        }
        session.log.push_back({ "visual_round_rejected", std::to_string(round) + ": " + e.detail() });
        finish();
        throw Error(ErrorCode::EditRejected, e.detail());
    }
}

auto Pipeline::visual_refinement(DesignSession& session) -> int
{
    int rounds = 0;
    while (rounds < _config.visual_rounds && session.visual_rounds_used < max_visual_rounds)
    {
        ++rounds;
        try
        {
            if (visual_feedback_round(session).empty())
                break;
        }
        catch (Error const& e)
        {
            if (e.code() != ErrorCode::EditRejected)
                throw;
        }
    }
    session.advance(Stage::VisualRefined);
    return rounds;
}

auto Pipeline::human_feedback(DesignSession& session, std::string_view text) -> std::vector<EditCommand>
{
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
        throw Error(ErrorCode::InvalidArgument, "feedback text is empty");
    require_open(session);
    if (session.stage < Stage::VisualRefined || !session.current())
        throw Error(ErrorCode::StageViolation, "human feedback starts after visual refinement");
    if (session.human_prompts_used >= max_human_prompts)
        throw Error(ErrorCode::BudgetExhausted,
                    "the number of prompts is limited to " + std::to_string(max_human_prompts));

    auto const prompt = session.human_prompts_used + 1;
    auto const& tree = session.current()->tree;
    auto const user = "Creature: " + session.label + "\nRequest: " + std::string(text) + "\nCurrent model:\n"
                      + summary_of(tree);
    std::vector<vlm::ChatMessage> messages { vlm::ChatMessage::system(std::string(prompt_template(PromptKind::Human))),
                                             with_images(vlm::ChatMessage::user(user), view_pngs(tree, _config.render)) };

    session.human_prompts_used = prompt;
    try
    {
        auto const edits = request_edits(std::move(messages));
        if (edits.empty())
        {
            session.log.push_back({ "human_prompt", std::to_string(prompt) + ": no edits" });
            return edits;
        }
        auto next = apply_edits(tree, edits, session.tolerances, session.constraints);
        commit(session, canonical(next, session.label), "human:" + std::to_string(prompt));
        session.log.push_back({ "human_prompt", std::to_string(prompt) + ": " + std::to_string(edits.size()) + " edits applied" });
        return edits;
    }
    catch (Error const& e)
    {
        if (e.code() != ErrorCode::EditRejected && e.code() != ErrorCode::UnknownNode)
        {
            session.human_prompts_used = prompt - 1;
            throw;
        }
        session.log.push_back({ "human_prompt_rejected", std::to_string(prompt) + ": " + e.detail() });
        throw Error(ErrorCode::EditRejected, e.detail());
    }
}

auto Pipeline::finalize(DesignSession& session, bool close) -> FinalResult
{
    if (session.stage < Stage::Built || !session.current())
        throw Error(ErrorCode::StageViolation, "nothing to finalize before the model is built");
    auto const& tree = session.current()->tree;
    auto report = validate::validate(tree, session.tolerances);
    if (!report.passed())
        throw Error(ErrorCode::ValidationFailed, "final model fails validation");
    session.advance(Stage::Finalized);
    if (close)
        session.closed = true;
    return { tree, mjcf::emit(tree, session.label), std::move(report) };
}

auto Pipeline::run_full(DesignSession& session) -> FinalResult
{
    synthesize_structure(session);
    build(session);
    visual_refinement(session);
    return finalize(session);
}

} // namespace morphoforge::pipeline
