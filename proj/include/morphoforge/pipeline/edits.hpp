// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <morphoforge/pipeline/plan.hpp>
#include <morphoforge/validate/validator.hpp>
#include <morphoforge/vlm/gateway.hpp>

#include <string>
#include <variant>
#include <vector>

namespace morphoforge::pipeline
{

/// Arguments of the attach_body tool, the only tool offered while building.
struct AttachBodyCall
{
    std::string name;
    std::string parent; // empty for the root
    Vec3 growth_direction;
    JointSpec joint;
    PrimitiveShape shape;
    Rgba color;
    SymmetryTag symmetry;

    [[nodiscard]] auto to_json() const -> json;
    /// Shape, joint and value checks only; plan agreement is the caller's business.
    /// Throws ToolCallInvalid.
    [[nodiscard]] static auto from_json(json const& j, BuildConstraints const& constraints = {}) -> AttachBodyCall;
};

[[nodiscard]] auto attach_body_schema() -> vlm::ToolSchema;

/// {"type": "hinge", "axis": [..], "range": [lo, hi]} and friends.
[[nodiscard]] auto joint_to_json(JointSpec const& joint) -> json;
[[nodiscard]] auto joint_from_json(json const& j) -> JointSpec;

/// Fresh node for a call, unplaced.
[[nodiscard]] auto node_from_call(AttachBodyCall const& call) -> BodyNode;

struct SetSize
{
    std::string node;
    std::vector<double> size;
};
struct SetColor
{
    std::string node;
    Rgba color;
};
struct SetShape
{
    std::string node;
    PrimitiveShape shape;
};
struct SetGrowthDirection
{
    std::string node;
    Vec3 direction;
};
struct SetJoint
{
    std::string node;
    JointSpec joint;
};
struct AddBody
{
    AttachBodyCall call;
};
struct RemoveSubtree
{
    std::string node;
};
struct SetSymmetryTag
{
    std::string node;
    SymmetryTag tag;
};

using EditCommand =
    std::variant<SetSize, SetColor, SetShape, SetGrowthDirection, SetJoint, AddBody, RemoveSubtree, SetSymmetryTag>;

[[nodiscard]] auto edit_to_json(EditCommand const& edit) -> json;
/// Throws ParseFailure.
[[nodiscard]] auto edit_from_json(json const& j) -> EditCommand;
/// Accepts a bare array or {"edits": [...]}. Throws ParseFailure.
[[nodiscard]] auto parse_edits(json const& j) -> std::vector<EditCommand>;
[[nodiscard]] auto edits_to_json(std::vector<EditCommand> const& edits) -> json;

/// Applies the edits in order to a copy of the tree. Geometric edits re-place the node
/// and re-solve every descendant anchor. The result must validate with zero errors.
/// Throws UnknownNode for missing nodes and EditRejected for anything else.
[[nodiscard]] auto apply_edits(KinematicTree const& tree, std::vector<EditCommand> const& edits,
                               validate::Tolerances const& tol = {}, BuildConstraints const& constraints = {})
    -> KinematicTree;

} // namespace morphoforge::pipeline
