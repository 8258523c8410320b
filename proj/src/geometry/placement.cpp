// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/core/error.hpp>
#include <morphoforge/geometry/kernel.hpp>
#include <morphoforge/geometry/placement.hpp>

namespace morphoforge::geometry
{

void place_node(KinematicTree& tree, NodeId id)
{
    auto& node = tree.node(id);
    if (!node.parent)
        return;
    auto const direction = node.growth_dir;
    if (!is_finite(direction) || norm(direction) == 0.0)
        throw Error(ErrorCode::AnchorSolveFailure, "'" + node.name + "' has no usable growth direction");
    auto const unit = normalized(direction);

    try
    {
        auto const parent_geom = local_geom(tree.node(*node.parent));
        auto anchor = anchor_solve(parent_geom, unit);

        auto& child = tree.node(id);
        child.growth_dir = unit;
        child.anchor_local = anchor;
        if (std::holds_alternative<Capsule>(child.geom.shape))
            child.geom.local_orient = Orientation::from_to({ 0.0, 0.0, 1.0 }, unit);
        PosedShape const at_origin { child.geom.shape, {}, child.geom.local_orient };
        auto const inset = ray_surface_alpha(at_origin, { {}, -unit });
        child.geom.local_pos = inset * unit;
    }
    catch (Error const& e)
    {
        throw Error(ErrorCode::AnchorSolveFailure, "'" + node.name + "': " + e.detail());
    }
}

void place_subtree(KinematicTree& tree, NodeId id)
{
    for (auto member: tree.subtree(id))
        place_node(tree, member);
}

} // namespace morphoforge::geometry
