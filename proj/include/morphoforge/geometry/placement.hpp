// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <morphoforge/core/tree.hpp>

namespace morphoforge::geometry
{

/// Re-derives one node's attachment from its growth direction: the anchor becomes
/// the exit point of the growth ray from the parent geom center, and the geom is
/// pushed out along the growth direction until its surface passes through the
/// anchor. Capsules are turned so their axis follows the growth direction.
/// The root is left untouched. Throws AnchorSolveFailure.
void place_node(KinematicTree& tree, NodeId id);

/// place_node over the subtree at `id` in topological order.
void place_subtree(KinematicTree& tree, NodeId id);

} // namespace morphoforge::geometry
