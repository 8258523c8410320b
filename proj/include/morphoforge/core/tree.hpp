// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <morphoforge/core/math.hpp>

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace morphoforge
{

struct Box
{
    Vec3 half_extents;
    friend auto operator==(Box const&, Box const&) -> bool = default;
};

struct Ellipsoid
{
    Vec3 semi_axes;
    friend auto operator==(Ellipsoid const&, Ellipsoid const&) -> bool = default;
};

/// Capsule around the local +z axis: a segment of length 2·half_length swept by a sphere.
struct Capsule
{
    double radius = 0.0;
    double half_length = 0.0;
    friend auto operator==(Capsule const&, Capsule const&) -> bool = default;
};

using PrimitiveShape = std::variant<Box, Ellipsoid, Capsule>;

[[nodiscard]] auto shape_name(PrimitiveShape const& shape) -> std::string_view;
/// Size parameters in MJCF order (box/ellipsoid: 3 values, capsule: radius, half-length).
[[nodiscard]] auto shape_params(PrimitiveShape const& shape) -> std::vector<double>;
/// Builds a shape from its MJCF type name and size list; throws InvalidArgument.
[[nodiscard]] auto make_shape(std::string_view type, std::span<double const> params) -> PrimitiveShape;
[[nodiscard]] auto shape_is_valid(PrimitiveShape const& shape) -> bool;

struct GeomSpec
{
    PrimitiveShape shape = Box { { 0.1, 0.1, 0.1 } };
    Vec3 local_pos;
    Orientation local_orient;
    Rgba color;

    friend auto operator==(GeomSpec const&, GeomSpec const&) -> bool = default;
};

struct Hinge
{
    Vec3 axis { 0.0, 1.0, 0.0 };
    double range_lo = -1.0;
    double range_hi = 1.0;
    friend auto operator==(Hinge const&, Hinge const&) -> bool = default;
};

struct Ball
{
    friend auto operator==(Ball const&, Ball const&) -> bool = default;
};

struct Free
{
    friend auto operator==(Free const&, Free const&) -> bool = default;
};

/// Welded child: no joint element is emitted.
struct Fixed
{
    friend auto operator==(Fixed const&, Fixed const&) -> bool = default;
};

using JointSpec = std::variant<Hinge, Ball, Free, Fixed>;

[[nodiscard]] auto joint_name(JointSpec const& joint) -> std::string_view;

enum class Side
{
    None,
    Left,
    Right,
};

struct SymmetryTag
{
    Side side = Side::None;
    std::string group;

    [[nodiscard]] auto tagged() const -> bool { return side != Side::None; }
    [[nodiscard]] auto opposite() const -> SymmetryTag;
    /// "none", "left:<group>" or "right:<group>".
    [[nodiscard]] auto to_string() const -> std::string;
    [[nodiscard]] static auto parse(std::string_view text) -> SymmetryTag;

    friend auto operator==(SymmetryTag const&, SymmetryTag const&) -> bool = default;
};

/// Canonical side naming: "<base>_left" <-> "<base>_right"; otherwise the side is appended.
[[nodiscard]] auto mirrored_name(std::string_view name, Side target) -> std::string;

struct NodeId
{
    std::size_t value = 0;
    friend auto operator<=>(NodeId const&, NodeId const&) = default;
};

struct BodyNode
{
    std::string name;
    std::optional<NodeId> parent;
    JointSpec joint = Hinge {};
    /// Joint anchor (body origin) in the parent body frame. Body frames are not rotated.
    Vec3 anchor_local;
    /// Kept so anchors can be re-solved after the parent geometry changes.
    Vec3 growth_dir { 1.0, 0.0, 0.0 };
    GeomSpec geom;
    SymmetryTag symmetry;

    friend auto operator==(BodyNode const&, BodyNode const&) -> bool = default;
};

/// Rooted tree of bodies. Node ids are dense and assigned by insertion; children
/// keep insertion order, so every traversal is deterministic.
class KinematicTree
{
  public:
    /// Throws UnknownParent, DuplicateName or RootAlreadyExists.
    auto add_node(std::optional<NodeId> parent, BodyNode node) -> NodeId;

    [[nodiscard]] auto size() const noexcept -> std::size_t { return _nodes.size(); }
    [[nodiscard]] auto empty() const noexcept -> bool { return _nodes.empty(); }
    [[nodiscard]] auto contains(NodeId id) const noexcept -> bool { return id.value < _nodes.size(); }
    [[nodiscard]] auto root() const -> NodeId;
    [[nodiscard]] auto node(NodeId id) const -> BodyNode const&;
    [[nodiscard]] auto node(NodeId id) -> BodyNode&;
    [[nodiscard]] auto children(NodeId id) const -> std::span<NodeId const>;
    [[nodiscard]] auto find(std::string_view name) const -> std::optional<NodeId>;
    /// Throws UnknownNode.
    [[nodiscard]] auto id_of(std::string_view name) const -> NodeId;
    [[nodiscard]] auto nodes() const -> std::span<BodyNode const> { return _nodes; }

    /// Preorder, children in insertion order.
    [[nodiscard]] auto topological_order() const -> std::vector<NodeId>;
    [[nodiscard]] auto subtree(NodeId id) const -> std::vector<NodeId>;
    [[nodiscard]] auto depth(NodeId id) const -> std::size_t;

    /// Copy of the tree with the subtree at `id` removed; ids are re-densified.
    [[nodiscard]] auto without_subtree(NodeId id) const -> KinematicTree;

    /// Body origin in world coordinates (root body origin = root anchor_local).
    [[nodiscard]] auto body_position(NodeId id) const -> Vec3;

    friend auto operator==(KinematicTree const&, KinematicTree const&) -> bool = default;

  private:
    std::vector<BodyNode> _nodes;
    std::vector<std::vector<NodeId>> _children;
    std::optional<NodeId> _root;
};

/// Free-function spelling of KinematicTree::add_node.
inline auto add_node(KinematicTree& tree, std::optional<NodeId> parent, BodyNode node) -> NodeId
{
    return tree.add_node(parent, std::move(node));
}

/// Half-widths of the axis-aligned box bounding `shape` rotated by `orient`.
[[nodiscard]] auto rotated_half_extents(PrimitiveShape const& shape, Orientation const& orient) -> Vec3;

/// Half-extents of the geom's axis-aligned bounding box in the body frame.
[[nodiscard]] auto body_dimensions(BodyNode const& node) -> Vec3;

/// Mirrors the subtree at `id` across the sagittal plane and attaches the copy to
/// the parent's counterpart (or the same parent when the parent is untagged).
/// Every node of the subtree must carry the same side tag.
/// Throws UnknownNode, UntaggedNode, NameCollision.
auto mirror_subtree(KinematicTree& tree, NodeId id) -> NodeId;

/// Structural problems (root, links, names, finiteness, shape sizes, tag pairing).
[[nodiscard]] auto structural_problems(KinematicTree const& tree) -> std::vector<std::string>;
/// Throws InvalidTree listing the first problem.
void audit_structure(KinematicTree const& tree);

/// Field-wise equality with absolute tolerance on every real. Nodes are paired in
/// topological order and parents compared by name, so id numbering does not matter.
[[nodiscard]] auto approx_equal(KinematicTree const& a, KinematicTree const& b, double tol) -> bool;

} // namespace morphoforge
