// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/core/error.hpp>
#include <morphoforge/core/tree.hpp>

#include <cmath>
#include <map>
#include <set>

namespace morphoforge
{

namespace
{
    template <class... Ts>
    struct overloaded: Ts...
    {
        using Ts::operator()...;
    };

    auto ends_with(std::string_view text, std::string_view suffix) -> bool
    {
        return text.size() >= suffix.size() && text.substr(text.size() - suffix.size()) == suffix;
    }

    auto positive_finite(double v) -> bool { return std::isfinite(v) && v > 0.0; }

    auto in_unit_interval(double v) -> bool { return v >= 0.0 && v <= 1.0; }
} // namespace

auto shape_name(PrimitiveShape const& shape) -> std::string_view
{
    return std::visit(overloaded {
                          [](Box const&) { return std::string_view("box"); },
                          [](Ellipsoid const&) { return std::string_view("ellipsoid"); },
                          [](Capsule const&) { return std::string_view("capsule"); },
                      },
                      shape);
}

auto shape_params(PrimitiveShape const& shape) -> std::vector<double>
{
    return std::visit(overloaded {
                          [](Box const& b) { return std::vector { b.half_extents.x, b.half_extents.y, b.half_extents.z }; },
                          [](Ellipsoid const& e) { return std::vector { e.semi_axes.x, e.semi_axes.y, e.semi_axes.z }; },
                          [](Capsule const& c) { return std::vector { c.radius, c.half_length }; },
                      },
                      shape);
}

auto make_shape(std::string_view type, std::span<double const> params) -> PrimitiveShape
{
    auto const expect = [&](std::size_t n) {
        if (params.size() != n)
            throw Error(ErrorCode::InvalidArgument,
                        std::string(type) + " expects " + std::to_string(n) + " size values, got "
                            + std::to_string(params.size()));
    };
    PrimitiveShape shape;
    if (type == "box")
    {
        expect(3);
        shape = Box { { params[0], params[1], params[2] } };
    }
    else if (type == "ellipsoid")
    {
        expect(3);
        shape = Ellipsoid { { params[0], params[1], params[2] } };
    }
    else if (type == "capsule")
    {
        expect(2);
        shape = Capsule { params[0], params[1] };
    }
    else
        throw Error(ErrorCode::InvalidArgument, "unknown shape type '" + std::string(type) + "'");
    if (!shape_is_valid(shape))
        throw Error(ErrorCode::InvalidArgument, "shape size parameters must be positive");
    return shape;
}

auto shape_is_valid(PrimitiveShape const& shape) -> bool
{
    return std::visit(overloaded {
                          [](Box const& b) {
                              return positive_finite(b.half_extents.x) && positive_finite(b.half_extents.y)
                                     && positive_finite(b.half_extents.z);
                          },
                          [](Ellipsoid const& e) {
                              return positive_finite(e.semi_axes.x) && positive_finite(e.semi_axes.y)
                                     && positive_finite(e.semi_axes.z);
                          },
                          [](Capsule const& c) {
                              return positive_finite(c.radius) && std::isfinite(c.half_length) && c.half_length >= 0.0;
                          },
                      },
                      shape);
}

auto joint_name(JointSpec const& joint) -> std::string_view
{
    return std::visit(overloaded {
                          [](Hinge const&) { return std::string_view("hinge"); },
                          [](Ball const&) { return std::string_view("ball"); },
                          [](Free const&) { return std::string_view("free"); },
                          [](Fixed const&) { return std::string_view("fixed"); },
                      },
                      joint);
}

auto SymmetryTag::opposite() const -> SymmetryTag
{
    switch (side)
    {
        case Side::Left: return { Side::Right, group };
        case Side::Right: return { Side::Left, group };
        case Side::None: break;
    }
    return *this;
}

auto SymmetryTag::to_string() const -> std::string
{
    switch (side)
    {
        case Side::Left: return "left:" + group;
        case Side::Right: return "right:" + group;
        case Side::None: break;
    }
    return "none";
}

auto SymmetryTag::parse(std::string_view text) -> SymmetryTag
{
    if (text.empty() || text == "none")
        return {};
    auto const colon = text.find(':');
    if (colon == std::string_view::npos || colon + 1 == text.size())
        throw Error(ErrorCode::InvalidArgument, "symmetry tag must be 'none', 'left:<group>' or 'right:<group>'");
    auto const side = text.substr(0, colon);
    auto const group = std::string(text.substr(colon + 1));
    if (side == "left")
        return { Side::Left, group };
    if (side == "right")
        return { Side::Right, group };
    throw Error(ErrorCode::InvalidArgument, "unknown symmetry side '" + std::string(side) + "'");
}

auto mirrored_name(std::string_view name, Side target) -> std::string
{
    auto const base = [&](std::string_view suffix) { return std::string(name.substr(0, name.size() - suffix.size())); };
    if (target == Side::Right && ends_with(name, "_left"))
        return base("_left") + "_right";
    if (target == Side::Left && ends_with(name, "_right"))
        return base("_right") + "_left";
    return std::string(name) + (target == Side::Left ? "_left" : "_right");
}

auto KinematicTree::add_node(std::optional<NodeId> parent, BodyNode node) -> NodeId
{
    if (parent && !contains(*parent))
        throw Error(ErrorCode::UnknownParent, "no node with id " + std::to_string(parent->value));
    if (!parent && _root)
        throw Error(ErrorCode::RootAlreadyExists, "tree already has root '" + _nodes[_root->value].name + "'");
    if (find(node.name))
        throw Error(ErrorCode::DuplicateName, "name '" + node.name + "' is already used");
    if (node.name.empty())
        throw Error(ErrorCode::InvalidArgument, "node name must not be empty");

    auto const id = NodeId { _nodes.size() };
    node.parent = parent;
    _nodes.push_back(std::move(node));
    _children.emplace_back();
    if (parent)
        _children[parent->value].push_back(id);
    else
        _root = id;
    return id;
}

auto KinematicTree::root() const -> NodeId
{
    if (!_root)
        throw Error(ErrorCode::InvalidTree, "tree has no root");
    return *_root;
}

auto KinematicTree::node(NodeId id) const -> BodyNode const&
{
    if (!contains(id))
        throw Error(ErrorCode::UnknownNode, "no node with id " + std::to_string(id.value));
    return _nodes[id.value];
}

auto KinematicTree::node(NodeId id) -> BodyNode&
{
    if (!contains(id))
        throw Error(ErrorCode::UnknownNode, "no node with id " + std::to_string(id.value));
    return _nodes[id.value];
}

auto KinematicTree::children(NodeId id) const -> std::span<NodeId const>
{
    if (!contains(id))
        throw Error(ErrorCode::UnknownNode, "no node with id " + std::to_string(id.value));
    return _children[id.value];
}

auto KinematicTree::find(std::string_view name) const -> std::optional<NodeId>
{
    for (std::size_t i = 0; i < _nodes.size(); ++i)
        if (_nodes[i].name == name)
            return NodeId { i };
    return std::nullopt;
}

auto KinematicTree::id_of(std::string_view name) const -> NodeId
{
    if (auto id = find(name))
        return *id;
    throw Error(ErrorCode::UnknownNode, "no node named '" + std::string(name) + "'");
}

auto KinematicTree::topological_order() const -> std::vector<NodeId>
{
    if (!_root)
        return {};
    return subtree(*_root);
}

auto KinematicTree::subtree(NodeId id) const -> std::vector<NodeId>
{
    std::vector<NodeId> order;
    std::vector<NodeId> stack { id };
    while (!stack.empty())
    {
        auto const current = stack.back();
        stack.pop_back();
        order.push_back(current);
        auto const& kids = children(current);
        for (auto it = kids.rbegin(); it != kids.rend(); ++it)
            stack.push_back(*it);
    }
    return order;
}

auto KinematicTree::depth(NodeId id) const -> std::size_t
{
    std::size_t d = 0;
    for (auto p = node(id).parent; p; p = node(*p).parent)
        ++d;
    return d;
}

auto KinematicTree::without_subtree(NodeId id) const -> KinematicTree
{
    auto const removed_list = subtree(id);
    std::set<NodeId> removed(removed_list.begin(), removed_list.end());
    KinematicTree out;
    std::map<NodeId, NodeId> remap;
    // Insertion order of the survivors keeps every child list in its original order.
    for (std::size_t i = 0; i < _nodes.size(); ++i)
    {
        auto const old_id = NodeId { i };
        if (removed.contains(old_id))
            continue;
        auto copy = _nodes[i];
        std::optional<NodeId> parent;
        if (copy.parent)
            parent = remap.at(*copy.parent);
        remap[old_id] = out.add_node(parent, std::move(copy));
    }
    return out;
}

auto KinematicTree::body_position(NodeId id) const -> Vec3
{
    Vec3 pos;
    for (std::optional<NodeId> cur = id; cur; cur = node(*cur).parent)
        pos += node(*cur).anchor_local;
    return pos;
}

auto rotated_half_extents(PrimitiveShape const& shape, Orientation const& orient) -> Vec3
{
    auto const r = orient.matrix();
    return std::visit(overloaded {
                          [&](Box const& b) {
                              Vec3 h;
                              for (int i = 0; i < 3; ++i)
                                  h[i] = std::abs(r(i, 0)) * b.half_extents.x + std::abs(r(i, 1)) * b.half_extents.y
                                         + std::abs(r(i, 2)) * b.half_extents.z;
                              return h;
                          },
                          [&](Ellipsoid const& e) {
                              Vec3 h;
                              for (int i = 0; i < 3; ++i)
                              {
                                  auto const a = r(i, 0) * e.semi_axes.x;
                                  auto const b = r(i, 1) * e.semi_axes.y;
                                  auto const c = r(i, 2) * e.semi_axes.z;
                                  h[i] = std::sqrt(a * a + b * b + c * c);
                              }
                              return h;
                          },
                          [&](Capsule const& c) {
                              Vec3 h;
                              for (int i = 0; i < 3; ++i)
                                  h[i] = std::abs(r(i, 2)) * c.half_length + c.radius;
                              return h;
                          },
                      },
                      shape);
}

auto body_dimensions(BodyNode const& node) -> Vec3
{
    return rotated_half_extents(node.geom.shape, node.geom.local_orient);
}

auto mirror_subtree(KinematicTree& tree, NodeId id) -> NodeId
{
    auto const& source = tree.node(id);
    if (!source.symmetry.tagged())
        throw Error(ErrorCode::UntaggedNode, "'" + source.name + "' has no left/right symmetry tag");
    auto const side = source.symmetry.side;
    auto const target = side == Side::Left ? Side::Right : Side::Left;

    auto const members = tree.subtree(id);
    for (auto member: members)
    {
        auto const& n = tree.node(member);
        if (n.symmetry.side != side)
            throw Error(ErrorCode::UntaggedNode, "'" + n.name + "' in mirrored subtree is not tagged on the same side");
        auto const name = mirrored_name(n.name, target);
        if (tree.find(name))
            throw Error(ErrorCode::NameCollision, "mirrored name '" + name + "' already exists");
    }

    auto const parent = source.parent;
    if (!parent)
        throw Error(ErrorCode::InvalidArgument, "the root cannot be mirrored");
    NodeId new_parent = *parent;
    if (auto const& ptag = tree.node(*parent).symmetry; ptag.tagged())
    {
        auto const counterpart = ptag.opposite();
        auto found = std::optional<NodeId> {};
        for (std::size_t i = 0; i < tree.size(); ++i)
            if (tree.node(NodeId { i }).symmetry == counterpart)
                found = NodeId { i };
        if (!found)
            throw Error(ErrorCode::UnknownParent,
                        "parent '" + tree.node(*parent).name + "' has no mirrored counterpart");
        new_parent = *found;
    }

    std::map<NodeId, NodeId> copies;
    for (auto member: members)
    {
        auto copy = tree.node(member);
        copy.name = mirrored_name(copy.name, target);
        copy.symmetry = copy.symmetry.opposite();
        copy.anchor_local = mirror_point(copy.anchor_local);
        copy.growth_dir = mirror_point(copy.growth_dir);
        copy.geom.local_pos = mirror_point(copy.geom.local_pos);
        copy.geom.local_orient = copy.geom.local_orient.mirrored();
        if (auto* hinge = std::get_if<Hinge>(&copy.joint))
            hinge->axis = mirror_axis(hinge->axis);
        auto const attach = member == id ? new_parent : copies.at(*tree.node(member).parent);
        copies[member] = tree.add_node(attach, std::move(copy));
    }
    return copies.at(id);
}

auto structural_problems(KinematicTree const& tree) -> std::vector<std::string>
{
    std::vector<std::string> problems;
    if (tree.empty())
    {
        problems.emplace_back("tree is empty");
        return problems;
    }

    std::size_t roots = 0;
    std::set<std::string> names;
    std::map<std::string, std::pair<int, int>> groups;
    for (std::size_t i = 0; i < tree.size(); ++i)
    {
        auto const id = NodeId { i };
        auto const& n = tree.node(id);
        auto const label = "'" + n.name + "'";
        if (n.name.empty())
            problems.push_back("node " + std::to_string(i) + " has an empty name");
        if (!names.insert(n.name).second)
            problems.push_back("duplicate name " + label);
        if (!n.parent)
        {
            ++roots;
            if (!std::holds_alternative<Free>(n.joint) && !std::holds_alternative<Fixed>(n.joint))
                problems.push_back("root " + label + " must have a free or fixed joint");
        }
        else
        {
            if (!tree.contains(*n.parent) || n.parent->value >= i)
                problems.push_back(label + " has an invalid parent link");
            else
            {
                auto const kids = tree.children(*n.parent);
                if (std::find(kids.begin(), kids.end(), id) == kids.end())
                    problems.push_back(label + " is missing from its parent's child list");
            }
            if (!is_finite(n.anchor_local))
                problems.push_back(label + " has a non-finite anchor");
            if (!is_finite(n.growth_dir) || norm(n.growth_dir) == 0.0)
                problems.push_back(label + " has an invalid growth direction");
        }
        if (!shape_is_valid(n.geom.shape))
            problems.push_back(label + " has non-positive shape sizes");
        if (!is_finite(n.geom.local_pos))
            problems.push_back(label + " has a non-finite geom position");
        if (std::abs(n.geom.local_orient.norm() - 1.0) > 1e-9)
            problems.push_back(label + " has a non-unit geom orientation");
        auto const& c = n.geom.color;
        if (!in_unit_interval(c.r) || !in_unit_interval(c.g) || !in_unit_interval(c.b) || !in_unit_interval(c.a))
            problems.push_back(label + " has a color component outside [0, 1]");
        if (n.symmetry.tagged())
        {
            if (n.symmetry.group.empty())
                problems.push_back(label + " has a symmetry tag without a group");
            auto& counts = groups[n.symmetry.group];
            (n.symmetry.side == Side::Left ? counts.first : counts.second) += 1;
        }
    }
    if (roots != 1)
        problems.push_back("tree must have exactly one root, found " + std::to_string(roots));
    for (auto const& [group, counts]: groups)
        if (counts.first != 1 || counts.second != 1)
            problems.push_back("symmetry group '" + group + "' must have exactly one left and one right member");

    if (roots == 1 && tree.topological_order().size() != tree.size())
        problems.emplace_back("tree is not connected");
    return problems;
}

void audit_structure(KinematicTree const& tree)
{
    auto const problems = structural_problems(tree);
    if (!problems.empty())
        throw Error(ErrorCode::InvalidTree, problems.front());
}

namespace
{
    auto close(double a, double b, double tol) -> bool { return std::abs(a - b) <= tol; }
    auto close(Vec3 const& a, Vec3 const& b, double tol) -> bool
    {
        return close(a.x, b.x, tol) && close(a.y, b.y, tol) && close(a.z, b.z, tol);
    }
} // namespace

auto approx_equal(KinematicTree const& a, KinematicTree const& b, double tol) -> bool
{
    if (a.size() != b.size())
        return false;
    auto const order_a = a.topological_order();
    auto const order_b = b.topological_order();
    if (order_a.size() != order_b.size())
        return false;
    auto const parent_name = [](KinematicTree const& t, BodyNode const& n) {
        return n.parent ? t.node(*n.parent).name : std::string {};
    };
    for (std::size_t i = 0; i < order_a.size(); ++i)
    {
        auto const& x = a.node(order_a[i]);
        auto const& y = b.node(order_b[i]);
        if (x.name != y.name || parent_name(a, x) != parent_name(b, y) || x.symmetry != y.symmetry)
            return false;
        if (x.joint.index() != y.joint.index())
            return false;
        if (auto const* hx = std::get_if<Hinge>(&x.joint))
        {
            auto const& hy = std::get<Hinge>(y.joint);
            if (!close(hx->axis, hy.axis, tol) || !close(hx->range_lo, hy.range_lo, tol)
                || !close(hx->range_hi, hy.range_hi, tol))
                return false;
        }
        if (!close(x.anchor_local, y.anchor_local, tol) || !close(x.growth_dir, y.growth_dir, tol))
            return false;
        if (x.geom.shape.index() != y.geom.shape.index())
            return false;
        auto const px = shape_params(x.geom.shape);
        auto const py = shape_params(y.geom.shape);
        for (std::size_t k = 0; k < px.size(); ++k)
            if (!close(px[k], py[k], tol))
                return false;
        if (!close(x.geom.local_pos, y.geom.local_pos, tol))
            return false;
        auto const& ox = x.geom.local_orient;
        auto const& oy = y.geom.local_orient;
        if (!close(ox.w, oy.w, tol) || !close(ox.x, oy.x, tol) || !close(ox.y, oy.y, tol) || !close(ox.z, oy.z, tol))
            return false;
        auto const& cx = x.geom.color;
        auto const& cy = y.geom.color;
        if (!close(cx.r, cy.r, tol) || !close(cx.g, cy.g, tol) || !close(cx.b, cy.b, tol) || !close(cx.a, cy.a, tol))
            return false;
    }
    return true;
}

} // namespace morphoforge
