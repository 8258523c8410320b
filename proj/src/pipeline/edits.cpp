// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/core/error.hpp>
#include <morphoforge/geometry/placement.hpp>
#include <morphoforge/pipeline/edits.hpp>

#include <cmath>

namespace morphoforge::pipeline
{

namespace
{
    template <class... Ts>
    struct overloaded: Ts...
    {
        using Ts::operator()...;
    };
    template <class... Ts>
    overloaded(Ts...) -> overloaded<Ts...>;

    auto numbers(json const& j, std::string const& field, std::size_t count) -> std::vector<double>
    {
        if (!j.is_array() || (count != 0 && j.size() != count))
            throw Error(ErrorCode::ParseFailure,
                        field + " must be an array of " + (count ? std::to_string(count) + " " : "") + "numbers");
        std::vector<double> out;
        for (auto const& v: j)
        {
            if (!v.is_number())
                throw Error(ErrorCode::ParseFailure, field + " must contain numbers only");
            out.push_back(v.get<double>());
        }
        return out;
    }

    auto vec3(json const& j, std::string const& field) -> Vec3
    {
        auto const v = numbers(j, field, 3);
        return { v[0], v[1], v[2] };
    }

    auto rgba(json const& j, std::string const& field) -> Rgba
    {
        auto const v = numbers(j, field, 4);
        for (auto c: v)
            if (!(c >= 0.0 && c <= 1.0))
                throw Error(ErrorCode::ParseFailure, field + " components must lie in [0, 1]");
        return { v[0], v[1], v[2], v[3] };
    }

    auto vec_json(Vec3 const& v) -> json { return json::array({ v.x, v.y, v.z }); }

    auto node_field(json const& j) -> std::string
    {
        if (!j.contains("node") || !j["node"].is_string())
            throw Error(ErrorCode::ParseFailure, "edit needs a 'node' name");
        return j["node"].get<std::string>();
    }

    auto shape_from(json const& type, json const& size) -> PrimitiveShape
    {
        if (!type.is_string())
            throw Error(ErrorCode::ParseFailure, "shape must be a string");
        try
        {
            return make_shape(type.get<std::string>(), numbers(size, "size", 0));
        }
        catch (Error const& e)
        {
            if (e.code() == ErrorCode::ParseFailure)
                throw;
            throw Error(ErrorCode::ParseFailure, e.detail());
        }
    }

    auto call_problems(AttachBodyCall const& call, BuildConstraints const& constraints) -> std::vector<std::string>
    {
        std::vector<std::string> out;
        if (call.name.empty())
            out.emplace_back("name is empty");
        auto const is_root = call.parent.empty();
        if (!is_root && (!is_finite(call.growth_direction) || norm(call.growth_direction) < 1e-9))
            out.emplace_back("growth_direction must be a nonzero vector");
        if (!constraints.allowed_shapes.contains(std::string(shape_name(call.shape))))
            out.push_back("shape '" + std::string(shape_name(call.shape)) + "' is not allowed");
        auto const joint = std::string(joint_name(call.joint));
        if (!constraints.allowed_joints.contains(joint))
            out.push_back("joint '" + joint + "' is not allowed");
        if (is_root && joint != "free" && joint != "fixed")
            out.emplace_back("the root joint must be free or fixed");
        if (!is_root && joint == "free")
            out.emplace_back("only the root may have a free joint");
        return out;
    }

    auto find_node(KinematicTree const& tree, std::string const& name) -> NodeId
    {
        auto const id = tree.find(name);
        if (!id)
            throw Error(ErrorCode::UnknownNode, "no node named '" + name + "'");
        return *id;
    }

    [[noreturn]] void reject(std::string const& why) { throw Error(ErrorCode::EditRejected, why); }

    void apply_one(KinematicTree& tree, EditCommand const& edit, BuildConstraints const& constraints)
    {
        std::visit(
            overloaded {
                [&](SetSize const& e) {
                    auto const id = find_node(tree, e.node);
                    auto& node = tree.node(id);
                    try
                    {
                        node.geom.shape = make_shape(shape_name(node.geom.shape), e.size);
                    }
                    catch (Error const& err)
                    {
                        reject("set_size on '" + e.node + "': " + err.detail());
                    }
                    geometry::place_subtree(tree, id);
                },
                [&](SetColor const& e) { tree.node(find_node(tree, e.node)).geom.color = e.color; },
                [&](SetShape const& e) {
                    auto const id = find_node(tree, e.node);
                    if (!constraints.allowed_shapes.contains(std::string(shape_name(e.shape))))
                        reject("shape '" + std::string(shape_name(e.shape)) + "' is not allowed");
                    auto& node = tree.node(id);
                    node.geom.shape = e.shape;
                    if (!std::holds_alternative<Capsule>(e.shape))
                        node.geom.local_orient = Orientation::identity();
                    geometry::place_subtree(tree, id);
                },
                [&](SetGrowthDirection const& e) {
                    auto const id = find_node(tree, e.node);
                    if (!tree.node(id).parent)
                        reject("the root has no growth direction");
                    if (!is_finite(e.direction) || norm(e.direction) < 1e-9)
                        reject("growth direction for '" + e.node + "' must be nonzero");
                    tree.node(id).growth_dir = normalized(e.direction);
                    geometry::place_subtree(tree, id);
                },
                [&](SetJoint const& e) {
                    auto const id = find_node(tree, e.node);
                    auto const joint = std::string(joint_name(e.joint));
                    if (!constraints.allowed_joints.contains(joint))
                        reject("joint '" + joint + "' is not allowed");
                    tree.node(id).joint = e.joint;
                },
                [&](AddBody const& e) {
                    if (e.call.parent.empty())
                        reject("add_body needs a parent");
                    auto const parent = find_node(tree, e.call.parent);
                    auto const problems = call_problems(e.call, constraints);
                    if (!problems.empty())
                        reject("add_body '" + e.call.name + "': " + problems.front());
                    if (tree.find(e.call.name))
                        reject("a node named '" + e.call.name + "' already exists");
                    if (static_cast<int>(tree.size()) >= constraints.max_components)
                        reject("component limit reached");
                    auto const id = tree.add_node(parent, node_from_call(e.call));
                    geometry::place_node(tree, id);
                },
                [&](RemoveSubtree const& e) {
                    auto const id = find_node(tree, e.node);
                    if (!tree.node(id).parent)
                        reject("the root cannot be removed");
                    tree = tree.without_subtree(id);
                },
                [&](SetSymmetryTag const& e) { tree.node(find_node(tree, e.node)).symmetry = e.tag; },
            },
            edit);
    }
} // namespace

auto joint_to_json(JointSpec const& joint) -> json
{
    json j = { { "type", joint_name(joint) } };
    if (auto const* h = std::get_if<Hinge>(&joint))
    {
        j["axis"] = vec_json(h->axis);
        j["range"] = json::array({ h->range_lo, h->range_hi });
    }
    return j;
}

auto joint_from_json(json const& j) -> JointSpec
{
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        throw Error(ErrorCode::ParseFailure, "joint must be an object with a 'type'");
    auto const type = j["type"].get<std::string>();
    if (type == "ball")
        return Ball {};
    if (type == "fixed")
        return Fixed {};
    if (type == "free")
        return Free {};
    if (type != "hinge")
        throw Error(ErrorCode::ParseFailure, "unknown joint type '" + type + "'");
    if (!j.contains("axis") || !j.contains("range"))
        throw Error(ErrorCode::ParseFailure, "hinge joint needs 'axis' and 'range'");
    auto const axis = vec3(j["axis"], "joint.axis");
    if (!is_finite(axis) || norm(axis) < 1e-9)
        throw Error(ErrorCode::ParseFailure, "hinge axis must be nonzero");
    auto const range = numbers(j["range"], "joint.range", 2);
    if (!(range[0] <= range[1]))
        throw Error(ErrorCode::ParseFailure, "hinge range must satisfy lo <= hi");
    return Hinge { normalized(axis), range[0], range[1] };
}

auto AttachBodyCall::to_json() const -> json
{
    return { { "name", name },
             { "parent", parent },
             { "growth_direction", vec_json(growth_direction) },
             { "joint", joint_to_json(joint) },
             { "shape", shape_name(shape) },
             { "size", shape_params(shape) },
             { "rgba", json::array({ color.r, color.g, color.b, color.a }) },
             { "symmetry", symmetry.to_string() } };
}

auto AttachBodyCall::from_json(json const& j, BuildConstraints const& constraints) -> AttachBodyCall
{
    auto const problems = vlm::check_arguments(attach_body_schema(), j);
    if (!problems.empty())
    {
        std::string all;
        for (auto const& p: problems)
            all += (all.empty() ? "" : "; ") + p;
        throw Error(ErrorCode::ToolCallInvalid, all);
    }
    AttachBodyCall call;
    try
    {
        call.name = j["name"].get<std::string>();
        call.parent = j["parent"].get<std::string>();
        call.growth_direction = vec3(j["growth_direction"], "growth_direction");
        call.joint = joint_from_json(j["joint"]);
        call.shape = shape_from(j["shape"], j["size"]);
        call.color = rgba(j["rgba"], "rgba");
        if (j.contains("symmetry"))
            call.symmetry = SymmetryTag::parse(j["symmetry"].get<std::string>());
    }
    catch (Error const& e)
    {
        throw Error(ErrorCode::ToolCallInvalid, e.detail());
    }
    auto const semantic = call_problems(call, constraints);
    if (!semantic.empty())
        throw Error(ErrorCode::ToolCallInvalid, semantic.front());
    if (!call.parent.empty())
        call.growth_direction = normalized(call.growth_direction);
    return call;
}

auto attach_body_schema() -> vlm::ToolSchema
{
    auto const number_array = [](int n) {
        return json { { "type", "array" }, { "items", { { "type", "number" } } }, { "minItems", n }, { "maxItems", n } };
    };
    json params = {
        { "type", "object" },
        { "properties",
          { { "name", { { "type", "string" } } },
            { "parent", { { "type", "string" } } },
            { "growth_direction", number_array(3) },
            { "joint",
              { { "type", "object" },
                { "properties",
                  { { "type", { { "type", "string" }, { "enum", { "hinge", "ball", "fixed", "free" } } } },
                    { "axis", number_array(3) },
                    { "range", number_array(2) } } },
                { "required", { "type" } } } },
            { "shape", { { "type", "string" }, { "enum", { "box", "ellipsoid", "capsule" } } } },
            { "size", { { "type", "array" }, { "items", { { "type", "number" } } }, { "minItems", 2 }, { "maxItems", 3 } } },
            { "rgba", number_array(4) },
            { "symmetry", { { "type", "string" } } } } },
        { "required", { "name", "parent", "growth_direction", "joint", "shape", "size", "rgba" } },
    };
    return { "attach_body",
             "Attach one body to an existing parent. The joint anchor is placed where the growth direction, cast "
             "from the parent geom center, leaves the parent surface. Use an empty parent for the root body.",
             std::move(params) };
}

auto node_from_call(AttachBodyCall const& call) -> BodyNode
{
    BodyNode node;
    node.name = call.name;
    node.joint = call.joint;
    node.growth_dir = call.parent.empty() ? Vec3 { 1.0, 0.0, 0.0 } : call.growth_direction;
    node.geom.shape = call.shape;
    node.geom.color = call.color;
    node.symmetry = call.symmetry;
    return node;
}

auto edit_to_json(EditCommand const& edit) -> json
{
    return std::visit(
        overloaded {
            [](SetSize const& e) -> json { return { { "op", "set_size" }, { "node", e.node }, { "size", e.size } }; },
            [](SetColor const& e) -> json {
                return { { "op", "set_color" },
                         { "node", e.node },
                         { "rgba", json::array({ e.color.r, e.color.g, e.color.b, e.color.a }) } };
            },
            [](SetShape const& e) -> json {
                return { { "op", "set_shape" },
                         { "node", e.node },
                         { "shape", shape_name(e.shape) },
                         { "size", shape_params(e.shape) } };
            },
            [](SetGrowthDirection const& e) -> json {
                return { { "op", "set_growth_direction" }, { "node", e.node }, { "direction", vec_json(e.direction) } };
            },
            [](SetJoint const& e) -> json {
                return { { "op", "set_joint" }, { "node", e.node }, { "joint", joint_to_json(e.joint) } };
            },
            [](AddBody const& e) -> json {
                auto j = e.call.to_json();
                j["op"] = "add_body";
                return j;
            },
            [](RemoveSubtree const& e) -> json { return { { "op", "remove_subtree" }, { "node", e.node } }; },
            [](SetSymmetryTag const& e) -> json {
                return { { "op", "set_symmetry_tag" }, { "node", e.node }, { "symmetry", e.tag.to_string() } };
            },
        },
        edit);
}

auto edit_from_json(json const& j) -> EditCommand
{
    if (!j.is_object() || !j.contains("op") || !j["op"].is_string())
        throw Error(ErrorCode::ParseFailure, "edit must be an object with an 'op'");
    auto const op = j["op"].get<std::string>();
    auto const field = [&](char const* name) -> json const& {
        if (!j.contains(name))
            throw Error(ErrorCode::ParseFailure, op + " needs '" + name + "'");
        return j[name];
    };
    if (op == "set_size")
        return SetSize { node_field(j), numbers(field("size"), "size", 0) };
    if (op == "set_color")
        return SetColor { node_field(j), rgba(field("rgba"), "rgba") };
    if (op == "set_shape")
        return SetShape { node_field(j), shape_from(field("shape"), field("size")) };
    if (op == "set_growth_direction")
        return SetGrowthDirection { node_field(j), vec3(field("direction"), "direction") };
    if (op == "set_joint")
        return SetJoint { node_field(j), joint_from_json(field("joint")) };
    if (op == "add_body")
    {
        auto args = j;
        args.erase("op");
        try
        {
            return AddBody { AttachBodyCall::from_json(args) };
        }
        catch (Error const& e)
        {
            throw Error(ErrorCode::ParseFailure, "add_body: " + e.detail());
        }
    }
    if (op == "remove_subtree")
        return RemoveSubtree { node_field(j) };
    if (op == "set_symmetry_tag")
    {
        auto const& s = field("symmetry");
        if (!s.is_string())
            throw Error(ErrorCode::ParseFailure, "symmetry must be a string");
        try
        {
            return SetSymmetryTag { node_field(j), SymmetryTag::parse(s.get<std::string>()) };
        }
        catch (Error const& e)
        {
            throw Error(ErrorCode::ParseFailure, e.detail());
        }
    }
    throw Error(ErrorCode::ParseFailure, "unknown edit op '" + op + "'");
}

auto parse_edits(json const& j) -> std::vector<EditCommand>
{
    json const* list = &j;
    if (j.is_object() && j.contains("edits"))
        list = &j["edits"];
    if (!list->is_array())
        throw Error(ErrorCode::ParseFailure, "edits must be a JSON array");
    std::vector<EditCommand> out;
    for (auto const& item: *list)
        out.push_back(edit_from_json(item));
    return out;
}

auto edits_to_json(std::vector<EditCommand> const& edits) -> json
{
    json out = json::array();
    for (auto const& e: edits)
        out.push_back(edit_to_json(e));
    return out;
}

auto apply_edits(KinematicTree const& tree, std::vector<EditCommand> const& edits, validate::Tolerances const& tol,
                 BuildConstraints const& constraints) -> KinematicTree
{
    auto work = tree;
    try
    {
        for (auto const& e: edits)
            apply_one(work, e, constraints);
        auto const report = validate::validate(work, tol);
        if (!report.passed())
        {
            auto const& f = report.errors.front();
            std::string nodes;
            for (auto const& n: f.nodes)
                nodes += (nodes.empty() ? "" : ", ") + n;
            reject("edited model fails validation with " + std::to_string(report.errors.size()) + " error(s), first "
                   + std::string(validate::to_string(f.code)) + " on " + nodes);
        }
    }
    catch (Error const& e)
    {
        if (e.code() == ErrorCode::UnknownNode || e.code() == ErrorCode::EditRejected)
            throw;
        reject(e.detail());
    }
    return work;
}

} // namespace morphoforge::pipeline
