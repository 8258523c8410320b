// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/core/error.hpp>
#include <morphoforge/pipeline/plan.hpp>

#include <algorithm>
#include <functional>
#include <map>

namespace morphoforge::pipeline
{

namespace
{
    auto join(std::vector<std::string> const& items) -> std::string
    {
        std::string out;
        for (auto const& s: items)
            out += (out.empty() ? "" : "; ") + s;
        return out;
    }

    auto string_set(json const& j, std::string const& key) -> std::set<std::string>
    {
        if (!j.is_array())
            throw Error(ErrorCode::ConfigError, key + " must be an array of strings");
        std::set<std::string> out;
        for (auto const& v: j)
            out.insert(v.get<std::string>());
        return out;
    }
} // namespace

auto BuildConstraints::to_json() const -> json
{
    return { { "max_components", max_components },
             { "max_links_per_component", max_links_per_component },
             { "require_symmetry", require_symmetry },
             { "allowed_shapes", allowed_shapes },
             { "allowed_joints", allowed_joints } };
}

auto BuildConstraints::from_json(json const& j) -> BuildConstraints
{
    BuildConstraints c;
    try
    {
        c.max_components = j.value("max_components", c.max_components);
        c.max_links_per_component = j.value("max_links_per_component", c.max_links_per_component);
        c.require_symmetry = j.value("require_symmetry", c.require_symmetry);
        if (j.contains("allowed_shapes"))
            c.allowed_shapes = string_set(j["allowed_shapes"], "allowed_shapes");
        if (j.contains("allowed_joints"))
            c.allowed_joints = string_set(j["allowed_joints"], "allowed_joints");
    }
    catch (json::exception const& e)
    {
        throw Error(ErrorCode::ConfigError, std::string("constraints: ") + e.what());
    }
    if (c.max_components < 1 || c.max_links_per_component < 1)
        throw Error(ErrorCode::ConfigError, "constraint limits must be positive");
    return c;
}

auto StructurePlan::find(std::string_view name) const -> PlanNode const*
{
    auto const it = std::find_if(nodes.begin(), nodes.end(), [&](PlanNode const& n) { return n.name == name; });
    return it == nodes.end() ? nullptr : &*it;
}

auto StructurePlan::to_json() const -> json
{
    json list = json::array();
    for (auto const& n: nodes)
        list.push_back({ { "name", n.name },
                         { "parent", n.parent.empty() ? json(nullptr) : json(n.parent) },
                         { "purpose", n.purpose },
                         { "symmetry", n.symmetry.to_string() },
                         { "links", n.links } });
    return { { "nodes", list } };
}

auto parse_plan(json const& j) -> StructurePlan
{
    json const* list = &j;
    if (j.is_object())
    {
        if (!j.contains("nodes"))
            throw Error(ErrorCode::ParseFailure, "plan object has no 'nodes' field");
        list = &j["nodes"];
    }
    if (!list->is_array())
        throw Error(ErrorCode::ParseFailure, "plan nodes must be an array");

    StructurePlan plan;
    for (std::size_t i = 0; i < list->size(); ++i)
    {
        auto const& item = (*list)[i];
        auto const where = "plan node " + std::to_string(i);
        if (!item.is_object())
            throw Error(ErrorCode::ParseFailure, where + " is not an object");
        PlanNode n;
        try
        {
            n.name = item.at("name").get<std::string>();
            if (auto p = item.find("parent"); p != item.end() && !p->is_null())
                n.parent = p->get<std::string>();
            n.purpose = item.value("purpose", std::string {});
            if (auto s = item.find("symmetry"); s != item.end() && !s->is_null())
                n.symmetry = SymmetryTag::parse(s->get<std::string>());
            n.links = item.value("links", 1);
        }
        catch (json::exception const& e)
        {
            throw Error(ErrorCode::ParseFailure, where + ": " + e.what());
        }
        catch (Error const& e)
        {
            throw Error(ErrorCode::ParseFailure, where + ": " + e.detail());
        }
        plan.nodes.push_back(std::move(n));
    }
    return plan;
}

auto plan_problems(StructurePlan const& plan, BuildConstraints const& constraints) -> std::vector<std::string>
{
    std::vector<std::string> out;
    auto const& nodes = plan.nodes;
    if (nodes.empty())
    {
        out.emplace_back("plan has no nodes");
        return out;
    }
    if (static_cast<int>(nodes.size()) > constraints.max_components)
        out.push_back("plan has " + std::to_string(nodes.size()) + " nodes, limit is "
                      + std::to_string(constraints.max_components));

    std::map<std::string, std::size_t, std::less<>> index;
    for (std::size_t i = 0; i < nodes.size(); ++i)
    {
        auto const& n = nodes[i];
        if (n.name.empty())
            out.push_back("node " + std::to_string(i) + " has no name");
        else if (!index.emplace(n.name, i).second)
            out.push_back("duplicate node name '" + n.name + "'");
        if (i == 0 && !n.parent.empty())
            out.push_back("first node '" + n.name + "' must be the root");
        if (i > 0 && n.parent.empty())
            out.push_back("'" + n.name + "' is a second root");
        if (i > 0 && !n.parent.empty())
        {
            auto const p = index.find(n.parent);
            if (p == index.end() || p->second >= i)
                out.push_back("parent '" + n.parent + "' of '" + n.name + "' does not appear before it");
        }
        if (n.links < 1 || n.links > constraints.max_links_per_component)
            out.push_back("'" + n.name + "' asks for " + std::to_string(n.links) + " links, limit is "
                          + std::to_string(constraints.max_links_per_component));
    }
    if (!out.empty())
        return out;

    // Chain depth below each child of the root.
    std::vector<int> depth(nodes.size(), 0);
    for (std::size_t i = 1; i < nodes.size(); ++i)
    {
        auto const p = index.at(nodes[i].parent);
        depth[i] = p == 0 ? 1 : depth[p] + 1;
        if (depth[i] > constraints.max_links_per_component)
            out.push_back("component chain reaching '" + nodes[i].name + "' has " + std::to_string(depth[i])
                          + " links, limit is " + std::to_string(constraints.max_links_per_component));
    }

    if (constraints.require_symmetry)
    {
        std::map<std::string, std::pair<PlanNode const*, PlanNode const*>> groups;
        for (auto const& n: nodes)
        {
            auto const ends_left = n.name.ends_with("_left");
            auto const ends_right = n.name.ends_with("_right");
            if (ends_left && n.symmetry.side != Side::Left)
                out.push_back("'" + n.name + "' is named as a left part but not tagged left");
            if (ends_right && n.symmetry.side != Side::Right)
                out.push_back("'" + n.name + "' is named as a right part but not tagged right");
            if (!n.symmetry.tagged())
                continue;
            auto& slot = groups[n.symmetry.group];
            auto& side = n.symmetry.side == Side::Left ? slot.first : slot.second;
            if (side != nullptr)
                out.push_back("symmetry group '" + n.symmetry.group + "' has two " + (n.symmetry.side == Side::Left ? "left" : "right") + " parts");
            side = &n;
            if (!n.parent.empty())
            {
                auto const& parent = nodes[index.at(n.parent)];
                if (parent.symmetry.tagged() && parent.symmetry.side != n.symmetry.side)
                    out.push_back("'" + n.name + "' hangs off '" + parent.name + "' on the other side");
            }
        }
        for (auto const& n: nodes)
            if (!n.parent.empty() && !n.symmetry.tagged() && nodes[index.at(n.parent)].symmetry.tagged())
                out.push_back("'" + n.name + "' is untagged below the tagged part '" + n.parent + "'");

        for (auto const& [group, pair]: groups)
        {
            auto const* l = pair.first;
            auto const* r = pair.second;
            if (l == nullptr || r == nullptr)
            {
                out.push_back("symmetry group '" + group + "' is missing its " + (l == nullptr ? "left" : "right")
                              + " part");
                continue;
            }
            if (l->parent.empty() || r->parent.empty())
            {
                out.push_back("the root cannot carry a symmetry tag");
                continue;
            }
            if (r->name != mirrored_name(l->name, Side::Right))
                out.push_back("right part '" + r->name + "' should be named '" + mirrored_name(l->name, Side::Right)
                              + "'");
            auto const& lp = nodes[index.at(l->parent)];
            auto const expected_parent = lp.symmetry.tagged() ? mirrored_name(lp.name, Side::Right) : lp.name;
            if (r->parent != expected_parent)
                out.push_back("right part '" + r->name + "' should hang off '" + expected_parent + "'");
            if (index.at(r->name) < index.at(l->name))
                out.push_back("right part '" + r->name + "' comes before its left counterpart");
        }
    }
    return out;
}

void check_plan(StructurePlan const& plan, BuildConstraints const& constraints)
{
    auto const problems = plan_problems(plan, constraints);
    if (!problems.empty())
        throw Error(ErrorCode::PlanViolatesConstraints, join(problems));
}

auto without_symmetry(StructurePlan plan) -> StructurePlan
{
    for (auto& n: plan.nodes)
        n.symmetry = {};
    return plan;
}

} // namespace morphoforge::pipeline
