// SPDX-License-Identifier: Apache-2.0
#include "fixtures/mutations.hpp"

#include "fixtures/creatures.hpp"

#include <morphoforge/geometry/kernel.hpp>
#include <morphoforge/validate/validator.hpp>

#include <algorithm>
#include <functional>

namespace morphoforge::fixtures
{

namespace
{
    using validate::FindingCode;

    /// Outward unit normal of the parent surface at a node's anchor, by central differences.
    auto anchor_normal(KinematicTree const& tree, NodeId id) -> Vec3
    {
        auto const parent = geometry::world_geom(tree, *tree.node(id).parent);
        auto const p = tree.body_position(id);
        constexpr double h = 1e-6;
        Vec3 g;
        for (int k = 0; k < 3; ++k)
        {
            Vec3 e;
            e[k] = h;
            g[k] = geometry::surface_distance(parent, p + e) - geometry::surface_distance(parent, p - e);
        }
        return normalized(g);
    }

    auto counterpart(KinematicTree const& tree, NodeId id) -> std::optional<NodeId>
    {
        auto const& n = tree.node(id);
        if (n.symmetry.side != Side::Left)
            return std::nullopt;
        return tree.find(mirrored_name(n.name, Side::Right));
    }

    auto min_component(Vec3 const& v) -> double { return std::min({ v.x, v.y, v.z }); }

    /// Moves a body's geom by `v` in its body frame, carrying the child anchors along.
    void shift_geom(KinematicTree& tree, NodeId id, Vec3 const& v)
    {
        tree.node(id).geom.local_pos += v;
        for (auto child: tree.children(id))
            tree.node(child).anchor_local += v;
    }

    /// Applies `mutate` to a node and, with mirrored arguments, to its right counterpart.
    using Mutator = std::function<bool(KinematicTree&, NodeId, bool mirrored, Vec3 const& left_normal)>;

    struct ClassSpec
    {
        std::string name;
        FindingCode code;
        bool one_sided;
        Mutator mutate;
    };

    auto mutate_gap(KinematicTree& tree, NodeId id, bool mirrored, Vec3 const& normal) -> bool
    {
        auto const reach = 2.0 * norm(body_dimensions(tree.node(id))) + 0.01;
        shift_geom(tree, id, reach * (mirrored ? mirror_point(normal) : normal));
        return true;
    }

    auto mutate_anchor(KinematicTree& tree, NodeId id, bool mirrored, Vec3 const& normal) -> bool
    {
        auto const& parent = tree.node(*tree.node(id).parent);
        auto const depth = std::min(0.01, 0.25 * min_component(body_dimensions(parent)));
        tree.node(id).anchor_local -= depth * (mirrored ? mirror_point(normal) : normal);
        return true;
    }

    auto mutate_axis(KinematicTree& tree, NodeId id, bool, Vec3 const&) -> bool
    {
        auto* h = std::get_if<Hinge>(&tree.node(id).joint);
        if (!h)
            return false;
        h->axis = 1.1 * h->axis;
        return true;
    }

    auto mutate_range(KinematicTree& tree, NodeId id, bool, Vec3 const&) -> bool
    {
        auto* h = std::get_if<Hinge>(&tree.node(id).joint);
        if (!h || !(h->range_lo < h->range_hi))
            return false;
        std::swap(h->range_lo, h->range_hi);
        return true;
    }

    auto mutate_asymmetry(KinematicTree& tree, NodeId id, bool, Vec3 const&) -> bool
    {
        auto& n = tree.node(id);
        switch (id.value % 3)
        {
            case 0:
                n.geom.color.r = n.geom.color.r > 0.5 ? n.geom.color.r - 0.1 : n.geom.color.r + 0.1;
                break;
            case 1:
                if (auto* h = std::get_if<Hinge>(&n.joint))
                {
                    h->range_hi += 0.05;
                    break;
                }
                [[fallthrough]];
            default:
                n.growth_dir = normalized(n.growth_dir + Vec3 { 0.0, 0.0, 0.01 });
                break;
        }
        return true;
    }

    auto only_code(validate::ValidationReport const& report, FindingCode code) -> bool
    {
        return !report.errors.empty()
               && std::all_of(report.errors.begin(), report.errors.end(),
                              [&](validate::Finding const& f) { return f.code == code; });
    }
} // namespace

auto run_mutation_suite() -> MutationSuiteResult
{
    std::vector<ClassSpec> const specs {
        { "gap", FindingCode::GapDetected, false, mutate_gap },
        { "off-surface anchor", FindingCode::AnchorOffSurface, false, mutate_anchor },
        { "asymmetry", FindingCode::AsymmetricPair, true, mutate_asymmetry },
        { "non-unit hinge axis", FindingCode::BadJoint, false, mutate_axis },
        { "inverted range", FindingCode::BadJoint, false, mutate_range },
    };

    MutationSuiteResult result;
    std::vector<std::pair<std::string, KinematicTree>> bases;
    for (auto const& design: all_designs())
    {
        auto tree = build_tree(design);
        result.false_positives += static_cast<int>(validate::validate(tree).errors.size());
        bases.emplace_back(design.label, std::move(tree));
    }

    for (auto const& spec: specs)
    {
        MutationClassResult r { spec.name, 0, 0, "" };
        for (auto const& [label, base]: bases)
            for (std::size_t i = 0; i < base.size(); ++i)
            {
                auto const id = NodeId { i };
                auto const& node = base.node(id);
                if (!node.parent)
                    continue;
                // One-sided defects go on right bodies; paired defects start from the left.
                if (spec.one_sided ? node.symmetry.side != Side::Right : node.symmetry.side == Side::Right)
                    continue;
                auto tree = base;
                auto const normal = anchor_normal(base, id);
                if (!spec.mutate(tree, id, false, normal))
                    continue;
                if (!spec.one_sided)
                    if (auto const other = counterpart(base, id))
                        spec.mutate(tree, *other, true, normal);
                ++r.mutants;
                auto const report = validate::validate(tree);
                if (only_code(report, spec.code))
                    ++r.detected;
                else if (r.first_failure.empty())
                    r.first_failure = label + "/" + node.name + ": " + report.to_json().dump();
            }
        result.classes.push_back(std::move(r));
    }
    return result;
}

} // namespace morphoforge::fixtures
