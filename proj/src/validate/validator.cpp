// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/core/error.hpp>
#include <morphoforge/geometry/kernel.hpp>
#include <morphoforge/validate/validator.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace morphoforge::validate
{

namespace
{
    auto min_component(Vec3 const& v) -> double { return std::min(v.x, std::min(v.y, v.z)); }

    auto rotation_distance(Orientation const& a, Orientation const& b) -> double
    {
        auto const ma = a.matrix();
        auto const mb = b.matrix();
        double worst = 0.0;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                worst = std::max(worst, std::abs(ma(r, c) - mb(r, c)));
        return worst;
    }

    auto color_distance(Rgba const& a, Rgba const& b) -> double
    {
        return std::max({ std::abs(a.r - b.r), std::abs(a.g - b.g), std::abs(a.b - b.b), std::abs(a.a - b.a) });
    }

    /// Largest deviation between the right node and the mirror image of the left node,
    /// with the name of the worst field.
    auto mirror_deviation(KinematicTree const& tree, BodyNode const& left, BodyNode const& right)
        -> std::pair<double, std::string>
    {
        std::pair<double, std::string> worst { 0.0, "" };
        auto const track = [&](double value, std::string_view field) {
            if (!(value <= worst.first))
                worst = { std::isnan(value) ? std::numeric_limits<double>::infinity() : value, std::string(field) };
        };
        track(norm(right.anchor_local - mirror_point(left.anchor_local)), "anchor");
        track(norm(right.growth_dir - mirror_point(left.growth_dir)), "growth direction");
        track(norm(right.geom.local_pos - mirror_point(left.geom.local_pos)), "geom position");
        track(rotation_distance(right.geom.local_orient, left.geom.local_orient.mirrored()), "geom orientation");
        track(color_distance(right.geom.color, left.geom.color), "color");

        if (right.geom.shape.index() != left.geom.shape.index())
            track(std::numeric_limits<double>::infinity(), "shape type");
        else
        {
            auto const pl = shape_params(left.geom.shape);
            auto const pr = shape_params(right.geom.shape);
            for (std::size_t k = 0; k < pl.size(); ++k)
                track(std::abs(pl[k] - pr[k]), "size");
        }

        if (right.joint.index() != left.joint.index())
            track(std::numeric_limits<double>::infinity(), "joint type");
        else if (auto const* hl = std::get_if<Hinge>(&left.joint))
        {
            auto const& hr = std::get<Hinge>(right.joint);
            track(norm(hr.axis - mirror_axis(hl->axis)), "hinge axis");
            track(std::max(std::abs(hr.range_lo - hl->range_lo), std::abs(hr.range_hi - hl->range_hi)), "hinge range");
        }

        // The right side hangs off the counterpart of the left side's parent.
        if (left.parent && right.parent)
        {
            auto const& lp = tree.node(*left.parent);
            auto const& rp = tree.node(*right.parent);
            auto const matched = lp.symmetry.tagged() ? rp.symmetry == lp.symmetry.opposite() : rp.name == lp.name;
            if (!matched)
                track(std::numeric_limits<double>::infinity(), "parent");
        }
        return worst;
    }

    void check_joint(BodyNode const& node, bool is_root, std::vector<Finding>& errors)
    {
        if (auto const* h = std::get_if<Hinge>(&node.joint))
        {
            auto const n = norm(h->axis);
            if (!is_finite(h->axis) || !(std::abs(n - 1.0) <= 1e-9))
                errors.push_back({ FindingCode::BadJoint, { node.name }, n, "hinge axis is not a unit vector" });
            if (!std::isfinite(h->range_lo) || !std::isfinite(h->range_hi) || !(h->range_lo <= h->range_hi))
                errors.push_back({ FindingCode::BadJoint, { node.name }, h->range_lo - h->range_hi,
                                   "hinge range is not ordered (lo > hi)" });
        }
        if (std::holds_alternative<Free>(node.joint) && !is_root)
            errors.push_back({ FindingCode::BadJoint, { node.name }, 0.0, "free joint on a non-root body" });
        if (is_root && (std::holds_alternative<Hinge>(node.joint) || std::holds_alternative<Ball>(node.joint)))
            errors.push_back({ FindingCode::BadJoint, { node.name }, 0.0, "root joint must be free or fixed" });
    }

    auto count(std::vector<Finding> const& list, FindingCode code) -> std::size_t
    {
        return static_cast<std::size_t>(
            std::count_if(list.begin(), list.end(), [&](Finding const& f) { return f.code == code; }));
    }

    auto finding_json(Finding const& f) -> nlohmann::json
    {
        return { { "code", to_string(f.code) }, { "nodes", f.nodes }, { "value", f.value }, { "message", f.message } };
    }
} // namespace

auto to_string(FindingCode code) -> std::string_view
{
    switch (code)
    {
        case FindingCode::GapDetected: return "GapDetected";
        case FindingCode::AnchorOffSurface: return "AnchorOffSurface";
        case FindingCode::DeepPenetration: return "DeepPenetration";
        case FindingCode::AsymmetricPair: return "AsymmetricPair";
        case FindingCode::BadJoint: return "BadJoint";
    }
    return "Unknown";
}

auto ValidationReport::error_count(FindingCode code) const -> std::size_t
{
    return count(errors, code);
}

auto ValidationReport::warning_count(FindingCode code) const -> std::size_t
{
    return count(warnings, code);
}

auto ValidationReport::to_json() const -> nlohmann::json
{
    auto out = nlohmann::json::object();
    out["passed"] = passed();
    out["errors"] = nlohmann::json::array();
    out["warnings"] = nlohmann::json::array();
    for (auto const& f: errors)
        out["errors"].push_back(finding_json(f));
    for (auto const& f: warnings)
        out["warnings"].push_back(finding_json(f));
    return out;
}

auto validate(KinematicTree const& tree, Tolerances const& tol) -> ValidationReport
{
    audit_structure(tree);
    ValidationReport report;
    auto const order = tree.topological_order();

    std::map<std::string, NodeId, std::less<>> left_of_group;
    for (auto id: order)
        if (auto const& s = tree.node(id).symmetry; s.side == Side::Left)
            left_of_group[s.group] = id;

    std::vector<geometry::PosedShape> world(tree.size());
    for (auto id: order)
        world[id.value] = geometry::world_geom(tree, id);

    for (auto id: order)
    {
        auto const& node = tree.node(id);
        check_joint(node, !node.parent, report.errors);

        if (node.parent)
        {
            auto const& parent = tree.node(*node.parent);
            auto const gap = geometry::pair_gap(world[node.parent->value], world[id.value]);
            if (!(gap <= tol.attach_gap_max))
                report.errors.push_back({ FindingCode::GapDetected, { parent.name, node.name }, gap,
                                          "child geom is separated from its parent" });
            auto const off = std::abs(geometry::surface_distance(world[node.parent->value], tree.body_position(id)));
            if (!(off <= tol.anchor_eps))
                report.errors.push_back({ FindingCode::AnchorOffSurface, { parent.name, node.name }, off,
                                          "joint anchor is not on the parent surface" });
        }

        if (node.symmetry.side == Side::Right)
        {
            auto const& left = tree.node(left_of_group.at(node.symmetry.group));
            auto const [deviation, field] = mirror_deviation(tree, left, node);
            if (!(deviation <= tol.symmetry_eps))
                report.errors.push_back({ FindingCode::AsymmetricPair, { left.name, node.name }, deviation,
                                          "mirrored " + field + " differs" });
        }
    }

    for (std::size_t i = 0; i < order.size(); ++i)
        for (std::size_t j = i + 1; j < order.size(); ++j)
        {
            auto const& a = tree.node(order[i]);
            auto const& b = tree.node(order[j]);
            if (a.parent == order[j] || b.parent == order[i])
                continue;
            auto const threshold = tol.sibling_penetration_max.value_or(
                0.25 * std::min(min_component(body_dimensions(a)), min_component(body_dimensions(b))));
            auto const gap = geometry::pair_gap(world[order[i].value], world[order[j].value]);
            if (-gap > threshold)
                report.warnings.push_back({ FindingCode::DeepPenetration, { a.name, b.name }, -gap,
                                            "non-adjacent bodies overlap deeply" });
        }
    return report;
}

auto audit_counts(KinematicTree const& tree) -> Counts
{
    Counts c;
    c.bodies = static_cast<int>(tree.size());
    for (auto const& node: tree.nodes())
        if (std::holds_alternative<Hinge>(node.joint) || std::holds_alternative<Ball>(node.joint))
            ++c.joints;
    return c;
}

} // namespace morphoforge::validate
