// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <morphoforge/core/tree.hpp>

#include <json.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace morphoforge::pipeline
{

using nlohmann::json;

inline constexpr int max_visual_rounds = 3;
inline constexpr int max_human_prompts = 3;

struct BuildConstraints
{
    int max_components = 32;
    int max_links_per_component = 4;
    bool require_symmetry = true;
    std::set<std::string> allowed_shapes { "box", "capsule", "ellipsoid" };
    std::set<std::string> allowed_joints { "ball", "fixed", "free", "hinge" };

    [[nodiscard]] auto to_json() const -> json;
    /// Missing fields keep their defaults. Throws ConfigError on bad values.
    [[nodiscard]] static auto from_json(json const& j) -> BuildConstraints;
    friend auto operator==(BuildConstraints const&, BuildConstraints const&) -> bool = default;
};

struct PlanNode
{
    std::string name;
    std::string parent; // empty for the root
    std::string purpose;
    SymmetryTag symmetry;
    int links = 1;
    friend auto operator==(PlanNode const&, PlanNode const&) -> bool = default;
};

struct StructurePlan
{
    std::vector<PlanNode> nodes;

    [[nodiscard]] auto find(std::string_view name) const -> PlanNode const*;
    [[nodiscard]] auto to_json() const -> json;
    friend auto operator==(StructurePlan const&, StructurePlan const&) -> bool = default;
};

/// Accepts {"nodes": [...]} or a bare array of {name, parent, purpose, symmetry, links}.
/// Throws ParseFailure.
[[nodiscard]] auto parse_plan(json const& j) -> StructurePlan;

/// Every way the plan breaks the constraints; empty when it fits.
[[nodiscard]] auto plan_problems(StructurePlan const& plan, BuildConstraints const& constraints)
    -> std::vector<std::string>;
/// Throws PlanViolatesConstraints listing plan_problems.
void check_plan(StructurePlan const& plan, BuildConstraints const& constraints);

/// Plan with every symmetry tag cleared, for builds that do not mirror.
[[nodiscard]] auto without_symmetry(StructurePlan plan) -> StructurePlan;

} // namespace morphoforge::pipeline
