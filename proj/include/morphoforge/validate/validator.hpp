// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <morphoforge/core/tree.hpp>

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace morphoforge::validate
{

struct Tolerances
{
    /// Largest allowed separation between a parent geom and a child geom.
    double attach_gap_max = 1e-3;
    /// Overlap depth above which two non-adjacent bodies are reported. When unset,
    /// 0.25 times the smallest bounding half-extent of the pair.
    std::optional<double> sibling_penetration_max;
    double symmetry_eps = 1e-6;
    /// How far a joint anchor may sit from the parent surface.
    double anchor_eps = 1e-6;
};

enum class FindingCode
{
    GapDetected,
    AnchorOffSurface,
    DeepPenetration,
    AsymmetricPair,
    BadJoint,
};

[[nodiscard]] auto to_string(FindingCode code) -> std::string_view;

struct Finding
{
    FindingCode code;
    std::vector<std::string> nodes;
    double value = 0.0;
    std::string message;
};

struct ValidationReport
{
    std::vector<Finding> errors;
    std::vector<Finding> warnings;

    [[nodiscard]] auto passed() const -> bool { return errors.empty(); }
    [[nodiscard]] auto error_count(FindingCode code) const -> std::size_t;
    [[nodiscard]] auto warning_count(FindingCode code) const -> std::size_t;
    /// {"passed", "errors": [{"code", "nodes", "value", "message"}], "warnings": [...]}
    [[nodiscard]] auto to_json() const -> nlohmann::json;
};

/// Attachment, symmetry and joint audit. Findings follow topological order, with
/// penetration warnings last. Throws InvalidTree when the structural audit fails.
[[nodiscard]] auto validate(KinematicTree const& tree, Tolerances const& tol = {}) -> ValidationReport;

struct Counts
{
    int bodies = 0;
    /// Articulated joints: hinges and ball joints.
    int joints = 0;
    friend auto operator==(Counts const&, Counts const&) -> bool = default;
};

[[nodiscard]] auto audit_counts(KinematicTree const& tree) -> Counts;

} // namespace morphoforge::validate
