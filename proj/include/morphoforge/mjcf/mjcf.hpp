// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <morphoforge/core/tree.hpp>

#include <string>
#include <string_view>

namespace morphoforge::mjcf
{

/// Writes the tree as an MJCF document. Bodies follow topological order; hinges get
/// one motor each, ball joints three general actuators. Growth directions and
/// symmetry tags travel in the <custom> block so parse() can restore them.
/// Throws InvalidTree when the structural audit fails.
[[nodiscard]] auto emit(KinematicTree const& tree, std::string_view model_name = "robot") -> std::string;

struct ParsedModel
{
    std::string model_name;
    KinematicTree tree;
};

/// Reads the subset written by emit(). Throws MalformedXml, UnsupportedElement or
/// SubsetViolation.
[[nodiscard]] auto parse_model(std::string_view text) -> ParsedModel;
[[nodiscard]] auto parse(std::string_view text) -> KinematicTree;

/// One line per node: name, parent, joint, shape, sizes, color, symmetry.
[[nodiscard]] auto summarize(KinematicTree const& tree) -> std::string;

/// Joint and actuator element counts of an emitted document.
struct DocumentCounts
{
    int bodies = 0;
    int joints = 0;
    int actuators = 0;
};
[[nodiscard]] auto count_elements(std::string_view text) -> DocumentCounts;

} // namespace morphoforge::mjcf
