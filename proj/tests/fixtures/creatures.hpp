// SPDX-License-Identifier: Apache-2.0
#pragma once

// Hand-authored creature designs shared by the test suites and the transcript
// generator. Parts are listed parent-first; right-side parts repeat the plan entry
// only, their geometry comes from mirroring the left side.

#include <morphoforge/core/tree.hpp>

#include <map>
#include <random>
#include <string>
#include <vector>

namespace morphoforge::fixtures
{

struct PartDesign
{
    std::string name;
    std::string parent; // empty for the root
    std::string purpose;
    SymmetryTag symmetry;
    int links = 1;
    Vec3 growth;
    JointSpec joint;
    PrimitiveShape shape;
    Rgba color;
};

struct CreatureDesign
{
    std::string label;
    std::vector<PartDesign> parts;
};

auto turtle() -> CreatureDesign;
auto crab() -> CreatureDesign;
auto rabbit() -> CreatureDesign;
auto elephant() -> CreatureDesign;
auto all_designs() -> std::vector<CreatureDesign>;

/// Builds the tree directly: anchors by ray solve, right sides by mirroring.
auto build_tree(CreatureDesign const& design) -> KinematicTree;

/// child -> parent for the rabbit kinematic tree (ears under the head, limbs and tail under the torso).
auto rabbit_parent_map() -> std::map<std::string, std::string>;

/// child -> parent of any tree, root mapped to "".
auto parent_map(KinematicTree const& tree) -> std::map<std::string, std::string>;

/// Random valid tree: attached by ray solve, untagged bodies on the sagittal plane,
/// left subtrees mirrored to the right.
auto random_tree(std::mt19937_64& rng, int max_bodies = 16) -> KinematicTree;

} // namespace morphoforge::fixtures
