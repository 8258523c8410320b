// SPDX-License-Identifier: Apache-2.0
#include "fixtures/creatures.hpp"
#include "support/oracles.hpp"

#include <morphoforge/core/error.hpp>
#include <morphoforge/core/tree.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace morphoforge;
using Catch::Matchers::WithinAbs;

namespace
{
auto body(std::string name, PrimitiveShape shape = Box { { 0.1, 0.1, 0.1 } }) -> BodyNode
{
    BodyNode n;
    n.name = std::move(name);
    n.geom.shape = shape;
    return n;
}

auto root(std::string name) -> BodyNode
{
    auto n = body(std::move(name));
    n.joint = Free {};
    return n;
}

auto error_code_of(auto&& fn) -> std::optional<ErrorCode>
{
    try
    {
        fn();
    }
    catch (Error const& e)
    {
        return e.code();
    }
    return std::nullopt;
}

void require_vec(Vec3 const& a, Vec3 const& b, double tol)
{
    INFO(format_vec(a) << " vs " << format_vec(b));
    REQUIRE(norm(a - b) <= tol);
}
} // namespace

TEST_CASE("add_node builds a root then children")
{
    KinematicTree tree;
    auto const torso = tree.add_node(std::nullopt, root("torso"));
    REQUIRE(tree.size() == 1);
    REQUIRE(tree.root() == torso);
    REQUIRE_FALSE(tree.node(torso).parent.has_value());

    auto const head = tree.add_node(torso, body("head"));
    REQUIRE(tree.size() == 2);
    REQUIRE(tree.node(head).parent == torso);
    REQUIRE(tree.children(torso).size() == 1);
    REQUIRE(tree.children(torso)[0] == head);
    REQUIRE(tree.id_of("head") == head);
}

TEST_CASE("add_node rejects duplicates, second roots and unknown parents")
{
    KinematicTree tree;
    auto const torso = tree.add_node(std::nullopt, root("torso"));
    tree.add_node(torso, body("head"));
    REQUIRE(error_code_of([&] { tree.add_node(torso, body("head")); }) == ErrorCode::DuplicateName);
    REQUIRE(error_code_of([&] { tree.add_node(std::nullopt, root("other")); }) == ErrorCode::RootAlreadyExists);
    REQUIRE(error_code_of([&] { tree.add_node(NodeId { 42 }, body("x")); }) == ErrorCode::UnknownParent);
    REQUIRE(tree.size() == 2);
    REQUIRE(error_code_of([&] { (void)tree.id_of("nope"); }) == ErrorCode::UnknownNode);
}

TEST_CASE("body_dimensions of primitives")
{
    BodyNode n = body("x", Capsule { 0.1, 0.3 });
    require_vec(body_dimensions(n), { 0.1, 0.1, 0.4 }, 1e-15);
    n.geom.shape = Ellipsoid { { 2, 1, 1 } };
    require_vec(body_dimensions(n), { 2, 1, 1 }, 1e-15);

    n.geom.shape = Box { { 1, 1, 1 } };
    n.geom.local_orient = Orientation::from_axis_angle({ 0, 0, 1 }, std::numbers::pi / 4);
    auto const oracle = oracle::box_corner_half_widths({ 1, 1, 1 }, n.geom.local_orient);
    require_vec(oracle, { std::sqrt(2.0), std::sqrt(2.0), 1.0 }, 1e-12);
    require_vec(body_dimensions(n), oracle, 1e-12);
}

TEST_CASE("body_dimensions ignores color and translation, follows rotation")
{
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i)
    {
        auto n = body("x", oracle::random_shape(rng, i % 3));
        n.geom.local_orient = oracle::random_orientation(rng);
        auto const base = body_dimensions(n);
        n.geom.color = { 0.1, 0.9, 0.3, 0.5 };
        n.geom.local_pos = { 3, -2, 1 };
        REQUIRE(body_dimensions(n) == base);
        if (auto const* box = std::get_if<Box>(&n.geom.shape))
            require_vec(base, oracle::box_corner_half_widths(box->half_extents, n.geom.local_orient), 1e-12);
    }
}

TEST_CASE("body_dimensions of a rotated ellipsoid and capsule match dense sampling")
{
    std::mt19937_64 rng(11);
    for (int kind: { 1, 2 })
        for (int i = 0; i < 20; ++i)
        {
            auto n = body("x", oracle::random_shape(rng, kind));
            n.geom.local_orient = oracle::random_orientation(rng);
            // Support in +e_i of the rotated shape, sampled over many directions of the
            // local surface parametrization.
            Vec3 sampled;
            for (int a = 0; a <= 200; ++a)
                for (int b = 0; b < 400; ++b)
                {
                    auto const th = std::numbers::pi * a / 200;
                    auto const ph = 2 * std::numbers::pi * b / 400;
                    Vec3 const u { std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th) };
                    Vec3 p;
                    if (auto const* e = std::get_if<Ellipsoid>(&n.geom.shape))
                        p = hadamard(e->semi_axes, u);
                    else
                    {
                        auto const& c = std::get<Capsule>(n.geom.shape);
                        p = c.radius * u + Vec3 { 0, 0, u.z >= 0 ? c.half_length : -c.half_length };
                    }
                    sampled = max(sampled, abs(n.geom.local_orient.rotate(p)));
                }
            auto const exact = body_dimensions(n);
            for (int k = 0; k < 3; ++k)
            {
                REQUIRE(exact[k] >= sampled[k] - 1e-12);
                REQUIRE(exact[k] <= sampled[k] * 1.001 + 1e-9);
            }
        }
}

TEST_CASE("mirror_subtree reflects anchors, growth and names")
{
    KinematicTree tree;
    auto const torso = tree.add_node(std::nullopt, root("torso"));
    auto leg = body("leg_left", Capsule { 0.05, 0.1 });
    leg.anchor_local = { 0.2, 0.15, -0.1 };
    leg.growth_dir = normalized({ 0, 1, -1 });
    leg.joint = Hinge { { 1, 0, 0 }, -0.5, 0.7 };
    leg.symmetry = { Side::Left, "leg" };
    auto const left = tree.add_node(torso, leg);
    auto const right = mirror_subtree(tree, left);

    auto const& r = tree.node(right);
    REQUIRE(r.name == "leg_right");
    REQUIRE(r.parent == torso);
    REQUIRE(r.symmetry == SymmetryTag { Side::Right, "leg" });
    require_vec(r.anchor_local, { 0.2, -0.15, -0.1 }, 1e-15);
    require_vec(r.growth_dir, Vec3 { 0, -1, -1 } / std::sqrt(2.0), 1e-15);
    auto const& h = std::get<Hinge>(r.joint);
    REQUIRE(h.range_lo == -0.5);
    REQUIRE(h.range_hi == 0.7);
    require_vec(h.axis, { -1, 0, 0 }, 1e-15);
    REQUIRE(structural_problems(tree).empty());
}

TEST_CASE("mirror_subtree errors")
{
    KinematicTree tree;
    auto const torso = tree.add_node(std::nullopt, root("torso"));
    auto const tail = tree.add_node(torso, body("tail"));
    REQUIRE(error_code_of([&] { mirror_subtree(tree, tail); }) == ErrorCode::UntaggedNode);

    auto ear = body("ear_left");
    ear.symmetry = { Side::Left, "ear" };
    auto const ear_id = tree.add_node(torso, ear);
    tree.add_node(torso, body("ear_right"));
    REQUIRE(error_code_of([&] { mirror_subtree(tree, ear_id); }) == ErrorCode::NameCollision);
    REQUIRE(tree.size() == 4);
}

TEST_CASE("mirror_subtree twice reproduces the original subtree")
{
    for (auto const& design: fixtures::all_designs())
    {
        auto const tree = fixtures::build_tree(design);
        for (std::size_t i = 0; i < tree.size(); ++i)
        {
            auto const& src = tree.node(NodeId { i });
            if (src.symmetry.side != Side::Left || (src.parent && tree.node(*src.parent).symmetry.tagged()))
                continue;
            // Mirror the right counterpart back onto a tree without the left side.
            auto const right = tree.id_of(mirrored_name(src.name, Side::Right));
            auto pruned = tree.without_subtree(NodeId { i });
            auto const back = mirror_subtree(pruned, pruned.id_of(tree.node(right).name));
            auto const original = tree.subtree(NodeId { i });
            auto const copy = pruned.subtree(back);
            REQUIRE(original.size() == copy.size());
            for (std::size_t k = 0; k < original.size(); ++k)
            {
                auto const& a = tree.node(original[k]);
                auto const& b = pruned.node(copy[k]);
                REQUIRE(a.name == b.name);
                REQUIRE(a.symmetry == b.symmetry);
                require_vec(a.anchor_local, b.anchor_local, 1e-12);
                require_vec(a.growth_dir, b.growth_dir, 1e-12);
                require_vec(a.geom.local_pos, b.geom.local_pos, 1e-12);
                require_vec(tree.body_position(original[k]), pruned.body_position(copy[k]), 1e-12);
            }
        }
    }
}

TEST_CASE("topological_order base cases")
{
    KinematicTree tree;
    auto const torso = tree.add_node(std::nullopt, root("torso"));
    REQUIRE(tree.topological_order() == std::vector { torso });
    auto const head = tree.add_node(torso, body("head"));
    auto const tail = tree.add_node(torso, body("tail"));
    REQUIRE(tree.topological_order() == std::vector { torso, head, tail });
}

TEST_CASE("topological_order of the rabbit fixture")
{
    auto const tree = fixtures::build_tree(fixtures::rabbit());
    REQUIRE(fixtures::parent_map(tree) == fixtures::rabbit_parent_map());
    auto const order = tree.topological_order();
    REQUIRE(order.size() == tree.size());
    REQUIRE(tree.node(order.front()).name == "torso");
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < order.size(); ++i)
        position[tree.node(order[i]).name] = i;
    REQUIRE(position.at("ear_left") > position.at("head"));
    REQUIRE(position.at("ear_right") > position.at("head"));
    for (auto const& [child, parent]: fixtures::rabbit_parent_map())
        if (!parent.empty())
            REQUIRE(position.at(parent) < position.at(child));
}

TEST_CASE("topological_order properties on random trees")
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial)
    {
        KinematicTree tree;
        tree.add_node(std::nullopt, root("n0"));
        std::uniform_int_distribution<int> count(1, 40);
        auto const n = count(rng);
        for (int i = 1; i < n; ++i)
        {
            std::uniform_int_distribution<std::size_t> pick(0, tree.size() - 1);
            tree.add_node(NodeId { pick(rng) }, body("n" + std::to_string(i)));
        }
        auto const order = tree.topological_order();
        REQUIRE(order.size() == tree.size());
        std::vector<std::size_t> pos(tree.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            pos[order[i].value] = i;
        for (std::size_t i = 0; i < tree.size(); ++i)
            if (auto const p = tree.node(NodeId { i }).parent)
                REQUIRE(pos[p->value] < pos[i]);
        REQUIRE(order == tree.topological_order());
        REQUIRE(structural_problems(tree).empty());
    }
}

TEST_CASE("fixture trees pass the structural audit")
{
    for (auto const& design: fixtures::all_designs())
    {
        auto const tree = fixtures::build_tree(design);
        INFO(design.label);
        REQUIRE(structural_problems(tree).empty());
        REQUIRE(tree.size() == design.parts.size());
    }
    REQUIRE(fixtures::build_tree(fixtures::turtle()).size() == 7);
    REQUIRE(fixtures::build_tree(fixtures::crab()).size() == 31);
}

TEST_CASE("structural audit flags broken trees")
{
    KinematicTree tree;
    auto const torso = tree.add_node(std::nullopt, body("torso"));
    REQUIRE_FALSE(structural_problems(tree).empty()); // root joint is a hinge
    tree.node(torso).joint = Free {};
    REQUIRE(structural_problems(tree).empty());

    auto ear = body("ear_left");
    ear.symmetry = { Side::Left, "ear" };
    auto const ear_id = tree.add_node(torso, ear);
    REQUIRE_FALSE(structural_problems(tree).empty()); // unpaired tag
    mirror_subtree(tree, ear_id);
    REQUIRE(structural_problems(tree).empty());

    tree.node(ear_id).geom.shape = Box { { -1, 1, 1 } };
    REQUIRE_FALSE(structural_problems(tree).empty());
    REQUIRE(error_code_of([&] { audit_structure(tree); }) == ErrorCode::InvalidTree);
}

TEST_CASE("symmetry tags and names")
{
    REQUIRE(SymmetryTag::parse("left:leg") == SymmetryTag { Side::Left, "leg" });
    REQUIRE(SymmetryTag::parse("none") == SymmetryTag {});
    REQUIRE(SymmetryTag { Side::Right, "ear" }.to_string() == "right:ear");
    REQUIRE(error_code_of([] { (void)SymmetryTag::parse("up:leg"); }) == ErrorCode::InvalidArgument);
    REQUIRE(mirrored_name("leg_left", Side::Right) == "leg_right");
    REQUIRE(mirrored_name("fin_right", Side::Left) == "fin_left");
    REQUIRE(mirrored_name("fin", Side::Left) == "fin_left");
}

TEST_CASE("without_subtree re-densifies ids")
{
    auto const tree = fixtures::build_tree(fixtures::rabbit());
    auto const pruned = tree.without_subtree(tree.id_of("hind_thigh_left"));
    REQUIRE(pruned.size() == tree.size() - 3);
    REQUIRE_FALSE(pruned.find("hind_shin_left"));
    REQUIRE(pruned.find("hind_foot_right"));
    auto const order = pruned.topological_order();
    REQUIRE(order.size() == pruned.size());
}

TEST_CASE("shortest round-trip real formatting")
{
    REQUIRE(format_real(-0.0) == "0");
    REQUIRE(format_real(0.1) == "0.1");
    REQUIRE(format_real(1e-12) == "1e-12");
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-10, 10);
    for (int i = 0; i < 1000; ++i)
    {
        auto const v = u(rng);
        REQUIRE(std::stod(format_real(v)) == v);
    }
}
