// SPDX-License-Identifier: Apache-2.0
#include "fixtures/creatures.hpp"

#include <morphoforge/core/error.hpp>
#include <morphoforge/geometry/kernel.hpp>
#include <morphoforge/render/renderer.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace morphoforge;
using namespace morphoforge::render;

namespace
{
auto single(PrimitiveShape shape, Rgba color = { 1, 0, 0, 1 }) -> KinematicTree
{
    KinematicTree tree;
    BodyNode n;
    n.name = "torso";
    n.joint = Free {};
    n.geom.shape = shape;
    n.geom.color = color;
    tree.add_node(std::nullopt, n);
    return tree;
}

auto is_white(std::array<std::uint8_t, 4> const& p) -> bool
{
    return p[0] == 255 && p[1] == 255 && p[2] == 255 && p[3] == 255;
}

auto covered(Image const& img) -> std::size_t
{
    std::size_t n = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            n += is_white(img.pixel(x, y)) ? 0 : 1;
    return n;
}

auto translated(KinematicTree tree, Vec3 const& by) -> KinematicTree
{
    tree.node(tree.root()).anchor_local += by;
    return tree;
}

auto scaled(KinematicTree tree, double s) -> KinematicTree
{
    for (std::size_t i = 0; i < tree.size(); ++i)
    {
        auto& n = tree.node(NodeId { i });
        n.anchor_local = s * n.anchor_local;
        n.geom.local_pos = s * n.geom.local_pos;
        auto params = shape_params(n.geom.shape);
        for (auto& p: params)
            p *= s;
        n.geom.shape = make_shape(shape_name(n.geom.shape), params);
    }
    return tree;
}

auto mean_abs_diff(Image const& a, Image const& b) -> double
{
    double sum = 0.0;
    for (std::size_t i = 0; i < a.rgba.size(); ++i)
        sum += std::abs(int(a.rgba[i]) - int(b.rgba[i]));
    return sum / static_cast<double>(a.rgba.size()) / 255.0;
}
} // namespace

TEST_CASE("presets are orthonormal")
{
    for (auto v: all_views)
    {
        auto const p = preset(v);
        CHECK_THAT(norm(p.direction), Catch::Matchers::WithinAbs(1.0, 1e-12));
        CHECK_THAT(norm(p.up), Catch::Matchers::WithinAbs(1.0, 1e-12));
        CHECK_THAT(dot(p.direction, p.up), Catch::Matchers::WithinAbs(0.0, 1e-12));
        CHECK(parse_view(p.name) == v);
    }
    CHECK_THROWS_AS(parse_view("back"), Error);
}

TEST_CASE("red box at the origin")
{
    auto const tree = single(Box { { 0.2, 0.2, 0.2 } });
    auto const img = render::render(tree, View::Front, { 64, 64 });
    REQUIRE(img.rgba.size() == 4u * 64 * 64);
    auto const c = img.pixel(32, 32);
    CHECK(c[0] > c[1]);
    CHECK(c[0] > c[2]);
    CHECK(is_white(img.pixel(0, 0)));
    CHECK(is_white(img.pixel(63, 63)));
}

TEST_CASE("sphere silhouette matches the disc area")
{
    auto const tree = single(Ellipsoid { { 1, 1, 1 } });
    SECTION("framed to half the viewport height")
    {
        // Radius 128 px at 512×512.
        auto const img = render::render(tree, View::Front, {}, Framing { { 0, 0, 0 }, 128.0 });
        auto const expected = std::numbers::pi * 128.0 * 128.0;
        CHECK(std::abs(covered(img) / expected - 1.0) < 0.02);
    }
    SECTION("auto framing, every preset")
    {
        RenderOptions const opt;
        auto const frame = auto_framing(tree, opt);
        for (auto v: all_views)
        {
            auto const r = frame.pixels_per_unit;
            auto const img = render::render(tree, v, opt, frame);
            CHECK(std::abs(covered(img) / (std::numbers::pi * r * r) - 1.0) < 0.02);
        }
    }
}

TEST_CASE("renders are byte-identical across runs")
{
    auto const tree = fixtures::build_tree(fixtures::crab());
    auto const a = render_contact_views(tree, { 128, 128 });
    auto const b = render_contact_views(tree, { 128, 128 });
    for (std::size_t i = 0; i < 4; ++i)
    {
        CHECK(a[i] == b[i]);
        CHECK(encode_png(a[i]) == encode_png(b[i]));
    }
}

TEST_CASE("contact views share one framing")
{
    auto const tree = fixtures::build_tree(fixtures::rabbit());
    RenderOptions const opt { 160, 120 };
    auto const views = render_contact_views(tree, opt);
    auto const frame = auto_framing(tree, opt);
    for (std::size_t i = 0; i < 4; ++i)
    {
        CHECK(views[i].width == 160);
        CHECK(views[i].height == 120);
        CHECK(views[i] == render::render(tree, all_views[i], opt, frame));
        CHECK(covered(views[i]) > 0);
    }
}

TEST_CASE("auto framing keeps every geom inside the margin")
{
    for (auto const& design: fixtures::all_designs())
    {
        auto const tree = fixtures::build_tree(design);
        RenderOptions const opt { 200, 100 };
        auto const frame = auto_framing(tree, opt);
        for (auto v: all_views)
        {
            auto const p = preset(v);
            for (std::size_t i = 0; i < tree.size(); ++i)
            {
                auto const g = geometry::world_geom(tree, NodeId { i });
                for (auto dir: { p.right(), -p.right(), p.up, -p.up })
                {
                    auto const extent = dot(geometry::support(g, dir) - frame.center, dir) * frame.pixels_per_unit;
                    auto const limit = 0.9 * 0.5 * (std::abs(dot(dir, p.up)) > 0.5 ? opt.height : opt.width);
                    CHECK(extent <= limit + 1e-9);
                }
            }
        }
    }
}

TEST_CASE("framing is invariant to translation and scale")
{
    auto const tree = fixtures::build_tree(fixtures::turtle());
    RenderOptions const opt { 128, 128 };
    auto const base = render_contact_views(tree, opt);
    auto const moved = render_contact_views(translated(tree, { 5, 0, 0 }), opt);
    auto const big = render_contact_views(scaled(tree, 2.0), opt);
    for (std::size_t i = 0; i < 4; ++i)
    {
        CHECK(mean_abs_diff(base[i], moved[i]) == 0.0);
        CHECK(mean_abs_diff(base[i], big[i]) <= 2.0 / 255.0);
    }
}

TEST_CASE("shading bounds and alpha over white")
{
    auto const opaque = render::render(single(Box { { 0.2, 0.2, 0.2 } }, { 0, 0, 1, 1 }), View::ThreeQuarter, { 64, 64 });
    auto const clear = render::render(single(Box { { 0.2, 0.2, 0.2 } }, { 0, 0, 1, 0.5 }), View::ThreeQuarter, { 64, 64 });
    auto const a = opaque.pixel(32, 32);
    auto const b = clear.pixel(32, 32);
    CHECK(a[3] == 255);
    CHECK(b[3] == 255);
    CHECK(b[0] > a[0]);
    CHECK(b[2] >= a[2]);
    // Lit faces are brighter than the ambient floor.
    CHECK(a[2] >= static_cast<int>(std::lround(0.35 * 255)));
}

TEST_CASE("png encode and decode")
{
    auto const img = render::render(fixtures::build_tree(fixtures::elephant()), View::Left, { 96, 64 });
    auto const bytes = encode_png(img);
    CHECK(bytes.substr(1, 3) == "PNG");
    CHECK(decode_png(bytes) == img);
    CHECK_THROWS_AS(decode_png("not a png"), Error);
}

TEST_CASE("size limits")
{
    auto const tree = single(Box { { 0.2, 0.2, 0.2 } });
    CHECK_THROWS_AS(render::render(tree, View::Front, { 0, 10 }), Error);
    CHECK_THROWS_AS(render::render(tree, View::Front, { max_dimension + 1, 10 }), Error);
    auto const big = render::render(tree, View::Front, { max_dimension, max_dimension });
    CHECK(encode_png(big).size() < (4u << 20u));
}
