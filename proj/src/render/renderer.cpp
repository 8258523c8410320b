// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/core/error.hpp>
#include <morphoforge/geometry/kernel.hpp>
#include <morphoforge/render/renderer.hpp>

#include <algorithm>
#include <cmath>

namespace morphoforge::render
{

namespace
{
    constexpr double ambient = 0.35;

    auto light_direction() -> Vec3 { return normalized({ -1.0, -1.0, -2.0 }); }

    auto quantize(double v) -> std::uint8_t
    {
        return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }

    void check_options(RenderOptions const& options)
    {
        if (options.width < 1 || options.height < 1 || options.width > max_dimension || options.height > max_dimension)
            throw Error(ErrorCode::InvalidArgument, "image size must be within 1.." + std::to_string(max_dimension));
        if (!(options.margin >= 0.0 && options.margin < 1.0))
            throw Error(ErrorCode::InvalidArgument, "margin must be in [0, 1)");
    }

    auto world_bounds(KinematicTree const& tree) -> std::optional<geometry::Aabb>
    {
        std::optional<geometry::Aabb> box;
        for (std::size_t i = 0; i < tree.size(); ++i)
        {
            auto const b = geometry::primitive_aabb(geometry::world_geom(tree, NodeId { i }));
            if (box)
                box->expand(b);
            else
                box = b;
        }
        return box;
    }

    struct Sample
    {
        double t;
        std::size_t index;
        Vec3 normal;
    };
} // namespace

auto preset(View view) -> ViewPreset
{
    switch (view)
    {
        case View::Front: return { view, "front", { -1, 0, 0 }, { 0, 0, 1 } };
        case View::Left: return { view, "left", { 0, -1, 0 }, { 0, 0, 1 } };
        case View::Top: return { view, "top", { 0, 0, -1 }, { 1, 0, 0 } };
        case View::ThreeQuarter:
        {
            auto const d = normalized({ -1.0, -1.0, -0.8 });
            auto const up = normalized(Vec3 { 0, 0, 1 } - d.z * d);
            return { view, "threequarter", d, up };
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown view");
}

auto view_name(View view) -> std::string_view { return preset(view).name; }

auto parse_view(std::string_view name) -> View
{
    for (auto v: all_views)
        if (view_name(v) == name)
            return v;
    throw Error(ErrorCode::InvalidArgument, "unknown view '" + std::string(name) + "'");
}

auto Image::pixel(int x, int y) const -> std::array<std::uint8_t, 4>
{
    auto const i = 4 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x));
    return { rgba[i], rgba[i + 1], rgba[i + 2], rgba[i + 3] };
}

auto auto_framing(KinematicTree const& tree, RenderOptions const& options) -> Framing
{
    check_options(options);
    auto const box = world_bounds(tree);
    if (!box)
        return {};
    auto const c = box->center();
    auto const h = box->half_widths();

    double half_w = 0.0;
    double half_h = 0.0;
    for (auto v: all_views)
    {
        auto const p = preset(v);
        auto const r = p.right();
        for (int corner = 0; corner < 8; ++corner)
        {
            Vec3 const offset { (corner & 1) ? h.x : -h.x, (corner & 2) ? h.y : -h.y, (corner & 4) ? h.z : -h.z };
            half_w = std::max(half_w, std::abs(dot(offset, r)));
            half_h = std::max(half_h, std::abs(dot(offset, p.up)));
        }
    }
    auto const usable = 1.0 - options.margin;
    auto scale = std::numeric_limits<double>::infinity();
    if (half_w > 0.0)
        scale = std::min(scale, usable * 0.5 * options.width / half_w);
    if (half_h > 0.0)
        scale = std::min(scale, usable * 0.5 * options.height / half_h);
    if (!std::isfinite(scale))
        scale = 1.0;
    return { c, scale };
}

auto render(KinematicTree const& tree, View view, RenderOptions const& options, std::optional<Framing> framing) -> Image
{
    check_options(options);
    auto const frame = framing ? *framing : auto_framing(tree, options);
    auto const p = preset(view);
    auto const right = p.right();
    auto const light = light_direction();

    // Geoms relative to the framing center, so a translated tree gives the same numbers.
    std::vector<geometry::PosedShape> geoms;
    std::vector<Rgba> colors;
    double reach = 0.0;
    for (auto id: tree.topological_order())
    {
        auto g = geometry::world_geom(tree, id);
        g.position = g.position - frame.center;
        auto const b = geometry::primitive_aabb(g);
        reach = std::max({ reach, norm(b.min), norm(b.max) });
        geoms.push_back(std::move(g));
        colors.push_back(tree.node(id).geom.color);
    }
    auto const back_off = 2.0 * reach + 1.0;

    Image image { options.width, options.height,
                  std::vector<std::uint8_t>(4 * static_cast<std::size_t>(options.width) * options.height, 255) };
    std::vector<Sample> hits;
    for (int y = 0; y < options.height; ++y)
        for (int x = 0; x < options.width; ++x)
        {
            auto const u = (x + 0.5 - 0.5 * options.width) / frame.pixels_per_unit;
            auto const v = (0.5 * options.height - y - 0.5) / frame.pixels_per_unit;
            auto const origin = u * right + v * p.up - back_off * p.direction;

            hits.clear();
            for (std::size_t i = 0; i < geoms.size(); ++i)
                if (auto const hit = geometry::ray_entry(geoms[i], origin, p.direction))
                    hits.push_back({ hit->t, i, hit->normal });
            if (hits.empty())
                continue;
            std::sort(hits.begin(), hits.end(),
                      [](Sample const& a, Sample const& b) { return a.t < b.t || (a.t == b.t && a.index < b.index); });

            Vec3 color;
            double transmit = 1.0;
            for (auto const& h: hits)
            {
                auto const& c = colors[h.index];
                auto const lit = ambient + (1.0 - ambient) * std::max(0.0, -dot(h.normal, light));
                auto const a = std::clamp(c.a, 0.0, 1.0);
                color += transmit * a * lit * Vec3 { c.r, c.g, c.b };
                transmit *= 1.0 - a;
                if (transmit <= 0.0)
                    break;
            }
            color += transmit * Vec3 { 1.0, 1.0, 1.0 };

            auto const i = 4 * (static_cast<std::size_t>(y) * options.width + x);
            image.rgba[i] = quantize(color.x);
            image.rgba[i + 1] = quantize(color.y);
            image.rgba[i + 2] = quantize(color.z);
        }
    return image;
}

auto render_contact_views(KinematicTree const& tree, RenderOptions const& options) -> std::array<Image, 4>
{
    auto const frame = auto_framing(tree, options);
    std::array<Image, 4> out;
    for (std::size_t i = 0; i < all_views.size(); ++i)
        out[i] = render(tree, all_views[i], options, frame);
    return out;
}

} // namespace morphoforge::render
