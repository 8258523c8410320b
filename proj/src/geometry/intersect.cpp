// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/core/error.hpp>
#include <morphoforge/geometry/kernel.hpp>

#include <cmath>
#include <limits>

namespace morphoforge::geometry
{

namespace
{
    /// Larger root of a·t² + b·t + c = 0 when c <= 0 < a (one root >= 0, one <= 0).
    auto exit_root(double a, double b, double c) -> double
    {
        auto const disc = std::max(0.0, b * b - 4.0 * a * c);
        auto const sq = std::sqrt(disc);
        if (b <= 0.0)
            return (-b + sq) / (2.0 * a);
        return (2.0 * c) / (-b - sq);
    }

    auto box_exit(Vec3 const& half, Vec3 const& o, Vec3 const& d) -> double
    {
        auto alpha = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 3; ++i)
        {
            if (d[i] == 0.0)
                continue;
            auto const wall = d[i] > 0.0 ? half[i] : -half[i];
            alpha = std::min(alpha, (wall - o[i]) / d[i]);
        }
        return alpha;
    }

    auto ellipsoid_exit(Vec3 const& axes, Vec3 const& o, Vec3 const& d) -> double
    {
        Vec3 const os { o.x / axes.x, o.y / axes.y, o.z / axes.z };
        Vec3 const ds { d.x / axes.x, d.y / axes.y, d.z / axes.z };
        return exit_root(dot(ds, ds), 2.0 * dot(os, ds), dot(os, os) - 1.0);
    }

    /// Larger root of the ray/sphere quadratic; the origin may lie outside the sphere.
    auto sphere_exit(Vec3 const& center, double radius, Vec3 const& o, Vec3 const& d) -> double
    {
        auto const oc = o - center;
        auto const a = dot(d, d);
        auto const b = 2.0 * dot(oc, d);
        auto const c = dot(oc, oc) - radius * radius;
        auto const disc = std::max(0.0, b * b - 4.0 * a * c);
        return (-b + std::sqrt(disc)) / (2.0 * a);
    }

    auto capsule_exit(Capsule const& c, Vec3 const& o, Vec3 const& d) -> double
    {
        auto const a = d.x * d.x + d.y * d.y;
        if (a > 0.0)
        {
            auto const alpha = exit_root(a, 2.0 * (o.x * d.x + o.y * d.y),
                                         std::min(0.0, o.x * o.x + o.y * o.y - c.radius * c.radius));
            auto const z = o.z + alpha * d.z;
            if (std::abs(z) <= c.half_length)
                return alpha;
            // The ray leaves through the cap sphere on that side.
            return sphere_exit({ 0.0, 0.0, z > 0.0 ? c.half_length : -c.half_length }, c.radius, o, d);
        }
        Vec3 const cap { 0.0, 0.0, d.z > 0.0 ? c.half_length : -c.half_length };
        return sphere_exit(cap, c.radius, o, d);
    }

    auto entry_root(double a, double b, double c) -> std::optional<double>
    {
        auto const disc = b * b - 4.0 * a * c;
        if (disc < 0.0 || a <= 0.0)
            return std::nullopt;
        auto const sq = std::sqrt(disc);
        // Smaller root, evaluated without cancellation.
        auto const q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
        auto t0 = q / a;
        auto t1 = q != 0.0 ? c / q : t0;
        if (t0 > t1)
            std::swap(t0, t1);
        return t0;
    }
} // namespace

auto ray_surface_alpha(PosedShape const& posed, GrowthRay const& ray) -> double
{
    if (!is_finite(ray.direction) || std::abs(norm(ray.direction) - 1.0) > 1e-9)
        throw Error(ErrorCode::InvalidArgument, "growth direction must be a unit vector");
    if (!(surface_distance(posed, ray.origin) < 0.0))
        throw Error(ErrorCode::OriginOutsideShape, "ray origin " + format_vec(ray.origin) + " is not inside the shape");

    auto const o = posed.orientation.inverse_rotate(ray.origin - posed.position);
    auto const d = posed.orientation.inverse_rotate(ray.direction);

    double alpha = 0.0;
    if (auto const* box = std::get_if<Box>(&posed.shape))
        alpha = box_exit(box->half_extents, o, d);
    else if (auto const* ellipsoid = std::get_if<Ellipsoid>(&posed.shape))
        alpha = ellipsoid_exit(ellipsoid->semi_axes, o, d);
    else
        alpha = capsule_exit(std::get<Capsule>(posed.shape), o, d);

    if (!std::isfinite(alpha) || alpha <= 0.0)
        throw Error(ErrorCode::NoIntersection, "ray does not leave the shape");
    return alpha;
}

auto anchor_solve(PosedShape const& parent, Vec3 const& direction) -> Vec3
{
    auto const alpha = ray_surface_alpha(parent, { parent.position, direction });
    return parent.position + alpha * direction;
}

auto primitive_aabb(PosedShape const& posed) -> Aabb
{
    auto const half = rotated_half_extents(posed.shape, posed.orientation);
    return { posed.position - half, posed.position + half };
}

auto ray_entry(PosedShape const& posed, Vec3 const& origin, Vec3 const& direction) -> std::optional<RayHit>
{
    auto const o = posed.orientation.inverse_rotate(origin - posed.position);
    auto const d = posed.orientation.inverse_rotate(direction);

    auto const to_world = [&](double t, Vec3 const& local_normal) -> std::optional<RayHit> {
        if (!(t >= 0.0))
            return std::nullopt;
        return RayHit { t, posed.orientation.rotate(normalized(local_normal)) };
    };

    if (auto const* box = std::get_if<Box>(&posed.shape))
    {
        auto const& h = box->half_extents;
        auto t_near = -std::numeric_limits<double>::infinity();
        auto t_far = std::numeric_limits<double>::infinity();
        int near_axis = -1;
        for (int i = 0; i < 3; ++i)
        {
            if (d[i] == 0.0)
            {
                if (std::abs(o[i]) > h[i])
                    return std::nullopt;
                continue;
            }
            auto t1 = (-h[i] - o[i]) / d[i];
            auto t2 = (h[i] - o[i]) / d[i];
            if (t1 > t2)
                std::swap(t1, t2);
            if (t1 > t_near)
            {
                t_near = t1;
                near_axis = i;
            }
            t_far = std::min(t_far, t2);
        }
        if (near_axis < 0 || t_near > t_far || t_near < 0.0)
            return std::nullopt;
        Vec3 n;
        n[near_axis] = d[near_axis] > 0.0 ? -1.0 : 1.0;
        return to_world(t_near, n);
    }

    if (auto const* ellipsoid = std::get_if<Ellipsoid>(&posed.shape))
    {
        auto const& a = ellipsoid->semi_axes;
        Vec3 const os { o.x / a.x, o.y / a.y, o.z / a.z };
        Vec3 const ds { d.x / a.x, d.y / a.y, d.z / a.z };
        auto const t = entry_root(dot(ds, ds), 2.0 * dot(os, ds), dot(os, os) - 1.0);
        if (!t || *t < 0.0)
            return std::nullopt;
        auto const p = o + *t * d;
        return to_world(*t, { p.x / (a.x * a.x), p.y / (a.y * a.y), p.z / (a.z * a.z) });
    }

    auto const& c = std::get<Capsule>(posed.shape);
    if (surface_distance(posed, origin) <= 0.0)
        return std::nullopt;
    std::optional<RayHit> best;
    auto consider = [&](double t, Vec3 const& n) {
        if (t >= 0.0 && (!best || t < best->t))
            best = to_world(t, n);
    };
    auto const a = d.x * d.x + d.y * d.y;
    if (a > 0.0)
    {
        if (auto t = entry_root(a, 2.0 * (o.x * d.x + o.y * d.y), o.x * o.x + o.y * o.y - c.radius * c.radius))
        {
            auto const p = o + *t * d;
            if (std::abs(p.z) <= c.half_length)
                consider(*t, { p.x, p.y, 0.0 });
        }
    }
    for (double sign: { 1.0, -1.0 })
    {
        Vec3 const center { 0.0, 0.0, sign * c.half_length };
        auto const oc = o - center;
        if (auto t = entry_root(dot(d, d), 2.0 * dot(oc, d), dot(oc, oc) - c.radius * c.radius))
        {
            auto const p = o + *t * d;
            if (sign * p.z >= c.half_length)
                consider(*t, p - center);
        }
    }
    return best;
}

} // namespace morphoforge::geometry
