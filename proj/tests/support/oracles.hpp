// SPDX-License-Identifier: Apache-2.0
#pragma once

// Independent reference computations for the geometry kernel. None of these call
// into the closed-form intersection or support-function code they check.

#include <morphoforge/geometry/kernel.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <random>

namespace morphoforge::oracle
{

/// Brackets the sign change of surface_distance along the ray and bisects it.
inline auto bisect_alpha(geometry::PosedShape const& posed, geometry::GrowthRay const& ray) -> double
{
    auto const sd = [&](double alpha) { return geometry::surface_distance(posed, ray.origin + alpha * ray.direction); };
    double lo = 0.0;
    double hi = 1e-3;
    while (sd(hi) < 0.0)
    {
        lo = hi;
        hi *= 2.0;
    }
    for (int i = 0; i < 200; ++i)
    {
        auto const mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        (sd(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Half-widths of the AABB of a rotated box, from its eight rotated corners.
inline auto box_corner_half_widths(Vec3 const& half, Orientation const& q) -> Vec3
{
    Vec3 out;
    for (int mask = 0; mask < 8; ++mask)
    {
        Vec3 const corner { (mask & 1) ? half.x : -half.x, (mask & 2) ? half.y : -half.y, (mask & 4) ? half.z : -half.z };
        auto const r = q.rotate(corner);
        out = max(out, abs(r));
    }
    return out;
}

/// Unsigned distance from p to an axis-aligned ellipsoid at the origin by dense
/// parametric sampling followed by pattern-search refinement.
inline auto ellipsoid_distance_by_search(Vec3 const& axes, Vec3 const& p) -> double
{
    auto const surface = [&](double theta, double phi) {
        return Vec3 { axes.x * std::sin(theta) * std::cos(phi), axes.y * std::sin(theta) * std::sin(phi),
                      axes.z * std::cos(theta) };
    };
    auto const dist = [&](double theta, double phi) { return norm(surface(theta, phi) - p); };

    constexpr double pi = 3.14159265358979323846;
    double best = std::numeric_limits<double>::infinity();
    double bt = 0.0;
    double bp = 0.0;
    constexpr int n_theta = 180;
    constexpr int n_phi = 360;
    for (int i = 0; i <= n_theta; ++i)
        for (int j = 0; j < n_phi; ++j)
        {
            auto const t = pi * i / n_theta;
            auto const f = 2.0 * pi * j / n_phi;
            if (auto const d = dist(t, f); d < best)
            {
                best = d;
                bt = t;
                bp = f;
            }
        }
    double step = pi / n_theta;
    while (step > 1e-13)
    {
        bool improved = false;
        for (auto [dt, dp]: std::array<std::pair<double, double>, 8> {
                 { { step, 0 }, { -step, 0 }, { 0, step }, { 0, -step }, { step, step }, { -step, -step }, { step, -step }, { -step, step } } })
        {
            if (auto const d = dist(bt + dt, bp + dp); d < best)
            {
                best = d;
                bt += dt;
                bp += dp;
                improved = true;
            }
        }
        if (!improved)
            step *= 0.5;
    }
    return best;
}

inline auto random_orientation(std::mt19937_64& rng) -> Orientation
{
    std::normal_distribution<double> n(0.0, 1.0);
    Orientation q { n(rng), n(rng), n(rng), n(rng) };
    auto const len = q.norm();
    return { q.w / len, q.x / len, q.y / len, q.z / len };
}

inline auto random_unit(std::mt19937_64& rng) -> Vec3
{
    std::normal_distribution<double> n(0.0, 1.0);
    for (;;)
    {
        Vec3 v { n(rng), n(rng), n(rng) };
        if (auto const len = norm(v); len > 1e-6)
            return v / len;
    }
}

/// Random primitive of the given kind (0 box, 1 ellipsoid, 2 capsule) with sizes in [lo, hi].
inline auto random_shape(std::mt19937_64& rng, int kind, double lo = 0.05, double hi = 1.0) -> PrimitiveShape
{
    std::uniform_real_distribution<double> u(lo, hi);
    switch (kind)
    {
        case 0: return Box { { u(rng), u(rng), u(rng) } };
        case 1: return Ellipsoid { { u(rng), u(rng), u(rng) } };
        default: return Capsule { u(rng), u(rng) };
    }
}

/// Uniform-ish interior point: rejection sampling inside the shape's local AABB.
inline auto random_interior_point(std::mt19937_64& rng, geometry::PosedShape const& posed, double shrink = 0.95)
    -> Vec3
{
    auto const half = rotated_half_extents(posed.shape, posed.orientation);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (;;)
    {
        Vec3 const p = posed.position + Vec3 { u(rng) * half.x, u(rng) * half.y, u(rng) * half.z } * shrink;
        if (geometry::surface_distance(posed, p) < -1e-6)
            return p;
    }
}

} // namespace morphoforge::oracle
