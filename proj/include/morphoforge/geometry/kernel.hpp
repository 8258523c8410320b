// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <morphoforge/core/tree.hpp>

#include <optional>

namespace morphoforge::geometry
{

/// A primitive placed in some frame (world, or a parent body frame).
struct PosedShape
{
    PrimitiveShape shape;
    Vec3 position;
    Orientation orientation;
};

/// Ray starting at a parent geom center heading in the (unit) growth direction.
struct GrowthRay
{
    Vec3 origin;
    Vec3 direction;
};

struct Aabb
{
    Vec3 min;
    Vec3 max;

    [[nodiscard]] auto center() const -> Vec3 { return 0.5 * (min + max); }
    [[nodiscard]] auto half_widths() const -> Vec3 { return 0.5 * (max - min); }
    void expand(Aabb const& other)
    {
        min = morphoforge::min(min, other.min);
        max = morphoforge::max(max, other.max);
    }
};

/// Entry point of a ray into a shape, with the outward surface normal there.
struct RayHit
{
    double t = 0.0;
    Vec3 normal;
};

/// Signed Euclidean distance to the surface: negative inside, zero on it.
/// Box and capsule are exact; the ellipsoid is solved numerically to ~1e-12.
[[nodiscard]] auto surface_distance(PosedShape const& posed, Vec3 const& point) -> double;

/// Smallest alpha > 0 with origin + alpha·direction on the surface, for an origin
/// strictly inside the shape. Throws OriginOutsideShape otherwise.
[[nodiscard]] auto ray_surface_alpha(PosedShape const& posed, GrowthRay const& ray) -> double;

/// posed.position + alpha·direction with alpha from ray_surface_alpha.
[[nodiscard]] auto anchor_solve(PosedShape const& parent, Vec3 const& direction) -> Vec3;

[[nodiscard]] auto primitive_aabb(PosedShape const& posed) -> Aabb;

/// First intersection at t >= 0 of a ray with origin outside the shape; the
/// direction need not be unit length. Rays starting inside report no hit.
[[nodiscard]] auto ray_entry(PosedShape const& posed, Vec3 const& origin, Vec3 const& direction)
    -> std::optional<RayHit>;

/// Support point of the shape in world direction `d` (d != 0).
[[nodiscard]] auto support(PosedShape const& posed, Vec3 const& d) -> Vec3;

/// Iteration limits of the pair distance solver.
inline constexpr int gjk_max_iterations = 128;
inline constexpr double gjk_progress_tolerance = 1e-9;

/// Signed separation between two convex primitives: the Euclidean gap when they are
/// apart, <= 0 when touching or overlapping. Penetration magnitudes are estimates.
[[nodiscard]] auto pair_gap(PosedShape const& a, PosedShape const& b) -> double;

/// Body-frame pose of a node's geom.
[[nodiscard]] auto local_geom(BodyNode const& node) -> PosedShape;
/// World pose of a node's geom.
[[nodiscard]] auto world_geom(KinematicTree const& tree, NodeId id) -> PosedShape;

} // namespace morphoforge::geometry
