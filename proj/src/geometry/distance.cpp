// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/geometry/kernel.hpp>

#include <algorithm>
#include <array>
#include <cmath>

namespace morphoforge::geometry
{

namespace
{
    constexpr int newton_max_iterations = 64;

    /// Root of F(s) = sum_i (n_i / (s + r_i))^2 - 1 on [s_lo, s_hi], where F(s_lo) >= 0 >= F(s_hi).
    /// F is convex and decreasing there, so Newton started at the left end approaches the
    /// root monotonically; bisection finishes the job if Newton stalls.
    template <std::size_t N>
    auto secular_root(std::array<double, N> const& n, std::array<double, N> const& r, double s_lo, double s_hi)
        -> double
    {
        auto const eval = [&](double s, double& derivative) {
            double f = -1.0;
            derivative = 0.0;
            for (std::size_t i = 0; i < N; ++i)
            {
                auto const ratio = n[i] / (s + r[i]);
                f += ratio * ratio;
                derivative -= 2.0 * ratio * ratio / (s + r[i]);
            }
            return f;
        };

        auto s = s_lo;
        for (int iteration = 0; iteration < newton_max_iterations; ++iteration)
        {
            double derivative = 0.0;
            auto const f = eval(s, derivative);
            if (f == 0.0)
                return s;
            if (f < 0.0 || derivative >= 0.0)
                break; // left the monotone region; hand over to bisection
            auto const next = s - f / derivative;
            if (!(next > s) || next > s_hi)
                break;
            if (next - s <= 1e-15 * std::max(1.0, std::abs(s)))
                return next;
            s_lo = s;
            s = next;
        }

        // Bisection until the bracket can no longer be split.
        auto lo = s_lo;
        auto hi = s_hi;
        {
            double derivative = 0.0;
            if (eval(s, derivative) >= 0.0)
                lo = s;
            else
                hi = std::min(hi, s);
        }
        for (;;)
        {
            auto const mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi)
                return mid;
            double derivative = 0.0;
            auto const f = eval(mid, derivative);
            if (f > 0.0)
                lo = mid;
            else if (f < 0.0)
                hi = mid;
            else
                return mid;
        }
    }

    /// Unsigned distance from (y0, y1) >= 0 to the ellipse with semi-axes e0 >= e1 > 0.
    auto ellipse_distance(double e0, double e1, double y0, double y1) -> double
    {
        if (y1 > 0.0)
        {
            if (y0 > 0.0)
            {
                auto const z0 = y0 / e0;
                auto const z1 = y1 / e1;
                auto const g = z0 * z0 + z1 * z1 - 1.0;
                if (g == 0.0)
                    return 0.0;
                auto const r0 = (e0 / e1) * (e0 / e1);
                auto const s_hi = g < 0.0 ? 0.0 : std::hypot(r0 * z0, z1) - 1.0;
                auto const s = secular_root<2>({ r0 * z0, z1 }, { r0, 1.0 }, z1 - 1.0, s_hi);
                auto const x0 = r0 * y0 / (s + r0);
                auto const x1 = y1 / (s + 1.0);
                return std::hypot(x0 - y0, x1 - y1);
            }
            return std::abs(y1 - e1);
        }
        auto const numer0 = e0 * y0;
        auto const denom0 = e0 * e0 - e1 * e1;
        if (numer0 < denom0)
        {
            auto const xde0 = numer0 / denom0;
            auto const x0 = e0 * xde0;
            auto const x1 = e1 * std::sqrt(1.0 - xde0 * xde0);
            return std::hypot(x0 - y0, x1);
        }
        return std::abs(y0 - e0);
    }

    /// Unsigned distance from y >= 0 (component-wise) to the ellipsoid e0 >= e1 >= e2 > 0.
    auto ellipsoid_distance(std::array<double, 3> const& e, std::array<double, 3> const& y) -> double
    {
        if (y[2] > 0.0)
        {
            if (y[1] > 0.0)
            {
                if (y[0] > 0.0)
                {
                    std::array const z { y[0] / e[0], y[1] / e[1], y[2] / e[2] };
                    auto const g = z[0] * z[0] + z[1] * z[1] + z[2] * z[2] - 1.0;
                    if (g == 0.0)
                        return 0.0;
                    auto const r0 = (e[0] / e[2]) * (e[0] / e[2]);
                    auto const r1 = (e[1] / e[2]) * (e[1] / e[2]);
                    auto const s_hi =
                        g < 0.0 ? 0.0 : std::sqrt(r0 * z[0] * r0 * z[0] + r1 * z[1] * r1 * z[1] + z[2] * z[2]) - 1.0;
                    auto const s = secular_root<3>({ r0 * z[0], r1 * z[1], z[2] }, { r0, r1, 1.0 }, z[2] - 1.0, s_hi);
                    Vec3 const x { r0 * y[0] / (s + r0), r1 * y[1] / (s + r1), y[2] / (s + 1.0) };
                    return norm(x - Vec3 { y[0], y[1], y[2] });
                }
                return ellipse_distance(e[1], e[2], y[1], y[2]);
            }
            if (y[0] > 0.0)
                return ellipse_distance(e[0], e[2], y[0], y[2]);
            return std::abs(y[2] - e[2]);
        }

        auto const denom0 = e[0] * e[0] - e[2] * e[2];
        auto const denom1 = e[1] * e[1] - e[2] * e[2];
        auto const numer0 = e[0] * y[0];
        auto const numer1 = e[1] * y[1];
        if (numer0 < denom0 && numer1 < denom1)
        {
            auto const xde0 = numer0 / denom0;
            auto const xde1 = numer1 / denom1;
            auto const discr = 1.0 - xde0 * xde0 - xde1 * xde1;
            if (discr > 0.0)
            {
                Vec3 const x { e[0] * xde0, e[1] * xde1, e[2] * std::sqrt(discr) };
                return norm(x - Vec3 { y[0], y[1], 0.0 });
            }
        }
        return ellipse_distance(e[0], e[1], y[0], y[1]);
    }

    auto ellipsoid_signed_distance(Vec3 const& semi_axes, Vec3 const& p) -> double
    {
        std::array<int, 3> order { 0, 1, 2 };
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return semi_axes[a] > semi_axes[b]; });
        std::array<double, 3> e {};
        std::array<double, 3> y {};
        double g = -1.0;
        for (int i = 0; i < 3; ++i)
        {
            e[i] = semi_axes[order[i]];
            y[i] = std::abs(p[order[i]]);
            g += (y[i] / e[i]) * (y[i] / e[i]);
        }
        if (g == 0.0)
            return 0.0;
        auto const d = ellipsoid_distance(e, y);
        return g < 0.0 ? -d : d;
    }
} // namespace

auto surface_distance(PosedShape const& posed, Vec3 const& point) -> double
{
    auto const p = posed.orientation.inverse_rotate(point - posed.position);
    if (auto const* box = std::get_if<Box>(&posed.shape))
    {
        auto const q = abs(p) - box->half_extents;
        auto const outside = norm(max(q, Vec3 {}));
        auto const inside = std::min(std::max(q.x, std::max(q.y, q.z)), 0.0);
        return outside + inside;
    }
    if (auto const* capsule = std::get_if<Capsule>(&posed.shape))
    {
        auto const z = std::clamp(p.z, -capsule->half_length, capsule->half_length);
        return norm(p - Vec3 { 0.0, 0.0, z }) - capsule->radius;
    }
    return ellipsoid_signed_distance(std::get<Ellipsoid>(posed.shape).semi_axes, p);
}

auto local_geom(BodyNode const& node) -> PosedShape
{
    return { node.geom.shape, node.geom.local_pos, node.geom.local_orient };
}

auto world_geom(KinematicTree const& tree, NodeId id) -> PosedShape
{
    auto const& node = tree.node(id);
    return { node.geom.shape, tree.body_position(id) + node.geom.local_pos, node.geom.local_orient };
}

} // namespace morphoforge::geometry
