// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/geometry/kernel.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace morphoforge::geometry
{

namespace
{
    /// A convex primitive split into an inner core and a sphere-swept margin, so that
    /// capsules and spheres get exact distances from the core iteration.
    struct SweptCore
    {
        PosedShape const& posed;
        double margin = 0.0;

        explicit SweptCore(PosedShape const& p): posed(p)
        {
            if (auto const* c = std::get_if<Capsule>(&p.shape))
                margin = c->radius;
            else if (auto const* e = std::get_if<Ellipsoid>(&p.shape))
            {
                auto const& a = e->semi_axes;
                if (a.x == a.y && a.y == a.z)
                    margin = a.x;
            }
        }

        [[nodiscard]] auto support(Vec3 const& d) const -> Vec3
        {
            auto const u = posed.orientation.inverse_rotate(d);
            Vec3 local;
            if (auto const* box = std::get_if<Box>(&posed.shape))
            {
                auto const& h = box->half_extents;
                local = { u.x >= 0.0 ? h.x : -h.x, u.y >= 0.0 ? h.y : -h.y, u.z >= 0.0 ? h.z : -h.z };
            }
            else if (auto const* capsule = std::get_if<Capsule>(&posed.shape))
                local = { 0.0, 0.0, u.z >= 0.0 ? capsule->half_length : -capsule->half_length };
            else if (margin == 0.0)
            {
                auto const& a = std::get<Ellipsoid>(posed.shape).semi_axes;
                auto const v = hadamard(a, u);
                auto const n = norm(v);
                local = n > 0.0 ? hadamard(a, v) / n : Vec3 {};
            }
            return posed.position + posed.orientation.rotate(local);
        }
    };

    struct SimplexResult
    {
        Vec3 closest;
        std::vector<Vec3> points;
    };

    /// Closest point to the origin on the convex hull of up to four points, found by
    /// projecting onto every face's affine hull and keeping the best feasible one.
    auto closest_on_simplex(std::vector<Vec3> const& pts) -> SimplexResult
    {
        auto const n = pts.size();
        SimplexResult best { {}, {} };
        auto best_norm = std::numeric_limits<double>::infinity();

        for (unsigned mask = 1; mask < (1u << n); ++mask)
        {
            std::vector<Vec3> subset;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (1u << i))
                    subset.push_back(pts[i]);
            auto const k = subset.size() - 1;

            // Solve G mu = -E^T p0 with E = [p_i - p0].
            std::array<Vec3, 3> e {};
            for (std::size_t i = 0; i < k; ++i)
                e[i] = subset[i + 1] - subset[0];
            std::array<std::array<double, 4>, 3> m {};
            for (std::size_t r = 0; r < k; ++r)
            {
                for (std::size_t c = 0; c < k; ++c)
                    m[r][c] = dot(e[r], e[c]);
                m[r][3] = -dot(e[r], subset[0]);
            }
            auto scale = 0.0;
            for (std::size_t r = 0; r < k; ++r)
                scale = std::max(scale, m[r][r]);

            bool singular = false;
            for (std::size_t col = 0; col < k && !singular; ++col)
            {
                auto pivot = col;
                for (std::size_t r = col + 1; r < k; ++r)
                    if (std::abs(m[r][col]) > std::abs(m[pivot][col]))
                        pivot = r;
                if (std::abs(m[pivot][col]) <= 1e-14 * scale)
                {
                    singular = true;
                    break;
                }
                std::swap(m[col], m[pivot]);
                for (std::size_t r = 0; r < k; ++r)
                {
                    if (r == col)
                        continue;
                    auto const f = m[r][col] / m[col][col];
                    for (std::size_t c = col; c < 4; ++c)
                        m[r][c] -= f * m[col][c];
                }
            }
            if (singular)
                continue;

            std::array<double, 3> mu {};
            auto lambda0 = 1.0;
            for (std::size_t r = 0; r < k; ++r)
            {
                mu[r] = m[r][3] / m[r][r];
                lambda0 -= mu[r];
            }
            auto feasible = lambda0 >= -1e-12;
            for (std::size_t r = 0; r < k; ++r)
                feasible = feasible && mu[r] >= -1e-12;
            if (!feasible)
                continue;

            auto point = subset[0];
            for (std::size_t r = 0; r < k; ++r)
                point += mu[r] * e[r];
            auto const dist = norm(point);
            if (dist < best_norm - 1e-15)
            {
                best_norm = dist;
                best = { point, subset };
            }
        }
        if (best.points.empty())
            best = { pts.front(), { pts.front() } };
        return best;
    }

    /// Support function of the full (margin-inflated) Minkowski difference A - B.
    auto difference_support_value(PosedShape const& a, PosedShape const& b, Vec3 const& n) -> double
    {
        return dot(n, support(a, n) - support(b, -n));
    }

    /// Overlap estimate for intersecting cores: the smallest support value of A - B
    /// over a symmetric family of candidate axes bounds the penetration depth from above.
    auto penetration_estimate(PosedShape const& a, PosedShape const& b) -> double
    {
        std::vector<Vec3> axes;
        for (auto const* p: { &a, &b })
        {
            auto const r = p->orientation.matrix();
            for (int c = 0; c < 3; ++c)
                axes.push_back({ r(0, c), r(1, c), r(2, c) });
        }
        axes.push_back({ 1, 0, 0 });
        axes.push_back({ 0, 1, 0 });
        axes.push_back({ 0, 0, 1 });
        auto const centers = a.position - b.position;
        if (norm(centers) > 0.0)
            axes.push_back(normalized(centers));

        auto depth = std::numeric_limits<double>::infinity();
        for (auto const& axis: axes)
            for (double sign: { 1.0, -1.0 })
                depth = std::min(depth, difference_support_value(a, b, sign * axis));
        return -std::max(depth, 0.0);
    }
} // namespace

auto support(PosedShape const& posed, Vec3 const& d) -> Vec3
{
    SweptCore const core(posed);
    auto const n = norm(d);
    return core.support(d) + (n > 0.0 ? core.margin / n : 0.0) * d;
}

auto pair_gap(PosedShape const& a, PosedShape const& b) -> double
{
    SweptCore const core_a(a);
    SweptCore const core_b(b);
    auto const support_diff = [&](Vec3 const& d) { return core_a.support(d) - core_b.support(-d); };

    auto direction = a.position - b.position;
    if (norm(direction) == 0.0)
        direction = { 1.0, 0.0, 0.0 };

    std::vector<Vec3> simplex { support_diff(direction) };
    auto v = simplex.front();
    bool touching = false;

    for (int iteration = 0; iteration < gjk_max_iterations; ++iteration)
    {
        auto const v_norm = norm(v);
        if (v_norm <= 1e-10)
        {
            touching = true;
            break;
        }
        auto const w = support_diff(-v);
        // |v| is an upper bound and v·w/|v| a lower bound on the core distance.
        if (v_norm - dot(v, w) / v_norm <= gjk_progress_tolerance)
            break;
        bool duplicate = false;
        for (auto const& p: simplex)
            duplicate = duplicate || norm(p - w) <= 1e-14;
        if (duplicate)
            break;
        simplex.push_back(w);
        auto result = closest_on_simplex(simplex);
        if (norm(result.closest) >= v_norm)
            break; // no further progress in floating point
        v = result.closest;
        simplex = std::move(result.points);
    }

    if (touching)
        return penetration_estimate(a, b);
    return norm(v) - core_a.margin - core_b.margin;
}

} // namespace morphoforge::geometry
