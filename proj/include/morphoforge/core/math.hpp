// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace morphoforge
{

/// World convention: +x forward, +z up, +y to the robot's left.
struct Vec3
{
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr auto operator[](int i) const -> double { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr auto operator[](int i) -> double& { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr auto operator+=(Vec3 const& o) -> Vec3&
    {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr auto operator-=(Vec3 const& o) -> Vec3&
    {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }

    friend constexpr auto operator==(Vec3 const&, Vec3 const&) -> bool = default;
};

constexpr auto operator+(Vec3 a, Vec3 const& b) -> Vec3 { return a += b; }
constexpr auto operator-(Vec3 a, Vec3 const& b) -> Vec3 { return a -= b; }
constexpr auto operator-(Vec3 const& a) -> Vec3 { return { -a.x, -a.y, -a.z }; }
constexpr auto operator*(double s, Vec3 const& a) -> Vec3 { return { s * a.x, s * a.y, s * a.z }; }
constexpr auto operator*(Vec3 const& a, double s) -> Vec3 { return s * a; }
constexpr auto operator/(Vec3 const& a, double s) -> Vec3 { return { a.x / s, a.y / s, a.z / s }; }

constexpr auto dot(Vec3 const& a, Vec3 const& b) -> double { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr auto cross(Vec3 const& a, Vec3 const& b) -> Vec3
{
    return { a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x };
}
constexpr auto hadamard(Vec3 const& a, Vec3 const& b) -> Vec3 { return { a.x * b.x, a.y * b.y, a.z * b.z }; }
inline auto norm(Vec3 const& a) -> double { return std::sqrt(dot(a, a)); }
inline auto abs(Vec3 const& a) -> Vec3 { return { std::abs(a.x), std::abs(a.y), std::abs(a.z) }; }
inline auto max(Vec3 const& a, Vec3 const& b) -> Vec3
{
    return { std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z) };
}
inline auto min(Vec3 const& a, Vec3 const& b) -> Vec3
{
    return { std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z) };
}
inline auto is_finite(Vec3 const& a) -> bool
{
    return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}
/// Returns a / |a|; callers must reject zero vectors first.
inline auto normalized(Vec3 const& a) -> Vec3 { return a / norm(a); }

/// Reflection across the sagittal plane y = 0.
constexpr auto mirror_point(Vec3 const& p) -> Vec3 { return { p.x, -p.y, p.z }; }

/// Rotation axes are pseudovectors: a reflection M maps them to -M·a, so
/// a mirrored hinge bends the mirrored limb the same way for the same angle.
constexpr auto mirror_axis(Vec3 const& a) -> Vec3 { return { -a.x, a.y, -a.z }; }

struct Mat3
{
    std::array<std::array<double, 3>, 3> m {};

    [[nodiscard]] constexpr auto operator()(int r, int c) const -> double { return m[r][c]; }
    [[nodiscard]] constexpr auto transposed() const -> Mat3
    {
        Mat3 t;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                t.m[r][c] = m[c][r];
        return t;
    }
};

constexpr auto operator*(Mat3 const& a, Vec3 const& v) -> Vec3
{
    return { a.m[0][0] * v.x + a.m[0][1] * v.y + a.m[0][2] * v.z,
             a.m[1][0] * v.x + a.m[1][1] * v.y + a.m[1][2] * v.z,
             a.m[2][0] * v.x + a.m[2][1] * v.y + a.m[2][2] * v.z };
}

/// Unit quaternion (w, x, y, z).
struct Orientation
{
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    [[nodiscard]] static auto identity() -> Orientation { return {}; }
    [[nodiscard]] static auto from_axis_angle(Vec3 const& axis, double angle) -> Orientation;
    /// Shortest-arc rotation taking unit vector `from` onto unit vector `to`.
    [[nodiscard]] static auto from_to(Vec3 const& from, Vec3 const& to) -> Orientation;

    [[nodiscard]] auto norm() const -> double { return std::sqrt(w * w + x * x + y * y + z * z); }
    [[nodiscard]] auto conjugate() const -> Orientation { return { w, -x, -y, -z }; }
    [[nodiscard]] auto matrix() const -> Mat3;
    [[nodiscard]] auto rotate(Vec3 const& v) const -> Vec3;
    [[nodiscard]] auto inverse_rotate(Vec3 const& v) const -> Vec3;
    /// R' = M·R·M for the sagittal mirror M.
    [[nodiscard]] auto mirrored() const -> Orientation { return { w, -x, y, -z }; }

    friend auto operator==(Orientation const&, Orientation const&) -> bool = default;
};

auto operator*(Orientation const& a, Orientation const& b) -> Orientation;

struct Rgba
{
    double r = 0.5;
    double g = 0.5;
    double b = 0.5;
    double a = 1.0;

    friend auto operator==(Rgba const&, Rgba const&) -> bool = default;
};

/// Shortest decimal text that parses back to exactly `value`; -0 prints as 0.
[[nodiscard]] auto format_real(double value) -> std::string;
[[nodiscard]] auto format_vec(Vec3 const& v) -> std::string;

} // namespace morphoforge
