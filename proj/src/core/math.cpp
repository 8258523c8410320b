// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/core/math.hpp>

#include <charconv>

namespace morphoforge
{

auto Orientation::from_axis_angle(Vec3 const& axis, double angle) -> Orientation
{
    auto const u = normalized(axis);
    auto const s = std::sin(angle / 2.0);
    return { std::cos(angle / 2.0), u.x * s, u.y * s, u.z * s };
}

auto Orientation::from_to(Vec3 const& from, Vec3 const& to) -> Orientation
{
    auto const c = dot(from, to);
    if (c < -1.0 + 1e-12)
    {
        // Antiparallel: rotate by pi about any axis orthogonal to `from`.
        auto ortho = std::abs(from.x) < 0.9 ? cross(from, Vec3 { 1, 0, 0 }) : cross(from, Vec3 { 0, 1, 0 });
        ortho = normalized(ortho);
        return { 0.0, ortho.x, ortho.y, ortho.z };
    }
    auto const axis = cross(from, to);
    Orientation q { 1.0 + c, axis.x, axis.y, axis.z };
    auto const n = q.norm();
    return { q.w / n, q.x / n, q.y / n, q.z / n };
}

auto Orientation::matrix() const -> Mat3
{
    Mat3 r;
    r.m[0] = { 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y) };
    r.m[1] = { 2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x) };
    r.m[2] = { 2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y) };
    return r;
}

auto Orientation::rotate(Vec3 const& v) const -> Vec3
{
    // v' = v + 2w(u x v) + 2 u x (u x v)
    Vec3 const u { x, y, z };
    auto const t = 2.0 * cross(u, v);
    return v + w * t + cross(u, t);
}

auto Orientation::inverse_rotate(Vec3 const& v) const -> Vec3
{
    return conjugate().rotate(v);
}

auto operator*(Orientation const& a, Orientation const& b) -> Orientation
{
    return { a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
             a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
             a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
             a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w };
}

auto format_real(double value) -> std::string
{
    if (value == 0.0)
        return "0";
    char buffer[64];
    auto const [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return ec == std::errc {} ? std::string(buffer, end) : std::string("nan");
}

auto format_vec(Vec3 const& v) -> std::string
{
    return format_real(v.x) + " " + format_real(v.y) + " " + format_real(v.z);
}

} // namespace morphoforge
