#pragma once

#include <array>
#include <cmath>

#include "pediloop/core/math.hpp"

namespace pediloop::mocap {

inline Mat3 axis_rotation(int axis, double angle) noexcept
{
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 r;
    switch (axis) {
    case 0: r.m = {{{1, 0, 0}, {0, c, -s}, {0, s, c}}}; break;
    case 1: r.m = {{{c, 0, s}, {0, 1, 0}, {-s, 0, c}}}; break;
    default: r.m = {{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}}; break;
    }
    return r;
}

/// R = R_order[0](a[0]) * R_order[1](a[1]) * R_order[2](a[2]), angles in degrees.
inline Mat3 euler_to_matrix(const std::array<int, 3>& order, const std::array<double, 3>& deg) noexcept
{
    return axis_rotation(order[0], deg_to_rad(deg[0])) * axis_rotation(order[1], deg_to_rad(deg[1])) *
           axis_rotation(order[2], deg_to_rad(deg[2]));
}

inline Quat euler_to_quat(const std::array<int, 3>& order, const std::array<double, 3>& deg) noexcept
{
    static constexpr std::array<Vec3, 3> kAxes{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    Quat q;
    for (int k = 0; k < 3; ++k) q = q * Quat::from_axis_angle(kAxes[order[k]], deg_to_rad(deg[k]));
    return q;
}

/// Inverse of euler_to_matrix for a Tait-Bryan order; returns degrees.
inline std::array<double, 3> matrix_to_euler(const std::array<int, 3>& order, const Mat3& r) noexcept
{
    const int i = order[0], j = order[1], k = order[2];
    // +1 for cyclic orders (XYZ, YZX, ZXY), -1 otherwise.
    const double s = ((j - i + 3) % 3 == 1) ? 1.0 : -1.0;
    const double sb = std::clamp(s * r(i, k), -1.0, 1.0);
    const double b = std::asin(sb);
    double a, c;
    if (std::abs(sb) < 1.0 - 1e-12) {
        a = std::atan2(-s * r(j, k), r(k, k));
        c = std::atan2(-s * r(i, j), r(i, i));
    } else {
        // Gimbal lock: only a + c (or a - c) is determined; put it all in the first angle.
        a = std::atan2(s * r(k, j), r(j, j));
        c = 0.0;
    }
    return {rad_to_deg(a), rad_to_deg(b), rad_to_deg(c)};
}

inline std::array<double, 3> quat_to_euler(const std::array<int, 3>& order, const Quat& q) noexcept
{
    return matrix_to_euler(order, q.to_matrix());
}

} // namespace pediloop::mocap
