#pragma once

#include <algorithm>

#include "pediloop/core/math.hpp"

namespace pediloop {

/// Segment a-b swept by a sphere of the given radius.
struct Capsule {
    Vec3 a{};
    Vec3 b{};
    double radius = 0.0;

    constexpr bool operator==(const Capsule&) const = default;
};

/// Box centred at pose.position, axes given by pose.rotation.
struct OrientedBox {
    Transform pose{};
    Vec3 half_extents{};
};

/// Closest point on segment [a, b] to p, as the segment parameter in [0, 1].
inline double closest_segment_param(const Vec3& a, const Vec3& b, const Vec3& p) noexcept
{
    const Vec3 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) return 0.0;
    return std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
}

inline double distance_to_segment(const Vec3& a, const Vec3& b, const Vec3& p) noexcept
{
    const double t = closest_segment_param(a, b, p);
    return norm(p - (a + (b - a) * t));
}

} // namespace pediloop
