#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "pediloop/core/shapes.hpp"
#include "pediloop/world/types.hpp"

namespace pediloop::sensors {

inline constexpr ActorId kNoLabel{0};
inline constexpr double kMinHitDistance = 1e-9;

struct Ray {
    Vec3 origin{};
    Vec3 dir{};  // unit length
};

/// Ground plane z = 0, hit from above.
inline std::optional<double> intersect_ground(const Ray& r) noexcept
{
    if (!(r.dir.z < 0.0) || !(r.origin.z > 0.0)) return std::nullopt;
    return -r.origin.z / r.dir.z;
}

/// Slab test in the box frame. A ray starting inside reports its exit point.
inline std::optional<double> intersect_box(const Ray& r, const OrientedBox& box) noexcept
{
    const Transform inv = box.pose.inverse();
    const Vec3 o = inv.apply(r.origin);
    const Vec3 d = inv.rotation.rotate(r.dir);
    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
        const double h = box.half_extents[k];
        if (d[k] == 0.0) {
            if (o[k] < -h || o[k] > h) return std::nullopt;
            continue;
        }
        double a = (-h - o[k]) / d[k];
        double b = (h - o[k]) / d[k];
        if (a > b) std::swap(a, b);
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
    }
    if (t0 > t1) return std::nullopt;
    if (t0 > kMinHitDistance) return t0;
    if (t1 > kMinHitDistance) return t1;
    return std::nullopt;
}

/// Nearest positive hit on the capsule surface: cylinder body or either end cap.
inline std::optional<double> intersect_capsule(const Ray& r, const Capsule& c) noexcept
{
    const Vec3 ba = c.b - c.a;
    const Vec3 oa = r.origin - c.a;
    const double baba = dot(ba, ba);
    const double bard = dot(ba, r.dir);
    const double baoa = dot(ba, oa);
    const double rr = c.radius * c.radius;
    double best = std::numeric_limits<double>::infinity();
    auto take = [&](double t) {
        if (t > kMinHitDistance && t < best) best = t;
    };

    if (baba > 0.0) {
        const double qa = baba - bard * bard;
        const double qb = baba * dot(r.dir, oa) - baoa * bard;
        const double qc = baba * dot(oa, oa) - baoa * baoa - rr * baba;
        if (qa > 1e-15 * baba) {
            const double h = qb * qb - qa * qc;
            if (h >= 0.0) {
                const double sq = std::sqrt(h);
                for (double t : {(-qb - sq) / qa, (-qb + sq) / qa}) {
                    const double y = baoa + t * bard;
                    if (y > 0.0 && y < baba) take(t);
                }
            }
        }
    }
    auto cap = [&](const Vec3& centre, bool at_a) {
        const Vec3 oc = r.origin - centre;
        const double b = dot(r.dir, oc);
        const double h = b * b - (dot(oc, oc) - rr);
        if (h < 0.0) return;
        const double sq = std::sqrt(h);
        for (double t : {-b - sq, -b + sq}) {
            const double y = baoa + t * bard;
            if (baba == 0.0 || (at_a ? y <= 0.0 : y >= baba)) take(t);
        }
    };
    cap(c.a, true);
    cap(c.b, false);
    if (std::isinf(best)) return std::nullopt;
    return best;
}

struct Primitive {
    std::variant<OrientedBox, Capsule> shape;
    ActorId label{};
};

/// Analytic scene: the ground plane plus labelled boxes and capsules.
struct Scene {
    bool ground = true;
    std::vector<Primitive> primitives;
};

struct Hit {
    double distance = 0.0;
    ActorId label{};
    int primitive = -1;  // -1 for the ground
};

inline std::optional<double> intersect(const Ray& r, const Primitive& p) noexcept
{
    if (const auto* b = std::get_if<OrientedBox>(&p.shape)) return intersect_box(r, *b);
    return intersect_capsule(r, std::get<Capsule>(p.shape));
}

/// Nearest intersection within max_distance. Ties keep the earlier primitive.
inline std::optional<Hit> cast_ray(const Scene& scene, const Ray& r, double max_distance) noexcept
{
    std::optional<Hit> best;
    if (scene.ground)
        if (auto t = intersect_ground(r); t && *t <= max_distance) best = Hit{*t, kNoLabel, -1};
    for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
        const auto t = intersect(r, scene.primitives[i]);
        if (t && *t <= max_distance && (!best || *t < best->distance))
            best = Hit{*t, scene.primitives[i].label, static_cast<int>(i)};
    }
    return best;
}

/// Scene for one snapshot, optionally leaving out the vehicle carrying the sensor.
inline Scene build_scene(const WorldSnapshot& s, std::optional<ActorId> exclude = std::nullopt)
{
    Scene scene;
    for (const auto& v : s.vehicles)
        if (!exclude || v.id != *exclude) scene.primitives.push_back({v.box(), v.id});
    for (const auto& c : s.walker.capsules) scene.primitives.push_back({c, s.walker.id});
    return scene;
}

} // namespace pediloop::sensors
