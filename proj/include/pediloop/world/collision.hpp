#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <span>
#include <vector>

#include "pediloop/core/shapes.hpp"
#include "pediloop/world/types.hpp"

namespace pediloop {

/// Exact distance between segment [a, b] and an axis-aligned box centred at the
/// origin. The squared distance is piecewise quadratic in the segment parameter,
/// with breakpoints where the segment crosses a slab face; each piece is
/// minimised in closed form.
inline double segment_aabb_distance(const Vec3& a, const Vec3& b, const Vec3& half) noexcept
{
    const Vec3 d = b - a;
    std::vector<double> cuts{0.0, 1.0};
    for (int k = 0; k < 3; ++k) {
        if (d[k] == 0.0) continue;
        for (double face : {-half[k], half[k]}) {
            const double t = (face - a[k]) / d[k];
            if (t > 0.0 && t < 1.0) cuts.push_back(t);
        }
    }
    std::sort(cuts.begin(), cuts.end());

    auto dist2_at = [&](double t) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double p = a[k] + t * d[k];
            const double e = p - std::clamp(p, -half[k], half[k]);
            s += e * e;
        }
        return s;
    };

    double best = std::min(dist2_at(0.0), dist2_at(1.0));
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double t0 = cuts[i], t1 = cuts[i + 1];
        if (t1 <= t0) continue;
        const double mid = 0.5 * (t0 + t1);
        // Within the piece each axis is either inside its slab or outside on a fixed side.
        double num = 0.0, den = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double p = a[k] + mid * d[k];
            double bound;
            if (p > half[k]) bound = half[k];
            else if (p < -half[k]) bound = -half[k];
            else continue;
            num += (a[k] - bound) * d[k];
            den += d[k] * d[k];
        }
        const double t = den > 0.0 ? std::clamp(-num / den, t0, t1) : t0;
        best = std::min({best, dist2_at(t), dist2_at(t0), dist2_at(t1)});
    }
    return std::sqrt(best);
}

/// Distance between a capsule surface and an oriented box; zero or negative means contact.
inline double capsule_box_distance(const Capsule& c, const OrientedBox& box) noexcept
{
    const Transform inv = box.pose.inverse();
    return segment_aabb_distance(inv.apply(c.a), inv.apply(c.b), box.half_extents) - c.radius;
}

inline bool capsule_intersects_box(const Capsule& c, const OrientedBox& box) noexcept
{
    return capsule_box_distance(c, box) <= 0.0;
}

/// One Collision event per vehicle the first time any walker capsule touches it.
/// `reported` carries the vehicles already reported in this scenario run.
inline std::vector<ScenarioEvent> check_collision(const WalkerState& walker, std::span<const VehicleState> vehicles,
                                                  std::set<ActorId>& reported)
{
    std::vector<ScenarioEvent> events;
    for (const auto& v : vehicles) {
        if (reported.contains(v.id)) continue;
        const OrientedBox box = v.box();
        const bool hit = std::any_of(walker.capsules.begin(), walker.capsules.end(),
                                     [&](const Capsule& c) { return capsule_intersects_box(c, box); });
        if (hit) {
            reported.insert(v.id);
            events.push_back({EventKind::Collision, v.id, ScenarioPhase::Waiting});
        }
    }
    return events;
}

} // namespace pediloop
