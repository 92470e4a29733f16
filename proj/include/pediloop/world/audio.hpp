#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "pediloop/world/types.hpp"

namespace pediloop {

inline constexpr double kAudioReferenceDistance = 10.0;  // m

/// Engine gain rises linearly with throttle from an idle floor.
inline double engine_gain(double throttle) noexcept { return 0.2 + 0.8 * std::clamp(throttle, 0.0, 1.0); }

inline AudioLevel audio_for(const Transform& listener, const VehicleState& v) noexcept
{
    const Vec3 rel = v.transform.position - listener.position;
    const double d = norm(rel);
    const double ratio = d / kAudioReferenceDistance;
    AudioLevel a;
    a.actor = v.id;
    a.level = std::clamp(engine_gain(v.throttle) / (1.0 + ratio * ratio), 0.0, 1.0);
    // Pan by the source bearing in the listener frame (local +Y is left).
    const Vec3 local = listener.rotation.conjugate().rotate(rel);
    const double horizontal = std::hypot(local.x, local.y);
    a.pan = horizontal > 0.0 ? std::clamp(-local.y / horizontal, -1.0, 1.0) : 0.0;
    return a;
}

inline std::vector<AudioLevel> compute_audio_levels(const Transform& listener, std::span<const VehicleState> vehicles)
{
    std::vector<AudioLevel> out;
    out.reserve(vehicles.size());
    for (const auto& v : vehicles) out.push_back(audio_for(listener, v));
    return out;
}

} // namespace pediloop
