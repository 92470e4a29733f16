#pragma once

#include <cmath>
#include <string>

#include "pediloop/core/error.hpp"
#include "pediloop/map/map_model.hpp"
#include "pediloop/world/types.hpp"

namespace pediloop {

/// Distance to the crosswalk edge at which a yielding vehicle starts braking.
inline double yield_trigger_distance(const ScenarioConfig& c, double speed) noexcept
{
    return speed * speed / (2.0 * c.decel) + c.stop_margin;
}

/// Brake pedal that produces the configured deceleration, rolling resistance included.
inline double yield_brake(const ScenarioConfig& c, const VehicleModel& m) noexcept
{
    return (c.decel - m.c_roll) / m.b_max;
}

inline void validate_scenario(const ScenarioConfig& c, const VehicleModel& m, const BehaviorFlags& b)
{
    auto finite_nonneg = [](double v, const char* key) {
        if (!std::isfinite(v) || v < 0.0) throw ConfigError(std::string("scenario ") + key + " must be finite and >= 0");
    };
    finite_nonneg(c.vehicle_spawn_s, "vehicle_spawn_s");
    finite_nonneg(c.target_speed, "target_speed");
    finite_nonneg(c.stop_margin, "stop_margin");
    if (c.target_speed > b.speed_limit)
        throw ConfigError("scenario target_speed " + std::to_string(c.target_speed) + " exceeds speed limit " +
                          std::to_string(b.speed_limit));
    if (c.yield_policy == YieldPolicy::Yield && !(c.decel > m.c_roll && c.decel <= m.b_max + m.c_roll))
        throw ConfigError("scenario decel must lie in (" + std::to_string(m.c_roll) + ", " +
                          std::to_string(m.b_max + m.c_roll) + "] m/s^2");
    if (c.lane == 0) throw ConfigError("scenario lane must be non-zero");
}

inline void validate_vehicle_model(const VehicleModel& m)
{
    if (!(m.a_max > 0.0 && m.b_max > 0.0 && m.c_roll >= 0.0 && m.wheelbase > 0.0))
        throw ConfigError("vehicle model parameters must be positive");
    if (!(m.max_steer_deg > 0.0 && m.max_steer_deg < 90.0)) throw ConfigError("vehicle max_steer_deg must be in (0, 90)");
    if (!(m.dimensions.x > 0.0 && m.dimensions.y > 0.0 && m.dimensions.z > 0.0))
        throw ConfigError("vehicle dimensions must be positive");
}

/// Side of the road centre line a point is on: +1 left, -1 right, 0 on it.
inline int road_side(const map::Road& road, Vec2 p)
{
    const double t = map::project_to_road(road, p).t;
    return (t > 0.0) - (t < 0.0);
}

} // namespace pediloop
