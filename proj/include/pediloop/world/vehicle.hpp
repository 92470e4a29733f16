#pragma once

#include <algorithm>
#include <cmath>

#include "pediloop/core/error.hpp"
#include "pediloop/map/map_model.hpp"
#include "pediloop/world/types.hpp"

namespace pediloop {

struct VehicleControl {
    double throttle = 0.0;
    double brake = 0.0;
    double steer = 0.0;  // [-1, 1], positive turns left

    bool operator==(const VehicleControl&) const = default;
};

/// Net longitudinal acceleration for the given pedal positions.
inline double net_acceleration(const VehicleModel& m, double throttle, double brake) noexcept
{
    return throttle * m.a_max - brake * m.b_max - m.c_roll;
}

/// Clamp and store a control command. Throttle is capped so that the next
/// tick cannot take the vehicle past its speed limit.
inline VehicleState apply_vehicle_control(VehicleState v, const VehicleControl& c, const VehicleModel& m, double dt)
{
    if (std::isnan(c.throttle) || std::isnan(c.brake) || std::isnan(c.steer))
        throw ControlError("vehicle control contains NaN");
    v.throttle = std::clamp(c.throttle, 0.0, 1.0);
    v.brake = std::clamp(c.brake, 0.0, 1.0);
    v.steer = std::clamp(c.steer, -1.0, 1.0);
    if (dt > 0.0 && v.throttle > 0.0) {
        const double headroom = std::max(0.0, v.behavior.speed_limit - v.speed);
        const double cap = (headroom / dt + m.c_roll + v.brake * m.b_max) / m.a_max;
        v.throttle = std::min(v.throttle, std::clamp(cap, 0.0, 1.0));
    }
    return v;
}

/// Advance one step. Speed follows the point-mass model and never goes
/// negative; pose follows a kinematic bicycle integrated exactly along the arc.
inline VehicleState integrate_vehicle(VehicleState v, const VehicleModel& m, double dt)
{
    const double a = net_acceleration(m, v.throttle, v.brake);
    const double v0 = v.speed;
    double v1 = v0 + a * dt;
    double travel;
    if (v1 <= 0.0) {
        v1 = 0.0;
        travel = a < 0.0 ? v0 * v0 / (-2.0 * a) : 0.0;
        travel = std::min(travel, v0 * dt);
    } else {
        if (a > 0.0 && v1 > v.behavior.speed_limit) v1 = std::max(v0, v.behavior.speed_limit);
        travel = 0.5 * (v0 + v1) * dt;
    }
    v.speed = v1;

    const double yaw = v.transform.rotation.yaw();
    const double curvature = std::tan(v.steer * deg_to_rad(m.max_steer_deg)) / m.wheelbase;
    const double dyaw = travel * curvature;
    Vec3& p = v.transform.position;
    if (std::abs(dyaw) > 1e-12) {
        const double r = 1.0 / curvature;
        p.x += r * (std::sin(yaw + dyaw) - std::sin(yaw));
        p.y += r * (std::cos(yaw) - std::cos(yaw + dyaw));
        v.transform.rotation = Quat::from_yaw(wrap_angle(yaw + dyaw));
    } else {
        p.x += travel * std::cos(yaw);
        p.y += travel * std::sin(yaw);
    }
    return v;
}

/// Pedal positions that track a target speed with a proportional law.
inline VehicleControl speed_control(const VehicleModel& m, double speed, double target, double gain = 1.0) noexcept
{
    const double desired = std::clamp(gain * (target - speed), -(m.b_max + m.c_roll), m.a_max - m.c_roll);
    const double drive = desired + m.c_roll;
    VehicleControl c;
    if (drive >= 0.0) c.throttle = drive / m.a_max;
    else c.brake = -drive / m.b_max;
    return c;
}

/// Pure-pursuit steering towards a point on the lane centre line ahead.
inline double pursuit_steer(const VehicleState& v, const VehicleModel& m, const map::Road& road, double lane_t,
                            double lookahead)
{
    const Vec3& p = v.transform.position;
    const auto rc = map::project_to_road(road, {p.x, p.y});
    const double s = std::min(rc.s + lookahead, road.length);
    const Vec2 target = map::road_to_world(road, {s, lane_t});
    const double yaw = v.transform.rotation.yaw();
    const double dx = target.x - p.x, dy = target.y - p.y;
    const double ly = -std::sin(yaw) * dx + std::cos(yaw) * dy;
    const double d2 = dx * dx + dy * dy;
    if (d2 < 1e-12) return 0.0;
    const double delta = std::atan(2.0 * m.wheelbase * ly / d2);
    return std::clamp(delta / deg_to_rad(m.max_steer_deg), -1.0, 1.0);
}

} // namespace pediloop
