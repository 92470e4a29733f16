#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "pediloop/core/error.hpp"
#include "pediloop/sensors/geometry.hpp"
#include "pediloop/sensors/mode.hpp"

namespace pediloop::sensors {

struct LidarConfig {
    Transform mount{{0.0, 0.0, 1.9}, {}};     // relative to the carrier vehicle, or world if none
    std::optional<ActorId> carrier = kVehicleId;
    int channels = 32;
    double fov_lo_deg = -15.0;
    double fov_hi_deg = 5.0;
    int points_per_channel = 1024;
    double range_max = 50.0;  // m

    bool operator==(const LidarConfig&) const = default;

    void validate() const
    {
        if (channels < 1) throw ConfigError("lidar channels must be >= 1");
        if (points_per_channel < 1) throw ConfigError("lidar points_per_channel must be >= 1");
        if (!(range_max > 0.0)) throw ConfigError("lidar range_max must be > 0");
        if (!(fov_lo_deg < fov_hi_deg)) throw ConfigError("lidar fov_lo_deg must be below fov_hi_deg");
        if (fov_lo_deg < -90.0 || fov_hi_deg > 90.0) throw ConfigError("lidar vertical field of view must lie in [-90, 90]");
    }

    double elevation_deg(int channel) const noexcept
    {
        if (channels == 1) return fov_lo_deg;
        return fov_lo_deg + channel * (fov_hi_deg - fov_lo_deg) / (channels - 1);
    }

    double azimuth_deg(int k) const noexcept { return k * 360.0 / points_per_channel; }

    /// Unit ray direction in the sensor frame (X forward, Y left, Z up).
    Vec3 direction(int channel, int k) const noexcept
    {
        const double e = deg_to_rad(elevation_deg(channel));
        const double a = deg_to_rad(azimuth_deg(k));
        return {std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e)};
    }
};

struct LidarPoint {
    Vec3 position{};  // sensor frame
    double range = 0.0;
    ActorId label{};

    bool operator==(const LidarPoint&) const = default;
};

struct LidarScan {
    std::uint64_t tick = 0;
    Transform sensor_pose{};  // world
    std::vector<LidarPoint> points;

    bool operator==(const LidarScan&) const = default;
};

/// World pose of a mount, attached to the carrier vehicle when one is configured.
inline Transform sensor_world_pose(const WorldSnapshot& s, const Transform& mount, std::optional<ActorId> carrier)
{
    if (!carrier) return mount;
    for (const auto& v : s.vehicles)
        if (v.id == *carrier) return v.transform * mount;
    throw DomainError("sensor carrier vehicle " + std::to_string(carrier->value) + " is not in the snapshot");
}

/// One full revolution, channel-major. Rays without a hit inside range are dropped.
inline LidarScan lidar_scan(const WorldSnapshot& s, const LidarConfig& cfg, ExecutionMode mode)
{
    require_replay(mode, "lidar_scan");
    cfg.validate();
    LidarScan scan;
    scan.tick = s.tick;
    scan.sensor_pose = sensor_world_pose(s, cfg.mount, cfg.carrier);
    const Scene scene = build_scene(s, cfg.carrier);
    for (int ch = 0; ch < cfg.channels; ++ch) {
        for (int k = 0; k < cfg.points_per_channel; ++k) {
            const Vec3 d = cfg.direction(ch, k);
            const Ray ray{scan.sensor_pose.position, scan.sensor_pose.rotation.rotate(d)};
            const auto hit = cast_ray(scene, ray, cfg.range_max);
            if (!hit) continue;
            scan.points.push_back({d * hit->distance, hit->distance, hit->label});
        }
    }
    return scan;
}

struct Visibility {
    std::size_t count = 0;
    std::optional<std::pair<Vec3, Vec3>> bounds;  // min, max of labelled points (sensor frame)
};

inline Visibility pedestrian_visibility(const LidarScan& scan, ActorId walker = kWalkerId)
{
    Visibility v;
    for (const auto& p : scan.points) {
        if (p.label != walker) continue;
        ++v.count;
        if (!v.bounds) {
            v.bounds = std::pair{p.position, p.position};
            continue;
        }
        auto& [lo, hi] = *v.bounds;
        for (int k = 0; k < 3; ++k) {
            lo[k] = std::min(lo[k], p.position[k]);
            hi[k] = std::max(hi[k], p.position[k]);
        }
    }
    return v;
}

} // namespace pediloop::sensors
