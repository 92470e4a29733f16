#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "pediloop/core/error.hpp"
#include "pediloop/sensors/geometry.hpp"
#include "pediloop/sensors/lidar.hpp"
#include "pediloop/sensors/mode.hpp"

namespace pediloop::sensors {

struct DepthCameraConfig {
    Transform mount{{1.0, 0.0, 1.4}, {}};  // looks along the mount's +X
    std::optional<ActorId> carrier = kVehicleId;
    int width = 128;
    int height = 96;
    double fov_h_deg = 90.0;

    bool operator==(const DepthCameraConfig&) const = default;

    void validate() const
    {
        if (width < 1 || height < 1) throw ConfigError("depth camera resolution must be positive");
        if (!(fov_h_deg > 0.0 && fov_h_deg < 180.0)) throw ConfigError("depth camera fov_h_deg must be in (0, 180)");
    }

    double focal() const noexcept { return 0.5 * width / std::tan(0.5 * deg_to_rad(fov_h_deg)); }

    /// Pinhole ray through the centre of pixel (u, v); v grows downwards.
    Vec3 direction(int u, int v) const noexcept
    {
        const double x = u + 0.5 - 0.5 * width;
        const double y = v + 0.5 - 0.5 * height;
        return normalized(Vec3{focal(), -x, -y});
    }
};

struct DepthImage {
    std::uint64_t tick = 0;
    int width = 0;
    int height = 0;
    double fov_h_deg = 0.0;
    std::vector<double> depth;  // row-major, metres along the ray; +inf for no return

    double at(int u, int v) const { return depth.at(static_cast<std::size_t>(v) * width + u); }
    bool operator==(const DepthImage&) const = default;
};

inline DepthImage depth_render(const WorldSnapshot& s, const DepthCameraConfig& cfg, ExecutionMode mode)
{
    require_replay(mode, "depth_render");
    cfg.validate();
    DepthImage img;
    img.tick = s.tick;
    img.width = cfg.width;
    img.height = cfg.height;
    img.fov_h_deg = cfg.fov_h_deg;
    img.depth.reserve(static_cast<std::size_t>(cfg.width) * cfg.height);
    const Transform pose = sensor_world_pose(s, cfg.mount, cfg.carrier);
    const Scene scene = build_scene(s, cfg.carrier);
    for (int v = 0; v < cfg.height; ++v) {
        for (int u = 0; u < cfg.width; ++u) {
            const Ray ray{pose.position, pose.rotation.rotate(cfg.direction(u, v))};
            const auto hit = cast_ray(scene, ray, std::numeric_limits<double>::infinity());
            img.depth.push_back(hit ? hit->distance : std::numeric_limits<double>::infinity());
        }
    }
    return img;
}

} // namespace pediloop::sensors
