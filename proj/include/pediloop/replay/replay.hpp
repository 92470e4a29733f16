#pragma once

#include <optional>

#include "pediloop/core/error.hpp"
#include "pediloop/replay/recording.hpp"
#include "pediloop/sensors/depth.hpp"
#include "pediloop/sensors/lidar.hpp"

namespace pediloop::replay {

struct SensorSuite {
    std::optional<sensors::LidarConfig> lidar;
    std::optional<sensors::DepthCameraConfig> depth;

    bool empty() const noexcept { return !lidar && !depth; }
};

struct SensorFrames {
    std::optional<sensors::LidarScan> lidar;
    std::optional<sensors::DepthImage> depth;

    bool operator==(const SensorFrames&) const = default;
};

struct ReplayFrame {
    const WorldSnapshot* snapshot = nullptr;  // points into the recording
    std::optional<SensorFrames> sensors;
};

/// The stored snapshot for a tick, verbatim, plus sensor output computed on it.
inline ReplayFrame replay_step(const Recording& rec, std::size_t tick, const SensorSuite* suite = nullptr)
{
    if (tick >= rec.snapshots.size())
        throw DomainError("tick " + std::to_string(tick) + " out of range for a recording of " +
                          std::to_string(rec.snapshots.size()) + " ticks");
    ReplayFrame f;
    f.snapshot = &rec.snapshots[tick];
    if (suite && !suite->empty()) {
        SensorFrames s;
        if (suite->lidar) s.lidar = sensors::lidar_scan(*f.snapshot, *suite->lidar, ExecutionMode::Replay);
        if (suite->depth) s.depth = sensors::depth_render(*f.snapshot, *suite->depth, ExecutionMode::Replay);
        f.sensors = std::move(s);
    }
    return f;
}

} // namespace pediloop::replay
