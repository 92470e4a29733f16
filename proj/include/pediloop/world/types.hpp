#pragma once

#include <array>
#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pediloop/core/math.hpp"
#include "pediloop/core/shapes.hpp"

namespace pediloop {

using Milliseconds = std::chrono::milliseconds;

inline double to_seconds(Milliseconds dt) noexcept { return static_cast<double>(dt.count()) / 1000.0; }

struct ActorId {
    std::uint32_t value = 0;
    auto operator<=>(const ActorId&) const = default;
};

inline constexpr ActorId kVehicleId{1};
inline constexpr ActorId kWalkerId{2};

struct BehaviorFlags {
    double speed_limit = 13.89;  // m/s (50 km/h)
    bool ignore_pedestrians = false;
    bool ignore_traffic_lights = true;

    bool operator==(const BehaviorFlags&) const = default;
};

enum class EhmiColor : std::uint8_t { Off = 0, Cyan = 1 };

struct EhmiState {
    bool activated = false;
    EhmiColor color = EhmiColor::Off;

    bool operator==(const EhmiState&) const = default;
};

struct VehicleState {
    ActorId id{};
    Transform transform{};  // ground-level centre of the vehicle footprint
    double speed = 0.0;
    double throttle = 0.0;
    double brake = 0.0;
    double steer = 0.0;
    EhmiState ehmi{};
    BehaviorFlags behavior{};
    Vec3 dimensions{4.5, 1.8, 1.5};  // length, width, height

    bool operator==(const VehicleState&) const = default;

    OrientedBox box() const noexcept
    {
        return {{transform.apply({0.0, 0.0, 0.5 * dimensions.z}), transform.rotation}, dimensions * 0.5};
    }
};

struct WalkerState {
    ActorId id{};
    Transform root{};
    std::vector<Transform> joints;  // avatar-local joint transforms
    std::vector<Capsule> capsules;  // world-space bone capsules

    bool operator==(const WalkerState&) const = default;
};

/// Tracking-space head and hand poses. Tracking space is right-handed and Z-up.
struct PoseInput {
    ActorId avatar{};
    Transform head{};
    std::array<std::optional<Transform>, 2> hands{};
    std::optional<std::vector<Quat>> body_joints;  // local rotations, one per avatar joint
    double timestamp = 0.0;

    bool operator==(const PoseInput&) const = default;
};

/// Keyboard-style locomotion intent. Positive strafe moves to the walker's right.
struct WalkCommand {
    double forward = 0.0;  // m/s
    double strafe = 0.0;   // m/s
    double turn = 0.0;     // rad/s, counter-clockwise positive

    bool operator==(const WalkCommand&) const = default;
};

enum class ScenarioPhase : std::uint8_t { Waiting = 0, VehicleApproaching = 1, PedestrianCrossing = 2, Done = 3 };

inline std::string_view to_string(ScenarioPhase p) noexcept
{
    switch (p) {
    case ScenarioPhase::Waiting: return "waiting";
    case ScenarioPhase::VehicleApproaching: return "vehicle_approaching";
    case ScenarioPhase::PedestrianCrossing: return "pedestrian_crossing";
    case ScenarioPhase::Done: return "done";
    }
    return "unknown";
}

enum class EventKind : std::uint8_t {
    ScenarioStarted = 0,
    ScenarioReset = 1,
    PhaseChanged = 2,
    VehicleYielding = 3,
    VehicleResumed = 4,
    EhmiActivated = 5,
    EhmiDeactivated = 6,
    OutOfPlayArea = 7,
    Collision = 8,
    RouteEnd = 9,
};

inline constexpr std::array<std::string_view, 10> kEventKindNames{
    "scenario_started", "scenario_reset",   "phase_changed",   "vehicle_yielding", "vehicle_resumed",
    "ehmi_activated",   "ehmi_deactivated", "out_of_play_area", "collision",        "route_end"};

inline std::string_view to_string(EventKind k) noexcept { return kEventKindNames[static_cast<std::size_t>(k)]; }

struct ScenarioEvent {
    EventKind kind{};
    ActorId actor{};
    ScenarioPhase phase = ScenarioPhase::Waiting;  // meaningful for PhaseChanged

    bool operator==(const ScenarioEvent&) const = default;
};

struct AudioLevel {
    ActorId actor{};
    double level = 0.0;  // [0, 1]
    double pan = 0.0;    // [-1, 1], +1 fully right

    bool operator==(const AudioLevel&) const = default;
};

inline constexpr double kAmbientLevel = 0.1;

struct WorldSnapshot {
    std::uint64_t tick = 0;
    std::int64_t sim_time_ms = 0;  // exactly tick * dt_ms
    std::vector<VehicleState> vehicles;
    WalkerState walker;
    ScenarioPhase phase = ScenarioPhase::Waiting;
    std::vector<AudioLevel> audio;
    double ambient_level = kAmbientLevel;
    std::vector<ScenarioEvent> events;

    double sim_time() const noexcept { return static_cast<double>(sim_time_ms) / 1000.0; }
    bool operator==(const WorldSnapshot&) const = default;
};

enum class YieldPolicy : std::uint8_t { Ignore = 0, Yield = 1 };

struct ScenarioConfig {
    double vehicle_spawn_s = 5.0;
    double target_speed = 8.33;
    YieldPolicy yield_policy = YieldPolicy::Yield;
    double decel = 6.0;
    bool ehmi_enabled = true;
    double stop_margin = 0.5;
    int lane = -1;

    bool operator==(const ScenarioConfig&) const = default;
};

/// Field-wise overrides carried by a scenario start/reset command.
struct ScenarioOverrides {
    std::optional<double> vehicle_spawn_s;
    std::optional<double> target_speed;
    std::optional<YieldPolicy> yield_policy;
    std::optional<double> decel;
    std::optional<bool> ehmi_enabled;
    std::optional<double> stop_margin;

    bool operator==(const ScenarioOverrides&) const = default;

    ScenarioConfig applied_to(ScenarioConfig c) const
    {
        if (vehicle_spawn_s) c.vehicle_spawn_s = *vehicle_spawn_s;
        if (target_speed) c.target_speed = *target_speed;
        if (yield_policy) c.yield_policy = *yield_policy;
        if (decel) c.decel = *decel;
        if (ehmi_enabled) c.ehmi_enabled = *ehmi_enabled;
        if (stop_margin) c.stop_margin = *stop_margin;
        return c;
    }
};

enum class ScenarioCommandKind : std::uint8_t { Start = 0, Reset = 1 };

struct ScenarioCommand {
    ScenarioCommandKind kind = ScenarioCommandKind::Start;
    ScenarioOverrides overrides;

    bool operator==(const ScenarioCommand&) const = default;
};

/// Everything drained from the input queue for one tick.
struct TickInputs {
    std::optional<PoseInput> pose;
    std::optional<WalkCommand> walk;
    std::vector<ScenarioCommand> commands;
};

/// Longitudinal point-mass plus kinematic bicycle parameters.
struct VehicleModel {
    double a_max = 3.5;        // m/s^2 at full throttle
    double b_max = 8.0;        // m/s^2 at full brake
    double c_roll = 0.1;       // m/s^2 rolling resistance
    double wheelbase = 2.7;    // m
    double max_steer_deg = 35.0;
    Vec3 dimensions{4.5, 1.8, 1.5};

    bool operator==(const VehicleModel&) const = default;
};

} // namespace pediloop
