#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "pediloop/core/error.hpp"
#include "pediloop/mocap/retarget.hpp"
#include "pediloop/world/types.hpp"

namespace pediloop {

struct Rect2 {
    Vec2 min{};
    Vec2 max{};

    bool operator==(const Rect2&) const = default;
};

/// Rectangle in the world plane: corner origin, edges along yaw and yaw + 90 deg.
struct OrientedRect {
    Vec2 origin{};
    double yaw = 0.0;
    Vec2 size{};

    bool operator==(const OrientedRect&) const = default;

    Vec2 at(double u, double v) const noexcept
    {
        const double c = std::cos(yaw), s = std::sin(yaw);
        const double lx = u * size.x, ly = v * size.y;
        return {origin.x + c * lx - s * ly, origin.y + s * lx + c * ly};
    }
};

/// Affine link between the tracked room and its footprint in the world.
struct PlayArea {
    Rect2 tracking{};
    OrientedRect world{};

    bool operator==(const PlayArea&) const = default;

    void validate() const
    {
        if (!(tracking.max.x > tracking.min.x && tracking.max.y > tracking.min.y))
            throw ConfigError("play area tracking rectangle must have positive extent");
        if (!(world.size.x > 0.0 && world.size.y > 0.0))
            throw ConfigError("play area world rectangle must have positive extent");
    }

    struct Mapped {
        Vec2 point;
        bool clamped = false;
    };

    /// World position of a tracking-space ground point, clamped to the world rectangle.
    Mapped to_world(Vec2 p) const noexcept
    {
        double u = (p.x - tracking.min.x) / (tracking.max.x - tracking.min.x);
        double v = (p.y - tracking.min.y) / (tracking.max.y - tracking.min.y);
        const bool clamped = u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0;
        u = std::clamp(u, 0.0, 1.0);
        v = std::clamp(v, 0.0, 1.0);
        return {world.at(u, v), clamped};
    }

    /// Clamp a world position into the world rectangle.
    Mapped clamp_world(Vec2 p) const noexcept
    {
        const double c = std::cos(world.yaw), s = std::sin(world.yaw);
        const Vec2 d = p - world.origin;
        const double u = (c * d.x + s * d.y) / world.size.x;
        const double v = (-s * d.x + c * d.y) / world.size.y;
        if (u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0) return {p, false};
        return {world.at(std::clamp(u, 0.0, 1.0), std::clamp(v, 0.0, 1.0)), true};
    }
};

struct Deadzone {
    double translation = 0.02;  // m
    double rotation_deg = 2.0;

    bool operator==(const Deadzone&) const = default;
};

inline constexpr double kMaxWalkSpeed = 3.0;         // m/s
inline constexpr double kMaxTurnRate = 2.0 * kPi;    // rad/s

struct WalkerUpdate {
    WalkerState walker;
    std::optional<Transform> last_head;  // head pose the deadzone compares against next time
    bool applied = false;
    std::vector<ScenarioEvent> events;
};

/// Recompute world capsules from the root and local joints.
inline void refresh_capsules(WalkerState& w, const mocap::AvatarSkeleton& avatar)
{
    w.capsules = mocap::pose_avatar(avatar, w.root, w.joints).capsules;
}

inline WalkerState spawn_walker(const mocap::AvatarSkeleton& avatar, Vec2 position, double yaw)
{
    WalkerState w;
    w.id = kWalkerId;
    w.root = {{position.x, position.y, 0.0}, Quat::from_yaw(yaw)};
    w.joints = avatar.bind_pose();
    refresh_capsules(w, avatar);
    return w;
}

/// Head-driven pose update. Head motion under the deadzone leaves the root
/// untouched; body joint rotations, when present, always overwrite the locals.
inline WalkerUpdate update_walker_from_input(const WalkerState& w, const PoseInput& in, const PlayArea& area,
                                             const mocap::AvatarSkeleton& avatar,
                                             const std::optional<Transform>& last_head, const Deadzone& dz = {})
{
    if (in.avatar != w.id)
        throw SessionError("pose addressed to unknown avatar " + std::to_string(in.avatar.value));
    auto check_quat = [](const Quat& q, const char* what) {
        const double n = q.norm();
        if (!std::isfinite(n) || n < 1e-6) throw PoseFormatError(std::string(what) + " rotation is not a valid quaternion");
    };
    check_quat(in.head.rotation, "head");
    for (const auto& h : in.hands)
        if (h) check_quat(h->rotation, "hand");

    WalkerUpdate up;
    up.walker = w;
    up.last_head = last_head;

    if (in.body_joints) {
        if (in.body_joints->size() != w.joints.size())
            throw PoseFormatError("pose carries " + std::to_string(in.body_joints->size()) + " joint rotations, avatar has " +
                                  std::to_string(w.joints.size()));
        for (std::size_t i = 0; i < w.joints.size(); ++i) {
            check_quat((*in.body_joints)[i], "joint");
            up.walker.joints[i].rotation = (*in.body_joints)[i].normalized();
        }
    }

    const Quat head_rot = in.head.rotation.normalized();
    bool move = !last_head.has_value();
    if (!move) {
        const double dt = norm(in.head.position - last_head->position);
        const double dr = angle_between(head_rot, last_head->rotation);
        move = dt >= dz.translation || dr >= deg_to_rad(dz.rotation_deg);
    }
    if (move) {
        const auto mapped = area.to_world(in.head.position.xy());
        up.walker.root.position = {mapped.point.x, mapped.point.y, 0.0};
        up.walker.root.rotation = Quat::from_yaw(wrap_angle(area.world.yaw + head_rot.yaw()));
        up.last_head = Transform{in.head.position, head_rot};
        up.applied = true;
        if (mapped.clamped) up.events.push_back({EventKind::OutOfPlayArea, w.id, ScenarioPhase::Waiting});
    }
    if (move || in.body_joints) refresh_capsules(up.walker, avatar);
    return up;
}

/// Keyboard locomotion: integrate the walk velocity for one step, in the walker's heading frame.
inline WalkerUpdate apply_walk(const WalkerState& w, const WalkCommand& cmd, const PlayArea& area,
                               const mocap::AvatarSkeleton& avatar, double dt)
{
    if (!std::isfinite(cmd.forward) || !std::isfinite(cmd.strafe) || !std::isfinite(cmd.turn))
        throw PoseFormatError("walk command must be finite");
    WalkerUpdate up;
    up.walker = w;
    const double f = std::clamp(cmd.forward, -kMaxWalkSpeed, kMaxWalkSpeed);
    const double s = std::clamp(cmd.strafe, -kMaxWalkSpeed, kMaxWalkSpeed);
    const double r = std::clamp(cmd.turn, -kMaxTurnRate, kMaxTurnRate);
    if (f == 0.0 && s == 0.0 && r == 0.0) return up;

    const double yaw = wrap_angle(w.root.rotation.yaw() + r * dt);
    const double c = std::cos(yaw), sn = std::sin(yaw);
    const Vec2 p{w.root.position.x + (f * c + s * sn) * dt, w.root.position.y + (f * sn - s * c) * dt};
    const auto clamped = area.clamp_world(p);
    up.walker.root.position = {clamped.point.x, clamped.point.y, 0.0};
    up.walker.root.rotation = Quat::from_yaw(yaw);
    up.applied = true;
    if (clamped.clamped) up.events.push_back({EventKind::OutOfPlayArea, w.id, ScenarioPhase::Waiting});
    refresh_capsules(up.walker, avatar);
    return up;
}

/// World transform of the avatar's head joint, or a standing-height fallback.
inline Transform head_world(const WalkerState& w, const mocap::AvatarSkeleton& avatar)
{
    const int head = avatar.find("Head");
    if (head < 0 || w.joints.size() != avatar.joints.size())
        return {w.root.apply({0.0, 0.0, 1.7}), w.root.rotation};
    std::vector<int> parents;
    for (const auto& j : avatar.joints) parents.push_back(j.parent);
    return mocap::chain_locals(parents, w.root, w.joints)[static_cast<std::size_t>(head)];
}

} // namespace pediloop
