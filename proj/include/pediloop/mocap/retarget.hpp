#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <map>
#include <string>
#include <vector>

#include "pediloop/core/error.hpp"
#include "pediloop/core/math.hpp"
#include "pediloop/core/shapes.hpp"
#include "pediloop/mocap/bvh.hpp"
#include "pediloop/mocap/euler.hpp"
#include "pediloop/mocap/resample.hpp"

namespace pediloop::mocap {

/// Signed permutation taking clip axes to world axes: world[i] = sign[i] * clip[source[i]].
struct AxisMap {
    std::array<int, 3> source{0, 1, 2};
    std::array<double, 3> sign{1.0, 1.0, 1.0};
    bool mirrored = false;  // must be set for improper (reflecting) maps

    /// BVH convention (Y up, Z forward, X to the character's left) into X forward, Y left, Z up.
    static AxisMap y_up_to_z_up() noexcept { return {{2, 0, 1}, {1.0, 1.0, 1.0}, false}; }
    static AxisMap identity() noexcept { return {}; }

    Mat3 matrix() const noexcept
    {
        Mat3 m;
        m.m = {};
        for (int i = 0; i < 3; ++i) m(i, source[i]) = sign[i];
        return m;
    }

    void validate() const
    {
        std::array<bool, 3> used{};
        for (int i = 0; i < 3; ++i) {
            if (source[i] < 0 || source[i] > 2 || used[source[i]]) throw ConfigError("axis map is not a permutation");
            used[source[i]] = true;
            if (sign[i] != 1.0 && sign[i] != -1.0) throw ConfigError("axis map signs must be +1 or -1");
        }
        const double det = matrix().determinant();
        if (det < 0.0 && !mirrored) throw ConfigError("axis map reflects handedness; set mirrored = true to allow it");
        if (det > 0.0 && mirrored) throw ConfigError("axis map is a proper rotation but is flagged mirrored");
    }

    Vec3 apply(const Vec3& v) const noexcept { return {sign[0] * v[source[0]], sign[1] * v[source[1]], sign[2] * v[source[2]]}; }

    Vec3 apply_inverse(const Vec3& w) const noexcept
    {
        Vec3 v;
        for (int i = 0; i < 3; ++i) v[source[i]] = sign[i] * w[i];
        return v;
    }

    /// Conjugate a clip-space rotation into world axes.
    Quat apply(const Quat& q) const noexcept
    {
        const Mat3 m = matrix();
        return Quat::from_matrix(m * q.to_matrix() * m.transposed());
    }
};

/// Parse "z,x,-y" style maps: entry i names the clip axis feeding world axis i.
inline AxisMap parse_axis_map(const std::string& spec, bool mirrored)
{
    AxisMap m;
    m.mirrored = mirrored;
    std::size_t start = 0;
    for (int i = 0; i < 3; ++i) {
        const std::size_t end = spec.find(',', start);
        std::string tok = spec.substr(start, end == std::string::npos ? std::string::npos : end - start);
        tok.erase(std::remove_if(tok.begin(), tok.end(), [](unsigned char c) { return std::isspace(c); }), tok.end());
        double sign = 1.0;
        if (!tok.empty() && (tok[0] == '-' || tok[0] == '+')) {
            sign = tok[0] == '-' ? -1.0 : 1.0;
            tok.erase(0, 1);
        }
        if (tok.size() != 1 || tok[0] < 'x' || tok[0] > 'z') throw ConfigError("invalid axis map '" + spec + "'");
        m.source[i] = tok[0] - 'x';
        m.sign[i] = sign;
        if (i < 2 && end == std::string::npos) throw ConfigError("axis map needs three entries: '" + spec + "'");
        start = end + 1;
    }
    m.validate();
    return m;
}

struct RetargetConfig {
    double unit_scale = 0.01;  // metres per clip unit (centimetre clips by default)
    AxisMap axis_map = AxisMap::y_up_to_z_up();
    std::map<std::string, std::string> joint_name_map;  // avatar joint -> clip joint

    static RetargetConfig identity_for(const BvhSkeleton& skel, double unit_scale = 0.01,
                                       AxisMap axes = AxisMap::y_up_to_z_up())
    {
        RetargetConfig cfg{unit_scale, axes, {}};
        for (const auto& j : skel.joints) cfg.joint_name_map[j.name] = j.name;
        return cfg;
    }
};

namespace detail {

inline std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

inline bool contains_any(const std::string& s, std::initializer_list<const char*> keys)
{
    return std::any_of(keys.begin(), keys.end(), [&](const char* k) { return s.find(k) != std::string::npos; });
}

} // namespace detail

/// Bone radius table: head segment 0.12 m, trunk and neck 0.18 m, limbs 0.07 m.
inline double bone_radius(const std::string& proximal, const std::string& distal)
{
    const auto p = detail::lower(proximal), d = detail::lower(distal);
    if (detail::contains_any(p, {"head"})) return 0.12;
    const bool trunk = detail::contains_any(p, {"hip", "pelvis", "spine", "chest", "neck", "torso"});
    const bool limb = detail::contains_any(d, {"arm", "leg", "shoulder", "clavicle", "thigh", "hand", "foot"});
    return trunk && !limb ? 0.18 : 0.07;
}

struct AvatarJoint {
    std::string name;
    int parent = -1;
    Vec3 offset{};  // metres, world axes

    bool operator==(const AvatarJoint&) const = default;
};

struct AvatarBone {
    int joint = 0;      // proximal joint
    int child = -1;     // distal joint, or -1 for an end site
    Vec3 end_offset{};  // end-site offset in the proximal joint frame
    double radius = 0.07;

    bool operator==(const AvatarBone&) const = default;
};

/// Target skeleton in world units and axes; bind pose has identity local rotations.
struct AvatarSkeleton {
    std::vector<AvatarJoint> joints;
    std::vector<AvatarBone> bones;

    int find(const std::string& name) const noexcept
    {
        for (std::size_t i = 0; i < joints.size(); ++i)
            if (joints[i].name == name) return static_cast<int>(i);
        return -1;
    }

    std::vector<Transform> bind_pose() const
    {
        std::vector<Transform> locals(joints.size());
        for (std::size_t i = 0; i < joints.size(); ++i) locals[i].position = joints[i].offset;
        return locals;
    }

    bool operator==(const AvatarSkeleton&) const = default;

    bool same_layout(const AvatarSkeleton& o) const noexcept
    {
        if (joints.size() != o.joints.size()) return false;
        for (std::size_t i = 0; i < joints.size(); ++i)
            if (joints[i].name != o.joints[i].name || joints[i].parent != o.joints[i].parent) return false;
        return true;
    }
};

/// Avatar from a clip skeleton. The root sits at the rest frame's hip height above the ground.
inline AvatarSkeleton make_avatar(const BvhClip& clip, double unit_scale, const AxisMap& axes, std::size_t rest_frame = 0)
{
    const auto& skel = clip.skeleton;
    AvatarSkeleton av;
    for (const auto& j : skel.joints) av.joints.push_back({j.name, j.parent, axes.apply(j.offset) * unit_scale});
    if (!av.joints.empty()) {
        Vec3 root = skel.joints[0].offset;
        if (rest_frame < clip.frames.size()) {
            const auto& row = clip.frames[rest_frame];
            for (std::size_t c = 0; c < skel.joints[0].channels.size(); ++c) {
                const auto ch = skel.joints[0].channels[c];
                if (!is_rotation(ch)) root[channel_axis(ch)] += row[skel.joints[0].channel_offset + c];
            }
        }
        const Vec3 w = axes.apply(root) * unit_scale;
        av.joints[0].offset = {0.0, 0.0, w.z};
    }
    for (std::size_t i = 0; i < skel.joints.size(); ++i) {
        const auto& j = skel.joints[i];
        if (j.parent >= 0)
            av.bones.push_back({j.parent, static_cast<int>(i), {}, bone_radius(skel.joints[j.parent].name, j.name)});
        if (j.end_site)
            av.bones.push_back({static_cast<int>(i), -1, axes.apply(*j.end_site) * unit_scale,
                                bone_radius(j.name, j.name + "_end")});
    }
    return av;
}

struct AvatarPose {
    std::vector<Transform> world;  // per joint
    std::vector<Capsule> capsules;  // per bone
};

/// Chain local transforms (parents precede children) under a root placement.
inline std::vector<Transform> chain_locals(const std::vector<int>& parents, const Transform& root,
                                           const std::vector<Transform>& locals)
{
    std::vector<Transform> world(locals.size());
    for (std::size_t i = 0; i < locals.size(); ++i)
        world[i] = (parents[i] < 0 ? root : world[parents[i]]) * locals[i];
    return world;
}

inline AvatarPose pose_avatar(const AvatarSkeleton& av, const Transform& root, const std::vector<Transform>& locals)
{
    if (locals.size() != av.joints.size())
        throw PoseFormatError("pose has " + std::to_string(locals.size()) + " joints, avatar has " +
                              std::to_string(av.joints.size()));
    std::vector<int> parents;
    for (const auto& j : av.joints) parents.push_back(j.parent);
    AvatarPose pose;
    pose.world = chain_locals(parents, root, locals);
    pose.capsules.reserve(av.bones.size());
    for (const auto& b : av.bones) {
        const Vec3 a = pose.world[b.joint].position;
        const Vec3 e = b.child >= 0 ? pose.world[b.child].position : pose.world[b.joint].apply(b.end_offset);
        pose.capsules.push_back({a, e, b.radius});
    }
    return pose;
}

/// Local joint transforms of one clip frame, scaled and expressed in world axes.
inline std::vector<Transform> clip_locals(const BvhClip& clip, std::size_t frame, const RetargetConfig& cfg)
{
    if (frame >= clip.frames.size())
        throw DomainError("frame " + std::to_string(frame) + " out of range (" + std::to_string(clip.frames.size()) + ")");
    const auto& row = clip.frames[frame];
    std::vector<Transform> locals;
    locals.reserve(clip.skeleton.joints.size());
    for (const auto& j : clip.skeleton.joints) {
        Vec3 pos = j.offset;
        std::array<double, 3> rot{};
        int k = 0;
        for (std::size_t c = 0; c < j.channels.size(); ++c) {
            const double v = row[j.channel_offset + c];
            if (is_rotation(j.channels[c])) rot[k++] = v;
            else pos[channel_axis(j.channels[c])] += v;
        }
        locals.push_back({cfg.axis_map.apply(pos) * cfg.unit_scale,
                          cfg.axis_map.apply(euler_to_quat(j.rotation_order(), rot))});
    }
    return locals;
}

/// Standard forward kinematics of a clip frame into world space, with per-bone capsules.
inline AvatarPose forward_kinematics(const BvhClip& clip, std::size_t frame, const RetargetConfig& cfg)
{
    const auto locals = clip_locals(clip, frame, cfg);
    std::vector<int> parents;
    for (const auto& j : clip.skeleton.joints) parents.push_back(j.parent);
    AvatarPose pose;
    pose.world = chain_locals(parents, Transform{}, locals);
    for (std::size_t i = 0; i < clip.skeleton.joints.size(); ++i) {
        const auto& j = clip.skeleton.joints[i];
        if (j.parent >= 0)
            pose.capsules.push_back({pose.world[j.parent].position, pose.world[i].position,
                                     bone_radius(clip.skeleton.joints[j.parent].name, j.name)});
        if (j.end_site)
            pose.capsules.push_back({pose.world[i].position,
                                     pose.world[i].apply(cfg.axis_map.apply(*j.end_site) * cfg.unit_scale),
                                     bone_radius(j.name, j.name + "_end")});
    }
    return pose;
}

struct TrackFrame {
    std::vector<Transform> joints;  // avatar-local transforms; joint 0 carries the clip's hip position

    bool operator==(const TrackFrame&) const = default;
};

/// Tick-indexed avatar articulation track.
struct MotionTrack {
    std::chrono::milliseconds dt{0};
    AvatarSkeleton avatar;
    std::vector<TrackFrame> frames;

    bool operator==(const MotionTrack&) const = default;
};

/// Transfer each mapped clip joint's world rotation onto the avatar, one track
/// frame per clip frame. dt labels the track; the clip is not resampled.
inline MotionTrack retarget_clip(const BvhClip& clip, const RetargetConfig& cfg, const AvatarSkeleton& avatar,
                                 std::chrono::milliseconds dt)
{
    std::vector<std::string> missing;
    std::vector<int> source(avatar.joints.size(), -1);
    for (std::size_t i = 0; i < avatar.joints.size(); ++i) {
        const auto it = cfg.joint_name_map.find(avatar.joints[i].name);
        if (it == cfg.joint_name_map.end() || (source[i] = clip.skeleton.find(it->second)) < 0)
            missing.push_back(avatar.joints[i].name);
    }
    if (!missing.empty()) {
        std::string names;
        for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
        throw RetargetError("avatar joints without a clip source: " + names);
    }

    const BvhClip& sampled = clip;
    MotionTrack track;
    track.dt = dt;
    track.avatar = avatar;
    track.frames.reserve(sampled.frames.size());
    for (std::size_t f = 0; f < sampled.frames.size(); ++f) {
        const auto pose = forward_kinematics(sampled, f, cfg);
        TrackFrame tf;
        tf.joints.resize(avatar.joints.size());
        for (std::size_t i = 0; i < avatar.joints.size(); ++i) {
            const Quat world_rot = pose.world[source[i]].rotation;
            const int p = avatar.joints[i].parent;
            const Quat parent_rot = p < 0 ? Quat{} : pose.world[source[p]].rotation;
            tf.joints[i].rotation = (parent_rot.conjugate() * world_rot).normalized();
            tf.joints[i].position = p < 0 ? pose.world[source[i]].position : avatar.joints[i].offset;
        }
        track.frames.push_back(std::move(tf));
    }
    return track;
}

/// Resample to the tick step, then retarget.
inline MotionTrack retarget_to_avatar(const BvhClip& clip, const RetargetConfig& cfg, const AvatarSkeleton& avatar,
                                      std::chrono::milliseconds dt)
{
    return retarget_clip(resample_clip(clip, static_cast<double>(dt.count()) / 1000.0), cfg, avatar, dt);
}

} // namespace pediloop::mocap
