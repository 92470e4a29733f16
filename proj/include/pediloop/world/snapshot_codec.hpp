#pragma once

#include <cstdio>
#include <string>

#include "pediloop/core/bytes.hpp"
#include "pediloop/core/error.hpp"
#include "pediloop/world/types.hpp"

namespace pediloop {

namespace detail {

inline void put_vec3(ByteWriter& w, const Vec3& v)
{
    w.f64(v.x);
    w.f64(v.y);
    w.f64(v.z);
}

inline void put_quat(ByteWriter& w, const Quat& q)
{
    w.f64(q.w);
    w.f64(q.x);
    w.f64(q.y);
    w.f64(q.z);
}

inline void put_transform(ByteWriter& w, const Transform& t)
{
    put_vec3(w, t.position);
    put_quat(w, t.rotation);
}

inline Vec3 get_vec3(ByteReader& r)
{
    Vec3 v;
    v.x = r.f64();
    v.y = r.f64();
    v.z = r.f64();
    return v;
}

inline Quat get_quat(ByteReader& r)
{
    Quat q;
    q.w = r.f64();
    q.x = r.f64();
    q.y = r.f64();
    q.z = r.f64();
    return q;
}

inline Transform get_transform(ByteReader& r)
{
    Transform t;
    t.position = get_vec3(r);
    t.rotation = get_quat(r);
    return t;
}

template <typename E>
E get_enum(ByteReader& r, unsigned max_value, const char* what)
{
    const auto v = r.u8();
    if (v > max_value) throw CorruptionError(std::string("invalid ") + what + " value " + std::to_string(v));
    return static_cast<E>(v);
}

} // namespace detail

/// Canonical little-endian encoding. Field order is fixed and -0.0 is written
/// as +0.0, so equal snapshots always produce identical bytes.
inline void encode_snapshot(ByteWriter& w, const WorldSnapshot& s)
{
    using namespace detail;
    w.u64(s.tick);
    w.i64(s.sim_time_ms);
    w.u8(static_cast<std::uint8_t>(s.phase));
    w.u32(static_cast<std::uint32_t>(s.vehicles.size()));
    for (const auto& v : s.vehicles) {
        w.u32(v.id.value);
        put_transform(w, v.transform);
        w.f64(v.speed);
        w.f64(v.throttle);
        w.f64(v.brake);
        w.f64(v.steer);
        w.boolean(v.ehmi.activated);
        w.u8(static_cast<std::uint8_t>(v.ehmi.color));
        w.f64(v.behavior.speed_limit);
        w.boolean(v.behavior.ignore_pedestrians);
        w.boolean(v.behavior.ignore_traffic_lights);
        put_vec3(w, v.dimensions);
    }
    w.u32(s.walker.id.value);
    put_transform(w, s.walker.root);
    w.u32(static_cast<std::uint32_t>(s.walker.joints.size()));
    for (const auto& j : s.walker.joints) put_transform(w, j);
    w.u32(static_cast<std::uint32_t>(s.walker.capsules.size()));
    for (const auto& c : s.walker.capsules) {
        put_vec3(w, c.a);
        put_vec3(w, c.b);
        w.f64(c.radius);
    }
    w.u32(static_cast<std::uint32_t>(s.audio.size()));
    for (const auto& a : s.audio) {
        w.u32(a.actor.value);
        w.f64(a.level);
        w.f64(a.pan);
    }
    w.f64(s.ambient_level);
    w.u32(static_cast<std::uint32_t>(s.events.size()));
    for (const auto& e : s.events) {
        w.u8(static_cast<std::uint8_t>(e.kind));
        w.u32(e.actor.value);
        w.u8(static_cast<std::uint8_t>(e.phase));
    }
}

inline Bytes encode_snapshot(const WorldSnapshot& s)
{
    ByteWriter w;
    encode_snapshot(w, s);
    return std::move(w).take();
}

inline WorldSnapshot decode_snapshot(ByteReader& r)
{
    using namespace detail;
    WorldSnapshot s;
    s.tick = r.u64();
    s.sim_time_ms = r.i64();
    s.phase = get_enum<ScenarioPhase>(r, 3, "phase");
    s.vehicles.resize(r.count(8));
    for (auto& v : s.vehicles) {
        v.id.value = r.u32();
        v.transform = get_transform(r);
        v.speed = r.f64();
        v.throttle = r.f64();
        v.brake = r.f64();
        v.steer = r.f64();
        v.ehmi.activated = r.boolean();
        v.ehmi.color = get_enum<EhmiColor>(r, 1, "eHMI colour");
        v.behavior.speed_limit = r.f64();
        v.behavior.ignore_pedestrians = r.boolean();
        v.behavior.ignore_traffic_lights = r.boolean();
        v.dimensions = get_vec3(r);
    }
    s.walker.id.value = r.u32();
    s.walker.root = get_transform(r);
    s.walker.joints.resize(r.count(56));
    for (auto& j : s.walker.joints) j = get_transform(r);
    s.walker.capsules.resize(r.count(56));
    for (auto& c : s.walker.capsules) {
        c.a = get_vec3(r);
        c.b = get_vec3(r);
        c.radius = r.f64();
    }
    s.audio.resize(r.count(20));
    for (auto& a : s.audio) {
        a.actor.value = r.u32();
        a.level = r.f64();
        a.pan = r.f64();
    }
    s.ambient_level = r.f64();
    s.events.resize(r.count(6));
    for (auto& e : s.events) {
        e.kind = get_enum<EventKind>(r, static_cast<unsigned>(kEventKindNames.size() - 1), "event kind");
        e.actor.value = r.u32();
        e.phase = get_enum<ScenarioPhase>(r, 3, "phase");
    }
    return s;
}

inline WorldSnapshot decode_snapshot(std::span<const std::uint8_t> bytes)
{
    ByteReader r(bytes);
    WorldSnapshot s = decode_snapshot(r);
    if (!r.at_end()) throw CorruptionError("trailing bytes after snapshot");
    return s;
}

/// One human-readable summary line per snapshot, for inspection output.
inline std::string snapshot_line(const WorldSnapshot& s)
{
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof buf, "tick=%llu t=%.3f phase=%s", static_cast<unsigned long long>(s.tick), s.sim_time(),
                  std::string(to_string(s.phase)).c_str());
    out += buf;
    for (const auto& v : s.vehicles) {
        std::snprintf(buf, sizeof buf, " vehicle%u=(%.3f,%.3f) v=%.3f thr=%.3f brk=%.3f ehmi=%d", v.id.value,
                      v.transform.position.x, v.transform.position.y, v.speed, v.throttle, v.brake,
                      v.ehmi.activated ? 1 : 0);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, " walker=(%.3f,%.3f)", s.walker.root.position.x, s.walker.root.position.y);
    out += buf;
    for (const auto& e : s.events) {
        out += " event=";
        out += to_string(e.kind);
        if (e.kind == EventKind::PhaseChanged) {
            out += ':';
            out += to_string(e.phase);
        }
    }
    return out;
}

} // namespace pediloop
