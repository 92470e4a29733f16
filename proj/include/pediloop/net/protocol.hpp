#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pediloop/core/error.hpp"
#include "pediloop/map/map_model.hpp"
#include "pediloop/world/types.hpp"
#include "pediloop/world/walker.hpp"

namespace pediloop::net {

using Json = nlohmann::json;

inline constexpr std::string_view kProtocolVersion = "1";
inline constexpr std::uint16_t kDefaultPort = 7077;

enum class Role : std::uint8_t { Pedestrian = 0, Spectator = 1 };

inline std::string_view to_string(Role r) noexcept { return r == Role::Pedestrian ? "pedestrian" : "spectator"; }

struct Hello {
    Role role = Role::Spectator;
    std::string name;

    bool operator==(const Hello&) const = default;
};

struct RoadOutline {
    std::string id;
    std::vector<Vec2> left;   // outer edge, left side
    std::vector<Vec2> right;  // outer edge, right side

    bool operator==(const RoadOutline&) const = default;
};

/// Road and crosswalk outlines a client can draw.
struct MapGeometry {
    std::vector<RoadOutline> roads;
    std::vector<std::vector<Vec2>> crosswalks;

    bool operator==(const MapGeometry&) const = default;
};

struct Ack {
    Role role = Role::Spectator;
    ActorId avatar{};  // 0 for spectators
    std::string map_digest;
    std::int64_t dt_ms = 55;
    PlayArea play_area;
    MapGeometry map;

    bool operator==(const Ack&) const = default;
};

struct EventMessage {
    std::uint64_t tick = 0;
    ScenarioEvent event;

    bool operator==(const EventMessage&) const = default;
};

struct ErrorMessage {
    std::string code;
    std::string detail;

    bool operator==(const ErrorMessage&) const = default;
};

using Message = std::variant<Hello, Ack, PoseInput, WalkCommand, ScenarioCommand, WorldSnapshot, EventMessage, ErrorMessage>;

inline constexpr std::array<std::string_view, 8> kMessageTypes{"hello",    "ack",      "pose",  "walk",
                                                               "scenario", "snapshot", "event", "error"};

inline std::string_view message_type(const Message& m) noexcept { return kMessageTypes[m.index()]; }

/// Message with a well-formed envelope but a type this build does not know.
class UnknownMessageType : public DecodeError {
public:
    explicit UnknownMessageType(const std::string& type) : DecodeError("unknown message type '" + type + "'", 0), type_(type) {}
    const std::string& type() const noexcept { return type_; }

private:
    std::string type_;
};

class UnsupportedVersion : public DecodeError {
public:
    explicit UnsupportedVersion(const std::string& v) : DecodeError("unsupported protocol_version '" + v + "'", 0) {}
};

inline MapGeometry build_map_geometry(const map::MapModel& m, double step = 2.0)
{
    MapGeometry g;
    for (const auto& road : m.roads) {
        RoadOutline o;
        o.id = road.id;
        const int n = std::max(1, static_cast<int>(std::ceil(road.length / step)));
        for (int i = 0; i <= n; ++i) {
            const double s = std::min(road.length, road.length * i / n);
            const auto [t_right, t_left] = map::road_edges(road, s);
            o.left.push_back(map::road_to_world(road, {s, t_left}));
            o.right.push_back(map::road_to_world(road, {s, t_right}));
        }
        g.roads.push_back(std::move(o));
    }
    for (const auto& cw : m.crosswalks) g.crosswalks.push_back(cw.polygon);
    return g;
}

namespace detail {

[[noreturn]] inline void schema_error(const std::string& what) { throw DecodeError(what, 0); }

inline const Json& field(const Json& j, const char* key)
{
    const auto it = j.find(key);
    if (it == j.end()) schema_error(std::string("missing field '") + key + "'");
    return *it;
}

inline double num(const Json& j, const char* what)
{
    if (!j.is_number()) schema_error(std::string("field '") + what + "' must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) schema_error(std::string("field '") + what + "' must be finite");
    return v;
}

inline double num(const Json& j, const char* key, double fallback)
{
    const auto it = j.find(key);
    return it == j.end() ? fallback : num(*it, key);
}

inline std::uint64_t unsigned_int(const Json& j, const char* what)
{
    if (!j.is_number_unsigned()) {
        if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return j.get<std::uint64_t>();
        schema_error(std::string("field '") + what + "' must be a non-negative integer");
    }
    return j.get<std::uint64_t>();
}

inline std::uint32_t u32(const Json& j, const char* what)
{
    const auto v = unsigned_int(j, what);
    if (v > 0xFFFFFFFFull) schema_error(std::string("field '") + what + "' out of range");
    return static_cast<std::uint32_t>(v);
}

inline std::int64_t integer(const Json& j, const char* what)
{
    if (!j.is_number_integer()) schema_error(std::string("field '") + what + "' must be an integer");
    if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
        schema_error(std::string("field '") + what + "' out of range");
    return j.get<std::int64_t>();
}

inline bool boolean(const Json& j, const char* what)
{
    if (!j.is_boolean()) schema_error(std::string("field '") + what + "' must be a boolean");
    return j.get<bool>();
}

inline std::string string(const Json& j, const char* what)
{
    if (!j.is_string()) schema_error(std::string("field '") + what + "' must be a string");
    return j.get<std::string>();
}

inline const Json& array(const Json& j, const char* what, std::optional<std::size_t> size = std::nullopt)
{
    if (!j.is_array()) schema_error(std::string("field '") + what + "' must be an array");
    if (size && j.size() != *size)
        schema_error(std::string("field '") + what + "' must have " + std::to_string(*size) + " elements");
    return j;
}

inline const Json& object(const Json& j, const char* what)
{
    if (!j.is_object()) schema_error(std::string("field '") + what + "' must be an object");
    return j;
}

inline Json vec2(Vec2 v) { return Json::array({v.x, v.y}); }
inline Json vec3(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }
inline Json quat(const Quat& q) { return Json::array({q.w, q.x, q.y, q.z}); }
inline Json transform(const Transform& t) { return {{"position", vec3(t.position)}, {"rotation", quat(t.rotation)}}; }

inline Vec2 get_vec2(const Json& j, const char* what)
{
    const auto& a = array(j, what, 2);
    return {num(a[0], what), num(a[1], what)};
}

inline Vec3 get_vec3(const Json& j, const char* what)
{
    const auto& a = array(j, what, 3);
    return {num(a[0], what), num(a[1], what), num(a[2], what)};
}

inline Quat get_quat(const Json& j, const char* what)
{
    const auto& a = array(j, what, 4);
    return {num(a[0], what), num(a[1], what), num(a[2], what), num(a[3], what)};
}

inline Transform get_transform(const Json& j, const char* what)
{
    object(j, what);
    return {get_vec3(field(j, "position"), "position"), get_quat(field(j, "rotation"), "rotation")};
}

inline std::vector<Vec2> get_polyline(const Json& j, const char* what)
{
    std::vector<Vec2> out;
    for (const auto& p : array(j, what)) out.push_back(get_vec2(p, what));
    return out;
}

inline Json polyline(const std::vector<Vec2>& pts)
{
    Json a = Json::array();
    for (const auto& p : pts) a.push_back(vec2(p));
    return a;
}

template <std::size_t N>
std::size_t lookup(const std::array<std::string_view, N>& names, const std::string& v, const char* what)
{
    for (std::size_t i = 0; i < N; ++i)
        if (names[i] == v) return i;
    schema_error(std::string("field '") + what + "' has unknown value '" + v + "'");
}

inline constexpr std::array<std::string_view, 4> kPhaseNames{"waiting", "vehicle_approaching", "pedestrian_crossing", "done"};

inline Json event_fields(const ScenarioEvent& e)
{
    return {{"kind", std::string(to_string(e.kind))}, {"actor", e.actor.value}, {"phase", std::string(to_string(e.phase))}};
}

inline ScenarioEvent get_event(const Json& j)
{
    object(j, "event");
    ScenarioEvent e;
    e.kind = static_cast<EventKind>(lookup(kEventKindNames, string(field(j, "kind"), "kind"), "kind"));
    e.actor.value = u32(field(j, "actor"), "actor");
    e.phase = static_cast<ScenarioPhase>(lookup(kPhaseNames, string(field(j, "phase"), "phase"), "phase"));
    return e;
}

inline Json play_area(const PlayArea& a)
{
    return {{"tracking", {{"min", vec2(a.tracking.min)}, {"max", vec2(a.tracking.max)}}},
            {"world", {{"origin", vec2(a.world.origin)}, {"yaw", a.world.yaw}, {"size", vec2(a.world.size)}}}};
}

inline PlayArea get_play_area(const Json& j)
{
    object(j, "play_area");
    PlayArea a;
    const auto& t = object(field(j, "tracking"), "tracking");
    a.tracking.min = get_vec2(field(t, "min"), "min");
    a.tracking.max = get_vec2(field(t, "max"), "max");
    const auto& w = object(field(j, "world"), "world");
    a.world.origin = get_vec2(field(w, "origin"), "origin");
    a.world.yaw = num(field(w, "yaw"), "yaw");
    a.world.size = get_vec2(field(w, "size"), "size");
    return a;
}

inline Json encode_body(const Hello& m) { return {{"role", std::string(to_string(m.role))}, {"name", m.name}}; }

inline Json encode_body(const Ack& m)
{
    Json roads = Json::array();
    for (const auto& r : m.map.roads) roads.push_back({{"id", r.id}, {"left", polyline(r.left)}, {"right", polyline(r.right)}});
    Json cws = Json::array();
    for (const auto& c : m.map.crosswalks) cws.push_back(polyline(c));
    return {{"role", std::string(to_string(m.role))},
            {"avatar", m.avatar.value},
            {"map_digest", m.map_digest},
            {"dt_ms", m.dt_ms},
            {"play_area", play_area(m.play_area)},
            {"map", {{"roads", roads}, {"crosswalks", cws}}}};
}

inline Json encode_body(const PoseInput& m)
{
    Json hands = Json::array();
    for (const auto& h : m.hands) hands.push_back(h ? transform(*h) : Json(nullptr));
    Json j{{"avatar", m.avatar.value}, {"head", transform(m.head)}, {"hands", hands}, {"timestamp", m.timestamp}};
    if (m.body_joints) {
        Json bj = Json::array();
        for (const auto& q : *m.body_joints) bj.push_back(quat(q));
        j["body_joints"] = bj;
    }
    return j;
}

inline Json encode_body(const WalkCommand& m) { return {{"forward", m.forward}, {"strafe", m.strafe}, {"turn", m.turn}}; }

inline Json encode_body(const ScenarioCommand& m)
{
    Json o = Json::object();
    const auto& v = m.overrides;
    if (v.vehicle_spawn_s) o["vehicle_spawn_s"] = *v.vehicle_spawn_s;
    if (v.target_speed) o["target_speed"] = *v.target_speed;
    if (v.yield_policy) o["yield_policy"] = *v.yield_policy == YieldPolicy::Yield ? "yield" : "ignore";
    if (v.decel) o["decel"] = *v.decel;
    if (v.ehmi_enabled) o["ehmi_enabled"] = *v.ehmi_enabled;
    if (v.stop_margin) o["stop_margin"] = *v.stop_margin;
    return {{"command", m.kind == ScenarioCommandKind::Start ? "start" : "reset"}, {"overrides", o}};
}

inline Json encode_body(const WorldSnapshot& s)
{
    Json vehicles = Json::array();
    for (const auto& v : s.vehicles) {
        vehicles.push_back({{"id", v.id.value},
                            {"position", vec3(v.transform.position)},
                            {"rotation", quat(v.transform.rotation)},
                            {"speed", v.speed},
                            {"throttle", v.throttle},
                            {"brake", v.brake},
                            {"steer", v.steer},
                            {"ehmi", {{"activated", v.ehmi.activated}, {"color", v.ehmi.color == EhmiColor::Cyan ? "cyan" : "off"}}},
                            {"behavior",
                             {{"speed_limit", v.behavior.speed_limit},
                              {"ignore_pedestrians", v.behavior.ignore_pedestrians},
                              {"ignore_traffic_lights", v.behavior.ignore_traffic_lights}}},
                            {"dimensions", vec3(v.dimensions)}});
    }
    Json joints = Json::array();
    for (const auto& t : s.walker.joints) joints.push_back(transform(t));
    Json capsules = Json::array();
    for (const auto& c : s.walker.capsules) capsules.push_back({{"a", vec3(c.a)}, {"b", vec3(c.b)}, {"radius", c.radius}});
    Json audio = Json::array();
    for (const auto& a : s.audio) audio.push_back({{"actor", a.actor.value}, {"level", a.level}, {"pan", a.pan}});
    Json events = Json::array();
    for (const auto& e : s.events) events.push_back(event_fields(e));
    return {{"tick", s.tick},
            {"sim_time_ms", s.sim_time_ms},
            {"phase", std::string(to_string(s.phase))},
            {"vehicles", vehicles},
            {"walker", {{"id", s.walker.id.value}, {"root", transform(s.walker.root)}, {"joints", joints}, {"capsules", capsules}}},
            {"audio", audio},
            {"ambient_level", s.ambient_level},
            {"events", events}};
}

inline Json encode_body(const EventMessage& m)
{
    Json j = event_fields(m.event);
    j["tick"] = m.tick;
    return j;
}

inline Json encode_body(const ErrorMessage& m) { return {{"code", m.code}, {"detail", m.detail}}; }

inline Role get_role(const Json& j)
{
    const auto r = string(j, "role");
    if (r == "pedestrian") return Role::Pedestrian;
    if (r == "spectator") return Role::Spectator;
    schema_error("field 'role' has unknown value '" + r + "'");
}

inline Message decode_body(const std::string& type, const Json& j)
{
    if (type == "hello") {
        Hello m;
        m.role = get_role(field(j, "role"));
        if (const auto it = j.find("name"); it != j.end()) m.name = string(*it, "name");
        return m;
    }
    if (type == "ack") {
        Ack m;
        m.role = get_role(field(j, "role"));
        m.avatar.value = u32(field(j, "avatar"), "avatar");
        m.map_digest = string(field(j, "map_digest"), "map_digest");
        m.dt_ms = integer(field(j, "dt_ms"), "dt_ms");
        m.play_area = get_play_area(field(j, "play_area"));
        if (const auto it = j.find("map"); it != j.end()) {
            const auto& mg = object(*it, "map");
            if (const auto r = mg.find("roads"); r != mg.end())
                for (const auto& road : array(*r, "roads")) {
                    object(road, "road");
                    m.map.roads.push_back({string(field(road, "id"), "id"), get_polyline(field(road, "left"), "left"),
                                           get_polyline(field(road, "right"), "right")});
                }
            if (const auto c = mg.find("crosswalks"); c != mg.end())
                for (const auto& cw : array(*c, "crosswalks")) m.map.crosswalks.push_back(get_polyline(cw, "crosswalk"));
        }
        return m;
    }
    if (type == "pose") {
        PoseInput m;
        m.avatar.value = u32(field(j, "avatar"), "avatar");
        m.head = get_transform(field(j, "head"), "head");
        if (const auto it = j.find("hands"); it != j.end()) {
            const auto& hands = array(*it, "hands", 2);
            for (std::size_t i = 0; i < 2; ++i)
                if (!hands[i].is_null()) m.hands[i] = get_transform(hands[i], "hand");
        }
        if (const auto it = j.find("body_joints"); it != j.end() && !it->is_null()) {
            std::vector<Quat> bj;
            for (const auto& q : array(*it, "body_joints")) bj.push_back(get_quat(q, "body_joints"));
            m.body_joints = std::move(bj);
        }
        m.timestamp = num(j, "timestamp", 0.0);
        return m;
    }
    if (type == "walk") return WalkCommand{num(j, "forward", 0.0), num(j, "strafe", 0.0), num(j, "turn", 0.0)};
    if (type == "scenario") {
        ScenarioCommand m;
        const auto c = string(field(j, "command"), "command");
        if (c == "start") m.kind = ScenarioCommandKind::Start;
        else if (c == "reset") m.kind = ScenarioCommandKind::Reset;
        else schema_error("field 'command' has unknown value '" + c + "'");
        if (const auto it = j.find("overrides"); it != j.end()) {
            const auto& o = object(*it, "overrides");
            auto& v = m.overrides;
            if (const auto f = o.find("vehicle_spawn_s"); f != o.end()) v.vehicle_spawn_s = num(*f, "vehicle_spawn_s");
            if (const auto f = o.find("target_speed"); f != o.end()) v.target_speed = num(*f, "target_speed");
            if (const auto f = o.find("yield_policy"); f != o.end()) {
                const auto p = string(*f, "yield_policy");
                if (p != "yield" && p != "ignore") schema_error("field 'yield_policy' has unknown value '" + p + "'");
                v.yield_policy = p == "yield" ? YieldPolicy::Yield : YieldPolicy::Ignore;
            }
            if (const auto f = o.find("decel"); f != o.end()) v.decel = num(*f, "decel");
            if (const auto f = o.find("ehmi_enabled"); f != o.end()) v.ehmi_enabled = boolean(*f, "ehmi_enabled");
            if (const auto f = o.find("stop_margin"); f != o.end()) v.stop_margin = num(*f, "stop_margin");
        }
        return m;
    }
    if (type == "snapshot") {
        WorldSnapshot s;
        s.tick = unsigned_int(field(j, "tick"), "tick");
        s.sim_time_ms = integer(field(j, "sim_time_ms"), "sim_time_ms");
        s.phase = static_cast<ScenarioPhase>(lookup(kPhaseNames, string(field(j, "phase"), "phase"), "phase"));
        for (const auto& v : array(field(j, "vehicles"), "vehicles")) {
            object(v, "vehicle");
            VehicleState vs;
            vs.id.value = u32(field(v, "id"), "id");
            vs.transform = {get_vec3(field(v, "position"), "position"), get_quat(field(v, "rotation"), "rotation")};
            vs.speed = num(field(v, "speed"), "speed");
            vs.throttle = num(field(v, "throttle"), "throttle");
            vs.brake = num(field(v, "brake"), "brake");
            vs.steer = num(field(v, "steer"), "steer");
            const auto& e = object(field(v, "ehmi"), "ehmi");
            vs.ehmi.activated = boolean(field(e, "activated"), "activated");
            const auto color = string(field(e, "color"), "color");
            if (color != "cyan" && color != "off") schema_error("field 'color' has unknown value '" + color + "'");
            vs.ehmi.color = color == "cyan" ? EhmiColor::Cyan : EhmiColor::Off;
            const auto& b = object(field(v, "behavior"), "behavior");
            vs.behavior.speed_limit = num(field(b, "speed_limit"), "speed_limit");
            vs.behavior.ignore_pedestrians = boolean(field(b, "ignore_pedestrians"), "ignore_pedestrians");
            vs.behavior.ignore_traffic_lights = boolean(field(b, "ignore_traffic_lights"), "ignore_traffic_lights");
            vs.dimensions = get_vec3(field(v, "dimensions"), "dimensions");
            s.vehicles.push_back(vs);
        }
        const auto& w = object(field(j, "walker"), "walker");
        s.walker.id.value = u32(field(w, "id"), "id");
        s.walker.root = get_transform(field(w, "root"), "root");
        for (const auto& t : array(field(w, "joints"), "joints")) s.walker.joints.push_back(get_transform(t, "joint"));
        for (const auto& c : array(field(w, "capsules"), "capsules")) {
            object(c, "capsule");
            s.walker.capsules.push_back(
                {get_vec3(field(c, "a"), "a"), get_vec3(field(c, "b"), "b"), num(field(c, "radius"), "radius")});
        }
        for (const auto& a : array(field(j, "audio"), "audio")) {
            object(a, "audio");
            s.audio.push_back({{u32(field(a, "actor"), "actor")}, num(field(a, "level"), "level"), num(field(a, "pan"), "pan")});
        }
        s.ambient_level = num(field(j, "ambient_level"), "ambient_level");
        for (const auto& e : array(field(j, "events"), "events")) s.events.push_back(get_event(e));
        return s;
    }
    if (type == "event") return EventMessage{unsigned_int(field(j, "tick"), "tick"), get_event(j)};
    if (type == "error") return ErrorMessage{string(field(j, "code"), "code"), string(field(j, "detail"), "detail")};
    throw UnknownMessageType(type);
}

} // namespace detail

/// One JSON object, no trailing newline. Keys are emitted in sorted order,
/// so the encoding of a given message is stable.
inline std::string encode_message(const Message& m)
{
    Json j = std::visit([](const auto& body) { return detail::encode_body(body); }, m);
    j["type"] = std::string(message_type(m));
    j["protocol_version"] = std::string(kProtocolVersion);
    return j.dump();
}

inline std::string encode_line(const Message& m) { return encode_message(m) + "\n"; }

/// Decode one complete frame. Unknown fields are ignored; anything malformed
/// raises DecodeError (offset = zero-based byte position for syntax errors;
/// the frame length when the input ends early).
inline Message decode_message(std::string_view frame)
{
    while (!frame.empty() && (frame.back() == '\n' || frame.back() == '\r')) frame.remove_suffix(1);
    Json j;
    try {
        j = Json::parse(frame.begin(), frame.end());
    } catch (const Json::parse_error& e) {
        throw DecodeError(std::string("malformed JSON: ") + e.what(), std::min<std::size_t>(e.byte ? e.byte - 1 : 0, frame.size()));
    } catch (const Json::exception& e) {
        throw DecodeError(std::string("malformed JSON: ") + e.what(), 0);
    }
    if (!j.is_object()) throw DecodeError("message must be a JSON object", 0);
    const auto v = j.find("protocol_version");
    if (v == j.end()) throw DecodeError("missing field 'protocol_version'", 0);
    if (!v->is_string()) throw DecodeError("field 'protocol_version' must be a string", 0);
    if (v->get<std::string>() != kProtocolVersion) throw UnsupportedVersion(v->get<std::string>());
    const auto t = j.find("type");
    if (t == j.end() || !t->is_string()) throw DecodeError("missing or non-string field 'type'", 0);
    try {
        return detail::decode_body(t->get<std::string>(), j);
    } catch (const DecodeError&) {
        throw;
    } catch (const Json::exception& e) {
        throw DecodeError(std::string("invalid message: ") + e.what(), 0);
    }
}

} // namespace pediloop::net
