#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "pediloop/core/digest.hpp"
#include "pediloop/core/error.hpp"
#include "pediloop/map/opendrive.hpp"
#include "pediloop/mocap/bvh.hpp"
#include "pediloop/mocap/retarget.hpp"
#include "pediloop/net/server.hpp"
#include "pediloop/replay/recording.hpp"
#include "pediloop/replay/replay.hpp"
#include "pediloop/world/world.hpp"

namespace pediloop::app {

namespace fs = std::filesystem;
using boost::property_tree::ptree;

inline constexpr const char* kConfigEnv = "PEDILOOP_CONFIG";

/// INI reader that rejects unknown sections and keys and names the file in every error.
class IniFile {
public:
    IniFile(const fs::path& path, std::map<std::string, std::set<std::string>> schema)
        : path_(path), schema_(std::move(schema))
    {
        if (!fs::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
        try {
            boost::property_tree::read_ini(path.string(), tree_);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ConfigError(path.string() + ":" + std::to_string(e.line()) + ": " + e.message());
        }
        for (const auto& [section, body] : tree_) {
            const auto it = schema_.find(section);
            if (it == schema_.end()) throw ConfigError(path.string() + ": unknown section [" + section + "]");
            if (!body.data().empty()) throw ConfigError(path.string() + ": key '" + section + "' outside any section");
            for (const auto& [key, value] : body)
                if (!it->second.count(key)) throw ConfigError(path.string() + ": unknown key [" + section + "] " + key);
        }
    }

    const fs::path& path() const noexcept { return path_; }
    fs::path dir() const { return path_.parent_path(); }

    bool has(const std::string& section) const { return tree_.find(section) != tree_.not_found(); }

    std::optional<std::string> raw(const std::string& section, const std::string& key) const
    {
        const auto s = tree_.find(section);
        if (s == tree_.not_found()) return std::nullopt;
        const auto k = s->second.find(key);
        if (k == s->second.not_found()) return std::nullopt;
        return k->second.data();
    }

    std::string text(const std::string& section, const std::string& key, const std::string& fallback) const
    {
        return raw(section, key).value_or(fallback);
    }

    std::string required(const std::string& section, const std::string& key) const
    {
        auto v = raw(section, key);
        if (!v || v->empty()) throw ConfigError(path_.string() + ": missing [" + section + "] " + key);
        return *v;
    }

    double number(const std::string& section, const std::string& key, double fallback) const
    {
        const auto v = raw(section, key);
        return v ? to_number(section, key, *v) : fallback;
    }

    long long integer(const std::string& section, const std::string& key, long long fallback) const
    {
        const auto v = raw(section, key);
        if (!v) return fallback;
        std::size_t used = 0;
        long long out = 0;
        try {
            out = std::stoll(*v, &used);
        } catch (const std::logic_error&) {
            used = 0;
        }
        if (used == 0 || used != v->size()) fail(section, key, "not an integer: '" + *v + "'");
        return out;
    }

    bool boolean(const std::string& section, const std::string& key, bool fallback) const
    {
        const auto v = raw(section, key);
        if (!v) return fallback;
        if (*v == "true" || *v == "yes" || *v == "1" || *v == "on") return true;
        if (*v == "false" || *v == "no" || *v == "0" || *v == "off") return false;
        fail(section, key, "not a boolean: '" + *v + "'");
    }

    std::vector<double> numbers(const std::string& section, const std::string& key, std::size_t count) const
    {
        const std::string v = required(section, key);
        std::string norm = v;
        for (auto& c : norm)
            if (c == ',') c = ' ';
        std::istringstream in(norm);
        std::vector<double> out;
        std::string tok;
        while (in >> tok) out.push_back(to_number(section, key, tok));
        if (out.size() != count)
            fail(section, key, "expected " + std::to_string(count) + " numbers, got '" + v + "'");
        return out;
    }

    Vec2 vec2(const std::string& section, const std::string& key, Vec2 fallback) const
    {
        if (!raw(section, key)) return fallback;
        const auto v = numbers(section, key, 2);
        return {v[0], v[1]};
    }

    Vec3 vec3(const std::string& section, const std::string& key, Vec3 fallback) const
    {
        if (!raw(section, key)) return fallback;
        const auto v = numbers(section, key, 3);
        return {v[0], v[1], v[2]};
    }

    /// Paths are relative to the directory holding the config file.
    fs::path path_value(const std::string& section, const std::string& key) const
    {
        const fs::path p = required(section, key);
        return p.is_absolute() ? p : (dir() / p).lexically_normal();
    }

    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const
    {
        throw ConfigError(path_.string() + ": [" + section + "] " + key + ": " + what);
    }

private:
    double to_number(const std::string& section, const std::string& key, const std::string& v) const
    {
        std::size_t used = 0;
        double out = 0.0;
        try {
            out = std::stod(v, &used);
        } catch (const std::logic_error&) {
            used = 0;
        }
        if (used == 0 || used != v.size() || !std::isfinite(out)) fail(section, key, "not a finite number: '" + v + "'");
        return out;
    }

    fs::path path_;
    std::map<std::string, std::set<std::string>> schema_;
    ptree tree_;
};

/// Axis map text: three comma-separated source axes with optional sign, e.g. "z,x,y" or "-x,y,z".
inline mocap::AxisMap parse_axis_map(const std::string& text, bool mirrored)
{
    mocap::AxisMap m;
    m.mirrored = mirrored;
    std::istringstream in(text);
    std::string tok;
    int i = 0;
    while (std::getline(in, tok, ',')) {
        const auto b = tok.find_first_not_of(" \t");
        const auto e = tok.find_last_not_of(" \t");
        tok = b == std::string::npos ? "" : tok.substr(b, e - b + 1);
        if (i >= 3) throw ConfigError("axis map '" + text + "' has more than three entries");
        double sign = 1.0;
        if (!tok.empty() && (tok[0] == '-' || tok[0] == '+')) {
            sign = tok[0] == '-' ? -1.0 : 1.0;
            tok.erase(0, 1);
        }
        if (tok != "x" && tok != "y" && tok != "z") throw ConfigError("axis map entry '" + tok + "' is not x, y or z");
        m.source[static_cast<std::size_t>(i)] = tok[0] - 'x';
        m.sign[static_cast<std::size_t>(i)] = sign;
        ++i;
    }
    if (i != 3) throw ConfigError("axis map '" + text + "' needs three entries");
    m.validate();
    return m;
}

inline std::string axis_map_text(const mocap::AxisMap& m)
{
    std::string s;
    for (int i = 0; i < 3; ++i) {
        if (i) s += ',';
        if (m.sign[static_cast<std::size_t>(i)] < 0) s += '-';
        s += static_cast<char>('x' + m.source[static_cast<std::size_t>(i)]);
    }
    return s;
}

inline const std::set<std::string> kRetargetKeys{"unit_scale", "axis_map", "mirrored", "rest_frame"};

struct RetargetSettings {
    double unit_scale = 0.01;
    mocap::AxisMap axis_map = mocap::AxisMap::y_up_to_z_up();
    std::size_t rest_frame = 0;
    std::map<std::string, std::string> joint_map;  // avatar joint -> clip joint; empty means same names

    mocap::RetargetConfig config_for(const mocap::BvhSkeleton& clip_skeleton, const mocap::AvatarSkeleton& avatar) const
    {
        mocap::RetargetConfig cfg{unit_scale, axis_map, {}};
        for (const auto& j : avatar.joints) {
            const auto it = joint_map.find(j.name);
            cfg.joint_name_map[j.name] = it == joint_map.end() ? j.name : it->second;
        }
        (void)clip_skeleton;
        return cfg;
    }
};

inline RetargetSettings read_retarget(const IniFile& ini)
{
    RetargetSettings r;
    r.unit_scale = ini.number("retarget", "unit_scale", r.unit_scale);
    if (!(r.unit_scale > 0.0)) ini.fail("retarget", "unit_scale", "must be > 0");
    const bool mirrored = ini.boolean("retarget", "mirrored", false);
    if (const auto a = ini.raw("retarget", "axis_map")) {
        try {
            r.axis_map = parse_axis_map(*a, mirrored);
        } catch (const ConfigError& e) {
            ini.fail("retarget", "axis_map", e.what());
        }
    } else if (mirrored) {
        ini.fail("retarget", "mirrored", "set without an axis_map");
    }
    const long long rest = ini.integer("retarget", "rest_frame", 0);
    if (rest < 0) ini.fail("retarget", "rest_frame", "must be >= 0");
    r.rest_frame = static_cast<std::size_t>(rest);
    return r;
}

/// Standalone retarget file for merge-bvh: a [retarget] section plus an optional [joint_map].
inline RetargetSettings load_retarget_settings(const fs::path& path)
{
    // Joint map keys are free-form, so that section is read without a key schema.
    ptree tree;
    if (!fs::is_regular_file(path)) throw ConfigError("retarget config not found: " + path.string());
    try {
        boost::property_tree::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(path.string() + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    std::set<std::string> keys;
    if (auto jm = tree.get_child_optional("joint_map"))
        for (const auto& [k, v] : *jm) keys.insert(k);
    IniFile ini(path, {{"retarget", kRetargetKeys}, {"joint_map", keys}});
    RetargetSettings r = read_retarget(ini);
    if (auto jm = tree.get_child_optional("joint_map"))
        for (const auto& [k, v] : *jm) r.joint_map[k] = v.data();
    return r;
}

/// Everything a live run needs, resolved and loaded before the first tick.
struct RunConfig {
    fs::path source;
    fs::path map_path;
    std::string map_digest;
    fs::path avatar_clip_path;
    RetargetSettings retarget;
    WorldConfig world;
    std::string scenario_name;
    std::uint64_t max_ticks = 2000;
    net::ServerOptions server;
};

inline const std::map<std::string, std::set<std::string>> kRunSchema{
    {"world", {"dt_ms", "map", "avatar_clip", "autostart", "max_ticks"}},
    {"scenario", {"name", "vehicle_spawn_s", "target_speed", "yield_policy", "decel", "ehmi_enabled", "stop_margin", "lane"}},
    {"behavior", {"speed_limit", "ignore_traffic_lights"}},
    {"vehicle", {"a_max", "b_max", "c_roll", "wheelbase", "max_steer_deg", "length", "width", "height"}},
    {"play_area", {"tracking_min", "tracking_max", "world_origin", "world_yaw_deg", "world_size"}},
    {"walker", {"x", "y", "yaw_deg", "deadzone_m", "deadzone_deg"}},
    {"retarget", kRetargetKeys},
    {"server", {"address", "port", "static_root"}},
};

inline YieldPolicy parse_yield_policy(const std::string& v)
{
    if (v == "yield") return YieldPolicy::Yield;
    if (v == "ignore") return YieldPolicy::Ignore;
    throw ConfigError("yield_policy must be 'yield' or 'ignore', got '" + v + "'");
}

inline std::string map_file_digest(const fs::path& path) { return to_hex(sha256(replay::read_file_bytes(path))); }

/// Load a run config. Referenced files must exist and parse; nothing is simulated here.
inline RunConfig load_run_config(const fs::path& path)
{
    IniFile ini(path, kRunSchema);
    RunConfig rc;
    rc.source = path;
    auto& w = rc.world;

    const long long dt = ini.integer("world", "dt_ms", 55);
    if (dt <= 0 || dt > 1000) ini.fail("world", "dt_ms", "must be in 1..1000");
    w.dt = Milliseconds{dt};
    w.autostart = ini.boolean("world", "autostart", false);
    const long long max_ticks = ini.integer("world", "max_ticks", 2000);
    if (max_ticks < 1) ini.fail("world", "max_ticks", "must be >= 1");
    rc.max_ticks = static_cast<std::uint64_t>(max_ticks);

    rc.map_path = ini.path_value("world", "map");
    if (!fs::is_regular_file(rc.map_path)) throw ConfigError("map file not found: " + rc.map_path.string());
    w.map = std::make_shared<const map::MapModel>(map::load_opendrive(rc.map_path.string()));
    rc.map_digest = map_file_digest(rc.map_path);

    rc.avatar_clip_path = ini.path_value("world", "avatar_clip");
    if (!fs::is_regular_file(rc.avatar_clip_path))
        throw ConfigError("avatar clip not found: " + rc.avatar_clip_path.string());
    const auto clip = mocap::load_bvh(rc.avatar_clip_path.string());
    rc.retarget = read_retarget(ini);
    w.avatar = mocap::make_avatar(clip, rc.retarget.unit_scale, rc.retarget.axis_map, rc.retarget.rest_frame);

    auto& sc = w.scenario;
    rc.scenario_name = ini.text("scenario", "name", path.stem().string());
    sc.vehicle_spawn_s = ini.number("scenario", "vehicle_spawn_s", sc.vehicle_spawn_s);
    sc.target_speed = ini.number("scenario", "target_speed", sc.target_speed);
    if (const auto yp = ini.raw("scenario", "yield_policy")) {
        try {
            sc.yield_policy = parse_yield_policy(*yp);
        } catch (const ConfigError& e) {
            ini.fail("scenario", "yield_policy", e.what());
        }
    }
    sc.decel = ini.number("scenario", "decel", sc.decel);
    sc.ehmi_enabled = ini.boolean("scenario", "ehmi_enabled", sc.ehmi_enabled);
    sc.stop_margin = ini.number("scenario", "stop_margin", sc.stop_margin);
    sc.lane = static_cast<int>(ini.integer("scenario", "lane", sc.lane));

    w.behavior.speed_limit = ini.number("behavior", "speed_limit", w.behavior.speed_limit);
    w.behavior.ignore_traffic_lights = ini.boolean("behavior", "ignore_traffic_lights", w.behavior.ignore_traffic_lights);

    auto& vm = w.vehicle;
    vm.a_max = ini.number("vehicle", "a_max", vm.a_max);
    vm.b_max = ini.number("vehicle", "b_max", vm.b_max);
    vm.c_roll = ini.number("vehicle", "c_roll", vm.c_roll);
    vm.wheelbase = ini.number("vehicle", "wheelbase", vm.wheelbase);
    vm.max_steer_deg = ini.number("vehicle", "max_steer_deg", vm.max_steer_deg);
    vm.dimensions = {ini.number("vehicle", "length", vm.dimensions.x), ini.number("vehicle", "width", vm.dimensions.y),
                     ini.number("vehicle", "height", vm.dimensions.z)};

    auto& pa = w.play_area;
    pa.tracking.min = ini.vec2("play_area", "tracking_min", {0.0, 0.0});
    pa.tracking.max = ini.vec2("play_area", "tracking_max", {4.0, 4.0});
    pa.world.origin = ini.vec2("play_area", "world_origin", {0.0, 0.0});
    pa.world.yaw = deg_to_rad(ini.number("play_area", "world_yaw_deg", 0.0));
    pa.world.size = ini.vec2("play_area", "world_size", pa.tracking.max - pa.tracking.min);

    w.walker_spawn = {ini.number("walker", "x", 0.0), ini.number("walker", "y", 0.0)};
    w.walker_yaw = deg_to_rad(ini.number("walker", "yaw_deg", 0.0));
    w.deadzone.translation = ini.number("walker", "deadzone_m", w.deadzone.translation);
    w.deadzone.rotation_deg = ini.number("walker", "deadzone_deg", w.deadzone.rotation_deg);

    rc.server.address = ini.text("server", "address", rc.server.address);
    const long long port = ini.integer("server", "port", rc.server.port);
    if (port < 0 || port > 65535) ini.fail("server", "port", "must be in 0..65535");
    rc.server.port = static_cast<std::uint16_t>(port);
    if (ini.raw("server", "static_root")) rc.server.static_root = ini.path_value("server", "static_root");

    // Constructing the world runs every remaining consistency check.
    World probe(w);
    (void)probe;
    return rc;
}

/// Config path from the flag, else from PEDILOOP_CONFIG.
inline fs::path resolve_config_path(const std::optional<std::string>& flag)
{
    if (flag && !flag->empty()) return *flag;
    if (const char* env = std::getenv(kConfigEnv); env && *env) return env;
    throw ConfigError(std::string("no config file given; pass --config or set ") + kConfigEnv);
}

inline replay::RecordingHeader recording_header(const RunConfig& rc)
{
    replay::RecordingHeader h;
    h.map_digest = rc.map_digest;
    h.dt = rc.world.dt;
    h.scenario_name = rc.scenario_name;
    h.scenario = rc.world.scenario;
    return h;
}

inline const std::map<std::string, std::set<std::string>> kSensorSchema{
    {"lidar", {"enabled", "channels", "fov_lo_deg", "fov_hi_deg", "points_per_channel", "range_max", "mount", "mount_yaw_deg"}},
    {"depth", {"enabled", "width", "height", "fov_h_deg", "mount", "mount_yaw_deg"}},
};

/// Sensor suite for replay. A section with enabled = false, or no section, disables that sensor.
inline replay::SensorSuite load_sensor_config(const fs::path& path)
{
    IniFile ini(path, kSensorSchema);
    replay::SensorSuite suite;
    if (ini.has("lidar") && ini.boolean("lidar", "enabled", true)) {
        sensors::LidarConfig c;
        c.channels = static_cast<int>(ini.integer("lidar", "channels", c.channels));
        c.fov_lo_deg = ini.number("lidar", "fov_lo_deg", c.fov_lo_deg);
        c.fov_hi_deg = ini.number("lidar", "fov_hi_deg", c.fov_hi_deg);
        c.points_per_channel = static_cast<int>(ini.integer("lidar", "points_per_channel", c.points_per_channel));
        c.range_max = ini.number("lidar", "range_max", c.range_max);
        c.mount = {ini.vec3("lidar", "mount", c.mount.position),
                   Quat::from_yaw(deg_to_rad(ini.number("lidar", "mount_yaw_deg", 0.0)))};
        try {
            c.validate();
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
        suite.lidar = c;
    }
    if (ini.has("depth") && ini.boolean("depth", "enabled", true)) {
        sensors::DepthCameraConfig c;
        c.width = static_cast<int>(ini.integer("depth", "width", c.width));
        c.height = static_cast<int>(ini.integer("depth", "height", c.height));
        c.fov_h_deg = ini.number("depth", "fov_h_deg", c.fov_h_deg);
        c.mount = {ini.vec3("depth", "mount", c.mount.position),
                   Quat::from_yaw(deg_to_rad(ini.number("depth", "mount_yaw_deg", 0.0)))};
        try {
            c.validate();
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
        suite.depth = c;
    }
    return suite;
}

} // namespace pediloop::app
