#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "pediloop/app/config.hpp"
#include "pediloop/app/live.hpp"
#include "pediloop/presence/presence.hpp"
#include "pediloop/replay/recording.hpp"
#include "pediloop/replay/replay.hpp"
#include "pediloop/replay/stream_hash.hpp"
#include "pediloop/replay/timing.hpp"
#include "pediloop/sensors/export.hpp"
#include "pediloop/world/snapshot_codec.hpp"

namespace pediloop::app {

/// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,   // usage, configuration, setup (including a busy port)
    kExitData = 3,     // malformed, corrupt, or inconsistent data
    kExitRuntime = 4,  // protocol and runtime violations
};

inline int exit_code_for(ErrorFamily f) noexcept
{
    switch (f) {
    case ErrorFamily::Config: return kExitConfig;
    case ErrorFamily::Data: return kExitData;
    case ErrorFamily::Runtime: return kExitRuntime;
    }
    return kExitRuntime;
}

/// Run a command body, report any failure on `err` and map it to an exit code.
template <typename Body>
int guarded(std::ostream& err, Body&& body)
{
    try {
        return body();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.family());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

inline std::string hex(const Sha256Digest& d) { return to_hex(d); }

inline std::string fixed(double v, int decimals)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline void print_timing(std::ostream& out, const replay::TimingStats& t)
{
    std::uint64_t max_ns = 0;
    for (auto d : t.durations) max_ns = std::max<std::uint64_t>(max_ns, static_cast<std::uint64_t>(d.count()));
    out << "timing (measured, hardware-dependent): mode=" << pediloop::to_string(t.mode) << " dt_ms=" << t.dt.count()
        << " target_fps=" << fixed(1000.0 / static_cast<double>(t.dt.count()), 2) << " ticks=" << t.durations.size()
        << " achieved_fps=" << fixed(t.achieved_fps(), 2) << " budget_violations=" << t.budget_violations()
        << " max_tick_ms=" << fixed(static_cast<double>(max_ns) / 1e6, 3) << " sensor_invocations=" << t.sensor_invocations
        << '\n';
}

inline nlohmann::ordered_json timing_json(const replay::TimingStats& t)
{
    return {{"mode", std::string(pediloop::to_string(t.mode))},
            {"dt_ms", t.dt.count()},
            {"ticks", t.durations.size()},
            {"wall_seconds", std::chrono::duration<double>(t.total).count()},
            {"achieved_fps", t.achieved_fps()},
            {"budget_violations", t.budget_violations()},
            {"sensor_invocations", t.sensor_invocations}};
}

// ---- live ----

struct LiveArgs {
    std::optional<std::string> config;  // falls back to PEDILOOP_CONFIG
    fs::path output;
    std::optional<fs::path> script;
    std::optional<fs::path> timing_json;
    bool realtime = false;
    bool serve = false;
    std::optional<std::uint16_t> port;
    std::optional<std::uint64_t> max_ticks;
    const std::atomic<bool>* stop = nullptr;
};

/// Run a scenario live (sensors off), record it, and report timing.
inline int cmd_live(const LiveArgs& a, std::ostream& out)
{
    // Fail fast: config, map, clip and script all load before the first tick.
    const RunConfig rc = load_run_config(resolve_config_path(a.config));
    LiveOptions opts;
    if (a.script) opts.script = Script::load(*a.script);
    opts.max_ticks = a.max_ticks.value_or(rc.max_ticks);
    opts.realtime = a.realtime;
    opts.serve = a.serve;
    opts.server = rc.server;
    if (a.port) opts.server.port = *a.port;
    opts.stop = a.stop;
    opts.on_listening = [&out](std::uint16_t port) { out << "listening on port " << port << std::endl; };
    if (a.output.empty()) throw ConfigError("no recording output path given");
    if (!a.output.parent_path().empty() && !fs::is_directory(a.output.parent_path()))
        throw ConfigError("output directory does not exist: " + a.output.parent_path().string());

    const LiveResult res = run_live(rc, std::move(opts));
    replay::write_recording(a.output, res.recording);

    const auto& last = res.recording.snapshots.back();
    out << "scenario: " << rc.scenario_name << '\n';
    out << "recording: " << a.output.string() << '\n';
    out << "ticks: " << last.tick << " sim_time_ms: " << last.sim_time_ms << " final_phase: " << to_string(last.phase)
        << (res.reached_done ? "" : " (stopped before done)") << '\n';
    if (res.rejected_commands) out << "rejected_commands: " << res.rejected_commands << '\n';
    out << "stream_hash: " << hex(replay::hash_snapshot_stream(res.recording.snapshots)) << '\n';
    print_timing(out, res.timing);
    if (a.timing_json) {
        std::ofstream f(*a.timing_json);
        if (!f) throw ConfigError("cannot write timing report: " + a.timing_json->string());
        f << timing_json(res.timing).dump(2) << '\n';
    }
    if (res.timing.sensor_violation()) throw ModeViolation("sensor operations ran during the live phase");
    return kExitOk;
}

// ---- replay ----

enum class CloudFormat { Text, Binary };

struct ReplayArgs {
    fs::path recording;
    std::optional<fs::path> sensors;  // no sensor config: no sensors
    std::optional<fs::path> out_dir;  // no directory: nothing written
    std::optional<fs::path> map;      // checked against the recorded map digest
    CloudFormat cloud_format = CloudFormat::Text;
    bool print_snapshots = false;
    bool quiet = false;               // suppress the per-tick visibility lines
};

inline std::string tick_file(const std::string& stem, std::uint64_t tick, const std::string& ext)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%06llu%s", stem.c_str(), static_cast<unsigned long long>(tick), ext.c_str());
    return buf;
}

inline void write_bytes(const fs::path& p, const Bytes& b)
{
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + p.string());
    f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

inline int cmd_replay(const ReplayArgs& a, std::ostream& out)
{
    const replay::Recording rec = replay::read_recording(a.recording);  // verifies digests and stream hash
    out << "verified: " << a.recording.string() << " ticks=" << rec.snapshots.size()
        << " stream_hash=" << hex(replay::hash_snapshot_stream(rec.snapshots)) << '\n';
    if (a.map) {
        const auto digest = map_file_digest(*a.map);
        if (digest != rec.header.map_digest)
            throw CorruptionError("map digest mismatch: recording was made with " + rec.header.map_digest + ", " +
                                  a.map->string() + " is " + digest);
        out << "map digest matches " << a.map->string() << '\n';
    }
    replay::SensorSuite suite;
    if (a.sensors) suite = load_sensor_config(*a.sensors);
    if (a.out_dir && !suite.empty()) fs::create_directories(*a.out_dir);

    std::size_t crossing = 0, crossing_seen = 0;
    replay::TimingRecorder timing(ExecutionMode::Replay, rec.header.dt);
    for (std::size_t k = 0; k < rec.snapshots.size(); ++k) {
        timing.begin_tick();
        const auto frame = replay::replay_step(rec, k, &suite);
        timing.end_tick();
        const auto& s = *frame.snapshot;
        if (a.print_snapshots) out << snapshot_line(s) << '\n';
        if (!frame.sensors) continue;
        if (frame.sensors->lidar) {
            const auto& scan = *frame.sensors->lidar;
            const auto vis = sensors::pedestrian_visibility(scan, s.walker.id);
            if (s.phase == ScenarioPhase::PedestrianCrossing) {
                ++crossing;
                if (vis.count > 0) ++crossing_seen;
            }
            if (!a.quiet)
                out << "visibility tick=" << s.tick << " phase=" << to_string(s.phase) << " walker_points=" << vis.count
                    << " points=" << scan.points.size() << '\n';
            if (a.out_dir) {
                if (a.cloud_format == CloudFormat::Text) {
                    std::ofstream f(*a.out_dir / tick_file("lidar", s.tick, ".txt"), std::ios::binary | std::ios::trunc);
                    if (!f) throw ConfigError("cannot write into " + a.out_dir->string());
                    f << sensors::point_cloud_text(scan);
                } else {
                    write_bytes(*a.out_dir / tick_file("lidar", s.tick, ".plpc"), sensors::point_cloud_binary(scan));
                }
            }
        }
        if (frame.sensors->depth && a.out_dir)
            write_bytes(*a.out_dir / tick_file("depth", s.tick, ".pgm"), sensors::depth_pgm(*frame.sensors->depth));
    }
    if (suite.lidar)
        out << "crossing_ticks=" << crossing << " crossing_ticks_with_walker_points=" << crossing_seen << '\n';
    print_timing(out, timing.finish());
    return kExitOk;
}

// ---- merge-bvh ----

struct MergeArgs {
    fs::path recording;
    fs::path clip;
    std::optional<fs::path> retarget;  // [retarget] and [joint_map]; defaults otherwise
    fs::path output;
    bool resample = false;
};

inline int cmd_merge_bvh(const MergeArgs& a, std::ostream& out)
{
    if (a.output.empty()) throw ConfigError("no output path given");
    if (fs::exists(a.output) && fs::exists(a.recording) && fs::equivalent(a.output, a.recording))
        throw ConfigError("merge writes a new recording; output must differ from the input");
    if (!fs::is_regular_file(a.clip)) throw ConfigError("clip not found: " + a.clip.string());
    const RetargetSettings settings = a.retarget ? load_retarget_settings(*a.retarget) : RetargetSettings{};
    const replay::Recording rec = replay::read_recording(a.recording);
    if (!rec.avatar) throw MergeError("recording carries no avatar skeleton to retarget onto");
    const auto clip = mocap::load_bvh(a.clip.string());
    Milliseconds step = rec.header.dt;
    if (!a.resample) {
        const double ms = clip.frame_time * 1000.0;
        const double whole = std::round(ms);
        if (std::abs(ms - whole) > 1e-6 || whole < 1.0)
            throw MergeError("clip frame time " + fixed(clip.frame_time, 6) + " s is not a whole number of milliseconds; "
                             "pass --resample to resample it to the recording step");
        step = Milliseconds{static_cast<long long>(whole)};
        if (step != rec.header.dt)
            throw MergeError("clip step " + std::to_string(step.count()) + " ms differs from recording step " +
                             std::to_string(rec.header.dt.count()) + " ms; pass --resample to resample it");
    }
    const auto cfg = settings.config_for(clip.skeleton, *rec.avatar);
    const mocap::MotionTrack track = a.resample ? mocap::retarget_to_avatar(clip, cfg, *rec.avatar, rec.header.dt)
                                                : mocap::retarget_clip(clip, cfg, *rec.avatar, step);
    const auto merged = replay::merge_bvh_into_recording(rec, track);
    replay::write_recording(a.output, merged);
    out << "merged " << a.clip.string() << " (" << clip.frames.size() << " frames at " << fixed(clip.frame_time, 6)
        << " s) into " << a.output.string() << ": " << merged.snapshots.size() << " ticks, track "
        << track.frames.size() << " frames\n";
    out << "stream_hash: " << hex(replay::hash_snapshot_stream(merged.snapshots)) << '\n';
    return kExitOk;
}

// ---- score ----

struct ScoreArgs {
    fs::path responses;
    std::optional<fs::path> json;
    bool subscale_alpha = false;  // also report alpha within each subscale
};

inline int cmd_score(const ScoreArgs& a, std::ostream& out)
{
    const auto responses = presence::load_responses_csv(a.responses.string());
    const auto stats = presence::score_subscales(responses);
    const double alpha = presence::cronbach_alpha(responses);
    for (const auto& s : stats) out << presence::format_subscale(s) << '\n';
    out << "Cronbach's alpha=" << presence::format_stat(alpha, 3) << " (items=" << presence::kItemCount
        << ", n=" << responses.size() << ")\n";
    std::vector<double> sub_alpha;
    if (a.subscale_alpha)
        for (const auto& sub : presence::kSubscales) {
            std::vector<int> items;
            for (int i = sub.first_item; i <= sub.last_item; ++i) items.push_back(i);
            sub_alpha.push_back(presence::cronbach_alpha(responses, items));
            out << "  " << sub.name << " alpha=" << presence::format_stat(sub_alpha.back(), 3) << '\n';
        }
    if (a.json) {
        nlohmann::ordered_json j;
        j["n"] = responses.size();
        j["subscales"] = nlohmann::ordered_json::array();
        for (const auto& s : stats) j["subscales"].push_back({{"name", s.name}, {"mean", s.mean}, {"sd", s.sd}});
        j["alpha"] = alpha;
        for (std::size_t i = 0; i < sub_alpha.size(); ++i) j["subscales"][i]["alpha"] = sub_alpha[i];
        std::ofstream f(*a.json);
        if (!f) throw ConfigError("cannot write " + a.json->string());
        f << j.dump(2) << '\n';
    }
    return kExitOk;
}

// ---- inspect ----

struct InspectArgs {
    fs::path file;
    bool snapshots = false;
};

inline int cmd_inspect(const InspectArgs& a, std::ostream& out)
{
    if (!fs::is_regular_file(a.file)) throw ConfigError("file not found: " + a.file.string());
    const Bytes bytes = replay::read_file_bytes(a.file);
    const std::string_view head(reinterpret_cast<const char*>(bytes.data()), std::min<std::size_t>(bytes.size(), 8));
    const auto ext = a.file.extension().string();

    if (head == replay::kMagic) {
        const auto rec = replay::deserialize(bytes);
        out << "recording " << a.file.string() << '\n' << replay::detail::header_text(rec.header);
        out << "snapshots: " << rec.snapshots.size() << '\n';
        out << "avatar_joints: " << (rec.avatar ? std::to_string(rec.avatar->joints.size()) : std::string("none")) << '\n';
        out << "motion_track: "
            << (rec.motion_track ? std::to_string(rec.motion_track->frames.size()) + " frames" : std::string("none")) << '\n';
        out << "stream_hash: " << hex(replay::hash_snapshot_stream(rec.snapshots)) << '\n';
        std::size_t events = 0;
        for (const auto& s : rec.snapshots) events += s.events.size();
        out << "events: " << events << '\n';
        for (const auto& s : rec.snapshots)
            for (const auto& e : s.events) {
                out << "  tick=" << s.tick << ' ' << to_string(e.kind);
                if (e.kind == EventKind::PhaseChanged) out << ' ' << to_string(e.phase);
                out << '\n';
            }
        if (a.snapshots)
            for (const auto& s : rec.snapshots) out << snapshot_line(s) << '\n';
        return kExitOk;
    }
    if (head.substr(0, 4) == "PLPC") {
        const auto scan = sensors::parse_point_cloud_binary(bytes);
        const auto vis = sensors::pedestrian_visibility(scan);
        out << "point cloud tick=" << scan.tick << " points=" << scan.points.size() << " walker_points=" << vis.count << '\n';
        return kExitOk;
    }
    const std::string text(bytes.begin(), bytes.end());
    if (ext == ".xodr") {
        const auto m = map::parse_opendrive(text);
        out << "map " << a.file.string() << " digest=" << to_hex(sha256(bytes)) << '\n';
        for (const auto& r : m.roads)
            out << "  road " << r.id << " length=" << fixed(r.length, 3) << " segments=" << r.segments.size()
                << " lanes=" << r.lane_count() << '\n';
        for (const auto& c : m.crosswalks)
            out << "  crosswalk road=" << c.road_id << " s=[" << fixed(c.s_start, 3) << ", " << fixed(c.s_end, 3) << "]\n";
        return kExitOk;
    }
    if (ext == ".bvh") {
        const auto clip = mocap::parse_bvh(text);
        out << "clip " << a.file.string() << " joints=" << clip.skeleton.joints.size() << " frames=" << clip.frames.size()
            << " frame_time=" << fixed(clip.frame_time, 6) << " duration=" << fixed(clip.duration(), 3) << '\n';
        return kExitOk;
    }
    throw ConfigError("cannot tell what kind of file " + a.file.string() + " is");
}

} // namespace pediloop::app
