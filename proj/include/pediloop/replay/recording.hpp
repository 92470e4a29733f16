#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pediloop/core/bytes.hpp"
#include "pediloop/core/digest.hpp"
#include "pediloop/core/error.hpp"
#include "pediloop/mocap/retarget.hpp"
#include "pediloop/replay/stream_hash.hpp"
#include "pediloop/world/snapshot_codec.hpp"
#include "pediloop/world/types.hpp"

namespace pediloop::replay {

inline constexpr std::string_view kMagic{"PLREC\0\r\n", 8};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kDigestChunkSize = 4 + 4 + 64;

struct RecordingHeader {
    std::uint32_t version = kFormatVersion;
    std::string map_digest;  // hex SHA-256 of the map file
    Milliseconds dt{55};
    std::string scenario_name;
    ScenarioConfig scenario;
    std::string created_by = "pediloop 0.1.0";

    bool operator==(const RecordingHeader&) const = default;
};

struct Recording {
    RecordingHeader header;
    std::optional<mocap::AvatarSkeleton> avatar;
    std::vector<WorldSnapshot> snapshots;
    std::optional<mocap::MotionTrack> motion_track;

    bool operator==(const Recording&) const = default;
    std::size_t size() const noexcept { return snapshots.size(); }
};

/// Append the next snapshot. Ticks must run 0, 1, 2, ... with sim time tick * dt.
inline Recording& record_tick(Recording& rec, const WorldSnapshot& s)
{
    const std::uint64_t expected = rec.snapshots.size();
    if (s.tick != expected)
        throw SequenceError("expected tick " + std::to_string(expected) + ", got " + std::to_string(s.tick));
    if (s.sim_time_ms != static_cast<std::int64_t>(s.tick) * rec.header.dt.count())
        throw SequenceError("tick " + std::to_string(s.tick) + " has sim time " + std::to_string(s.sim_time_ms) +
                            " ms, expected " + std::to_string(static_cast<std::int64_t>(s.tick) * rec.header.dt.count()));
    rec.snapshots.push_back(s);
    return rec;
}

namespace detail {

inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string header_text(const RecordingHeader& h)
{
    const auto& c = h.scenario;
    std::string t;
    auto kv = [&](std::string_view k, const std::string& v) {
        t.append(k);
        t.push_back('=');
        t.append(v);
        t.push_back('\n');
    };
    kv("format_version", std::to_string(h.version));
    kv("map_digest", h.map_digest);
    kv("dt_ms", std::to_string(h.dt.count()));
    kv("scenario.name", h.scenario_name);
    kv("scenario.vehicle_spawn_s", format_double(c.vehicle_spawn_s));
    kv("scenario.target_speed", format_double(c.target_speed));
    kv("scenario.yield_policy", c.yield_policy == YieldPolicy::Yield ? "yield" : "ignore");
    kv("scenario.decel", format_double(c.decel));
    kv("scenario.ehmi_enabled", c.ehmi_enabled ? "true" : "false");
    kv("scenario.stop_margin", format_double(c.stop_margin));
    kv("scenario.lane", std::to_string(c.lane));
    kv("created_by", h.created_by);
    return t;
}

inline double parse_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::logic_error&) {
        throw CorruptionError("recording header " + key + " is not a number: " + v);
    }
}

inline long long parse_integer(const std::string& key, const std::string& v)
{
    try {
        std::size_t used = 0;
        const long long n = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::logic_error&) {
        throw CorruptionError("recording header " + key + " is not an integer: " + v);
    }
}

inline RecordingHeader parse_header_text(const std::string& text)
{
    RecordingHeader h;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw CorruptionError("malformed recording header line: " + line);
        const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
        auto& c = h.scenario;
        if (k == "format_version") h.version = static_cast<std::uint32_t>(parse_integer(k, v));
        else if (k == "map_digest") h.map_digest = v;
        else if (k == "dt_ms") h.dt = Milliseconds{parse_integer(k, v)};
        else if (k == "scenario.name") h.scenario_name = v;
        else if (k == "scenario.vehicle_spawn_s") c.vehicle_spawn_s = parse_double(k, v);
        else if (k == "scenario.target_speed") c.target_speed = parse_double(k, v);
        else if (k == "scenario.yield_policy") {
            if (v != "yield" && v != "ignore") throw CorruptionError("unknown yield policy in recording header: " + v);
            c.yield_policy = v == "yield" ? YieldPolicy::Yield : YieldPolicy::Ignore;
        } else if (k == "scenario.decel") c.decel = parse_double(k, v);
        else if (k == "scenario.ehmi_enabled") c.ehmi_enabled = v == "true";
        else if (k == "scenario.stop_margin") c.stop_margin = parse_double(k, v);
        else if (k == "scenario.lane") c.lane = static_cast<int>(parse_integer(k, v));
        else if (k == "created_by") h.created_by = v;
        // Unknown keys are tolerated so newer writers stay readable.
    }
    return h;
}

inline void put_avatar(ByteWriter& w, const mocap::AvatarSkeleton& av)
{
    w.u32(static_cast<std::uint32_t>(av.joints.size()));
    for (const auto& j : av.joints) {
        w.str(j.name);
        w.i64(j.parent);
        pediloop::detail::put_vec3(w, j.offset);
    }
    w.u32(static_cast<std::uint32_t>(av.bones.size()));
    for (const auto& b : av.bones) {
        w.i64(b.joint);
        w.i64(b.child);
        pediloop::detail::put_vec3(w, b.end_offset);
        w.f64(b.radius);
    }
}

inline mocap::AvatarSkeleton get_avatar(ByteReader& r)
{
    mocap::AvatarSkeleton av;
    av.joints.resize(r.count(36));
    for (std::size_t i = 0; i < av.joints.size(); ++i) {
        auto& j = av.joints[i];
        j.name = r.str();
        j.parent = static_cast<int>(r.i64());
        if (j.parent < -1 || j.parent >= static_cast<int>(i)) throw CorruptionError("avatar joint parent out of order");
        j.offset = pediloop::detail::get_vec3(r);
    }
    av.bones.resize(r.count(48));
    for (auto& b : av.bones) {
        b.joint = static_cast<int>(r.i64());
        b.child = static_cast<int>(r.i64());
        const int n = static_cast<int>(av.joints.size());
        if (b.joint < 0 || b.joint >= n || b.child < -1 || b.child >= n) throw CorruptionError("avatar bone index out of range");
        b.end_offset = pediloop::detail::get_vec3(r);
        b.radius = r.f64();
    }
    return av;
}

inline void put_track(ByteWriter& w, const mocap::MotionTrack& t)
{
    w.u64(static_cast<std::uint64_t>(t.dt.count()));
    put_avatar(w, t.avatar);
    w.u32(static_cast<std::uint32_t>(t.frames.size()));
    for (const auto& f : t.frames) {
        w.u32(static_cast<std::uint32_t>(f.joints.size()));
        for (const auto& j : f.joints) pediloop::detail::put_transform(w, j);
    }
}

inline mocap::MotionTrack get_track(ByteReader& r)
{
    mocap::MotionTrack t;
    t.dt = Milliseconds{static_cast<long long>(r.u64())};
    t.avatar = get_avatar(r);
    t.frames.resize(r.count(4));
    for (auto& f : t.frames) {
        f.joints.resize(r.count(56));
        for (auto& j : f.joints) j = pediloop::detail::get_transform(r);
    }
    return t;
}

inline void put_chunk(ByteWriter& w, std::string_view tag, const Bytes& payload)
{
    w.raw(std::span(reinterpret_cast<const std::uint8_t*>(tag.data()), 4));
    w.u32(static_cast<std::uint32_t>(payload.size()));
    w.raw(payload);
}

} // namespace detail

/// Layout (all integers little-endian):
///   magic "PLREC\0\r\n" | u32 version | u32 header length | header text (key=value lines)
///   chunks: 4-byte tag | u32 payload length | payload
///     AVTR  avatar skeleton (optional, at most one)
///     SNAP  one canonical snapshot per chunk, in tick order
///     MOTN  merged motion track (optional)
///     DGST  32-byte snapshot stream hash | 32-byte SHA-256 of every preceding byte
inline Bytes serialize(const Recording& rec)
{
    ByteWriter w;
    w.raw(std::span(reinterpret_cast<const std::uint8_t*>(kMagic.data()), kMagic.size()));
    w.u32(rec.header.version);
    const std::string text = detail::header_text(rec.header);
    w.u32(static_cast<std::uint32_t>(text.size()));
    w.raw(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    if (rec.avatar) {
        ByteWriter p;
        detail::put_avatar(p, *rec.avatar);
        detail::put_chunk(w, "AVTR", p.bytes());
    }
    for (const auto& s : rec.snapshots) detail::put_chunk(w, "SNAP", encode_snapshot(s));
    if (rec.motion_track) {
        ByteWriter p;
        detail::put_track(p, *rec.motion_track);
        detail::put_chunk(w, "MOTN", p.bytes());
    }
    const Sha256Digest stream = hash_snapshot_stream(rec.snapshots);
    const Sha256Digest file = sha256(w.bytes());
    Bytes tail(stream.begin(), stream.end());
    tail.insert(tail.end(), file.begin(), file.end());
    detail::put_chunk(w, "DGST", tail);
    return std::move(w).take();
}

inline Recording deserialize(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < kMagic.size() + 8 + kDigestChunkSize ||
        !std::equal(kMagic.begin(), kMagic.end(), bytes.begin(), [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; }))
        throw CorruptionError("not a recording (bad magic)");
    ByteReader r(bytes);
    r.raw(kMagic.size());
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion)
        throw VersionError("unsupported recording version " + std::to_string(version) + " (supported: " +
                           std::to_string(kFormatVersion) + ")");

    const std::size_t body = bytes.size() - kDigestChunkSize;
    ByteReader tail(bytes.subspan(body));
    const auto tag = tail.raw(4);
    if (std::string_view(reinterpret_cast<const char*>(tag.data()), 4) != "DGST" || tail.u32() != 64)
        throw CorruptionError("recording is truncated (missing digest chunk)");
    Sha256Digest stored_stream{}, stored_file{};
    std::ranges::copy(tail.raw(32), stored_stream.begin());
    std::ranges::copy(tail.raw(32), stored_file.begin());
    if (sha256(bytes.subspan(0, body)) != stored_file) throw CorruptionError("recording digest mismatch: file has been modified");

    Recording rec;
    const std::uint32_t header_len = r.u32();
    const auto header_bytes = r.raw(header_len);
    rec.header = detail::parse_header_text(std::string(header_bytes.begin(), header_bytes.end()));
    if (rec.header.version != version) throw CorruptionError("recording header version disagrees with preamble");
    if (rec.header.dt.count() <= 0) throw CorruptionError("recording header has non-positive dt_ms");

    while (r.position() < body) {
        const auto t = r.raw(4);
        const std::string_view name(reinterpret_cast<const char*>(t.data()), 4);
        const std::uint32_t len = r.u32();
        if (len > body - r.position()) throw CorruptionError("chunk " + std::string(name) + " overruns the file");
        ByteReader chunk(r.raw(len));
        if (name == "SNAP") {
            WorldSnapshot s = decode_snapshot(chunk);
            if (!chunk.at_end()) throw CorruptionError("trailing bytes in snapshot chunk");
            try {
                record_tick(rec, s);
            } catch (const SequenceError& e) {
                throw CorruptionError(std::string("recording snapshot sequence broken: ") + e.what());
            }
        } else if (name == "AVTR") {
            rec.avatar = detail::get_avatar(chunk);
        } else if (name == "MOTN") {
            rec.motion_track = detail::get_track(chunk);
        }
        // Unknown chunk tags are skipped.
    }
    if (hash_snapshot_stream(rec.snapshots) != stored_stream) throw CorruptionError("snapshot stream hash mismatch");
    return rec;
}

inline void write_recording(const std::filesystem::path& path, const Recording& rec)
{
    const Bytes data = serialize(rec);
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write recording: " + path.string());
        out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
        if (!out) throw ConfigError("short write to recording: " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

inline Bytes read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline Recording read_recording(const std::filesystem::path& path) { return deserialize(read_file_bytes(path)); }

/// Replace each snapshot's articulation with the track's pose for that tick.
/// The root stays as recorded: the headset drove displacement, the track drives the limbs.
inline Recording merge_bvh_into_recording(const Recording& rec, const mocap::MotionTrack& track)
{
    if (track.dt != rec.header.dt)
        throw MergeError("track step " + std::to_string(track.dt.count()) + " ms differs from recording step " +
                         std::to_string(rec.header.dt.count()) + " ms");
    if (track.frames.size() < rec.snapshots.size())
        throw MergeError("track has " + std::to_string(track.frames.size()) + " frames, recording has " +
                         std::to_string(rec.snapshots.size()) + " ticks");
    if (rec.avatar && !rec.avatar->same_layout(track.avatar))
        throw MergeError("track avatar layout does not match the recorded avatar");

    Recording out = rec;
    for (std::size_t k = 0; k < out.snapshots.size(); ++k) {
        auto& w = out.snapshots[k].walker;
        auto joints = track.frames[k].joints;
        if (joints.size() != w.joints.size())
            throw MergeError("track frame " + std::to_string(k) + " has " + std::to_string(joints.size()) +
                             " joints, recorded walker has " + std::to_string(w.joints.size()));
        if (!joints.empty()) {
            // Keep hip height, drop the clip's own travel.
            joints[0].position.x = 0.0;
            joints[0].position.y = 0.0;
        }
        w.joints = std::move(joints);
        w.capsules = mocap::pose_avatar(track.avatar, w.root, w.joints).capsules;
    }
    out.motion_track = track;
    if (!out.avatar) out.avatar = track.avatar;
    return out;
}

/// Track holding the avatar's bind pose for `frames` ticks.
inline mocap::MotionTrack identity_track(const mocap::AvatarSkeleton& avatar, Milliseconds dt, std::size_t frames)
{
    mocap::MotionTrack t;
    t.dt = dt;
    t.avatar = avatar;
    t.frames.assign(frames, mocap::TrackFrame{avatar.bind_pose()});
    return t;
}

} // namespace pediloop::replay
