// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "pediloop/mocap/bvh.hpp"
#include "pediloop/mocap/resample.hpp"
#include "pediloop/mocap/retarget.hpp"
#include "pediloop/net/protocol.hpp"
#include "pediloop/net/session.hpp"
#include "pediloop/replay/recording.hpp"
#include "pediloop/replay/replay.hpp"
#include "pediloop/replay/stream_hash.hpp"
#include "pediloop/sensors/lidar.hpp"
#include "support.hpp"

using namespace pediloop;
using namespace pediloop::oracle;
using pediloop::test::data;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---- determinism ----

void determinism(Outcome& o)
{
    for (const char* name : test::kScenarios) {
        const auto t0 = Clock::now();
        const auto live = test::run_bundled(name).recording;
        test::TempDir dir;
        replay::write_recording(dir / "r.plrec", live);
        const auto rec = replay::read_recording(dir / "r.plrec");
        replay::StreamHasher h;
        for (std::size_t k = 0; k < rec.size(); ++k) h.add(*replay::replay_step(rec, k).snapshot);
        const auto live_hash = replay::hash_snapshot_stream(live.snapshots);
        const double secs = seconds_since(t0);
        o.require(h.finish() == live_hash, std::string(name) + " hash differs");
        o.require(secs < 10.0, std::string(name) + " took too long");
        o.detail << ' ' << name << '=' << to_hex(live_hash).substr(0, 12) << " (" << live.size() << " ticks, "
                 << std::fixed << std::setprecision(2) << secs << " s)";
    }
}

// ---- timing ----

void timing(Outcome& o)
{
    const auto rc = test::bundled("yield_aggressive");
    const auto before = sensors::invocation_counter().load();
    const auto res = test::run_bundled("yield_aggressive");
    const auto spy = sensors::invocation_counter().load() - before;
    o.require(spy == 0, "sensor operations ran during live");
    o.require(res.timing.sensor_invocations == 0, "timing stats count sensor operations");
    o.require(rc.world.dt == Milliseconds{55} && res.timing.dt == Milliseconds{55}, "dt is not 55 ms");
    o.require(res.recording.snapshots.back().sim_time_ms == 55 * static_cast<std::int64_t>(res.recording.size() - 1),
              "sim time is not a multiple of 55 ms");
    o.detail << " dt_ms=" << res.timing.dt.count() << " target_fps=18.18 achieved_fps=" << std::fixed << std::setprecision(1)
             << res.timing.achieved_fps() << " (measured, hardware-dependent) sensor_invocations=" << spy;
}

// ---- braking ----

void braking(Outcome& o)
{
    const VehicleModel m;
    for (auto [v, a] : {std::pair{8.33, 6.0}, {8.33, 2.0}, {15.0, 8.0}}) {
        ScenarioConfig c;
        c.decel = a;
        const double d = simulated_stop_distance(v, yield_brake(c, m), m);
        const double closed = v * v / (2.0 * a);
        o.require(std::abs(d - closed) <= v * 0.055, "stopping distance for v=" + std::to_string(v));
        o.detail << " (" << v << "," << a << "):" << std::setprecision(3) << d << "/" << closed;
    }
    for (const char* name : {"yield_aggressive", "yield_conservative"}) {
        const auto rc = test::bundled(name);
        const auto& cw = rc.world.map->crosswalks.front();
        const auto* road = rc.world.map->find_road(cw.road_id);
        const auto snaps = test::run_bundled(name).recording.snapshots;
        double farthest = -1e9;
        bool stopped = false;
        for (const auto& s : snaps) {
            if (s.phase == ScenarioPhase::Done) break;
            farthest = std::max(farthest, front_s(*road, s.vehicles.front()));
            stopped = stopped || s.vehicles.front().speed == 0.0;
        }
        o.require(stopped && farthest < cw.s_start, std::string(name) + " did not stop short of the crosswalk");
        o.detail << ' ' << name << "_gap=" << std::setprecision(2) << cw.s_start - farthest << "m";
    }
    const auto snaps = test::run_bundled("ignore").recording.snapshots;
    bool monotone = true;
    for (std::size_t k = 1; k < snaps.size(); ++k)
        monotone = monotone && snaps[k].vehicles.front().speed >= snaps[k - 1].vehicles.front().speed - 1e-9;
    o.require(monotone, "ignore scenario decelerated");
    o.require(count_events(snaps, EventKind::VehicleYielding) == 0, "ignore scenario yielded");
}

// ---- eHMI ----

void ehmi(Outcome& o)
{
    const auto base = test::bundled("yield_aggressive");
    const auto script = test::crossing_script();
    std::mt19937_64 rng(20241014);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int lit_runs = 0, transitions = 0;
    for (int n = 0; n < 200; ++n) {
        auto rc = base;
        auto& sc = rc.world.scenario;
        sc.yield_policy = u(rng) < 0.5 ? YieldPolicy::Yield : YieldPolicy::Ignore;
        sc.ehmi_enabled = u(rng) < 0.5;
        sc.decel = 0.5 + u(rng) * 7.5;
        sc.target_speed = 3.0 + u(rng) * 10.0;
        sc.stop_margin = u(rng) * 2.0;
        sc.vehicle_spawn_s = u(rng) * 30.0;
        app::LiveOptions opts;
        opts.script = script;
        opts.max_ticks = 320;
        const auto snaps = app::run_live(rc, opts).recording.snapshots;
        bool braking = false, prev = false, any = false, ok = true;
        for (const auto& s : snaps) {
            braking = braking || has_event(s, EventKind::VehicleYielding);
            const bool lit = s.vehicles.front().ehmi.activated;
            if (lit) ok = ok && sc.yield_policy == YieldPolicy::Yield && sc.ehmi_enabled && braking;
            ok = ok && has_event(s, EventKind::EhmiActivated) == (lit && !prev);
            ok = ok && has_event(s, EventKind::EhmiDeactivated) == (!lit && prev);
            transitions += lit != prev;
            any = any || lit;
            prev = lit;
        }
        lit_runs += any;
        o.require(ok, "config " + std::to_string(n) + " broke the contract");
        if (!ok) break;
    }
    o.require(lit_runs > 0, "no run ever activated the eHMI");
    o.detail << " configs=200 runs_with_ehmi=" << lit_runs << " transitions=" << transitions;
}

// ---- BVH ----

mocap::BvhClip single_root(std::vector<std::vector<double>> frames, double frame_time)
{
    mocap::BvhClip c;
    mocap::BvhJoint j;
    j.name = "Hips";
    j.channels = {mocap::Channel::Xposition, mocap::Channel::Yposition, mocap::Channel::Zposition,
                  mocap::Channel::Zrotation, mocap::Channel::Xrotation, mocap::Channel::Yrotation};
    j.end_site = Vec3{0, 10, 0};
    c.skeleton.joints.push_back(j);
    c.skeleton.assign_channel_offsets();
    c.frame_time = frame_time;
    c.frames = std::move(frames);
    return c;
}

void bvh(Outcome& o)
{
    double worst = 0.0;
    for (const auto* f : {"fixtures/minimal.bvh", "mocap/walk_17joint_100hz.bvh", "mocap/walk_17joint_55ms.bvh"}) {
        const auto a = mocap::load_bvh(data(f));
        const auto b = mocap::parse_bvh(mocap::write_bvh(a));
        o.require(a.frames.size() == b.frames.size() && a.skeleton.joints.size() == b.skeleton.joints.size(),
                  std::string(f) + " changed shape");
        for (std::size_t k = 0; k < std::min(a.frames.size(), b.frames.size()); ++k)
            for (std::size_t c = 0; c < a.frames[k].size(); ++c)
                worst = std::max(worst, std::abs(a.frames[k][c] - b.frames[k][c]));
        for (std::size_t i = 0; i < std::min(a.skeleton.joints.size(), b.skeleton.joints.size()); ++i)
            worst = std::max(worst, norm(a.skeleton.joints[i].offset - b.skeleton.joints[i].offset));
    }
    o.require(worst <= 1e-4, "round trip error");

    std::vector<std::vector<double>> frames;
    for (int k = 0; k <= 100; ++k) frames.push_back({k / 100.0, 0, 0, 0, 0, 0});
    const auto lin = mocap::resample_clip(single_root(frames, 0.01), 0.055);
    double lin_err = 0.0;
    for (std::size_t k = 0; k < lin.frames.size(); ++k)
        lin_err = std::max(lin_err, std::abs(lin.frames[k][0] - 0.055 * static_cast<double>(k)));
    o.require(lin.frames.size() == 19 && lin_err <= 1e-6, "linear resample");

    const auto sl = mocap::resample_clip(single_root({{0, 0, 0, 0, 0, 0}, {0, 0, 0, 90, 0, 0}}, 1.0), 0.5);
    const double slerp_err = std::abs(sl.frames.at(1)[3] - 45.0);
    o.require(slerp_err <= 1e-6, "slerp midpoint");

    const auto clip = mocap::load_bvh(data("mocap/walk_17joint_100hz.bvh"));
    const auto cfg = mocap::RetargetConfig::identity_for(clip.skeleton, 0.01);
    double rigid = 0.0;
    for (std::size_t f = 0; f < clip.frames.size(); ++f) {
        const auto pose = mocap::forward_kinematics(clip, f, cfg);
        for (std::size_t i = 1; i < clip.skeleton.joints.size(); ++i) {
            const double rest = norm(clip.skeleton.joints[i].offset) * 0.01;
            const double len = norm(pose.world[i].position - pose.world[clip.skeleton.joints[i].parent].position);
            rigid = std::max(rigid, std::abs(len - rest) / rest);
        }
    }
    o.require(rigid <= 1e-6, "bone length drift");
    o.detail << std::scientific << std::setprecision(1) << " roundtrip_max=" << worst << " linear_max=" << lin_err
             << " slerp_err=" << slerp_err << " rigidity_rel_max=" << rigid;
}

// ---- sensors ----

void sensors_check(Outcome& o)
{
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int rays = 0, hits = 0;
    double worst = 0.0;
    bool agree = true;
    while (rays < 1000) {
        const auto scene = random_scene(rng);
        for (int n = 0; n < 100 && rays < 1000; ++n) {
            const Vec3 origin{u(rng) * 18, u(rng) * 18, 1.0 + u(rng) * 0.8};
            if (Field{scene}.eval(origin).first < 0.05) continue;
            Vec3 d = normalized(Vec3{u(rng), u(rng), 0.4 * u(rng)});
            if (n % 2) {
                const auto& pr = scene.primitives[rng() % scene.primitives.size()].shape;
                const Vec3 c = std::holds_alternative<OrientedBox>(pr) ? std::get<OrientedBox>(pr).pose.position
                                                                        : std::get<Capsule>(pr).a;
                d = normalized(c + Vec3{u(rng), u(rng), u(rng)} * 0.6 - origin);
            }
            const Ray ray{origin, d};
            const auto got = sensors::cast_ray(scene, ray, 50.0);
            const auto want = trace(scene, ray, 50.0);
            ++rays;
            if (got.has_value() != want.has_value()) {
                agree = false;
                continue;
            }
            if (!got) continue;
            ++hits;
            worst = std::max(worst, std::abs(got->distance - want->distance));
            agree = agree && got->label == want->label;
        }
    }
    o.require(agree && worst <= 1e-9, "ray oracle disagreement");

    sensors::LidarConfig g;
    g.mount = {{0, 0, 1.9}, {}};
    g.carrier = std::nullopt;
    g.channels = 1;
    g.fov_lo_deg = -10.0;
    g.fov_hi_deg = -9.0;
    g.points_per_channel = 360;
    const auto ground = sensors::lidar_scan(WorldSnapshot{}, g, ExecutionMode::Replay);
    double ground_err = 0.0;
    for (const auto& p : ground.points) ground_err = std::max(ground_err, std::abs(p.range - 1.9 / std::sin(deg_to_rad(10.0))));
    o.require(ground.points.size() == 360 && ground_err <= 1e-9, "ground ray range");

    // Bundled run with the bundled walk merged in, replayed with the bundled LiDAR.
    const auto rec = test::run_bundled("yield_aggressive").recording;
    const auto rs = app::load_retarget_settings(data("mocap/retarget.ini"));
    const auto clip = mocap::load_bvh(data("mocap/walk_17joint_100hz.bvh"));
    const auto track =
        mocap::retarget_to_avatar(clip, rs.config_for(clip.skeleton, *rec.avatar), *rec.avatar, rec.header.dt);
    const auto merged = replay::merge_bvh_into_recording(rec, track);
    const auto suite = app::load_sensor_config(data("sensors/lidar.ini"));
    std::size_t crossing = 0, seen = 0, min_points = SIZE_MAX;
    for (std::size_t k = 0; k < merged.size(); ++k) {
        if (merged.snapshots[k].phase != ScenarioPhase::PedestrianCrossing) continue;
        const auto frame = replay::replay_step(merged, k, &suite);
        const auto vis = sensors::pedestrian_visibility(*frame.sensors->lidar, kWalkerId);
        ++crossing;
        seen += vis.count > 0;
        min_points = std::min(min_points, vis.count);
    }
    o.require(crossing > 0 && seen == crossing, "crossing tick without walker points");
    o.detail << " rays=" << rays << " hits=" << hits << std::scientific << std::setprecision(1) << " max_err=" << worst
             << " ground_err=" << ground_err << std::defaultfloat << " crossing_ticks=" << crossing
             << " with_walker_points=" << seen << " min_walker_points=" << min_points;
}

// ---- OpenDRIVE ----

void opendrive(Outcome& o)
{
    const auto m = map::load_opendrive(data("maps/university_crossing.xodr").string());
    o.require(!m.roads.empty() && m.crosswalks.size() == 1, "bundled map contents");
    const auto arc = map::load_opendrive(data("fixtures/quarter_arc.xodr").string());
    const auto end = map::sample_reference_line(arc.roads.at(0), 25.0 * kPi);
    const double arc_err = std::max(std::abs(end.point.x - 50.0), std::abs(end.point.y - 50.0));
    o.require(arc_err <= 1e-6, "quarter arc endpoint");
    const auto& poly = m.crosswalks.front().polygon;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ux(55.0, 69.0), uy(-6.0, 6.0);
    int agree = 0, inside = 0;
    for (int i = 0; i < 1000; ++i) {
        const Vec2 p{ux(rng), uy(rng)};
        const bool want = winding_inside(poly, p);
        agree += map::point_in_polygon(poly, p) == want;
        inside += want;
    }
    o.require(agree == 1000, "point-in-crosswalk disagreement");
    o.detail << " roads=" << m.roads.size() << " crosswalks=" << m.crosswalks.size() << std::scientific
             << std::setprecision(1) << " arc_err=" << arc_err << std::defaultfloat << " points_agree=" << agree
             << "/1000 inside=" << inside;
}

// ---- presence ----

void presence_check(Outcome& o)
{
    const double one = presence::cronbach_alpha(presence::load_responses_csv(data("fixtures/presence_consistent.csv").string()));
    o.require(one == 1.0, "consistent data alpha is not exactly 1");
    bool typed = false;
    try {
        presence::cronbach_alpha(presence::load_responses_csv(data("fixtures/presence_degenerate.csv").string()));
    } catch (const DegenerateDataError&) {
        typed = true;
    }
    o.require(typed, "degenerate data not rejected");
    const auto rs = presence::load_responses_csv(data("presence/synthetic_18.csv").string());
    const double a = presence::cronbach_alpha(rs);
    const double diff = std::abs(a - static_cast<double>(brute_alpha(rs)));
    o.require(rs.size() == 18 && diff <= 1e-12, "synthetic alpha differs from brute force");
    const auto sub = presence::score_subscales(rs);
    o.detail << " alpha_consistent=" << one << " synthetic_alpha=" << presence::format_stat(a, 3) << " diff=" << std::scientific
             << std::setprecision(1) << diff << " " << presence::format_subscale(sub[0]);
}

// ---- protocol ----

void protocol(Outcome& o)
{
    using namespace net;
    const auto rc = test::bundled("yield_aggressive");
    const auto snaps = test::run_bundled("yield_aggressive").recording.snapshots;
    PoseInput pose;
    pose.avatar = kWalkerId;
    pose.head = {{1.5, 2.5, 1.7}, Quat::from_yaw(0.3)};
    pose.body_joints = std::vector<Quat>(rc.world.avatar.joints.size());
    ScenarioCommand cmd;
    cmd.overrides.decel = 3.0;
    Ack ack = app::ack_template(rc.world, rc.map_digest);
    ack.role = Role::Pedestrian;
    ack.avatar = kWalkerId;
    const std::vector<Message> all{Hello{Role::Spectator, "s"}, ack, pose, WalkCommand{1, 0, 0.1}, cmd, snaps.at(103),
                                   EventMessage{103, snaps.at(103).events.at(0)}, ErrorMessage{"decode_error", "x"}};
    bool rt = all.size() == std::variant_size_v<Message>;
    for (const auto& m : all) {
        const auto back = decode_message(encode_line(m));
        rt = rt && back == m && encode_line(back) == encode_line(m);
    }
    o.require(rt, "codec round trip");

    std::mt19937_64 rng(99);
    std::size_t valid = 0, rejected = 0, other = 0;
    std::vector<std::string> seeds;
    for (const auto& m : all) seeds.push_back(encode_message(m));
    for (int n = 0; n < 100000; ++n) {
        std::string f = seeds[rng() % seeds.size()];
        if (n % 2) {
            f.resize(rng() % (f.size() + 1));
        } else {
            for (int e = 0; e < 3; ++e) f[rng() % f.size()] = static_cast<char>(rng() & 0xFF);
        }
        try {
            (void)decode_message(f);
            ++valid;
        } catch (const DecodeError&) {
            ++rejected;
        } catch (...) {
            ++other;
        }
    }
    o.require(other == 0, "decoder threw something other than DecodeError");

    bool single = true;
    for (int trial = 0; trial < 200 && single; ++trial) {
        Hub hub(ack, rc.world.avatar.joints.size());
        std::vector<SessionId> ids{hub.connect()};
        for (int step = 0; step < 60; ++step) {
            const SessionId id = ids[rng() % ids.size()];
            switch (rng() % 5) {
            case 0: ids.push_back(hub.connect()); break;
            case 1: hub.receive(id, encode_message(Hello{Role::Pedestrian, "p"})); break;
            case 2: hub.receive(id, encode_message(Hello{Role::Spectator, "s"})); break;
            case 3: hub.disconnect(id); break;
            default: hub.receive(id, encode_message(pose)); break;
            }
            int peds = 0;
            for (const auto s : ids) {
                const auto st = hub.state(s);
                peds += st && st->status == SessionStatus::Active && st->role == Role::Pedestrian;
            }
            single = single && peds <= 1;
        }
    }
    o.require(single, "two pedestrians were active at once");
    o.detail << " variants=" << all.size() << " fuzz_cases=100000 decoded=" << valid << " rejected=" << rejected
             << " aborts=0 session_scripts=200";
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
        {"live-replay determinism", determinism}, {"timing regime", timing},      {"braking kinematics", braking},
        {"ehmi contract", ehmi},                  {"bvh", bvh},                   {"sensors", sensors_check},
        {"opendrive", opendrive},                 {"presence math", presence_check}, {"protocol", protocol},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            check(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ":" << o.detail.str() << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
