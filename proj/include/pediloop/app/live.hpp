#pragma once

#include <atomic>
#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "pediloop/app/config.hpp"
#include "pediloop/net/protocol.hpp"
#include "pediloop/net/server.hpp"
#include "pediloop/net/session.hpp"
#include "pediloop/replay/recording.hpp"
#include "pediloop/replay/timing.hpp"
#include "pediloop/world/world.hpp"

namespace pediloop::app {

/// Tick-scheduled inputs for the headless driver.
///
///     # tick  command  arguments
///     1    start  yield_policy=ignore
///     164  walk   1.4 0 0
///     200  pose   2.0 3.5 1.7 -90
///     300  reset
///
/// Inputs scheduled at tick k are consumed by the step that produces snapshot k.
/// pose takes the head position in tracking space and a yaw in degrees.
class Script {
public:
    using Input = net::InputMessage;

    struct Entry {
        std::uint64_t tick = 0;
        Input input;
    };

    Script() = default;

    static Script parse(const std::string& text, const std::string& origin = "script")
    {
        Script sc;
        std::istringstream in(text);
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            std::istringstream ls(line);
            std::vector<std::string> tok;
            for (std::string t; ls >> t;) tok.push_back(t);
            if (tok.empty()) continue;
            auto fail = [&](const std::string& what) -> void {
                throw ConfigError(origin + ":" + std::to_string(n) + ": " + what);
            };
            auto num = [&](const std::string& t) {
                std::size_t used = 0;
                double v = 0.0;
                try {
                    v = std::stod(t, &used);
                } catch (const std::logic_error&) {
                    used = 0;
                }
                if (used == 0 || used != t.size() || !std::isfinite(v)) fail("not a finite number: '" + t + "'");
                return v;
            };
            if (tok.size() < 2) fail("expected '<tick> <command> ...'");
            std::uint64_t tick = 0;
            {
                std::size_t used = 0;
                long long v = -1;
                try {
                    v = std::stoll(tok[0], &used);
                } catch (const std::logic_error&) {
                    used = 0;
                }
                if (used != tok[0].size() || v < 1) fail("tick must be an integer >= 1, got '" + tok[0] + "'");
                tick = static_cast<std::uint64_t>(v);
            }
            if (!sc.entries_.empty() && tick < sc.entries_.back().tick) fail("ticks must not decrease");
            const std::string& cmd = tok[1];
            const std::vector<std::string> args(tok.begin() + 2, tok.end());
            if (cmd == "walk") {
                if (args.size() != 3) fail("walk takes forward strafe turn");
                sc.entries_.push_back({tick, WalkCommand{num(args[0]), num(args[1]), num(args[2])}});
            } else if (cmd == "pose") {
                if (args.size() != 4) fail("pose takes x y z yaw_deg");
                PoseInput p;
                p.avatar = kWalkerId;
                p.head = {{num(args[0]), num(args[1]), num(args[2])}, Quat::from_yaw(deg_to_rad(num(args[3])))};
                sc.entries_.push_back({tick, p});
            } else if (cmd == "start" || cmd == "reset") {
                ScenarioCommand c;
                c.kind = cmd == "start" ? ScenarioCommandKind::Start : ScenarioCommandKind::Reset;
                for (const auto& a : args) {
                    const auto eq = a.find('=');
                    if (eq == std::string::npos) fail("override '" + a + "' is not key=value");
                    const std::string k = a.substr(0, eq), v = a.substr(eq + 1);
                    auto& o = c.overrides;
                    if (k == "vehicle_spawn_s") o.vehicle_spawn_s = num(v);
                    else if (k == "target_speed") o.target_speed = num(v);
                    else if (k == "decel") o.decel = num(v);
                    else if (k == "stop_margin") o.stop_margin = num(v);
                    else if (k == "ehmi_enabled") {
                        if (v != "true" && v != "false") fail("ehmi_enabled must be true or false");
                        o.ehmi_enabled = v == "true";
                    } else if (k == "yield_policy") {
                        if (v != "yield" && v != "ignore") fail("yield_policy must be yield or ignore");
                        o.yield_policy = v == "yield" ? YieldPolicy::Yield : YieldPolicy::Ignore;
                    } else fail("unknown override '" + k + "'");
                }
                sc.entries_.push_back({tick, c});
            } else {
                fail("unknown command '" + cmd + "'");
            }
        }
        return sc;
    }

    static Script load(const fs::path& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("script not found: " + path.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path.string());
    }

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }

    /// Merge this tick's scripted inputs over `base`: pose and walk replace, commands append.
    void apply(std::uint64_t tick, TickInputs& base) const
    {
        for (const auto& e : entries_) {
            if (e.tick != tick) continue;
            std::visit(
                [&](const auto& m) {
                    using T = std::decay_t<decltype(m)>;
                    if constexpr (std::is_same_v<T, PoseInput>) base.pose = m;
                    else if constexpr (std::is_same_v<T, WalkCommand>) base.walk = m;
                    else base.commands.push_back(m);
                },
                e.input);
        }
    }

private:
    std::vector<Entry> entries_;
};

/// Validator for commands arriving on I/O threads. Works on a copy of the
/// configuration, so it never touches the live world.
inline std::function<void(const ScenarioCommand&)> command_validator(const WorldConfig& cfg)
{
    const ScenarioConfig base = cfg.scenario;
    const VehicleModel model = cfg.vehicle;
    const BehaviorFlags behavior = cfg.behavior;
    double road_length = -1.0;
    if (cfg.map && cfg.map->crosswalks.size() == 1)
        if (const auto* r = cfg.map->find_road(cfg.map->crosswalks.front().road_id)) road_length = r->length;
    return [=](const ScenarioCommand& cmd) {
        const ScenarioConfig next = cmd.overrides.applied_to(base);
        validate_scenario(next, model, behavior);
        if (road_length >= 0.0 && next.vehicle_spawn_s >= road_length)
            throw ConfigError("vehicle_spawn_s lies beyond the end of the road");
    };
}

inline net::Ack ack_template(const WorldConfig& cfg, const std::string& map_digest)
{
    net::Ack a;
    a.map_digest = map_digest;
    a.dt_ms = cfg.dt.count();
    a.play_area = cfg.play_area;
    if (cfg.map) a.map = net::build_map_geometry(*cfg.map);
    return a;
}

struct LiveOptions {
    std::uint64_t max_ticks = 2000;
    bool realtime = false;     // pace ticks to wall-clock dt
    bool stop_at_done = true;
    bool serve = false;        // start the network gateway
    net::ServerOptions server;
    Script script;
    const std::atomic<bool>* stop = nullptr;  // operator stop
    std::function<void(std::uint16_t)> on_listening;
};

struct LiveResult {
    replay::Recording recording;
    replay::TimingStats timing;
    bool reached_done = false;
    std::uint64_t rejected_commands = 0;
};

/// Owns the world on the calling (tick) thread; the gateway, when enabled, runs on its own I/O thread.
class LiveRunner {
public:
    LiveRunner(WorldConfig world, replay::RecordingHeader header, LiveOptions opts)
        : world_(world), header_(std::move(header)), opts_(std::move(opts)),
          hub_(ack_template(world, header_.map_digest), world.avatar.joints.size(), command_validator(world))
    {
        if (header_.dt != world.dt) throw ConfigError("recording header dt differs from the world dt");
    }

    net::Hub& hub() noexcept { return hub_; }

    LiveResult run()
    {
        std::optional<net::Server> server;
        if (opts_.serve) {
            server.emplace(hub_, opts_.server);
            server->start();
            if (opts_.on_listening) opts_.on_listening(server->port());
        }

        LiveResult out;
        out.recording.header = header_;
        out.recording.avatar = world_.config().avatar;
        replay::record_tick(out.recording, world_.snapshot());
        hub_.broadcast(world_.snapshot());

        replay::TimingRecorder timing(ExecutionMode::Live, world_.config().dt);
        const auto t0 = std::chrono::steady_clock::now();
        for (std::uint64_t k = 1; k <= opts_.max_ticks; ++k) {
            if (opts_.stop && opts_.stop->load()) break;
            if (opts_.realtime) std::this_thread::sleep_until(t0 + (k - 1) * world_.config().dt);
            timing.begin_tick();
            TickInputs in = hub_.drain();
            opts_.script.apply(k, in);
            in.commands = accepted_commands(in.commands, out.rejected_commands);
            const auto& snap = world_.step(in);
            replay::record_tick(out.recording, snap);
            hub_.broadcast(snap);
            timing.end_tick();
            if (snap.phase == ScenarioPhase::Done) {
                out.reached_done = true;
                if (opts_.stop_at_done) break;
            }
        }
        out.timing = timing.finish();
        if (server) server->stop();
        return out;
    }

private:
    // Commands that passed the session check against the base config can still
    // conflict with the live state; drop those here so step() never throws.
    std::vector<ScenarioCommand> accepted_commands(const std::vector<ScenarioCommand>& cmds, std::uint64_t& rejected) const
    {
        std::vector<ScenarioCommand> ok;
        for (const auto& c : cmds) {
            ok.push_back(c);
            try {
                world_.validate_commands(ok);
            } catch (const Error&) {
                ok.pop_back();
                ++rejected;
            }
        }
        return ok;
    }

    World world_;
    replay::RecordingHeader header_;
    LiveOptions opts_;
    net::Hub hub_;
};

inline LiveResult run_live(const RunConfig& rc, LiveOptions opts)
{
    LiveRunner runner(rc.world, recording_header(rc), std::move(opts));
    return runner.run();
}

} // namespace pediloop::app
