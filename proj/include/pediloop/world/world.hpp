#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pediloop/core/error.hpp"
#include "pediloop/map/map_model.hpp"
#include "pediloop/mocap/retarget.hpp"
#include "pediloop/world/audio.hpp"
#include "pediloop/world/collision.hpp"
#include "pediloop/world/ehmi.hpp"
#include "pediloop/world/scenario.hpp"
#include "pediloop/world/types.hpp"
#include "pediloop/world/vehicle.hpp"
#include "pediloop/world/walker.hpp"

namespace pediloop {

struct WorldConfig {
    Milliseconds dt{55};
    std::shared_ptr<const map::MapModel> map;  // null: empty world without a vehicle
    ScenarioConfig scenario;
    VehicleModel vehicle;
    BehaviorFlags behavior;
    PlayArea play_area;
    Vec2 walker_spawn{};
    double walker_yaw = 0.0;
    mocap::AvatarSkeleton avatar;
    Deadzone deadzone;
    bool autostart = false;
};

/// Fixed-step simulation of one vehicle and one walker at a single crosswalk.
class World {
public:
    explicit World(WorldConfig cfg) : cfg_(std::move(cfg)), active_(cfg_.scenario)
    {
        if (cfg_.dt.count() <= 0) throw ConfigError("tick step must be a positive number of milliseconds");
        cfg_.play_area.validate();
        validate_vehicle_model(cfg_.vehicle);
        if (cfg_.map) {
            if (cfg_.map->crosswalks.size() != 1)
                throw ScenarioSetupError("map must contain exactly one crosswalk, found " +
                                         std::to_string(cfg_.map->crosswalks.size()));
            crosswalk_ = &cfg_.map->crosswalks.front();
            road_ = cfg_.map->find_road(crosswalk_->road_id);
            if (!road_) throw ScenarioSetupError("crosswalk references unknown road " + crosswalk_->road_id);
        }
        validate_active(active_);
        respawn();
    }

    const WorldConfig& config() const noexcept { return cfg_; }
    const ScenarioConfig& active_scenario() const noexcept { return active_; }
    const WorldSnapshot& snapshot() const noexcept { return snap_; }
    double dt_seconds() const noexcept { return to_seconds(cfg_.dt); }

    /// Check a start/reset command without applying it.
    void validate_command(const ScenarioCommand& cmd) const
    {
        const ScenarioConfig base = cmd.kind == ScenarioCommandKind::Reset ? cfg_.scenario : active_;
        validate_active(cmd.overrides.applied_to(base));
    }

    /// Check a tick's command list in order, as step() would apply it. Throws on the first rejected command.
    void validate_commands(const std::vector<ScenarioCommand>& cmds) const
    {
        ScenarioConfig active = active_;
        bool started = started_;
        for (const auto& cmd : cmds) {
            const bool reset = cmd.kind == ScenarioCommandKind::Reset;
            const ScenarioConfig next = cmd.overrides.applied_to(reset ? cfg_.scenario : active);
            validate_active(next);
            if (reset || !started) active = next;
            started = !reset;
        }
    }

    const WorldSnapshot& step(const TickInputs& in)
    {
        const double dt = dt_seconds();
        std::vector<ScenarioEvent> events;
        validate_commands(in.commands);  // before any state changes

        // Scenario logic, against the state at the end of the previous tick.
        for (const auto& cmd : in.commands) handle_command(cmd, events);
        if (cfg_.autostart && !started_ && snap_.phase == ScenarioPhase::Waiting) start(events);
        if (in.walk) walk_ = *in.walk;
        update_phase(events);
        std::optional<VehicleControl> control;
        if (has_vehicle()) control = decide_control(events);

        // Vehicle control and integration.
        if (control) {
            auto& v = snap_.vehicles.front();
            v = apply_vehicle_control(v, *control, cfg_.vehicle, dt);
            v = integrate_vehicle(v, cfg_.vehicle, dt);
        }

        // Walker.
        if (in.pose) {
            auto up = update_walker_from_input(snap_.walker, *in.pose, cfg_.play_area, cfg_.avatar, last_head_,
                                               cfg_.deadzone);
            snap_.walker = std::move(up.walker);
            last_head_ = up.last_head;
            if (up.applied) note_clamp(up.events, events);
        }
        if (walk_ != WalkCommand{}) {
            auto up = apply_walk(snap_.walker, walk_, cfg_.play_area, cfg_.avatar, dt);
            snap_.walker = std::move(up.walker);
            if (up.applied) note_clamp(up.events, events);
        }

        // eHMI.
        if (has_vehicle()) {
            auto& v = snap_.vehicles.front();
            const auto up = update_ehmi(v, braking_ && !released_, active_.ehmi_enabled);
            if (up.changed)
                events.push_back({up.state.activated ? EventKind::EhmiActivated : EventKind::EhmiDeactivated, v.id,
                                  ScenarioPhase::Waiting});
            v.ehmi = up.state;
        }

        // Collision.
        const auto hits = check_collision(snap_.walker, snap_.vehicles, collided_);
        events.insert(events.end(), hits.begin(), hits.end());
        if (!hits.empty() && started_ && snap_.phase != ScenarioPhase::Done) set_phase(ScenarioPhase::Done, events);

        // Audio.
        snap_.audio = compute_audio_levels(head_world(snap_.walker, cfg_.avatar), snap_.vehicles);
        snap_.ambient_level = kAmbientLevel;

        ++snap_.tick;
        snap_.sim_time_ms = static_cast<std::int64_t>(snap_.tick) * cfg_.dt.count();
        snap_.events = std::move(events);
        return snap_;
    }

private:
    bool has_vehicle() const noexcept { return road_ != nullptr && !snap_.vehicles.empty(); }

    void validate_active(const ScenarioConfig& c) const
    {
        validate_scenario(c, cfg_.vehicle, cfg_.behavior);
        if (road_) {
            if (c.vehicle_spawn_s >= road_->length)
                throw ConfigError("vehicle_spawn_s lies beyond the end of road " + road_->id);
            (void)map::lane_center_offset(*road_, c.vehicle_spawn_s, c.lane);
        }
    }

    double lane_t(double s) const { return map::lane_center_offset(*road_, std::clamp(s, 0.0, road_->length), active_.lane); }

    void respawn_vehicle()
    {
        snap_.vehicles.clear();
        if (road_) {
            VehicleState v;
            v.id = kVehicleId;
            const auto ref = map::sample_reference_line(*road_, active_.vehicle_spawn_s);
            const Vec2 p = map::road_to_world(*road_, {active_.vehicle_spawn_s, lane_t(active_.vehicle_spawn_s)});
            v.transform = {{p.x, p.y, 0.0}, Quat::from_yaw(ref.heading)};
            v.behavior = cfg_.behavior;
            v.behavior.ignore_pedestrians = active_.yield_policy == YieldPolicy::Ignore;
            v.dimensions = cfg_.vehicle.dimensions;
            v.brake = 1.0;
            snap_.vehicles.push_back(v);
        }
        started_ = braking_ = released_ = route_end_ = false;
        collided_.clear();
    }

    void respawn()
    {
        snap_.phase = ScenarioPhase::Waiting;
        respawn_vehicle();
        snap_.walker = spawn_walker(cfg_.avatar, cfg_.walker_spawn, cfg_.walker_yaw);
        snap_.audio = compute_audio_levels(head_world(snap_.walker, cfg_.avatar), snap_.vehicles);
        outside_ = false;
        entry_side_ = 0;
        last_side_ = road_ ? road_side(*road_, snap_.walker.root.position.xy()) : 0;
        last_head_.reset();
        walk_ = {};
    }

    void start(std::vector<ScenarioEvent>& events)
    {
        respawn_vehicle();
        started_ = true;
        if (!snap_.vehicles.empty()) {
            snap_.vehicles.front().speed = active_.target_speed;
            snap_.vehicles.front().brake = 0.0;
        }
        events.push_back({EventKind::ScenarioStarted, {}, ScenarioPhase::Waiting});
        if (road_) set_phase(ScenarioPhase::VehicleApproaching, events);
    }

    void handle_command(const ScenarioCommand& cmd, std::vector<ScenarioEvent>& events)
    {
        validate_command(cmd);
        if (cmd.kind == ScenarioCommandKind::Reset) {
            active_ = cmd.overrides.applied_to(cfg_.scenario);
            respawn();
            events.push_back({EventKind::ScenarioReset, {}, ScenarioPhase::Waiting});
            return;
        }
        if (started_) return;
        active_ = cmd.overrides.applied_to(active_);
        start(events);
    }

    void set_phase(ScenarioPhase p, std::vector<ScenarioEvent>& events)
    {
        if (snap_.phase == p) return;
        snap_.phase = p;
        events.push_back({EventKind::PhaseChanged, {}, p});
    }

    void update_phase(std::vector<ScenarioEvent>& events)
    {
        if (!road_ || !started_ || snap_.phase == ScenarioPhase::Done) return;
        const Vec2 p = snap_.walker.root.position.xy();
        const bool inside = map::point_in_polygon(crosswalk_->polygon, p);
        if (snap_.phase == ScenarioPhase::PedestrianCrossing) {
            if (inside) return;
            const int side = road_side(*road_, p);
            if (side != 0 && side == -entry_side_) set_phase(ScenarioPhase::Done, events);
            else set_phase(ScenarioPhase::VehicleApproaching, events);
        } else if (inside) {
            entry_side_ = last_side_;
            set_phase(ScenarioPhase::PedestrianCrossing, events);
        }
        if (!inside) last_side_ = road_side(*road_, p);
    }

    VehicleControl decide_control(std::vector<ScenarioEvent>& events)
    {
        auto& v = snap_.vehicles.front();
        if (!started_) return {0.0, 1.0, 0.0};
        const Vec3& pos = v.transform.position;
        const double s = map::project_to_road(*road_, pos.xy()).s;
        const double front = s + 0.5 * v.dimensions.x;

        if (!route_end_ && front >= road_->length - 0.5) {
            route_end_ = true;
            events.push_back({EventKind::RouteEnd, v.id, ScenarioPhase::Waiting});
        }
        if (route_end_) return {0.0, 1.0, 0.0};

        if (snap_.phase == ScenarioPhase::Done && braking_ && !released_) {
            released_ = true;
            events.push_back({EventKind::VehicleResumed, v.id, ScenarioPhase::Waiting});
        }

        VehicleControl c;
        if (active_.yield_policy == YieldPolicy::Yield && !braking_ && snap_.phase != ScenarioPhase::Done) {
            const double d = crosswalk_->s_start - front;
            if (d > 0.0 && d <= yield_trigger_distance(active_, v.speed)) {
                braking_ = true;
                events.push_back({EventKind::VehicleYielding, v.id, ScenarioPhase::Waiting});
            }
        }
        if (braking_ && !released_) c.brake = yield_brake(active_, cfg_.vehicle);
        else c = speed_control(cfg_.vehicle, v.speed, active_.target_speed);

        const double lookahead = std::max(4.0, 0.8 * v.speed);
        c.steer = pursuit_steer(v, cfg_.vehicle, *road_, lane_t(s + lookahead), lookahead);
        return c;
    }

    void note_clamp(const std::vector<ScenarioEvent>& update_events, std::vector<ScenarioEvent>& events)
    {
        const bool clamped = !update_events.empty();
        if (clamped && !outside_) events.insert(events.end(), update_events.begin(), update_events.end());
        outside_ = clamped;
    }

    WorldConfig cfg_;
    ScenarioConfig active_;
    const map::Crosswalk* crosswalk_ = nullptr;
    const map::Road* road_ = nullptr;
    WorldSnapshot snap_;
    bool started_ = false;
    bool braking_ = false;
    bool released_ = false;
    bool route_end_ = false;
    bool outside_ = false;
    int entry_side_ = 0;
    int last_side_ = 0;
    std::set<ActorId> collided_;
    std::optional<Transform> last_head_;
    WalkCommand walk_{};
};

} // namespace pediloop
