#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pediloop/net/protocol.hpp"
#include "pediloop/world/types.hpp"

namespace pediloop::net {

using SessionId = std::uint64_t;

enum class SessionStatus : std::uint8_t { AwaitingHello = 0, Active = 1, Closed = 2 };

struct SessionState {
    SessionId id = 0;
    SessionStatus status = SessionStatus::AwaitingHello;
    std::optional<Role> role;
    std::string name;
    double last_input_time = 0.0;  // seconds on the hub clock

    bool operator==(const SessionState&) const = default;
};

/// What the hub knows when a session speaks: facts for the Ack and input validation.
struct SessionContext {
    Ack ack;                       // template; role and avatar are filled per session
    bool pedestrian_taken = false;
    std::size_t avatar_joints = 0;
    std::function<void(const ScenarioCommand&)> validate_command;  // throws Error on rejection
    double now = 0.0;
};

using InputMessage = std::variant<PoseInput, WalkCommand, ScenarioCommand>;

struct StepOutput {
    SessionState state;
    std::vector<Message> replies;
    std::optional<InputMessage> input;  // to be queued for the next tick
    bool claimed_pedestrian = false;
};

inline ErrorMessage error_reply(std::string code, std::string detail) { return {std::move(code), std::move(detail)}; }

namespace detail {

inline std::optional<std::string> check_pose(const PoseInput& p, const SessionContext& ctx)
{
    if (p.avatar != kWalkerId) return "unknown avatar " + std::to_string(p.avatar.value);
    auto bad = [](const Quat& q) { return !(q.norm() > 1e-6); };
    if (bad(p.head.rotation)) return std::string("head rotation is not a valid quaternion");
    for (const auto& h : p.hands)
        if (h && bad(h->rotation)) return std::string("hand rotation is not a valid quaternion");
    if (p.body_joints) {
        if (p.body_joints->size() != ctx.avatar_joints)
            return "body_joints has " + std::to_string(p.body_joints->size()) + " entries, avatar has " +
                   std::to_string(ctx.avatar_joints);
        for (const auto& q : *p.body_joints)
            if (bad(q)) return std::string("body joint rotation is not a valid quaternion");
    }
    return std::nullopt;
}

} // namespace detail

/// Session state machine for one decoded message.
inline StepOutput session_step(SessionState s, const Message& in, const SessionContext& ctx)
{
    StepOutput out;
    auto finish = [&]() -> StepOutput {
        out.state = std::move(s);
        return std::move(out);
    };
    if (s.status == SessionStatus::Closed) return finish();

    if (const auto* hello = std::get_if<Hello>(&in)) {
        if (s.status == SessionStatus::Active) {
            out.replies.push_back(error_reply("protocol_error", "hello already received on this session"));
            return finish();
        }
        if (hello->role == Role::Pedestrian && ctx.pedestrian_taken) {
            out.replies.push_back(error_reply("single_pedestrian", "another pedestrian session is active"));
            return finish();
        }
        s.status = SessionStatus::Active;
        s.role = hello->role;
        s.name = hello->name;
        Ack ack = ctx.ack;
        ack.role = hello->role;
        ack.avatar = hello->role == Role::Pedestrian ? kWalkerId : ActorId{0};
        out.claimed_pedestrian = hello->role == Role::Pedestrian;
        out.replies.push_back(std::move(ack));
        return finish();
    }
    if (s.status == SessionStatus::AwaitingHello) {
        out.replies.push_back(error_reply("protocol_error", "hello required before " + std::string(message_type(in))));
        return finish();
    }
    if (std::holds_alternative<ErrorMessage>(in)) return finish();  // client-side errors are informational
    if (std::holds_alternative<Ack>(in) || std::holds_alternative<WorldSnapshot>(in) ||
        std::holds_alternative<EventMessage>(in)) {
        out.replies.push_back(error_reply("protocol_error", std::string(message_type(in)) + " is a server-to-client message"));
        return finish();
    }
    if (s.role != Role::Pedestrian) {
        out.replies.push_back(error_reply("not_authorized", "spectators may not send " + std::string(message_type(in))));
        return finish();
    }
    if (const auto* pose = std::get_if<PoseInput>(&in)) {
        if (auto why = detail::check_pose(*pose, ctx)) {
            out.replies.push_back(error_reply("invalid_pose", *why));
            return finish();
        }
        out.input = *pose;
    } else if (const auto* walk = std::get_if<WalkCommand>(&in)) {
        out.input = *walk;
    } else if (const auto* cmd = std::get_if<ScenarioCommand>(&in)) {
        try {
            if (ctx.validate_command) ctx.validate_command(*cmd);
        } catch (const Error& e) {
            out.replies.push_back(error_reply("invalid_command", e.what()));
            return finish();
        }
        out.input = *cmd;
    }
    s.last_input_time = ctx.now;
    return finish();
}

/// Decode a raw frame and step the session. Decode failures become Error replies.
inline StepOutput session_step(SessionState s, std::string_view frame, const SessionContext& ctx)
{
    if (s.status == SessionStatus::Closed) return {std::move(s), {}, std::nullopt, false};
    try {
        return session_step(std::move(s), decode_message(frame), ctx);
    } catch (const UnknownMessageType& e) {
        return {std::move(s), {error_reply("unknown_type", e.what())}, std::nullopt, false};
    } catch (const UnsupportedVersion& e) {
        return {std::move(s), {error_reply("unsupported_version", e.what())}, std::nullopt, false};
    } catch (const DecodeError& e) {
        return {std::move(s), {error_reply("decode_error", e.what())}, std::nullopt, false};
    }
}

inline constexpr std::size_t kSnapshotQueueLimit = 64;
inline constexpr std::size_t kControlQueueLimit = 1024;

/// Outbound frames for one session. Snapshots are capped and the oldest is
/// dropped first; control frames (acks, errors, events) have a looser cap.
class OutboundQueue {
public:
    void push_snapshot(std::shared_ptr<const std::string> frame)
    {
        if (snapshots_in_queue_ >= kSnapshotQueueLimit) {
            for (auto it = frames_.begin(); it != frames_.end(); ++it)
                if (it->snapshot) {
                    frames_.erase(it);
                    --snapshots_in_queue_;
                    ++dropped_;
                    break;
                }
        }
        frames_.push_back({std::move(frame), true});
        ++snapshots_in_queue_;
    }

    void push_control(std::shared_ptr<const std::string> frame)
    {
        if (frames_.size() - snapshots_in_queue_ >= kControlQueueLimit) {
            for (auto it = frames_.begin(); it != frames_.end(); ++it)
                if (!it->snapshot) {
                    frames_.erase(it);
                    ++dropped_;
                    break;
                }
        }
        frames_.push_back({std::move(frame), false});
    }

    std::vector<std::shared_ptr<const std::string>> take()
    {
        std::vector<std::shared_ptr<const std::string>> out;
        out.reserve(frames_.size());
        for (auto& f : frames_) out.push_back(std::move(f.payload));
        frames_.clear();
        snapshots_in_queue_ = 0;
        return out;
    }

    std::size_t size() const noexcept { return frames_.size(); }
    std::size_t snapshots() const noexcept { return snapshots_in_queue_; }
    std::uint64_t dropped() const noexcept { return dropped_; }

private:
    struct Frame {
        std::shared_ptr<const std::string> payload;
        bool snapshot;
    };
    std::deque<Frame> frames_;
    std::size_t snapshots_in_queue_ = 0;
    std::uint64_t dropped_ = 0;
};

/// Thread-safe registry of sessions plus the tick input queue. Connection
/// threads call connect/receive/disconnect; the tick thread calls drain/broadcast.
class Hub {
public:
    using Notify = std::function<void()>;

    Hub(Ack ack, std::size_t avatar_joints, std::function<void(const ScenarioCommand&)> validate = {})
        : ack_(std::move(ack)), avatar_joints_(avatar_joints), validate_(std::move(validate)),
          epoch_(std::chrono::steady_clock::now())
    {
    }

    SessionId connect(Notify notify = {})
    {
        std::lock_guard lock(mu_);
        const SessionId id = ++next_id_;
        auto slot = std::make_shared<Slot>();
        slot->state.id = id;
        slot->notify = std::move(notify);
        slots_[id] = std::move(slot);
        return id;
    }

    /// Handle one inbound frame; replies are queued on the session.
    void receive(SessionId id, std::string_view frame)
    {
        auto slot = find(id);
        if (!slot) return;
        std::unique_lock hub_lock(mu_);  // pedestrian slot and input queue are hub-wide
        std::lock_guard slot_lock(slot->mu);
        SessionContext ctx{ack_, pedestrian_.has_value(), avatar_joints_, validate_, now()};
        auto out = session_step(slot->state, frame, ctx);
        if (out.claimed_pedestrian) pedestrian_ = id;
        if (out.input) enqueue(*out.input);
        hub_lock.unlock();
        slot->state = std::move(out.state);
        for (const auto& r : out.replies) slot->queue.push_control(std::make_shared<const std::string>(encode_line(r)));
        if (!out.replies.empty() && slot->notify) slot->notify();
    }

    void disconnect(SessionId id)
    {
        std::shared_ptr<Slot> slot;
        {
            std::lock_guard lock(mu_);
            const auto it = slots_.find(id);
            if (it == slots_.end()) return;
            slot = it->second;
            slots_.erase(it);
            if (pedestrian_ == id) {
                pedestrian_.reset();
                // Stop any held walk so the avatar does not keep moving unattended.
                pending_.walk = WalkCommand{};
            }
        }
        std::lock_guard slot_lock(slot->mu);
        slot->state.status = SessionStatus::Closed;
    }

    /// Everything queued since the last drain: latest pose and walk, all scenario commands in order.
    TickInputs drain()
    {
        std::lock_guard lock(mu_);
        TickInputs out = std::move(pending_);
        pending_ = {};
        return out;
    }

    /// Queue the snapshot (and one Event message per event) on every active session.
    void broadcast(const WorldSnapshot& s)
    {
        const auto payload = std::make_shared<const std::string>(encode_line(s));
        std::vector<std::shared_ptr<const std::string>> events;
        for (const auto& e : s.events) events.push_back(std::make_shared<const std::string>(encode_line(EventMessage{s.tick, e})));
        for (const auto& slot : active_slots()) {
            std::lock_guard slot_lock(slot->mu);
            if (slot->state.status != SessionStatus::Active) continue;
            slot->queue.push_snapshot(payload);
            for (const auto& e : events) slot->queue.push_control(e);
            if (slot->notify) slot->notify();
        }
    }

    std::vector<std::shared_ptr<const std::string>> take_outgoing(SessionId id)
    {
        auto slot = find(id);
        if (!slot) return {};
        std::lock_guard lock(slot->mu);
        return slot->queue.take();
    }

    std::optional<SessionState> state(SessionId id) const
    {
        auto slot = find(id);
        if (!slot) return std::nullopt;
        std::lock_guard lock(slot->mu);
        return slot->state;
    }

    std::uint64_t dropped(SessionId id) const
    {
        auto slot = find(id);
        if (!slot) return 0;
        std::lock_guard lock(slot->mu);
        return slot->queue.dropped();
    }

    std::optional<SessionId> pedestrian() const
    {
        std::lock_guard lock(mu_);
        return pedestrian_;
    }

    std::size_t session_count() const
    {
        std::lock_guard lock(mu_);
        return slots_.size();
    }

    /// Number of inputs waiting for the next tick (pose and walk count once each).
    std::size_t pending_inputs() const
    {
        std::lock_guard lock(mu_);
        return (pending_.pose ? 1 : 0) + (pending_.walk ? 1 : 0) + pending_.commands.size();
    }

    const Ack& ack_template() const noexcept { return ack_; }

private:
    struct Slot {
        mutable std::mutex mu;
        SessionState state;
        OutboundQueue queue;
        Notify notify;
    };

    double now() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_).count();
    }

    std::shared_ptr<Slot> find(SessionId id) const
    {
        std::lock_guard lock(mu_);
        const auto it = slots_.find(id);
        return it == slots_.end() ? nullptr : it->second;
    }

    std::vector<std::shared_ptr<Slot>> active_slots() const
    {
        std::lock_guard lock(mu_);
        std::vector<std::shared_ptr<Slot>> out;
        for (const auto& [id, slot] : slots_) out.push_back(slot);
        return out;
    }

    void enqueue(const InputMessage& in)
    {
        if (const auto* p = std::get_if<PoseInput>(&in)) pending_.pose = *p;
        else if (const auto* w = std::get_if<WalkCommand>(&in)) pending_.walk = *w;
        else pending_.commands.push_back(std::get<ScenarioCommand>(in));
    }

    Ack ack_;
    std::size_t avatar_joints_;
    std::function<void(const ScenarioCommand&)> validate_;
    std::chrono::steady_clock::time_point epoch_;
    mutable std::mutex mu_;
    std::map<SessionId, std::shared_ptr<Slot>> slots_;
    std::optional<SessionId> pedestrian_;
    TickInputs pending_;
    SessionId next_id_ = 0;
};

} // namespace pediloop::net
