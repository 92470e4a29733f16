#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

#include "pediloop/sensors/mode.hpp"
#include "pediloop/world/types.hpp"

namespace pediloop::replay {

struct TimingStats {
    ExecutionMode mode = ExecutionMode::Live;
    Milliseconds dt{55};
    std::vector<std::chrono::nanoseconds> durations;  // wall time per tick
    std::chrono::nanoseconds total{0};                // wall time of the whole run
    std::uint64_t sensor_invocations = 0;              // sensor operations observed during the run

    double achieved_fps() const noexcept
    {
        const double secs = std::chrono::duration<double>(total).count();
        return secs > 0.0 ? static_cast<double>(durations.size()) / secs : 0.0;
    }

    std::size_t budget_violations() const noexcept
    {
        std::size_t n = 0;
        for (auto d : durations)
            if (d > dt) ++n;
        return n;
    }

    /// A live run that reached any sensor operation broke the mode contract.
    bool sensor_violation() const noexcept { return mode == ExecutionMode::Live && sensor_invocations > 0; }
};

/// Wall-clock instrumentation around a run's ticks.
class TimingRecorder {
public:
    using Clock = std::chrono::steady_clock;

    TimingRecorder(ExecutionMode mode, Milliseconds dt) : start_(Clock::now()), sensors_at_start_(sensors::invocation_counter().load())
    {
        stats_.mode = mode;
        stats_.dt = dt;
    }

    void begin_tick() noexcept { tick_start_ = Clock::now(); }
    void end_tick() { stats_.durations.push_back(Clock::now() - tick_start_); }

    TimingStats finish()
    {
        stats_.total = Clock::now() - start_;
        stats_.sensor_invocations = sensors::invocation_counter().load() - sensors_at_start_;
        return stats_;
    }

private:
    TimingStats stats_;
    Clock::time_point start_;
    Clock::time_point tick_start_{};
    std::uint64_t sensors_at_start_;
};

/// Time `ticks` calls of `body(k)`.
template <typename Body>
TimingStats measure_timing(ExecutionMode mode, Milliseconds dt, std::size_t ticks, Body&& body)
{
    TimingRecorder rec(mode, dt);
    for (std::size_t k = 0; k < ticks; ++k) {
        rec.begin_tick();
        body(k);
        rec.end_tick();
    }
    return rec.finish();
}

} // namespace pediloop::replay
