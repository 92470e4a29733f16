#pragma once

#include <atomic>
#include <cstdint>
#include <string_view>

#include "pediloop/core/error.hpp"

namespace pediloop {

enum class ExecutionMode : std::uint8_t { Live = 0, Replay = 1 };

inline std::string_view to_string(ExecutionMode m) noexcept { return m == ExecutionMode::Live ? "live" : "replay"; }

namespace sensors {

/// Process-wide count of sensor operation attempts, including rejected ones.
/// Tests read it to prove the live scheduler never reaches a sensor.
inline std::atomic<std::uint64_t>& invocation_counter() noexcept
{
    static std::atomic<std::uint64_t> counter{0};
    return counter;
}

inline void require_replay(ExecutionMode mode, std::string_view op)
{
    invocation_counter().fetch_add(1, std::memory_order_relaxed);
    if (mode != ExecutionMode::Replay)
        throw ModeViolation(std::string(op) + " is only available in replay mode");
}

} // namespace sensors
} // namespace pediloop
