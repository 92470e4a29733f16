#pragma once

#include "pediloop/world/types.hpp"

namespace pediloop {

struct EhmiUpdate {
    EhmiState state;
    bool changed = false;
};

/// The lamp is lit exactly while the feature is enabled and the vehicle intends to brake.
inline EhmiUpdate update_ehmi(const VehicleState& v, bool braking_intent, bool enabled) noexcept
{
    EhmiState next;
    next.activated = enabled && braking_intent;
    next.color = next.activated ? EhmiColor::Cyan : EhmiColor::Off;
    return {next, next != v.ehmi};
}

} // namespace pediloop
