#pragma once

#include "pediloop/core/bytes.hpp"
#include "pediloop/core/digest.hpp"
#include "pediloop/core/error.hpp"
#include "pediloop/core/math.hpp"
#include "pediloop/core/shapes.hpp"
#include "pediloop/map/map_model.hpp"
#include "pediloop/map/opendrive.hpp"
#include "pediloop/mocap/bvh.hpp"
#include "pediloop/mocap/euler.hpp"
#include "pediloop/mocap/resample.hpp"
#include "pediloop/mocap/retarget.hpp"
#include "pediloop/net/protocol.hpp"
#include "pediloop/net/server.hpp"
#include "pediloop/net/session.hpp"
#include "pediloop/presence/presence.hpp"
#include "pediloop/replay/recording.hpp"
#include "pediloop/replay/replay.hpp"
#include "pediloop/replay/stream_hash.hpp"
#include "pediloop/replay/timing.hpp"
#include "pediloop/sensors/depth.hpp"
#include "pediloop/sensors/export.hpp"
#include "pediloop/sensors/geometry.hpp"
#include "pediloop/sensors/lidar.hpp"
#include "pediloop/sensors/mode.hpp"
#include "pediloop/world/audio.hpp"
#include "pediloop/world/collision.hpp"
#include "pediloop/world/ehmi.hpp"
#include "pediloop/world/scenario.hpp"
#include "pediloop/world/snapshot_codec.hpp"
#include "pediloop/world/types.hpp"
#include "pediloop/world/vehicle.hpp"
#include "pediloop/world/walker.hpp"
#include "pediloop/world/world.hpp"
