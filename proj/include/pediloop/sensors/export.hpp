#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include "pediloop/core/bytes.hpp"
#include "pediloop/sensors/depth.hpp"
#include "pediloop/sensors/lidar.hpp"

namespace pediloop::sensors {

/// One "x y z range label" line per point; label 0 means unlabelled.
inline std::string point_cloud_text(const LidarScan& scan)
{
    std::string out;
    char buf[128];
    for (const auto& p : scan.points) {
        std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f %.6f %u\n", p.position.x, p.position.y, p.position.z, p.range,
                      p.label.value);
        out += buf;
    }
    return out;
}

inline constexpr std::uint32_t kPointCloudVersion = 1;

/// "PLPC" | u32 version | u64 tick | u32 count | count x (f64 x, y, z, range | u32 label), little-endian.
inline Bytes point_cloud_binary(const LidarScan& scan)
{
    ByteWriter w;
    w.raw(std::span(reinterpret_cast<const std::uint8_t*>("PLPC"), 4));
    w.u32(kPointCloudVersion);
    w.u64(scan.tick);
    w.u32(static_cast<std::uint32_t>(scan.points.size()));
    for (const auto& p : scan.points) {
        w.f64(p.position.x);
        w.f64(p.position.y);
        w.f64(p.position.z);
        w.f64(p.range);
        w.u32(p.label.value);
    }
    return std::move(w).take();
}

inline LidarScan parse_point_cloud_binary(std::span<const std::uint8_t> bytes)
{
    ByteReader r(bytes);
    const auto magic = r.raw(4);
    if (std::string_view(reinterpret_cast<const char*>(magic.data()), 4) != "PLPC")
        throw CorruptionError("not a point cloud (bad magic)");
    if (const auto v = r.u32(); v != kPointCloudVersion)
        throw VersionError("unsupported point cloud version " + std::to_string(v));
    LidarScan scan;
    scan.tick = r.u64();
    scan.points.resize(r.count(36));
    for (auto& p : scan.points) {
        p.position.x = r.f64();
        p.position.y = r.f64();
        p.position.z = r.f64();
        p.range = r.f64();
        p.label.value = r.u32();
    }
    if (!r.at_end()) throw CorruptionError("trailing bytes after point cloud");
    return scan;
}

inline constexpr std::uint16_t kDepthNoReturn = 65535;

/// 16-bit binary PGM, depth in millimetres (big-endian samples); 65535 marks no return.
inline Bytes depth_pgm(const DepthImage& img)
{
    std::string head = "P5\n# depth in millimetres (1 unit = 0.001 m), 65535 = no return\n" + std::to_string(img.width) +
                       " " + std::to_string(img.height) + "\n65535\n";
    Bytes out(head.begin(), head.end());
    out.reserve(out.size() + img.depth.size() * 2);
    for (double d : img.depth) {
        std::uint16_t mm = kDepthNoReturn;
        if (std::isfinite(d)) mm = static_cast<std::uint16_t>(std::clamp(std::lround(d * 1000.0), 0L, 65534L));
        out.push_back(static_cast<std::uint8_t>(mm >> 8));
        out.push_back(static_cast<std::uint8_t>(mm & 0xFF));
    }
    return out;
}

} // namespace pediloop::sensors
