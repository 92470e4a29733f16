#pragma once

#include <cmath>

#include "pediloop/core/error.hpp"
#include "pediloop/mocap/bvh.hpp"
#include "pediloop/mocap/euler.hpp"

namespace pediloop::mocap {

/// Resample onto t = k * dt_out, k = 0..floor(duration / dt_out). Positions are
/// interpolated linearly; each joint's rotation is slerped as a quaternion and
/// converted back to its declared Euler order.
inline BvhClip resample_clip(const BvhClip& clip, double dt_out)
{
    if (!(dt_out > 0.0)) throw DomainError("resample step must be positive");
    if (clip.frames.empty()) throw DomainError("cannot resample a clip with no frames");

    BvhClip out;
    out.skeleton = clip.skeleton;
    out.frame_time = dt_out;

    const double ratio = dt_out / clip.frame_time;
    const std::size_t last = clip.frames.size() - 1;
    const auto count = static_cast<std::size_t>(std::floor(clip.duration() / dt_out + 1e-9)) + 1;
    out.frames.reserve(count);

    for (std::size_t k = 0; k < count; ++k) {
        const double f = static_cast<double>(k) * ratio;
        auto i0 = static_cast<std::size_t>(std::floor(f));
        double alpha = f - static_cast<double>(i0);
        if (i0 >= last) {
            i0 = last;
            alpha = 0.0;
        }
        if (alpha == 0.0) {
            out.frames.push_back(clip.frames[i0]);
            continue;
        }
        const auto& a = clip.frames[i0];
        const auto& b = clip.frames[i0 + 1];
        std::vector<double> row(a.size());
        for (const auto& joint : clip.skeleton.joints) {
            std::array<double, 3> ra{}, rb{};
            std::array<std::size_t, 3> rot_idx{};
            int n_rot = 0;
            for (std::size_t c = 0; c < joint.channels.size(); ++c) {
                const std::size_t idx = joint.channel_offset + c;
                if (is_rotation(joint.channels[c])) {
                    rot_idx[n_rot] = idx;
                    ra[n_rot] = a[idx];
                    rb[n_rot] = b[idx];
                    ++n_rot;
                } else {
                    row[idx] = a[idx] + alpha * (b[idx] - a[idx]);
                }
            }
            const auto order = joint.rotation_order();
            const Quat q = slerp(euler_to_quat(order, ra), euler_to_quat(order, rb), alpha);
            const auto e = quat_to_euler(order, q);
            for (int r = 0; r < n_rot; ++r) row[rot_idx[r]] = e[r];
        }
        out.frames.push_back(std::move(row));
    }
    return out;
}

} // namespace pediloop::mocap
