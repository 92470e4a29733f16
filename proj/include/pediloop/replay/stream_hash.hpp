#pragma once

#include <span>

#include "pediloop/core/bytes.hpp"
#include "pediloop/core/digest.hpp"
#include "pediloop/world/snapshot_codec.hpp"

namespace pediloop::replay {

/// Incremental, order-sensitive digest: SHA-256 over (u32 length | canonical bytes)
/// for each snapshot. The empty stream hashes to SHA-256 of no input.
class StreamHasher {
public:
    void add(const WorldSnapshot& s)
    {
        const Bytes b = encode_snapshot(s);
        ByteWriter len;
        len.u32(static_cast<std::uint32_t>(b.size()));
        sha_.update(len.bytes());
        sha_.update(b);
        ++count_;
    }

    std::size_t count() const noexcept { return count_; }
    Sha256Digest finish() { return sha_.finish(); }

private:
    Sha256 sha_;
    std::size_t count_ = 0;
};

inline Sha256Digest hash_snapshot_stream(std::span<const WorldSnapshot> snapshots)
{
    StreamHasher h;
    for (const auto& s : snapshots) h.add(s);
    return h.finish();
}

} // namespace pediloop::replay
