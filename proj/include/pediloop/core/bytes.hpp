#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pediloop/core/error.hpp"

namespace pediloop {

using Bytes = std::vector<std::uint8_t>;

/// Little-endian writer used for every canonical binary encoding.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v) { put(v); }
    void u64(std::uint64_t v) { put(v); }
    void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v)); }

    void f64(double v)
    {
        // Canonicalize -0.0 so equal values always encode to equal bytes.
        if (v == 0.0) v = 0.0;
        put(std::bit_cast<std::uint64_t>(v));
    }

    void boolean(bool v) { u8(v ? 1 : 0); }

    void str(std::string_view s)
    {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
    }

    void raw(std::span<const std::uint8_t> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }

    const Bytes& bytes() const& noexcept { return buf_; }
    Bytes take() && noexcept { return std::move(buf_); }

private:
    template <typename T>
    void put(T v)
    {
        for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    Bytes buf_;
};

/// Bounds-checked little-endian reader. Underflow throws CorruptionError.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() { need(1); return data_[pos_++]; }
    std::uint32_t u32() { return get<std::uint32_t>(); }
    std::uint64_t u64() { return get<std::uint64_t>(); }
    std::int64_t i64() { return static_cast<std::int64_t>(get<std::uint64_t>()); }
    double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }

    bool boolean()
    {
        const auto v = u8();
        if (v > 1) throw CorruptionError("invalid boolean byte at offset " + std::to_string(pos_ - 1));
        return v == 1;
    }

    std::string str()
    {
        const auto n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    std::span<const std::uint8_t> raw(std::size_t n)
    {
        need(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    /// Element count guard: rejects counts that could not possibly fit.
    std::uint32_t count(std::size_t min_element_size)
    {
        const auto n = u32();
        if (min_element_size > 0 && n > remaining() / min_element_size)
            throw CorruptionError("element count " + std::to_string(n) + " exceeds remaining data");
        return n;
    }

    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    bool at_end() const noexcept { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const
    {
        if (n > remaining())
            throw CorruptionError("unexpected end of data at offset " + std::to_string(pos_));
    }

    template <typename T>
    T get()
    {
        need(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(data_[pos_ + i]) << (8 * i);
        pos_ += sizeof(T);
        return v;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

} // namespace pediloop
