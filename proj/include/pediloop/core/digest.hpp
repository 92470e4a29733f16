#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include <openssl/evp.h>

namespace pediloop {

using Sha256Digest = std::array<std::uint8_t, 32>;

/// Incremental SHA-256 backed by libcrypto's EVP interface.
class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free)
    {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("SHA-256 initialisation failed");
    }

    Sha256& update(std::span<const std::uint8_t> data)
    {
        if (!data.empty()) EVP_DigestUpdate(ctx_.get(), data.data(), data.size());
        return *this;
    }

    Sha256& update(std::string_view s)
    {
        return update(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
    }

    Sha256Digest finish()
    {
        Sha256Digest out{};
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_.get(), out.data(), &len);
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline Sha256Digest sha256(std::span<const std::uint8_t> data) { return Sha256().update(data).finish(); }
inline Sha256Digest sha256(std::string_view s) { return Sha256().update(s).finish(); }

inline std::string to_hex(std::span<const std::uint8_t> bytes)
{
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        s.push_back(kHex[b >> 4]);
        s.push_back(kHex[b & 0xF]);
    }
    return s;
}

} // namespace pediloop
