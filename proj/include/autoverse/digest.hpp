#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace autoverse {

using Sha256 = std::array<std::uint8_t, 32>;

// Reuses one digest context per thread.
inline Sha256 sha256(std::span<const std::uint8_t> bytes) {
    struct Ctx {
        EVP_MD_CTX* ctx = EVP_MD_CTX_new();
        ~Ctx() { EVP_MD_CTX_free(ctx); }
    };
    thread_local Ctx t;
    Sha256 out{};
    unsigned int len = 0;
    if (t.ctx == nullptr || EVP_DigestInit_ex(t.ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(t.ctx, bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(t.ctx, out.data(), &len) != 1) {
        throw std::runtime_error("sha256 digest failed");
    }
    return out;
}

inline Sha256 sha256(std::string_view text) {
    return sha256(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xf]);
    }
    return s;
}

} // namespace autoverse
