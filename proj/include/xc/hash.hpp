#pragma once

#include <cstdint>
#include <cstring>
#include <string>

#include "xc/tensor.hpp"

namespace xc {

/// FNV-1a over raw bytes; used to fingerprint frozen parameter blocks.
inline std::uint64_t fnv1a(const void* bytes, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t hash_tensor(const Tensor& t, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (auto d : t.shape) h = fnv1a(&d, sizeof(d), h);
    if (!t.data.empty()) h = fnv1a(t.data.data(), t.data.size() * sizeof(double), h);
    return h;
}

std::string hash_hex(std::uint64_t h);

}  // namespace xc
