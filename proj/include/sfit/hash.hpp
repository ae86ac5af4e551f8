#pragma once

#include <cstdint>
#include <cstring>
#include <string>

#include "sfit/tensor.hpp"

namespace sfit {

// FNV-1a over raw bytes. Used for run ids and checkpoint content hashes in
// manifests; not a cryptographic digest.
inline std::uint64_t fnv1a64(const void* bytes, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64(s.data(), s.size(), h);
}

template <typename T>
std::uint64_t fnv1a64(const Tensor<T>& t, std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64(t.data(), t.numel() * sizeof(T), h);
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace sfit
