#pragma once

#include <sodium.h>

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "modeltrust/errors.hpp"

namespace modeltrust {

using Digest = std::array<std::uint8_t, 32>;
using Bytes = std::basic_string<std::uint8_t>;

inline void ensure_sodium() {
  static const bool ok = [] { return sodium_init() >= 0; }();
  if (!ok) throw Error("libsodium initialization failed");
}

// Number of SHA-256 finalizations performed process-wide. Tests use the
// counter to bound the work done by proof verification.
inline std::atomic<std::uint64_t>& sha256_evaluations() {
  static std::atomic<std::uint64_t> counter{0};
  return counter;
}

class Sha256 {
 public:
  Sha256() {
    ensure_sodium();
    crypto_hash_sha256_init(&state_);
  }

  Sha256& update(std::span<const std::uint8_t> data) {
    crypto_hash_sha256_update(&state_, data.data(), data.size());
    return *this;
  }
  Sha256& update(std::string_view data) {
    crypto_hash_sha256_update(&state_, reinterpret_cast<const unsigned char*>(data.data()),
                              data.size());
    return *this;
  }
  Sha256& update(std::uint8_t byte) {
    crypto_hash_sha256_update(&state_, &byte, 1);
    return *this;
  }

  Digest finish() {
    Digest out{};
    crypto_hash_sha256_final(&state_, out.data());
    sha256_evaluations().fetch_add(1, std::memory_order_relaxed);
    return out;
  }

 private:
  crypto_hash_sha256_state state_{};
};

inline Digest sha256(std::span<const std::uint8_t> data) { return Sha256().update(data).finish(); }
inline Digest sha256(std::string_view data) { return Sha256().update(data).finish(); }

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

// Lowercase only; uppercase input is rejected so every hash has one spelling.
inline std::optional<Bytes> from_hex(std::string_view text) {
  if (text.size() % 2 != 0) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  Bytes out;
  out.reserve(text.size() / 2);
  for (std::size_t i = 0; i < text.size(); i += 2) {
    int hi = nibble(text[i]);
    int lo = nibble(text[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

inline std::optional<Digest> digest_from_hex(std::string_view text) {
  auto bytes = from_hex(text);
  if (!bytes || bytes->size() != 32) return std::nullopt;
  Digest d{};
  std::copy(bytes->begin(), bytes->end(), d.begin());
  return d;
}

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace modeltrust
