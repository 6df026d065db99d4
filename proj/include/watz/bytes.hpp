#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace watz {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

template <std::size_t N>
using ByteArray = std::array<std::uint8_t, N>;

std::string to_hex(ByteView bytes);

/// Accepts upper or lower case; throws std::invalid_argument on odd length
/// or a non-hex character.
Bytes from_hex(std::string_view hex);

template <std::size_t N>
ByteArray<N> array_from_hex(std::string_view hex) {
  const Bytes raw = from_hex(hex);
  if (raw.size() != N) {
    throw std::invalid_argument("expected " + std::to_string(N) + " bytes of hex, got " +
                                std::to_string(raw.size()));
  }
  ByteArray<N> out{};
  std::copy(raw.begin(), raw.end(), out.begin());
  return out;
}

template <std::size_t N>
ByteArray<N> array_from(ByteView bytes) {
  if (bytes.size() != N) {
    throw std::invalid_argument("expected " + std::to_string(N) + " bytes, got " +
                                std::to_string(bytes.size()));
  }
  ByteArray<N> out{};
  std::copy(bytes.begin(), bytes.end(), out.begin());
  return out;
}

inline void append(Bytes& out, ByteView bytes) { out.insert(out.end(), bytes.begin(), bytes.end()); }

inline void append_u32_be(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t load_u32_be(ByteView bytes) {
  return (std::uint32_t{bytes[0]} << 24) | (std::uint32_t{bytes[1]} << 16) |
         (std::uint32_t{bytes[2]} << 8) | std::uint32_t{bytes[3]};
}

/// Constant-time comparison for MACs and keys.
bool equal_ct(ByteView a, ByteView b);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, ByteView bytes);

}  // namespace watz
