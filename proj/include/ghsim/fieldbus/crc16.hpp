#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace ghsim::bus {

namespace detail {

constexpr std::array<std::uint16_t, 256> make_ccitt_table() {
  std::array<std::uint16_t, 256> t{};
  for (std::uint16_t i = 0; i < 256; ++i) {
    std::uint16_t c = static_cast<std::uint16_t>(i << 8);
    for (int b = 0; b < 8; ++b) c = (c & 0x8000) ? static_cast<std::uint16_t>((c << 1) ^ 0x1021) : static_cast<std::uint16_t>(c << 1);
    t[i] = c;
  }
  return t;
}

inline constexpr auto kCcittTable = make_ccitt_table();

}  // namespace detail

/// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
constexpr std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> data, std::uint16_t crc = 0xFFFF) {
  for (const std::uint8_t byte : data) {
    crc = static_cast<std::uint16_t>((crc << 8) ^ detail::kCcittTable[((crc >> 8) ^ byte) & 0xFF]);
  }
  return crc;
}

}  // namespace ghsim::bus
