#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ghsim/gateway/telemetry_block.hpp"

namespace ghsim::bus {

/// Each entry: node u8 | kind u8 | value i16 BE (0.1 units) | age u16 BE (s).
inline constexpr std::size_t kTelemetryEntrySize = 6;
inline constexpr double kValueScale = 0.1;
inline constexpr std::uint8_t kValueSaturatedFlag = 0x80;
inline constexpr std::uint8_t kAgeSaturatedFlag = 0x40;
inline constexpr std::uint8_t kKindMask = 0x3F;

struct EncodedTelemetry {
  std::vector<std::uint8_t> bytes;
  std::size_t saturated = 0;
};

inline EncodedTelemetry telemetry_to_payload(const gw::TelemetryBlock& block) {
  if (block.empty()) throw std::invalid_argument("telemetry block is empty");
  EncodedTelemetry out;
  out.bytes.reserve(block.entries.size() * kTelemetryEntrySize);
  for (const auto& e : block.entries) {
    std::uint8_t kind = static_cast<std::uint8_t>(e.kind);
    const double scaled = std::round(e.value / kValueScale);
    std::int16_t v = 0;
    if (!std::isfinite(scaled) || scaled > std::numeric_limits<std::int16_t>::max() ||
        scaled < std::numeric_limits<std::int16_t>::min()) {
      v = (std::isfinite(scaled) && scaled < 0) ? std::numeric_limits<std::int16_t>::min()
                                                 : std::numeric_limits<std::int16_t>::max();
      kind |= kValueSaturatedFlag;
      ++out.saturated;
    } else {
      v = static_cast<std::int16_t>(scaled);
    }
    std::uint16_t age = 0;
    if (e.age > 0xFFFF) {
      age = 0xFFFF;
      kind |= kAgeSaturatedFlag;
    } else {
      age = static_cast<std::uint16_t>(e.age < 0 ? 0 : e.age);
    }
    const auto uv = static_cast<std::uint16_t>(v);
    out.bytes.push_back(static_cast<std::uint8_t>(e.node_id));
    out.bytes.push_back(kind);
    out.bytes.push_back(static_cast<std::uint8_t>(uv >> 8));
    out.bytes.push_back(static_cast<std::uint8_t>(uv & 0xFF));
    out.bytes.push_back(static_cast<std::uint8_t>(age >> 8));
    out.bytes.push_back(static_cast<std::uint8_t>(age & 0xFF));
  }
  return out;
}

struct DecodedTelemetry {
  gw::TelemetryBlock block;
  std::vector<std::uint8_t> flags;  // saturation flags per entry
};

/// nullopt for a payload that is not a whole number of entries or names an unknown sensor.
inline std::optional<DecodedTelemetry> payload_to_telemetry(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % kTelemetryEntrySize != 0) return std::nullopt;
  DecodedTelemetry d;
  for (std::size_t i = 0; i < bytes.size(); i += kTelemetryEntrySize) {
    const auto kind = mesh::kind_from_code(bytes[i + 1] & kKindMask);
    if (!kind) return std::nullopt;
    const auto raw = static_cast<std::int16_t>(static_cast<std::uint16_t>((bytes[i + 2] << 8) | bytes[i + 3]));
    const auto age = static_cast<std::uint16_t>((bytes[i + 4] << 8) | bytes[i + 5]);
    d.block.entries.push_back(gw::TelemetryEntry{bytes[i], *kind, raw * kValueScale, age});
    d.flags.push_back(bytes[i + 1] & static_cast<std::uint8_t>(~kKindMask));
  }
  return d;
}

}  // namespace ghsim::bus
