#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "ghsim/fieldbus/crc16.hpp"

namespace ghsim::bus {

inline constexpr std::uint8_t kSof = 0x7E;
inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kMaxPayload = 1024;
/// sof + version + seq(2) + type + len(2) + crc(2)
inline constexpr std::size_t kFrameOverhead = 9;

enum class MsgType : std::uint8_t { TelemetryBlock = 0x01, Ack = 0x02, Nack = 0x03 };

enum class FrameError { None, BadSof, TruncatedFrame, BadCrc, BadLength, BadType };

inline std::string_view to_string(FrameError e) {
  switch (e) {
    case FrameError::None: return "None";
    case FrameError::BadSof: return "BadSof";
    case FrameError::TruncatedFrame: return "TruncatedFrame";
    case FrameError::BadCrc: return "BadCrc";
    case FrameError::BadLength: return "BadLength";
    case FrameError::BadType: return "BadType";
  }
  return "?";
}

struct GwMessage {
  std::uint8_t version = kProtocolVersion;
  std::uint16_t seq = 0;
  MsgType type = MsgType::Ack;
  std::vector<std::uint8_t> payload;

  bool operator==(const GwMessage&) const = default;
};

/// Big-endian layout: 7E | ver | seq hi lo | type | len hi lo | payload | crc hi lo.
/// The CRC covers ver..payload.
inline std::vector<std::uint8_t> encode_frame(const GwMessage& m) {
  if (m.payload.size() > kMaxPayload) throw std::length_error("GwFrame payload exceeds 1024 bytes");
  std::vector<std::uint8_t> out;
  out.reserve(kFrameOverhead + m.payload.size());
  out.push_back(kSof);
  out.push_back(m.version);
  out.push_back(static_cast<std::uint8_t>(m.seq >> 8));
  out.push_back(static_cast<std::uint8_t>(m.seq & 0xFF));
  out.push_back(static_cast<std::uint8_t>(m.type));
  const auto len = static_cast<std::uint16_t>(m.payload.size());
  out.push_back(static_cast<std::uint8_t>(len >> 8));
  out.push_back(static_cast<std::uint8_t>(len & 0xFF));
  out.insert(out.end(), m.payload.begin(), m.payload.end());
  const std::uint16_t crc = crc16_ccitt_false(std::span(out).subspan(1));
  out.push_back(static_cast<std::uint8_t>(crc >> 8));
  out.push_back(static_cast<std::uint8_t>(crc & 0xFF));
  return out;
}

struct DecodeResult {
  std::optional<GwMessage> message;
  FrameError error = FrameError::None;
  /// Bytes making up the frame (valid or not); 0 when more input is needed.
  std::size_t consumed = 0;

  bool ok() const { return message.has_value(); }
};

/// Decodes the frame at the start of `bytes`; trailing bytes are left alone.
inline DecodeResult decode_frame_prefix(std::span<const std::uint8_t> bytes) {
  DecodeResult r;
  if (bytes.empty()) {
    r.error = FrameError::TruncatedFrame;
    return r;
  }
  if (bytes[0] != kSof) {
    r.error = FrameError::BadSof;
    r.consumed = 1;
    return r;
  }
  if (bytes.size() < 7) {
    r.error = FrameError::TruncatedFrame;
    return r;
  }
  const std::size_t len = (static_cast<std::size_t>(bytes[5]) << 8) | bytes[6];
  if (len > kMaxPayload) {
    r.error = FrameError::BadLength;
    r.consumed = 1;
    return r;
  }
  const std::size_t total = kFrameOverhead + len;
  if (bytes.size() < total) {
    r.error = FrameError::TruncatedFrame;
    return r;
  }
  r.consumed = total;
  const std::uint16_t want = static_cast<std::uint16_t>((bytes[total - 2] << 8) | bytes[total - 1]);
  if (crc16_ccitt_false(bytes.subspan(1, total - 3)) != want) {
    r.error = FrameError::BadCrc;
    return r;
  }
  const std::uint8_t type = bytes[4];
  if (type < 0x01 || type > 0x03) {
    r.error = FrameError::BadType;
    return r;
  }
  GwMessage m;
  m.version = bytes[1];
  m.seq = static_cast<std::uint16_t>((bytes[2] << 8) | bytes[3]);
  m.type = static_cast<MsgType>(type);
  m.payload.assign(bytes.begin() + 7, bytes.begin() + static_cast<std::ptrdiff_t>(7 + len));
  r.message = std::move(m);
  return r;
}

/// Decodes a buffer that must hold exactly one frame. A length field that
/// disagrees with the buffer size is reported as BadLength.
inline DecodeResult decode_frame(std::span<const std::uint8_t> bytes) {
  DecodeResult r = decode_frame_prefix(bytes);
  if (r.consumed != 0 && r.consumed != bytes.size() && r.error != FrameError::BadSof) {
    r.message.reset();
    r.error = FrameError::BadLength;
  }
  r.consumed = bytes.size();
  return r;
}

/// Reassembles frames from an arbitrary byte stream, resynchronising on SOF
/// after garbage or a corrupted frame.
class FrameAssembler {
 public:
  void feed(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

  /// Next complete frame result, or nullopt when more bytes are needed.
  std::optional<DecodeResult> next() {
    while (!buf_.empty()) {
      DecodeResult r = decode_frame_prefix(buf_);
      if (r.consumed == 0) return std::nullopt;
      if (r.error == FrameError::BadSof) {
        std::size_t skip = 1;
        while (skip < buf_.size() && buf_[skip] != kSof) ++skip;
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(skip));
        continue;
      }
      buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(r.consumed));
      return r;
    }
    return std::nullopt;
  }

  std::size_t buffered() const { return buf_.size(); }

 private:
  std::vector<std::uint8_t> buf_;
};

}  // namespace ghsim::bus
