#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "ghsim/core/event.hpp"
#include "ghsim/core/rng.hpp"
#include "ghsim/fieldbus/frame.hpp"
#include "ghsim/fieldbus/telemetry_payload.hpp"

namespace ghsim::bus {

inline constexpr int kMaxRetransmits = 3;

/// Gateway side of the telemetry link: numbers outgoing frames and
/// interprets the master's Ack/Nack replies.
class GatewayEndpoint {
 public:
  std::vector<std::uint8_t> telemetry_frame(const gw::TelemetryBlock& block) {
    pending_seq_ = tx_seq_++;
    return encode_frame(GwMessage{kProtocolVersion, pending_seq_, MsgType::TelemetryBlock, telemetry_to_payload(block).bytes});
  }

  /// Same frame again, same seq.
  std::vector<std::uint8_t> retransmit(const gw::TelemetryBlock& block) const {
    return encode_frame(GwMessage{kProtocolVersion, pending_seq_, MsgType::TelemetryBlock, telemetry_to_payload(block).bytes});
  }

  /// True only for a valid Ack naming the pending frame.
  bool acknowledged(std::span<const std::uint8_t> reply) const {
    const DecodeResult r = decode_frame(reply);
    if (!r.ok() || r.message->type != MsgType::Ack || r.message->payload.size() != 2) return false;
    const auto acked = static_cast<std::uint16_t>((r.message->payload[0] << 8) | r.message->payload[1]);
    return acked == pending_seq_;
  }

  std::uint16_t pending_seq() const { return pending_seq_; }

 private:
  std::uint16_t tx_seq_ = 0;
  std::uint16_t pending_seq_ = 0;
};

/// Master (PLC) side: validates frames, answers Ack or Nack, and surfaces each
/// telemetry block at most once. Frames failing any check never reach the PLC.
class MasterEndpoint {
 public:
  struct Received {
    std::vector<std::uint8_t> reply;
    std::optional<gw::TelemetryBlock> block;
    FrameError error = FrameError::None;
  };

  Received on_frame(std::span<const std::uint8_t> bytes) {
    Received out;
    const DecodeResult r = decode_frame(bytes);
    std::optional<DecodedTelemetry> telemetry;
    if (r.ok() && r.message->type == MsgType::TelemetryBlock) telemetry = payload_to_telemetry(r.message->payload);
    if (!r.ok() || !telemetry) {
      out.error = r.ok() ? FrameError::BadLength : r.error;
      out.reply = encode_frame(GwMessage{kProtocolVersion, tx_seq_++, MsgType::Nack, {}});
      return out;
    }
    const std::uint16_t seq = r.message->seq;
    if (!last_seq_ || *last_seq_ != seq) {
      out.block = std::move(telemetry->block);
      last_seq_ = seq;
    }
    out.reply = encode_frame(GwMessage{kProtocolVersion, tx_seq_++, MsgType::Ack,
                                       {static_cast<std::uint8_t>(seq >> 8), static_cast<std::uint8_t>(seq & 0xFF)}});
    return out;
  }

 private:
  std::uint16_t tx_seq_ = 0;
  std::optional<std::uint16_t> last_seq_;
};

struct MpiStats {
  std::uint64_t transfers = 0;
  std::uint64_t frames_sent = 0;
  std::uint64_t retransmits = 0;
  std::uint64_t rejected_frames = 0;
  std::uint64_t failed_transfers = 0;
};

/// In-process gateway -> master link. A corrupting channel flips one random
/// bit of every frame it carries, in both directions.
class MpiLink {
 public:
  explicit MpiLink(std::uint64_t seed) : noise_(seed, "bus-noise") {}

  void set_corrupting(bool on) { corrupting_ = on; }
  bool corrupting() const { return corrupting_; }
  const MpiStats& stats() const { return stats_; }

  /// Sends the block with up to kMaxRetransmits retransmissions. Returns the
  /// block as surfaced to the master, if any attempt got through.
  std::optional<gw::TelemetryBlock> push(const gw::TelemetryBlock& block, EventSink& events) {
    if (block.empty()) return std::nullopt;
    ++stats_.transfers;
    std::optional<gw::TelemetryBlock> surfaced;
    std::vector<std::uint8_t> frame = gateway_.telemetry_frame(block);
    for (int attempt = 0; attempt <= kMaxRetransmits; ++attempt) {
      if (attempt > 0) {
        frame = gateway_.retransmit(block);
        ++stats_.retransmits;
      }
      ++stats_.frames_sent;
      MasterEndpoint::Received rx = master_.on_frame(carry(frame));
      if (rx.error != FrameError::None) {
        ++stats_.rejected_frames;
        events.warn("mpi", fmt::format("frame seq {} rejected ({}), Nack", gateway_.pending_seq(), to_string(rx.error)));
      }
      if (rx.block) surfaced = std::move(rx.block);
      if (gateway_.acknowledged(carry(rx.reply))) return surfaced;
    }
    ++stats_.failed_transfers;
    events.warn("mpi", fmt::format("telemetry frame seq {} abandoned after {} retransmits", gateway_.pending_seq(),
                                   kMaxRetransmits));
    return surfaced;
  }

 private:
  std::vector<std::uint8_t> carry(std::vector<std::uint8_t> bytes) {
    if (corrupting_ && !bytes.empty()) {
      const auto bit = static_cast<std::size_t>(noise_.uniform_int(0, static_cast<std::int64_t>(bytes.size() * 8 - 1)));
      bytes[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    }
    return bytes;
  }

  GatewayEndpoint gateway_;
  MasterEndpoint master_;
  RngStream noise_;
  bool corrupting_ = false;
  MpiStats stats_;
};

}  // namespace ghsim::bus
