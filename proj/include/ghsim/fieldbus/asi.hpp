#pragma once

#include <cstdint>
#include <optional>

#include "ghsim/core/event.hpp"
#include "ghsim/core/sim_time.hpp"

namespace ghsim::bus {

/// Bit positions within each 4-bit nibble, LSB first.
namespace addr1_bit {
inline constexpr int pump = 0;
inline constexpr int feed_valve = 1;
inline constexpr int irrigation_valve = 2;
inline constexpr int lamp = 3;
}  // namespace addr1_bit

namespace addr2_bit {
inline constexpr int mains_close = 0;
inline constexpr int spare1 = 1;
inline constexpr int spare2 = 2;
inline constexpr int watchdog_toggle = 3;
}  // namespace addr2_bit

/// Two 4-bit nibbles, one per slave address. On the wire the pair travels
/// as one byte: addr1 in the low nibble, addr2 in the high nibble.
struct CyclicWord {
  std::uint8_t addr1 = 0;
  std::uint8_t addr2 = 0;

  bool bit1(int i) const { return (addr1 >> i) & 1u; }
  bool bit2(int i) const { return (addr2 >> i) & 1u; }
  void set1(int i, bool on) { addr1 = static_cast<std::uint8_t>(on ? (addr1 | (1u << i)) : (addr1 & ~(1u << i))) & 0x0F; }
  void set2(int i, bool on) { addr2 = static_cast<std::uint8_t>(on ? (addr2 | (1u << i)) : (addr2 & ~(1u << i))) & 0x0F; }

  bool pump() const { return bit1(addr1_bit::pump); }
  bool feed_valve() const { return bit1(addr1_bit::feed_valve); }
  bool irrigation_valve() const { return bit1(addr1_bit::irrigation_valve); }
  bool lamp() const { return bit1(addr1_bit::lamp); }
  bool mains_close() const { return bit2(addr2_bit::mains_close); }
  bool watchdog_toggle() const { return bit2(addr2_bit::watchdog_toggle); }

  /// Everything except the watchdog bit.
  bool commands_zero() const { return addr1 == 0 && (addr2 & 0x07) == 0; }

  std::uint8_t to_byte() const { return static_cast<std::uint8_t>((addr1 & 0x0F) | ((addr2 & 0x0F) << 4)); }
  static CyclicWord from_byte(std::uint8_t b) { return CyclicWord{static_cast<std::uint8_t>(b & 0x0F), static_cast<std::uint8_t>(b >> 4)}; }

  bool operator==(const CyclicWord&) const = default;
};

/// Master -> slave actuator commands.
struct OutputWord : CyclicWord {};
/// Slave -> master confirmation of the outputs it has applied.
struct InputWord : CyclicWord {};

/// The master/slave cyclic link. A faulted bus carries nothing in either direction.
class AsiBus {
 public:
  void set_faulted(bool f) { faulted_ = f; }
  bool faulted() const { return faulted_; }
  std::uint64_t exchanges() const { return exchanges_; }
  std::uint64_t skipped() const { return skipped_; }

  /// One cycle: the slave always runs its own cycle (watchdog, local rules);
  /// it sees the master's word and answers only when the bus is healthy.
  template <class Slave>
  std::optional<InputWord> cyclic_exchange(const OutputWord& out, Slave& slave, SimTime now, double local_solar,
                                           EventSink& events) {
    if (faulted_) {
      ++skipped_;
      slave.cycle(now, std::nullopt, local_solar, events);
      return std::nullopt;
    }
    ++exchanges_;
    const OutputWord rx{CyclicWord::from_byte(out.to_byte())};
    const std::optional<InputWord> reply = slave.cycle(now, rx, local_solar, events);
    if (!reply) return std::nullopt;
    return InputWord{CyclicWord::from_byte(reply->to_byte())};
  }

 private:
  bool faulted_ = false;
  std::uint64_t exchanges_ = 0;
  std::uint64_t skipped_ = 0;
};

}  // namespace ghsim::bus
