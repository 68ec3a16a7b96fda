#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ghsim/core/event.hpp"
#include "ghsim/core/rng.hpp"
#include "ghsim/envsim/climate.hpp"
#include "ghsim/envsim/soil.hpp"
#include "ghsim/meshnet/reading.hpp"
#include "ghsim/meshnet/sensor_kind.hpp"
#include "ghsim/meshnet/topology.hpp"

namespace ghsim::mesh {

inline constexpr int kPortCount = 4;

/// Each port hosts one probe; a probe may report several channels
/// (the soil probe gives moisture and temperature together).
using PortMap = std::array<std::vector<SensorKind>, kPortCount>;

struct NodeSpec {
  int id = 0;
  Position position;
  int zone = 0;  // plant zone observed by the soil/leaf probes
  PortMap ports;
  double battery = 0.8;

  bool operator==(const NodeSpec&) const = default;
};

struct NodeState {
  int id = 0;
  Position position;
  int zone = 0;
  PortMap port_map;
  double battery = 0.8;
  std::vector<int> neighbors;
  std::uint64_t next_seq = 1;
  bool silenced = false;

  bool alive() const { return battery > 0.0 && !silenced; }
};

struct EnergyParams {
  double idle_drain = 2.0e-7;  // per second
  double tx_cost = 2.0e-4;     // per transmission attempt of own data
  double relay_cost = 2.0e-4;  // per forwarded transmission attempt
  double solar_gain = 4.0e-9;  // per (W/m2 * s)

  bool operator==(const EnergyParams&) const = default;
};

struct MeshParams {
  Position base{0.0, 0.0};
  double radio_range = 30.0;
  double p_loss = 0.2;
  int max_retries = 3;
  SimTime sample_period = 900;
  /// Gaussian noise sigma as a fraction of each channel's range.
  double noise_fraction = 0.01;
  EnergyParams energy;

  bool operator==(const MeshParams&) const = default;
};

/// The physical quantities the probes observe.
struct GroundTruth {
  const env::Climate& climate;
  const std::vector<env::PlantZone>& zones;

  double value(SensorKind kind, int zone_id) const {
    const env::PlantZone* z = nullptr;
    for (const auto& candidate : zones) {
      if (candidate.zone_id == zone_id) z = &candidate;
    }
    switch (kind) {
      case SensorKind::SoilMoisture: return z ? z->tension : 0.0;
      case SensorKind::SoilTemperature: return z ? z->soil_temp : climate.ambient_temp;
      case SensorKind::SoilWaterContent: return z ? z->water_content : 0.0;
      case SensorKind::LeafWetness: return z ? z->leaf_wetness : 0.0;
      case SensorKind::AmbientHumidity: return climate.humidity;
      case SensorKind::AmbientTemperature: return climate.ambient_temp;
      case SensorKind::DewPoint: return climate.dew_point;
      case SensorKind::SolarRadiation: return climate.solar;
    }
    return 0.0;
  }
};

/// One Reading per channel of each occupied port; empty for a dead or silenced node.
inline std::vector<Reading> sample_ports(SimTime now, NodeState& node, const GroundTruth& truth, RngStream& noise,
                                         double noise_fraction) {
  std::vector<Reading> out;
  if (!node.alive()) return out;
  for (int port = 1; port <= kPortCount; ++port) {
    for (SensorKind kind : node.port_map[port - 1]) {
      const SensorInfo& si = info(kind);
      const double v = noise.gaussian(truth.value(kind, node.zone), noise_fraction * si.span());
      out.push_back(Reading{node.id, port, kind, std::clamp(v, si.min, si.max), now, node.next_seq++});
    }
  }
  return out;
}

struct MeshPacket {
  int origin = 0;
  std::vector<Reading> readings;
  std::vector<int> hop_path;
  /// Retransmissions spent on each hop; each entry is at most max_retries.
  std::vector<int> hop_retries;

  std::uint64_t first_seq() const { return readings.empty() ? 0 : readings.front().seq; }
};

enum class DeliveryStatus { Delivered, Dropped, Unreachable };

struct RouteOutcome {
  DeliveryStatus status = DeliveryStatus::Unreachable;
  std::vector<int> hop_path;
  std::vector<int> hop_retries;
  std::string reason;
  /// (transmitting node, attempts) per hop, for energy accounting.
  std::vector<std::pair<int, int>> transmissions;
};

/// Forwards a packet hop by hop along the static route. Each attempt on a
/// hop is lost with probability p_loss; a hop is retried up to max_retries.
inline RouteOutcome route(const MeshPacket& packet, const Topology& topo, RngStream& radio, double p_loss,
                          int max_retries) {
  RouteOutcome r;
  const auto it = topo.routes.find(packet.origin);
  if (it == topo.routes.end()) {
    r.status = DeliveryStatus::Unreachable;
    r.reason = "no path to base";
    return r;
  }
  for (const int sender : it->second) {
    r.hop_path.push_back(sender);
    int attempts = 0;
    bool ok = false;
    while (attempts <= max_retries) {
      ++attempts;
      if (!radio.bernoulli(p_loss)) {
        ok = true;
        break;
      }
    }
    r.transmissions.emplace_back(sender, attempts);
    r.hop_retries.push_back(attempts - 1);
    if (!ok) {
      r.status = DeliveryStatus::Dropped;
      r.reason = fmt::format("hop from node {} failed after {} retries", sender, max_retries);
      return r;
    }
  }
  r.status = DeliveryStatus::Delivered;
  return r;
}

/// Battery bookkeeping for one step: idle drain and radio work against solar charge.
inline double update_energy(const EnergyParams& p, double battery, double dt, double solar, int own_tx, int relay_tx) {
  if (battery <= 0.0) return 0.0;
  const double delta = p.solar_gain * solar * dt - p.idle_drain * dt - p.tx_cost * own_tx - p.relay_cost * relay_tx;
  return std::clamp(battery + delta, 0.0, 1.0);
}

struct NodeStats {
  std::uint64_t emitted_readings = 0;
  std::uint64_t delivered_readings = 0;
  std::uint64_t dropped_packets = 0;
  std::uint64_t unreachable_packets = 0;
  int min_hops = 0;
  int max_hops = 0;
};

/// The simulated eKo network: periodic sampling, energy budget, and
/// multi-hop delivery to the base radio.
class MeshNetwork {
 public:
  MeshNetwork(MeshParams params, const std::vector<NodeSpec>& nodes, std::uint64_t seed)
      : params_(params), radio_(seed, "radio-loss"), noise_(seed, "sensor-noise") {
    for (const auto& s : nodes) {
      NodeState n;
      n.id = s.id;
      n.position = s.position;
      n.zone = s.zone;
      n.port_map = s.ports;
      n.battery = s.battery;
      nodes_.push_back(std::move(n));
    }
    std::sort(nodes_.begin(), nodes_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    rebuild_topology();
  }

  const MeshParams& params() const { return params_; }
  const std::vector<NodeState>& nodes() const { return nodes_; }
  const Topology& topology() const { return topology_; }
  const std::map<int, NodeStats>& stats() const { return stats_; }

  NodeState* find(int id) {
    for (auto& n : nodes_) {
      if (n.id == id) return &n;
    }
    return nullptr;
  }

  void set_silenced(int id, bool silenced) {
    if (auto* n = find(id)) n->silenced = silenced;
  }

  /// Samples (on sample instants), routes, and charges batteries for one tick.
  /// Returns packets delivered to the base this tick, ordered by origin id then seq.
  std::vector<MeshPacket> step(SimTime now, double dt, const GroundTruth& truth, EventSink& events) {
    refresh_topology(events);
    std::map<int, int> own_tx;
    std::map<int, int> relay_tx;
    std::vector<MeshPacket> delivered;

    if (params_.sample_period > 0 && now % params_.sample_period == 0) {
      for (auto& node : nodes_) {
        MeshPacket pkt;
        pkt.origin = node.id;
        pkt.readings = sample_ports(now, node, truth, noise_, params_.noise_fraction);
        if (pkt.readings.empty()) continue;
        auto& st = stats_[node.id];
        st.emitted_readings += pkt.readings.size();

        RouteOutcome r = route(pkt, topology_, radio_, params_.p_loss, params_.max_retries);
        for (const auto& [sender, attempts] : r.transmissions) {
          (sender == node.id ? own_tx : relay_tx)[sender] += attempts;
        }
        switch (r.status) {
          case DeliveryStatus::Delivered: {
            const int hops = static_cast<int>(r.hop_path.size());
            st.delivered_readings += pkt.readings.size();
            st.min_hops = st.min_hops == 0 ? hops : std::min(st.min_hops, hops);
            st.max_hops = std::max(st.max_hops, hops);
            pkt.hop_path = std::move(r.hop_path);
            pkt.hop_retries = std::move(r.hop_retries);
            delivered.push_back(std::move(pkt));
            break;
          }
          case DeliveryStatus::Dropped:
            ++st.dropped_packets;
            break;
          case DeliveryStatus::Unreachable:
            ++st.unreachable_packets;
            break;
        }
      }
    }

    for (auto& node : nodes_) {
      const bool was_alive = node.battery > 0.0;
      node.battery = update_energy(params_.energy, node.battery, dt, truth.climate.solar, own_tx[node.id],
                                   relay_tx[node.id]);
      if (was_alive && node.battery <= 0.0) events.warn("mesh", fmt::format("node {} battery depleted", node.id));
    }

    std::sort(delivered.begin(), delivered.end(), [](const MeshPacket& a, const MeshPacket& b) {
      return a.origin != b.origin ? a.origin < b.origin : a.first_seq() < b.first_seq();
    });
    return delivered;
  }

 private:
  std::vector<RadioSite> live_sites() const {
    std::vector<RadioSite> sites;
    for (const auto& n : nodes_) {
      if (n.alive()) sites.push_back({n.id, n.position});
    }
    return sites;
  }

  void rebuild_topology() {
    const auto sites = live_sites();
    live_ids_.clear();
    for (const auto& s : sites) live_ids_.push_back(s.id);
    topology_ = build_topology(sites, params_.base, params_.radio_range);
    for (auto& n : nodes_) {
      n.neighbors.clear();
      const auto it = topology_.adjacency.find(n.id);
      if (it == topology_.adjacency.end()) continue;
      for (int id : it->second) {
        if (id != kBaseId) n.neighbors.push_back(id);
      }
    }
  }

  void refresh_topology(EventSink& events) {
    std::vector<int> live;
    for (const auto& n : nodes_) {
      if (n.alive()) live.push_back(n.id);
    }
    if (live == live_ids_) return;
    rebuild_topology();
    events.info("mesh", fmt::format("topology recomputed: {} live nodes, {} reachable", live.size(),
                                    topology_.routes.size()));
  }

  MeshParams params_;
  std::vector<NodeState> nodes_;
  Topology topology_;
  std::vector<int> live_ids_;
  RngStream radio_;
  RngStream noise_;
  std::map<int, NodeStats> stats_;
};

}  // namespace ghsim::mesh
