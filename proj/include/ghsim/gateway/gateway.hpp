#pragma once

#include <array>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "ghsim/core/event.hpp"
#include "ghsim/gateway/alerts.hpp"
#include "ghsim/gateway/csv_export.hpp"
#include "ghsim/gateway/series_store.hpp"
#include "ghsim/gateway/telemetry_block.hpp"
#include "ghsim/meshnet/mesh_network.hpp"

namespace ghsim::gw {

struct IngestSummary {
  std::size_t stored = 0;
  std::size_t duplicates = 0;
  std::size_t quarantined = 0;
};

/// eKo-gateway role: ingestion, rollups on calendar boundaries, alerting to
/// an outbox, CSV export, and the freshest-value block for the PLC link.
class Gateway {
 public:
  explicit Gateway(Calendar cal, std::vector<AlertRule> rules = {})
      : cal_(cal), alerts_(std::move(rules)) {
    for (auto p : {Period::Hour, Period::Day, Period::Month}) next_boundary_[idx(p)] = cal_.period_end(p, cal_.period_floor(p, 0));
    for (auto p : {Period::Hour, Period::Day, Period::Month}) window_start_[idx(p)] = cal_.period_floor(p, 0);
  }

  const Calendar& calendar() const { return cal_; }
  const SeriesStore& store() const { return store_; }
  SeriesStore& store() { return store_; }
  const std::vector<Notification>& outbox() const { return outbox_; }

  /// Appends notifications to this JSON-lines file as they are raised.
  void set_outbox_file(std::string path) { outbox_path_ = std::move(path); }

  IngestSummary ingest(const std::vector<mesh::MeshPacket>& packets, EventSink& events) {
    IngestSummary s;
    std::vector<mesh::Reading> fresh;
    for (const auto& pkt : packets) {
      for (const auto& r : pkt.readings) {
        switch (store_.ingest(r)) {
          case IngestStatus::Stored: {
            ++s.stored;
            fresh.push_back(r);
            fresh.back().value = quantize_value(r.value);
            auto& slot = latest_[{r.node_id, r.kind}];
            if (r.timestamp >= slot.second) slot = {fresh.back().value, r.timestamp};
            break;
          }
          case IngestStatus::Duplicate: ++s.duplicates; break;
          case IngestStatus::Quarantined:
            ++s.quarantined;
            events.warn("gateway", "quarantined: " + store_.quarantine().back().reason);
            break;
        }
      }
    }
    auto notes = alerts_.evaluate(fresh);
    for (auto& n : notes) {
      events.warn("gateway", "alert " + n.rule_id + ": " + n.message);
      if (!outbox_path_.empty()) {
        std::ofstream out(outbox_path_, std::ios::app | std::ios::binary);
        out << to_json_line(n, cal_) << '\n';
      }
      outbox_.push_back(std::move(n));
    }
    return s;
  }

  /// Rolls up every calendar period that ended at or before `now`.
  void roll(SimTime now) {
    for (auto p : {Period::Hour, Period::Day, Period::Month}) {
      while (next_boundary_[idx(p)] <= now) {
        store_.add_rollups(store_.compute(p, window_start_[idx(p)], next_boundary_[idx(p)]));
        window_start_[idx(p)] = next_boundary_[idx(p)];
        next_boundary_[idx(p)] = cal_.period_end(p, window_start_[idx(p)]);
      }
    }
  }

  /// Rollup of one elapsed window, straight from raw rows.
  std::vector<RollupRecord> rollup(Period p, SimTime period_start) const {
    return store_.compute(p, period_start, cal_.period_end(p, period_start));
  }

  std::string export_csv(const ExportQuery& q) const { return gw::export_csv(store_.raw(), cal_, q); }

  TelemetryBlock latest_block(SimTime now) const {
    TelemetryBlock b;
    for (const auto& [key, v] : latest_) {
      b.entries.push_back(TelemetryEntry{key.first, key.second, v.first, now - v.second});
    }
    return b;
  }

 private:
  static std::size_t idx(Period p) { return static_cast<std::size_t>(p); }

  Calendar cal_;
  SeriesStore store_;
  AlertEngine alerts_;
  std::vector<Notification> outbox_;
  std::string outbox_path_;
  std::map<std::pair<int, mesh::SensorKind>, std::pair<double, SimTime>> latest_;
  std::array<SimTime, 3> next_boundary_{};
  std::array<SimTime, 3> window_start_{};
};

}  // namespace ghsim::gw
