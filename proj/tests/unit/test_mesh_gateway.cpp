#include <cmath>
#include <filesystem>
#include <limits>
#include <map>

#include <gtest/gtest.h>
#include <json.hpp>

#include "ghsim/gateway/gateway.hpp"
#include "ghsim/meshnet/mesh_network.hpp"

using namespace ghsim;
using mesh::SensorKind;

namespace {

// Hop counts by repeated relaxation over the adjacency lists; no queue, so
// it shares nothing with the BFS under test.
std::map<int, int> relax_hops(const mesh::Topology& t) {
  std::map<int, int> d{{mesh::kBaseId, 0}};
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [id, adj] : t.adjacency) {
      for (int n : adj) {
        if (!d.contains(n)) continue;
        if (!d.contains(id) || d[n] + 1 < d[id]) {
          d[id] = d[n] + 1;
          changed = true;
        }
      }
    }
  }
  return d;
}

std::vector<mesh::RadioSite> random_sites(RngStream& g, int n, double extent) {
  std::vector<mesh::RadioSite> s;
  for (int i = 1; i <= n; ++i) s.push_back({i, {g.uniform() * extent, g.uniform() * extent - extent / 2}});
  return s;
}

mesh::Reading reading(int node, SensorKind k, double v, SimTime t, std::uint64_t seq, int port = 1) {
  return mesh::Reading{node, port, k, v, t, seq};
}

}  // namespace

TEST(SensorTable, RangesAndUnits) {
  EXPECT_EQ(mesh::info(SensorKind::SoilMoisture).max, 240.0);
  EXPECT_EQ(mesh::info(SensorKind::SoilMoisture).unit, "cbar");
  EXPECT_EQ(mesh::info(SensorKind::LeafWetness).max, 1024.0);
  EXPECT_EQ(mesh::info(SensorKind::DewPoint).min, -10.0);
  EXPECT_EQ(mesh::info(SensorKind::SolarRadiation).max, 1800.0);
  EXPECT_EQ(mesh::info(SensorKind::AmbientTemperature).min, -40.0);
  for (const auto& s : mesh::kSensorTable) {
    EXPECT_EQ(mesh::kind_from_name(s.name), s.kind);
    EXPECT_EQ(mesh::kind_from_code(static_cast<std::uint8_t>(s.kind)), s.kind);
  }
  EXPECT_FALSE(mesh::kind_from_code(0));
  EXPECT_FALSE(mesh::kind_from_code(9));
}

TEST(Topology, DefaultLayoutRoutesNodeSixThroughNodeTwo) {
  const std::vector<mesh::RadioSite> sites{{1, {10, 0}}, {2, {20, 0}}, {3, {0, 15}},
                                           {4, {15, 15}}, {5, {25, 10}}, {6, {45, 5}}};
  const auto t = mesh::build_topology(sites, {0, 0}, 30.0);
  for (int id = 1; id <= 5; ++id) EXPECT_EQ(t.routes.at(id), std::vector<int>{id});
  EXPECT_EQ(t.routes.at(6), (std::vector<int>{6, 2}));
  EXPECT_FALSE(t.adjacent(6, mesh::kBaseId));
}

TEST(Topology, RoutesAreShortestAndValidOnRandomLayouts) {
  RngStream g(11, "topo-gen");
  for (int trial = 0; trial < 300; ++trial) {
    const int n = static_cast<int>(g.uniform_int(1, 14));
    const auto sites = random_sites(g, n, 120.0);
    const double range = 15.0 + g.uniform() * 30.0;
    const auto t = mesh::build_topology(sites, {0, 0}, range);
    const auto hops = relax_hops(t);
    for (const auto& s : sites) {
      ASSERT_EQ(t.reachable(s.id), hops.contains(s.id)) << "trial " << trial;
      if (!t.reachable(s.id)) continue;
      const auto& path = t.routes.at(s.id);
      ASSERT_EQ(static_cast<int>(path.size()), hops.at(s.id));
      ASSERT_EQ(path.front(), s.id);
      for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        ASSERT_LE(mesh::distance(sites[path[i] - 1].position, sites[path[i + 1] - 1].position), range);
        ASSERT_EQ(hops.at(path[i + 1]), hops.at(path[i]) - 1);
      }
      ASSERT_LE(mesh::distance(sites[path.back() - 1].position, {0, 0}), range);
      // Tie-break: next hop is the lowest-id neighbor one step closer.
      if (path.size() > 1) {
        int best = std::numeric_limits<int>::max();
        for (int nb : t.adjacency.at(s.id)) {
          if (nb != mesh::kBaseId && hops.contains(nb) && hops.at(nb) == hops.at(s.id) - 1) best = std::min(best, nb);
        }
        ASSERT_EQ(path[1], best);
      }
    }
  }
}

TEST(Route, DeliveryRateMatchesClosedForm) {
  // Per hop: success unless all R+1 attempts are lost.
  const double p = 0.2;
  const int retries = 3;
  const double per_hop = 1.0 - std::pow(p, retries + 1);
  const std::vector<mesh::RadioSite> chain{{1, {20, 0}}, {2, {40, 0}}, {3, {60, 0}}};
  const auto topo = mesh::build_topology(chain, {0, 0}, 25.0);
  ASSERT_EQ(topo.routes.at(3).size(), 3u);
  RngStream radio(17, "radio-loss");
  constexpr int n = 200000;
  int delivered = 0;
  long attempts_hop0 = 0;
  mesh::MeshPacket pkt;
  pkt.origin = 3;
  for (int i = 0; i < n; ++i) {
    const auto r = mesh::route(pkt, topo, radio, p, retries);
    delivered += r.status == mesh::DeliveryStatus::Delivered;
    attempts_hop0 += r.transmissions.front().second;
    for (int x : r.hop_retries) ASSERT_LE(x, retries);
    ASSERT_EQ(r.hop_retries.size(), r.transmissions.size());
  }
  const double expect = std::pow(per_hop, 3);
  const double sigma = std::sqrt(expect * (1 - expect) / n);
  EXPECT_NEAR(delivered / double(n), expect, 5 * sigma);
  // Expected attempts on a hop: sum of p^k for k = 0..R.
  const double mean_attempts = (1 - std::pow(p, retries + 1)) / (1 - p);
  EXPECT_NEAR(attempts_hop0 / double(n), mean_attempts, 0.01);
}

TEST(Route, UnreachableNodeReportsNoPath) {
  const auto topo = mesh::build_topology({{1, {100, 0}}}, {0, 0}, 30.0);
  RngStream radio(1, "radio-loss");
  mesh::MeshPacket pkt;
  pkt.origin = 1;
  const auto r = mesh::route(pkt, topo, radio, 0.2, 3);
  EXPECT_EQ(r.status, mesh::DeliveryStatus::Unreachable);
  EXPECT_TRUE(r.transmissions.empty());
}

TEST(Energy, ClosedFormAndClamping) {
  const mesh::EnergyParams e;
  const double b = mesh::update_energy(e, 0.5, 10, 300, 2, 3);
  EXPECT_NEAR(b, 0.5 + e.solar_gain * 300 * 10 - e.idle_drain * 10 - e.tx_cost * 2 - e.relay_cost * 3, 1e-15);
  EXPECT_EQ(mesh::update_energy(e, 0.0, 10, 1800, 0, 0), 0.0);  // dead stays dead
  EXPECT_EQ(mesh::update_energy(e, 1e-6, 1, 0, 100, 0), 0.0);
  EXPECT_EQ(mesh::update_energy(e, 1.0, 3600, 1800, 0, 0), 1.0);
}

TEST(MeshNetwork, SamplesOnScheduleWithIncreasingSeq) {
  mesh::MeshParams p;
  p.p_loss = 0.0;
  std::vector<mesh::NodeSpec> nodes(2);
  for (int i = 0; i < 2; ++i) {
    nodes[i].id = i + 1;
    nodes[i].position = {10.0 * (i + 1), 0};
    nodes[i].zone = 1;
    nodes[i].ports[0] = {SensorKind::SoilMoisture, SensorKind::SoilTemperature};
    nodes[i].ports[2] = {SensorKind::LeafWetness};
  }
  mesh::MeshNetwork net(p, nodes, 42);
  env::Climate c;
  std::vector<env::PlantZone> zones(1);
  zones[0].zone_id = 1;
  zones[0].tension = 55.0;
  const mesh::GroundTruth truth{c, zones};
  std::map<int, std::uint64_t> last_seq;
  std::size_t packets = 0;
  for (SimTime t = 0; t < 4 * p.sample_period; ++t) {
    EventSink ev(t);
    const auto out = net.step(t, 1, truth, ev);
    if (t % p.sample_period != 0) {
      ASSERT_TRUE(out.empty());
      continue;
    }
    ASSERT_EQ(out.size(), 2u);
    for (const auto& pkt : out) {
      ++packets;
      ASSERT_EQ(pkt.readings.size(), 3u);
      for (const auto& r : pkt.readings) {
        ASSERT_GT(r.seq, last_seq[r.node_id]);
        last_seq[r.node_id] = r.seq;
        ASSERT_TRUE(mesh::info(r.kind).in_range(r.value));
        ASSERT_EQ(r.timestamp, t);
      }
    }
  }
  EXPECT_EQ(packets, 8u);
  EXPECT_EQ(net.stats().at(1).delivered_readings, 12u);
}

TEST(MeshNetwork, SilencedNodeTriggersTopologyRecompute) {
  mesh::MeshParams p;
  p.p_loss = 0.0;
  std::vector<mesh::NodeSpec> nodes(2);
  nodes[0] = {1, {20, 0}, 1, {}, 0.8};
  nodes[1] = {2, {45, 0}, 1, {}, 0.8};
  for (auto& n : nodes) n.ports[0] = {SensorKind::SoilMoisture};
  mesh::MeshNetwork net(p, nodes, 1);
  ASSERT_TRUE(net.topology().reachable(2));
  net.set_silenced(1, true);
  env::Climate c;
  std::vector<env::PlantZone> zones(1);
  zones[0].zone_id = 1;
  EventSink ev(0);
  const auto out = net.step(0, 1, mesh::GroundTruth{c, zones}, ev);
  EXPECT_TRUE(out.empty());  // node 1 silent, node 2 lost its relay
  EXPECT_FALSE(net.topology().reachable(2));
  ASSERT_FALSE(ev.events().empty());
  EXPECT_NE(ev.events().front().message.find("topology recomputed"), std::string::npos);
  EXPECT_EQ(net.stats().at(2).unreachable_packets, 1u);
}

TEST(SeriesStore, DeduplicatesAndQuarantines) {
  gw::SeriesStore s;
  EXPECT_EQ(s.ingest(reading(1, SensorKind::SoilMoisture, 50, 0, 1)), gw::IngestStatus::Stored);
  EXPECT_EQ(s.ingest(reading(1, SensorKind::SoilMoisture, 51, 0, 1)), gw::IngestStatus::Duplicate);
  EXPECT_EQ(s.ingest(reading(2, SensorKind::SoilMoisture, 50, 0, 1)), gw::IngestStatus::Stored);
  EXPECT_EQ(s.ingest(reading(1, SensorKind::SoilMoisture, 241, 0, 2)), gw::IngestStatus::Quarantined);
  EXPECT_EQ(s.ingest(reading(1, SensorKind::DewPoint, -10.5, 0, 3)), gw::IngestStatus::Quarantined);
  EXPECT_EQ(s.ingest(reading(1, SensorKind::SoilMoisture, 10, 0, 4, 5)), gw::IngestStatus::Quarantined);
  EXPECT_EQ(s.ingest(reading(1, SensorKind::SoilMoisture, NAN, 0, 5)), gw::IngestStatus::Quarantined);
  EXPECT_EQ(s.raw().size(), 2u);
  EXPECT_EQ(s.quarantine().size(), 4u);
}

TEST(SeriesStore, KeepsTimestampOrderForLateRows) {
  gw::SeriesStore s;
  RngStream g(4, "order-gen");
  for (std::uint64_t i = 1; i <= 500; ++i) {
    s.ingest(reading(1, SensorKind::SoilMoisture, 10, g.uniform_int(0, 10000), i));
  }
  const auto raw = s.raw();
  for (std::size_t i = 1; i < raw.size(); ++i) ASSERT_LE(raw[i - 1].timestamp, raw[i].timestamp);
}

// Rollups against a brute-force scan of every row.
TEST(SeriesStore, RollupsMatchBruteForce) {
  gw::SeriesStore s;
  RngStream g(6, "rollup-gen");
  std::vector<mesh::Reading> all;
  for (std::uint64_t i = 1; i <= 3000; ++i) {
    const int node = static_cast<int>(g.uniform_int(1, 4));
    const auto kind = g.bernoulli(0.5) ? SensorKind::SoilMoisture : SensorKind::AmbientTemperature;
    const auto r = reading(node, kind, std::round(g.uniform() * 60000) / 1000, g.uniform_int(0, 3 * kDay), i);
    s.ingest(r);
    all.push_back(r);
  }
  const Calendar cal = Calendar::from_iso("2010-05-17T07:00:00Z");
  for (auto p : {Period::Hour, Period::Day}) {
    for (SimTime start = cal.period_floor(p, 0); start < 3 * kDay; start = cal.period_end(p, start)) {
      const SimTime end = cal.period_end(p, start);
      const auto recs = s.compute(p, start, end);
      std::size_t present = 0;
      for (int node = 1; node <= 4; ++node) {
        for (auto kind : {SensorKind::SoilMoisture, SensorKind::AmbientTemperature}) {
          double sum = 0, lo = INFINITY, hi = -INFINITY;
          std::uint64_t n = 0;
          for (const auto& r : all) {
            if (r.node_id == node && r.kind == kind && r.timestamp >= start && r.timestamp < end) {
              sum += r.value;
              lo = std::min(lo, r.value);
              hi = std::max(hi, r.value);
              ++n;
            }
          }
          const auto it = std::find_if(recs.begin(), recs.end(),
                                       [&](const gw::RollupRecord& x) { return x.node_id == node && x.kind == kind; });
          if (n == 0) {
            ASSERT_EQ(it, recs.end());
            continue;
          }
          ++present;
          ASSERT_NE(it, recs.end());
          ASSERT_EQ(it->count, n);
          ASSERT_NEAR(it->mean, sum / n, 1e-9);
          ASSERT_EQ(it->min, lo);
          ASSERT_EQ(it->max, hi);
          ASSERT_EQ(it->period_start, start);
        }
      }
      ASSERT_EQ(recs.size(), present);
    }
  }
}

TEST(Gateway, RollsOnCalendarBoundaries) {
  const Calendar cal = Calendar::from_iso("2010-05-31T22:30:00Z");
  gw::Gateway g(cal);
  mesh::MeshPacket pkt;
  pkt.origin = 1;
  for (std::uint64_t i = 0; i < 20; ++i) pkt.readings.push_back(reading(1, SensorKind::SoilMoisture, double(i), SimTime(i) * 900, i + 1));
  EventSink ev;
  g.ingest({pkt}, ev);
  g.roll(5 * kHour);
  const auto& hours = g.store().rollups(Period::Hour);
  ASSERT_FALSE(hours.empty());
  for (const auto& r : hours) EXPECT_EQ(cal.period_floor(Period::Hour, r.period_start), r.period_start);
  // First hour window is the partial one from 22:00.
  EXPECT_EQ(cal.iso(hours.front().period_start), "2010-05-31T22:00:00Z");
  EXPECT_EQ(hours.front().count, 2u);
  const auto& days = g.store().rollups(Period::Day);
  ASSERT_EQ(days.size(), 1u);
  EXPECT_EQ(cal.iso(days.front().period_start), "2010-05-31T00:00:00Z");
  const auto& months = g.store().rollups(Period::Month);
  ASSERT_EQ(months.size(), 1u);
  EXPECT_EQ(cal.iso(months.front().period_start), "2010-05-01T00:00:00Z");
  EXPECT_EQ(months.front().count, 6u);  // 22:30..23:45
}

TEST(Gateway, LatestBlockCarriesAges) {
  gw::Gateway g(Calendar{});
  mesh::MeshPacket pkt;
  pkt.readings = {reading(2, SensorKind::SoilMoisture, 40.1234, 100, 1), reading(1, SensorKind::SoilMoisture, 30, 50, 1)};
  EventSink ev;
  const auto sum = g.ingest({pkt}, ev);
  EXPECT_EQ(sum.stored, 2u);
  const auto b = g.latest_block(400);
  ASSERT_EQ(b.entries.size(), 2u);
  EXPECT_EQ(b.entries[0].node_id, 1);
  EXPECT_EQ(b.entries[0].age, 350);
  EXPECT_EQ(b.entries[1].value, 40.123);
  EXPECT_EQ(b.node_count(), 2);
}

TEST(Csv, ValueFormatting) {
  EXPECT_EQ(gw::format_csv_value(12.5), "12.5");
  EXPECT_EQ(gw::format_csv_value(3.0), "3");
  EXPECT_EQ(gw::format_csv_value(-0.0001), "0");
  EXPECT_EQ(gw::format_csv_value(0.125), "0.125");
  EXPECT_EQ(gw::format_csv_value(-4.25), "-4.25");
}

TEST(Csv, RoundTripsStoredRows) {
  const Calendar cal = Calendar::from_iso("2010-05-17T00:00:00Z");
  gw::SeriesStore s;
  RngStream g(8, "csv-gen");
  for (std::uint64_t i = 1; i <= 2000; ++i) {
    const auto& si = mesh::kSensorTable[static_cast<std::size_t>(g.uniform_int(0, 7))];
    const double v = si.min + g.uniform() * si.span();
    s.ingest(mesh::Reading{static_cast<int>(g.uniform_int(1, 6)), static_cast<int>(g.uniform_int(1, 4)), si.kind, v,
                           g.uniform_int(0, 2 * kDay), i});
  }
  const gw::ExportQuery all{std::numeric_limits<SimTime>::min(), std::numeric_limits<SimTime>::max(), {}, {}};
  const std::string doc = gw::export_csv(s.raw(), cal, all);
  const auto rows = gw::parse_csv(doc, cal);
  ASSERT_EQ(rows.size(), s.raw().size());
  std::vector<gw::CsvRow> expect;
  for (const auto& r : s.raw()) expect.push_back({r.timestamp, r.node_id, r.port, r.kind, r.value});
  std::stable_sort(expect.begin(), expect.end(), [](const gw::CsvRow& a, const gw::CsvRow& b) {
    return std::tie(a.timestamp, a.node_id, a.port, a.kind) < std::tie(b.timestamp, b.node_id, b.port, b.kind);
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].timestamp, expect[i].timestamp);
    ASSERT_EQ(rows[i].node_id, expect[i].node_id);
    ASSERT_EQ(rows[i].kind, expect[i].kind);
    ASSERT_NEAR(rows[i].value, expect[i].value, 5e-4);
  }
  // Export of the reparsed rows is byte-identical.
  std::vector<mesh::Reading> again;
  for (const auto& r : rows) again.push_back({r.node_id, r.port, r.kind, r.value, r.timestamp, 0});
  EXPECT_EQ(gw::export_csv(again, cal, all), doc);
}

TEST(Csv, FiltersAndRange) {
  const Calendar cal = Calendar::from_iso("2010-05-17T00:00:00Z");
  const std::vector<mesh::Reading> rows{reading(1, SensorKind::SoilMoisture, 50, 0, 1),
                                        reading(2, SensorKind::SoilMoisture, 51, 900, 1),
                                        reading(1, SensorKind::DewPoint, 12.25, 900, 2, 4)};
  gw::ExportQuery q{900, 900, {}, {}};
  EXPECT_EQ(gw::export_csv(rows, cal, q),
            "timestamp,node_id,port,sensor,value,unit\n"
            "2010-05-17T00:15:00Z,1,4,DewPoint,12.25,degC\n"
            "2010-05-17T00:15:00Z,2,1,SoilMoisture,51,cbar\n");
  q.nodes = {2};
  EXPECT_EQ(gw::parse_csv(gw::export_csv(rows, cal, q), cal).size(), 1u);
  q.nodes = {};
  q.kinds = {SensorKind::DewPoint};
  EXPECT_EQ(gw::parse_csv(gw::export_csv(rows, cal, q), cal).size(), 1u);
  q.from = 1000;
  EXPECT_THROW(gw::export_csv(rows, cal, q), std::invalid_argument);
  EXPECT_THROW(gw::parse_csv("a,b\n", cal), std::invalid_argument);
}

TEST(SeriesStore, SaveLoadRoundTrip) {
  const Calendar cal = Calendar::from_iso("2010-05-17T00:00:00Z");
  gw::Gateway g(cal);
  mesh::MeshPacket pkt;
  RngStream rg(12, "store-gen");
  for (std::uint64_t i = 1; i <= 400; ++i)
    pkt.readings.push_back(reading(static_cast<int>(i % 3 + 1), SensorKind::SoilMoisture, rg.uniform() * 200, SimTime(i) * 300, i));
  EventSink ev;
  g.ingest({pkt}, ev);
  g.roll(2 * kDay);
  const auto path = (std::filesystem::temp_directory_path() / "ghsim-store-test.ghs").string();
  g.store().save(path, cal);
  Calendar loaded_cal;
  const auto back = gw::SeriesStore::load(path, &loaded_cal);
  std::filesystem::remove(path);
  EXPECT_EQ(loaded_cal, cal);
  ASSERT_EQ(back.raw().size(), g.store().raw().size());
  for (std::size_t i = 0; i < back.raw().size(); ++i) ASSERT_EQ(back.raw()[i], g.store().raw()[i]);
  for (auto p : {Period::Hour, Period::Day, Period::Month}) EXPECT_EQ(back.rollups(p), g.store().rollups(p));
}

TEST(Alerts, EdgeTriggeredPerNode) {
  gw::AlertEngine e({gw::AlertRule{"dry", SensorKind::SoilMoisture, 0, gw::Comparator::Above, 100}});
  auto n = e.evaluate({reading(1, SensorKind::SoilMoisture, 120, 0, 1), reading(2, SensorKind::SoilMoisture, 90, 0, 1)});
  ASSERT_EQ(n.size(), 1u);
  EXPECT_EQ(n[0].reading.node_id, 1);
  EXPECT_TRUE(e.evaluate({reading(1, SensorKind::SoilMoisture, 130, 900, 2)}).empty());
  EXPECT_EQ(e.evaluate({reading(2, SensorKind::SoilMoisture, 101, 900, 2)}).size(), 1u);
  EXPECT_TRUE(e.evaluate({reading(1, SensorKind::SoilMoisture, 100, 1800, 3)}).empty());  // boundary is not a violation
  EXPECT_EQ(e.evaluate({reading(1, SensorKind::SoilMoisture, 100.5, 2700, 4)}).size(), 1u);
  EXPECT_TRUE(e.evaluate({reading(1, SensorKind::AmbientTemperature, 150, 2700, 5)}).empty());
}

TEST(Alerts, NodeFilterBelowRuleAndJson) {
  gw::AlertEngine e({gw::AlertRule{"frost", SensorKind::AmbientTemperature, 3, gw::Comparator::Below, 2}});
  EXPECT_TRUE(e.evaluate({reading(1, SensorKind::AmbientTemperature, -5, 0, 1)}).empty());
  const auto n = e.evaluate({reading(3, SensorKind::AmbientTemperature, 1.5, 60, 1, 4)});
  ASSERT_EQ(n.size(), 1u);
  const auto j = nlohmann::json::parse(gw::to_json_line(n[0], Calendar{}));
  EXPECT_EQ(j["rule_id"], "frost");
  EXPECT_EQ(j["node_id"], 3);
  EXPECT_EQ(j["port"], 4);
  EXPECT_EQ(j["sensor"], "AmbientTemperature");
  EXPECT_EQ(j["timestamp"], "1970-01-01T00:01:00Z");
  EXPECT_THROW(gw::AlertEngine({gw::AlertRule{"x", SensorKind::SoilMoisture, 0, gw::Comparator::Above, 500}}),
               std::invalid_argument);
  EXPECT_THROW(gw::AlertEngine({gw::AlertRule{"", SensorKind::SoilMoisture, 0, gw::Comparator::Above, 5}}),
               std::invalid_argument);
}
