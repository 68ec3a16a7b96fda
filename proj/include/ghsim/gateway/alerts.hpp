#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "ghsim/core/sim_time.hpp"
#include "ghsim/meshnet/reading.hpp"

namespace ghsim::gw {

enum class Comparator { Above, Below };

struct AlertRule {
  std::string rule_id;
  mesh::SensorKind kind = mesh::SensorKind::SoilMoisture;
  int node = 0;  // 0 = every node
  Comparator comparator = Comparator::Above;
  double threshold = 0.0;

  bool violated_by(double v) const { return comparator == Comparator::Above ? v > threshold : v < threshold; }

  void validate() const {
    if (rule_id.empty()) throw std::invalid_argument("alert rule needs an id");
    if (!mesh::info(kind).in_range(threshold))
      throw std::invalid_argument(fmt::format("alert rule {}: threshold outside sensor range", rule_id));
  }
  bool operator==(const AlertRule&) const = default;
};

struct Notification {
  SimTime timestamp = 0;
  std::string rule_id;
  mesh::Reading reading;
  std::string message;
};

inline std::string to_json_line(const Notification& n, const Calendar& cal) {
  nlohmann::json j{{"timestamp", cal.iso(n.timestamp)},
                   {"rule_id", n.rule_id},
                   {"node_id", n.reading.node_id},
                   {"port", n.reading.port},
                   {"sensor", mesh::to_string(n.reading.kind)},
                   {"value", n.reading.value},
                   {"message", n.message}};
  return j.dump();
}

/// Edge-triggered rule evaluation: one notification when a (rule, node)
/// pair enters violation; the episode ends once a reading is back within the threshold.
class AlertEngine {
 public:
  explicit AlertEngine(std::vector<AlertRule> rules = {}) : rules_(std::move(rules)) {
    for (const auto& r : rules_) r.validate();
  }

  const std::vector<AlertRule>& rules() const { return rules_; }

  std::vector<Notification> evaluate(const std::vector<mesh::Reading>& readings) {
    std::vector<Notification> out;
    for (const auto& r : readings) {
      for (const auto& rule : rules_) {
        if (rule.kind != r.kind || (rule.node != 0 && rule.node != r.node_id)) continue;
        bool& in_episode = episodes_[{rule.rule_id, r.node_id}];
        const bool bad = rule.violated_by(r.value);
        if (bad && !in_episode) {
          out.push_back(Notification{
              r.timestamp, rule.rule_id, r,
              fmt::format("{} on node {} is {} (limit {} {})", mesh::to_string(r.kind), r.node_id, r.value,
                          rule.comparator == Comparator::Above ? ">" : "<", rule.threshold)});
        }
        in_episode = bad;
      }
    }
    return out;
  }

 private:
  std::vector<AlertRule> rules_;
  std::map<std::pair<std::string, int>, bool> episodes_;
};

}  // namespace ghsim::gw
