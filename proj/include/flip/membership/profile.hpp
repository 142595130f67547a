#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "flip/core/ids.hpp"
#include "flip/radio/phy.hpp"

namespace flip::membership {

/// A gateway's view of its radio surroundings: which end-devices it hears
/// and how strongly, plus its own channel load. Exchanged wholesale during
/// gossip; the similarity between two profiles drives the kNN overlay.
struct GatewayProfile {
  GatewayId gateway_id = 0;
  std::map<DevEui, double> heard;  // smoothed RSSI per device, dBm
  std::array<double, radio::kChannelCount> channel_occupation{};

  /// Exponential moving average keeps profiles stable against per-frame
  /// variation. First observation seeds the entry directly.
  void observe(DevEui dev, double rssi_dbm, double alpha) {
    auto it = heard.find(dev);
    if (it == heard.end()) {
      heard[dev] = rssi_dbm;
    } else {
      it->second = alpha * rssi_dbm + (1.0 - alpha) * it->second;
    }
  }
};

/// Weighted Jaccard similarity over the heard-device sets. Shared devices
/// contribute a weight that decays with RSSI disagreement:
///
///   sim(a, b) = sum_{d shared} (1 - |rssi_a(d) - rssi_b(d)| / R_dyn) / |union|
///
/// Identical profiles score 1, disjoint device sets score 0, and the score
/// is symmetric by construction. R_dyn is the configured RSSI dynamic range.
inline double similarity(const GatewayProfile& a, const GatewayProfile& b,
                         double rssi_dynamic_range = 60.0) {
  if (a.heard.empty() && b.heard.empty()) return 1.0;  // identical (empty) profiles
  std::size_t union_size = b.heard.size();
  double shared_weight = 0.0;
  for (const auto& [dev, rssi_a] : a.heard) {
    auto it = b.heard.find(dev);
    if (it == b.heard.end()) {
      ++union_size;
    } else {
      const double w = 1.0 - std::abs(rssi_a - it->second) / rssi_dynamic_range;
      shared_weight += std::clamp(w, 0.0, 1.0);
    }
  }
  return shared_weight / static_cast<double>(union_size);
}

}  // namespace flip::membership
