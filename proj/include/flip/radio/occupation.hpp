#pragma once

#include <array>
#include <deque>
#include <numeric>

#include "flip/radio/phy.hpp"

namespace flip::radio {

/// Rolling per-channel airtime ledger, the substrate of a gateway's channel
/// occupation figures. Both directions count: receiver busy time and the
/// gateway's own downlink airtime.
class ChannelOccupation {
 public:
  ChannelOccupation() = default;
  explicit ChannelOccupation(double window_s) : window_(window_s) {}

  void add(Channel ch, double start, double airtime) {
    ledger_[static_cast<std::size_t>(ch.index())].push_back({start, airtime});
  }

  /// Occupation fraction of one channel over the trailing window.
  double fraction(Channel ch, double now) {
    auto& q = ledger_[static_cast<std::size_t>(ch.index())];
    while (!q.empty() && q.front().start + window_ <= now) q.pop_front();
    double busy = 0.0;
    for (const auto& e : q) busy += e.airtime;
    const double f = busy / window_;
    return f > 1.0 ? 1.0 : f;
  }

  std::array<double, kChannelCount> fractions(double now) {
    std::array<double, kChannelCount> out{};
    for (int c = 0; c < kChannelCount; ++c) out[static_cast<std::size_t>(c)] = fraction(Channel(c), now);
    return out;
  }

  /// Scalar summary: mean occupation across channels.
  double mean_fraction(double now) {
    const auto f = fractions(now);
    return std::accumulate(f.begin(), f.end(), 0.0) / kChannelCount;
  }

  double window() const { return window_; }

 private:
  struct Entry {
    double start;
    double airtime;
  };

  double window_ = 900.0;
  std::array<std::deque<Entry>, kChannelCount> ledger_;
};

}  // namespace flip::radio
