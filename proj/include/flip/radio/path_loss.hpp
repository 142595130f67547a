#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "flip/core/ids.hpp"
#include "flip/radio/phy.hpp"

namespace flip::radio {

/// Log-distance path loss. RSSI is fully determined by geometry:
///
///   rssi(d) = tx_power - (PL0 + 10 * n * log10(d / d0))
///
/// Positions closer than the reference distance d0 are clamped to d0.
struct PathModel {
  double d0_m = 1.0;
  double exponent = 2.7;
  double pl0_db = 40.0;
};

inline double rssi_at(const Vec2& tx, const Vec2& rx, double tx_power_dbm, const PathModel& path) {
  const double d = std::max(distance(tx, rx), path.d0_m);
  return tx_power_dbm - (path.pl0_db + 10.0 * path.exponent * std::log10(d / path.d0_m));
}

/// Receiver sensitivity floor per spreading factor, dBm. Defaults are
/// SX1276-class figures at 125 kHz; higher SF decodes weaker signals.
struct SensitivityTable {
  std::array<double, 6> dbm = {-123.0, -126.0, -129.0, -132.0, -134.5, -137.0};

  double operator[](SpreadingFactor sf) const { return dbm[static_cast<std::size_t>(sf.index())]; }
};

inline bool in_range(double rssi_dbm, SpreadingFactor sf, const SensitivityTable& table) {
  return rssi_dbm >= table[sf];
}

}  // namespace flip::radio
