#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace flip::radio {

constexpr int kChannelCount = 8;
constexpr int kMaxPayloadBytes = 230;

/// LoRa spreading factor, SF7..SF12. Higher SF doubles the symbol time and
/// roughly doubles the airtime of a frame.
class SpreadingFactor {
 public:
  static constexpr int kMin = 7;
  static constexpr int kMax = 12;

  explicit SpreadingFactor(int v) : value_(v) {
    if (v < kMin || v > kMax) throw std::domain_error("spreading factor must be in [7,12]");
  }

  int value() const { return value_; }
  int index() const { return value_ - kMin; }  // 0..5

  bool operator==(const SpreadingFactor&) const = default;
  auto operator<=>(const SpreadingFactor&) const = default;

 private:
  int value_;
};

inline SpreadingFactor sf7() { return SpreadingFactor(7); }
inline SpreadingFactor sf12() { return SpreadingFactor(12); }

/// Uplink channel index; European gateways expose 8.
class Channel {
 public:
  explicit Channel(int index) : index_(index) {
    if (index < 0 || index >= kChannelCount) throw std::domain_error("channel index must be in [0,8)");
  }

  int index() const { return index_; }

  bool operator==(const Channel&) const = default;
  auto operator<=>(const Channel&) const = default;

 private:
  int index_;
};

/// Modem parameters feeding the airtime computation. The defaults are the
/// common EU868 data-rate settings (125 kHz, CR 4/5, 8-symbol preamble,
/// explicit header, CRC on, low-data-rate optimization from SF11 up).
///
/// `mac_overhead_bytes` is added to the application payload to obtain the
/// PHY payload that actually rides the air; 13 bytes is the LoRaWAN data
/// frame overhead (MHDR + FHDR + FPort + MIC).
struct PhyParams {
  double bandwidth_hz = 125000.0;
  int coding_rate = 1;  // CR 4/(4+coding_rate), so 1 means 4/5
  int preamble_symbols = 8;
  bool explicit_header = true;
  bool crc_on = true;
  int ldro_min_sf = 11;  // low-data-rate optimization for SF >= this
  int mac_overhead_bytes = 13;
};

/// Total frame airtime in seconds for an application payload of
/// `payload_size` bytes, per the SX127x modem equations (Semtech AN1200.13):
///
///   t_sym      = 2^SF / BW
///   t_preamble = (n_preamble + 4.25) * t_sym
///   n_payload  = 8 + max(ceil((8*PL - 4*SF + 28 + 16*CRC - 20*IH)
///                             / (4*(SF - 2*DE))) * (CR + 4), 0)
///   t_payload  = n_payload * t_sym
///
/// with PL the PHY payload in bytes, IH = 1 for implicit header, DE = 1 when
/// low-data-rate optimization is active.
inline double time_on_air(int payload_size, SpreadingFactor sf, const PhyParams& phy = {}) {
  if (payload_size < 1 || payload_size > kMaxPayloadBytes)
    throw std::domain_error("payload size must be in [1,230] bytes");

  const int pl = payload_size + phy.mac_overhead_bytes;
  const int s = sf.value();
  const double t_sym = std::pow(2.0, s) / phy.bandwidth_hz;
  const double t_preamble = (phy.preamble_symbols + 4.25) * t_sym;

  const int de = s >= phy.ldro_min_sf ? 1 : 0;
  const int ih = phy.explicit_header ? 0 : 1;
  const int crc = phy.crc_on ? 1 : 0;
  const int num = 8 * pl - 4 * s + 28 + 16 * crc - 20 * ih;
  const int den = 4 * (s - 2 * de);
  const int ceil_term = num <= 0 ? 0 : (num + den - 1) / den;
  const int n_payload = 8 + std::max(ceil_term * (phy.coding_rate + 4), 0);

  return t_preamble + n_payload * t_sym;
}

/// Lawful frames per hour for a given frame airtime under a duty-cycle cap.
inline long frames_per_hour(double airtime_s, double duty_limit) {
  if (airtime_s <= 0.0) throw std::domain_error("airtime must be positive");
  return static_cast<long>(std::floor(3600.0 * duty_limit / airtime_s));
}

}  // namespace flip::radio
