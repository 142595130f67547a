#pragma once

#include <cstdint>

#include "flip/core/ids.hpp"
#include "flip/radio/phy.hpp"

namespace flip::radio {

enum class FrameKind : std::uint8_t { JoinRequest, DataUplink, JoinAccept, Downlink };

inline const char* frame_kind_name(FrameKind k) {
  switch (k) {
    case FrameKind::JoinRequest: return "join";
    case FrameKind::DataUplink: return "data";
    case FrameKind::JoinAccept: return "accept";
    case FrameKind::Downlink: return "downlink";
  }
  return "?";
}

/// One over-the-air transmission.
struct Frame {
  FrameId id = 0;
  FrameKind kind = FrameKind::DataUplink;
  DevEui dev_eui = 0;
  Channel channel{0};
  SpreadingFactor sf{7};
  int payload_size = 1;  // application bytes, [1, 230]
  double tx_start = 0.0;
  double airtime = 0.0;
  Vec2 origin{};
  double tx_power_dbm = 14.0;
  std::uint32_t attempt = 0;  // join attempt counter, 0 for data
};

inline Frame make_frame(FrameId id, FrameKind kind, DevEui dev, Channel ch, SpreadingFactor sf,
                        int payload_size, double tx_start, const Vec2& origin,
                        double tx_power_dbm, const PhyParams& phy) {
  Frame f;
  f.id = id;
  f.kind = kind;
  f.dev_eui = dev;
  f.channel = ch;
  f.sf = sf;
  f.payload_size = payload_size;
  f.tx_start = tx_start;
  f.airtime = time_on_air(payload_size, sf, phy);
  f.origin = origin;
  f.tx_power_dbm = tx_power_dbm;
  return f;
}

}  // namespace flip::radio
