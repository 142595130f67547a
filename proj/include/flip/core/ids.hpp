#pragma once

#include <cmath>
#include <cstdint>

namespace flip {

using GatewayId = std::uint32_t;
using DevEui = std::uint64_t;
using ActorId = std::uint32_t;
using ClusterId = std::uint32_t;
using FrameId = std::uint64_t;

constexpr GatewayId kNoGateway = 0xffffffffu;

/// Planar position in meters.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace flip
