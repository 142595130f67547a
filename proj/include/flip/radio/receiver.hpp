#pragma once

#include <array>
#include <optional>

#include "flip/radio/frame.hpp"

namespace flip::radio {

/// Outcome of a frame arriving at one gateway receiver.
enum class ReceptionStart {
  Clean,              // channel was idle, frame is now in flight
  CollisionKeptOld,   // both frames lost; the already in-flight one keeps blocking
  CollisionKeptNew,   // both frames lost; the arriving frame keeps blocking
};

/// Per-gateway demodulator state: at most one in-flight reception per
/// channel. A collision dooms both frames; the one with the longest
/// remaining time-on-air stays in the slot so the channel remains blocked
/// until it would have ended.
class ChannelReceiverState {
 public:
  struct InFlight {
    Frame frame;
    double end_time = 0.0;
    bool doomed = false;
  };

  const std::optional<InFlight>& slot(Channel ch) const {
    return slots_[static_cast<std::size_t>(ch.index())];
  }

  /// A reception whose airtime has elapsed by `now` is finalized: the frame
  /// is returned if it survived (to be handed to the MAC), nothing if it
  /// was doomed by a collision. The slot is freed either way. Returns
  /// nullopt if the slot is empty or still in flight.
  std::optional<Frame> finalize_if_due(Channel ch, double now) {
    auto& s = slots_[static_cast<std::size_t>(ch.index())];
    if (!s || s->end_time > now) return std::nullopt;
    std::optional<Frame> delivered;
    if (!s->doomed) delivered = s->frame;
    s.reset();
    return delivered;
  }

  /// Frame arrival at time `now` (= frame.tx_start; propagation is treated
  /// as instantaneous). The caller must have finalized any due reception on
  /// this channel first.
  ReceptionStart begin_reception(const Frame& frame, double now) {
    auto& s = slots_[static_cast<std::size_t>(frame.channel.index())];
    const double end = now + frame.airtime;
    if (!s) {
      s = InFlight{frame, end, false};
      return ReceptionStart::Clean;
    }
    // Collision: worst-case model, both frames are lost. Keep whichever
    // blocks the channel longer.
    if (s->end_time >= end) {
      s->doomed = true;
      return ReceptionStart::CollisionKeptOld;
    }
    s = InFlight{frame, end, true};
    return ReceptionStart::CollisionKeptNew;
  }

  bool busy(Channel ch, double now) const {
    const auto& s = slots_[static_cast<std::size_t>(ch.index())];
    return s && s->end_time > now;
  }

 private:
  std::array<std::optional<InFlight>, kChannelCount> slots_;
};

}  // namespace flip::radio
