#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "flip/core/rng.hpp"
#include "flip/radio/frame.hpp"
#include "flip/radio/receiver.hpp"

namespace testutil {

struct SchedFrame {
  double start = 0.0;
  double airtime = 0.0;
  int channel = 0;
  flip::FrameId id = 0;
};

/// Feed a frame schedule through one gateway receiver in arrival order and
/// collect what survives to the MAC.
inline std::set<flip::FrameId> receiver_delivered(std::vector<SchedFrame> frames) {
  std::stable_sort(frames.begin(), frames.end(),
                   [](const SchedFrame& a, const SchedFrame& b) { return a.start < b.start; });
  flip::radio::ChannelReceiverState state;
  std::set<flip::FrameId> delivered;
  for (const auto& sf : frames) {
    const flip::radio::Channel ch(sf.channel);
    if (auto done = state.finalize_if_due(ch, sf.start)) delivered.insert(done->id);
    flip::radio::Frame f;
    f.id = sf.id;
    f.channel = ch;
    f.airtime = sf.airtime;
    f.tx_start = sf.start;
    state.begin_reception(f, sf.start);
  }
  for (int c = 0; c < flip::radio::kChannelCount; ++c) {
    if (auto done = state.finalize_if_due(flip::radio::Channel(c), 1e18)) delivered.insert(done->id);
  }
  return delivered;
}

/// Brute-force interval-overlap oracle: a frame is delivered iff its
/// [start, start+airtime) interval overlaps no other frame on the same
/// channel.
inline std::set<flip::FrameId> oracle_delivered(const std::vector<SchedFrame>& frames) {
  std::set<flip::FrameId> delivered;
  for (const auto& a : frames) {
    bool clean = true;
    for (const auto& b : frames) {
      if (a.id == b.id || a.channel != b.channel) continue;
      if (a.start < b.start + b.airtime && b.start < a.start + a.airtime) {
        clean = false;
        break;
      }
    }
    if (clean) delivered.insert(a.id);
  }
  return delivered;
}

inline std::vector<SchedFrame> random_schedule(flip::Rng& rng, std::size_t n, int channels,
                                               double horizon) {
  std::vector<SchedFrame> frames;
  for (std::size_t i = 0; i < n; ++i) {
    SchedFrame f;
    f.id = static_cast<flip::FrameId>(i + 1);
    f.start = rng.uniform(0.0, horizon);
    f.airtime = rng.uniform(0.01, 2.0);
    f.channel = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(channels)));
    frames.push_back(f);
  }
  return frames;
}

}  // namespace testutil
