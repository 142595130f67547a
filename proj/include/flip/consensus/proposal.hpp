#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "flip/core/ids.hpp"

namespace flip::consensus {

/// One gateway's candidacy for handling a joining end-device.
struct HandlerProposal {
  GatewayId gateway_id = 0;
  double occupation = 0.0;   // scalar channel-occupation summary, [0,1]
  double rssi_dbm = 0.0;     // join request strength as heard by this gateway
  int pending_load = 0;      // devices currently handled
};

struct ScoreWeights {
  double rssi = 0.5;
  double occupation = 0.3;
  double load = 0.2;
  double rssi_norm_floor_dbm = -140.0;
  double rssi_norm_ceil_dbm = -30.0;
  int pending_load_cap = 64;
};

/// Fitness of a proposal: strong reception helps, load and channel
/// occupation count against. Higher is better.
inline double score(const HandlerProposal& p, const ScoreWeights& w) {
  const double span = w.rssi_norm_ceil_dbm - w.rssi_norm_floor_dbm;
  const double rssi_n = std::clamp((p.rssi_dbm - w.rssi_norm_floor_dbm) / span, 0.0, 1.0);
  const double load_n = std::clamp(static_cast<double>(p.pending_load) / w.pending_load_cap, 0.0, 1.0);
  return w.rssi * rssi_n - w.occupation * p.occupation - w.load * load_n;
}

/// Deterministic winner over a proposal set: highest score, ties to the
/// lowest gateway id. Every consensus participant evaluating the same set
/// reaches the same answer.
inline GatewayId elect_handler(const std::vector<HandlerProposal>& proposals,
                               const ScoreWeights& w) {
  if (proposals.empty()) throw std::logic_error("handler election over empty proposal set");
  GatewayId best = proposals.front().gateway_id;
  double best_score = score(proposals.front(), w);
  for (std::size_t i = 1; i < proposals.size(); ++i) {
    const double s = score(proposals[i], w);
    if (s > best_score || (s == best_score && proposals[i].gateway_id < best)) {
      best = proposals[i].gateway_id;
      best_score = s;
    }
  }
  return best;
}

}  // namespace flip::consensus
