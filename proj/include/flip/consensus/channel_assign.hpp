#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "flip/radio/path_loss.hpp"
#include "flip/radio/phy.hpp"

namespace flip::consensus {

/// Shannon entropy of a non-negative weight vector, in bits. Weights are
/// normalized to a probability distribution first; zero-weight entries
/// contribute nothing. An all-zero vector has entropy 0 by convention.
inline double shannon_entropy(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double w : weights) {
    if (w <= 0.0) continue;
    const double p = w / total;
    h -= p * std::log2(p);
  }
  return h;
}

enum class AssignMode { Selfish, Altruist };

/// Channel choice for a freshly elected handler.
///
/// Selfish: the handler's own least-occupied channel, neighbours ignored.
///
/// Altruist: the channel whose use maximizes the Shannon entropy of the
/// aggregate occupation distribution over the handler and its kNN
/// neighbourhood, with the joining device's projected airtime added to the
/// candidate channel. Spreading load where the neighbourhood is emptiest
/// flattens the aggregate distribution, which is exactly what the entropy
/// argmax rewards.
///
/// Ties break to the lowest channel index in both modes.
inline radio::Channel choose_channel(
    const std::array<double, radio::kChannelCount>& own_occupation,
    const std::vector<std::array<double, radio::kChannelCount>>& neighbour_occupations,
    double projected_airtime_fraction, AssignMode mode) {
  if (mode == AssignMode::Selfish) {
    int best = 0;
    for (int c = 1; c < radio::kChannelCount; ++c) {
      if (own_occupation[static_cast<std::size_t>(c)] <
          own_occupation[static_cast<std::size_t>(best)])
        best = c;
    }
    return radio::Channel(best);
  }

  std::array<double, radio::kChannelCount> aggregate = own_occupation;
  for (const auto& occ : neighbour_occupations)
    for (int c = 0; c < radio::kChannelCount; ++c)
      aggregate[static_cast<std::size_t>(c)] += occ[static_cast<std::size_t>(c)];

  // Entropies that differ only by floating-point summation order count as
  // a tie, which goes to the lowest channel index.
  constexpr double kTieEps = 1e-9;
  int best = 0;
  double best_entropy = -1.0;
  for (int c = 0; c < radio::kChannelCount; ++c) {
    auto candidate = aggregate;
    candidate[static_cast<std::size_t>(c)] += projected_airtime_fraction;
    const double h = shannon_entropy(candidate);
    if (h > best_entropy + kTieEps) {
      best_entropy = h;
      best = c;
    }
  }
  return radio::Channel(best);
}

/// Lowest spreading factor that decodes the observed join RSSI with the
/// configured margin. Falls back to SF12 when even the margin-free floor
/// is barely met (the join itself was heard, so SF12 works).
inline radio::SpreadingFactor choose_sf(double rssi_dbm, const radio::SensitivityTable& table,
                                        double margin_db) {
  for (int s = radio::SpreadingFactor::kMin; s <= radio::SpreadingFactor::kMax; ++s) {
    radio::SpreadingFactor sf(s);
    if (rssi_dbm >= table[sf] + margin_db) return sf;
  }
  return radio::SpreadingFactor(radio::SpreadingFactor::kMax);
}

}  // namespace flip::consensus
