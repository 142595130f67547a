#pragma once

#include <algorithm>
#include <vector>

#include "flip/core/ids.hpp"

namespace flip::membership {

/// The k most similar peers, sorted by descending similarity with ties
/// broken by ascending gateway id. Never contains the owner or duplicates.
class KnnView {
 public:
  struct Entry {
    GatewayId gateway_id;
    double similarity;
  };

  explicit KnnView(std::size_t k = 5) : k_(k) {}

  std::size_t k() const { return k_; }
  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  bool contains(GatewayId id) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [id](const Entry& e) { return e.gateway_id == id; });
  }

  /// Insert or refresh a candidate; keeps the view sorted and trimmed to k.
  /// Returns true if the view changed.
  bool offer(GatewayId self, GatewayId candidate, double similarity) {
    if (candidate == self) return false;
    const auto before = entries_;
    entries_.erase(std::remove_if(entries_.begin(), entries_.end(),
                                  [candidate](const Entry& e) { return e.gateway_id == candidate; }),
                   entries_.end());
    entries_.push_back({candidate, similarity});
    std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
      if (a.similarity != b.similarity) return a.similarity > b.similarity;
      return a.gateway_id < b.gateway_id;
    });
    if (entries_.size() > k_) entries_.resize(k_);
    if (before.size() != entries_.size()) return true;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (before[i].gateway_id != entries_[i].gateway_id ||
          before[i].similarity != entries_[i].similarity)
        return true;
    }
    return false;
  }

  void drop(GatewayId id) {
    entries_.erase(std::remove_if(entries_.begin(), entries_.end(),
                                  [id](const Entry& e) { return e.gateway_id == id; }),
                   entries_.end());
  }

  std::vector<GatewayId> members() const {
    std::vector<GatewayId> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.gateway_id);
    return out;
  }

 private:
  std::size_t k_;
  std::vector<Entry> entries_;
};

/// Uniform random peers supplied by the cluster's sampling service each
/// gossip round; keeps the kNN view from freezing into a local maximum.
struct RpsView {
  std::vector<GatewayId> entries;
};

}  // namespace flip::membership
