#pragma once

#include <map>
#include <vector>

#include "flip/core/ids.hpp"

namespace flip::admin {

struct ActorUsage {
  std::size_t devices = 0;
  std::size_t gateways = 0;
};

/// Reciprocity rule: an actor adding end-device traffic must contribute at
/// least one gateway in return. Actors contributing gateways without
/// devices are fine. Returns the offending actor ids.
inline std::vector<ActorId> fair_use_check(const std::map<ActorId, ActorUsage>& registry) {
  std::vector<ActorId> violations;
  for (const auto& [actor, usage] : registry) {
    if (usage.devices > 0 && usage.gateways == 0) violations.push_back(actor);
  }
  return violations;
}

}  // namespace flip::admin
