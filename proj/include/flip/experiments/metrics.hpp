#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "flip/core/ids.hpp"

namespace flip::experiments {

/// Aggregated outcome of one simulation run.
struct RunMetrics {
  std::uint64_t join_attempts = 0;   // devices that sent at least one join request
  std::uint64_t join_successes = 0;  // devices that reached the joined state
  double join_ratio = 0.0;
  std::uint64_t collisions = 0;
  std::uint64_t frames_sent = 0;     // data uplinks transmitted
  std::uint64_t frames_delivered_to_owner = 0;
  std::uint64_t joins_sent = 0;      // join request transmissions (incl. retries)
  std::uint64_t accepts_sent = 0;
  std::uint64_t lost_no_coverage = 0;

  void finalize() {
    join_ratio = join_attempts == 0
                     ? 0.0
                     : static_cast<double>(join_successes) / static_cast<double>(join_attempts);
  }

  bool operator==(const RunMetrics&) const = default;
};

namespace detail {
inline std::string field(const std::string& line, const std::string& key) {
  const std::string needle = key + "=";
  auto pos = line.find(needle);
  if (pos == std::string::npos) return {};
  pos += needle.size();
  const auto end = line.find(' ', pos);
  return line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}
}  // namespace detail

/// Independent recomputation of RunMetrics from an event log. The engine
/// counts during execution; this reducer counts from the trace alone. The
/// two must agree exactly, which is asserted by the test suite.
inline RunMetrics reduce_event_log(std::span<const std::string> lines) {
  RunMetrics m;
  std::set<std::string> joining_devs;
  std::set<std::string> joined_devs;
  for (const auto& line : lines) {
    std::istringstream ss(line);
    std::string time, entity, kind;
    ss >> time >> entity >> kind;
    if (kind == "tx_start") {
      const std::string fk = detail::field(line, "kind");
      if (fk == "join") {
        ++m.joins_sent;
        joining_devs.insert(entity);
      } else if (fk == "data") {
        ++m.frames_sent;
      }
    } else if (kind == "collision") {
      ++m.collisions;
    } else if (kind == "joined") {
      joined_devs.insert(entity);
    } else if (kind == "delivered") {
      ++m.frames_delivered_to_owner;
    } else if (kind == "tx_accept") {
      ++m.accepts_sent;
    } else if (kind == "lost_no_coverage") {
      ++m.lost_no_coverage;
    }
  }
  m.join_attempts = joining_devs.size();
  m.join_successes = joined_devs.size();
  m.finalize();
  return m;
}

}  // namespace flip::experiments
