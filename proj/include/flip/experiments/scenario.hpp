#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "flip/admin/fair_use.hpp"
#include "flip/consensus/proposal.hpp"
#include "flip/core/ids.hpp"
#include "flip/intercluster/graph.hpp"
#include "flip/radio/path_loss.hpp"
#include "flip/radio/phy.hpp"

namespace flip::experiments {

enum class Mode { BaselineSingleActor, TwoActorPartition, FlipFederation };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::BaselineSingleActor: return "baseline";
    case Mode::TwoActorPartition: return "two_actor";
    case Mode::FlipFederation: return "flip";
  }
  return "?";
}

inline std::optional<Mode> mode_from_name(const std::string& s) {
  if (s == "baseline") return Mode::BaselineSingleActor;
  if (s == "two_actor") return Mode::TwoActorPartition;
  if (s == "flip") return Mode::FlipFederation;
  return std::nullopt;
}

struct GatewaySpec {
  Vec2 position;
  ActorId actor = 0;
  ClusterId cluster = 0;
};

/// Explicit end-device, used by fixtures; sweep scenarios generate devices
/// from the seed instead.
struct DeviceSpec {
  Vec2 position;
  ActorId owner = 0;
  int payload_size = 16;
  double uplink_period_s = 60.0;
  double rejoin_period_s = 3600.0;
  double wake_at_s = 1.0;
};

struct DelegationSpec {
  std::size_t device_index = 0;
  ActorId renter = 0;
  double at_s = 0.0;
};

struct DeviceGenParams {
  int payload_min = 1;
  int payload_max = 51;
  double uplink_period_min_s = 20.0;
  double uplink_period_max_s = 70.0;
  double rejoin_period_min_s = 1800.0;
  double rejoin_period_max_s = 3600.0;
  double duty_limit = 0.01;
  double wake_window_s = 600.0;
};

struct JoinParams {
  int join_sf = 12;
  int join_payload_bytes = 10;    // PHY total 23 with the default overhead
  int accept_payload_bytes = 4;   // PHY total 17
  double join_timeout_s = 6.0;
  double backoff_initial_s = 30.0;
  double backoff_factor = 2.0;
  double backoff_cap_s = 480.0;
  double backoff_jitter = 0.2;
};

struct ProtocolParams {
  std::size_t knn_k = 5;
  std::size_t rps_r = 5;
  double gossip_period_s = 60.0;
  double rssi_dynamic_range_db = 60.0;
  double rssi_ema_alpha = 0.3;
  double heard_staleness_s = 10800.0;  // 3x the rejoin upper bound
  double subscribe_ttl_s = 86400.0;
  double publish_staleness_s = 3600.0;
  int dissemination_fanout = 4;
  int dissemination_hop_budget = 5;
  double dissemination_round_interval_s = 1.0;
  double consensus_decision_delay_s = 1.0;
  int consensus_rounds = 2;
  consensus::ScoreWeights score;
  double sf_margin_db = 3.0;
  double occupation_window_s = 900.0;
  double projected_frames_per_hour = 100.0;
  double leader_period_s = 120.0;
  double election_settle_s = 1.0;
  double expiry_sweep_period_s = 60.0;
  double baseline_decision_delay_s = 0.25;
  double accept_max_defer_s = 3.0;
};

struct BusParams {
  double intra_cluster_latency_s = 0.0;
  double inter_cluster_latency_s = 0.05;
};

struct ClusterTopology {
  std::size_t count = 1;
  std::vector<std::pair<ClusterId, ClusterId>> edges;
};

struct ScenarioConfig {
  std::string name = "scenario";
  Mode mode = Mode::BaselineSingleActor;
  bool altruist = true;
  std::uint64_t seed = 1;
  int device_count = 0;
  double duration_s = 1800.0;
  double grid_side_m = 20000.0;
  double tx_power_dbm = 14.0;

  radio::PhyParams phy;
  radio::PathModel path;
  radio::SensitivityTable sensitivity;
  DeviceGenParams devices;
  JoinParams join;
  ProtocolParams protocol;
  BusParams bus;
  ClusterTopology clusters;

  std::vector<GatewaySpec> gateways;        // empty -> canonical 4-gateway layout
  std::vector<DeviceSpec> explicit_devices; // fixtures; generated devices are appended
  std::vector<DelegationSpec> delegations;

  bool log_events = true;
};

inline std::size_t actor_count(Mode mode) {
  switch (mode) {
    case Mode::BaselineSingleActor: return 1;
    case Mode::TwoActorPartition: return 2;
    case Mode::FlipFederation: return 4;
  }
  return 1;
}

/// Canonical evaluation layout: four static gateways at the quarter points
/// of a square grid. Actor assignment realizes the scenario family --
/// one operator owning everything, a left/right two-operator split, or a
/// four-operator federation.
inline std::vector<GatewaySpec> canonical_gateways(Mode mode, double grid_side_m) {
  const double q = grid_side_m / 4.0;
  std::vector<GatewaySpec> gws = {
      {{-q, -q}, 0, 0},
      {{-q, q}, 0, 0},
      {{q, -q}, 0, 0},
      {{q, q}, 0, 0},
  };
  switch (mode) {
    case Mode::BaselineSingleActor:
      break;
    case Mode::TwoActorPartition:
      gws[2].actor = gws[3].actor = 1;  // right column belongs to the second actor
      break;
    case Mode::FlipFederation:
      for (std::size_t i = 0; i < 4; ++i) gws[i].actor = static_cast<ActorId>(i);
      break;
  }
  return gws;
}

inline ScenarioConfig build_scenario(Mode mode, int device_count, std::uint64_t seed) {
  if (device_count < 0) throw std::invalid_argument("device_count must be >= 0");
  ScenarioConfig cfg;
  cfg.name = std::string(mode_name(mode)) + "_" + std::to_string(device_count);
  cfg.mode = mode;
  cfg.seed = seed;
  cfg.device_count = device_count;
  cfg.gateways = canonical_gateways(mode, cfg.grid_side_m);
  return cfg;
}

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Full structural validation; throws ConfigError with the first problem
/// found. Runs before any simulation event executes.
inline void validate(const ScenarioConfig& cfg) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };

  if (cfg.device_count < 0) fail("device_count must be >= 0");
  if (cfg.duration_s <= 0.0) fail("duration_s must be positive");
  if (cfg.grid_side_m <= 0.0) fail("grid_side_m must be positive");
  if (cfg.gateways.empty()) fail("at least one gateway is required");

  if (cfg.phy.bandwidth_hz <= 0.0) fail("phy.bandwidth_hz must be positive");
  if (cfg.phy.coding_rate < 1 || cfg.phy.coding_rate > 4) fail("phy.coding_rate must be in [1,4]");
  if (cfg.phy.preamble_symbols < 1) fail("phy.preamble_symbols must be >= 1");
  if (cfg.phy.mac_overhead_bytes < 0) fail("phy.mac_overhead_bytes must be >= 0");

  const double dl = cfg.devices.duty_limit;
  if (dl != 0.001 && dl != 0.01 && dl != 0.10) fail("duty_limit must be one of 0.001, 0.01, 0.10");
  if (cfg.devices.payload_min < 1 || cfg.devices.payload_max > radio::kMaxPayloadBytes ||
      cfg.devices.payload_min > cfg.devices.payload_max)
    fail("device payload range must satisfy 1 <= min <= max <= 230");
  if (cfg.devices.uplink_period_min_s <= 0 ||
      cfg.devices.uplink_period_min_s > cfg.devices.uplink_period_max_s)
    fail("uplink period range invalid");
  if (cfg.devices.rejoin_period_min_s <= 0 ||
      cfg.devices.rejoin_period_min_s > cfg.devices.rejoin_period_max_s)
    fail("rejoin period range invalid");

  if (cfg.join.join_sf < radio::SpreadingFactor::kMin || cfg.join.join_sf > radio::SpreadingFactor::kMax)
    fail("join_sf must be in [7,12]");
  if (cfg.join.join_payload_bytes < 1 || cfg.join.accept_payload_bytes < 1)
    fail("join payload sizes must be >= 1");
  if (cfg.join.join_timeout_s <= 0) fail("join_timeout_s must be positive");

  for (std::size_t i = 1; i < cfg.sensitivity.dbm.size(); ++i)
    if (cfg.sensitivity.dbm[i] >= cfg.sensitivity.dbm[i - 1])
      fail("sensitivity table must grow strictly more sensitive with SF");

  const auto& w = cfg.protocol.score;
  if (w.rssi < 0 || w.occupation < 0 || w.load < 0) fail("score weights must be non-negative");
  if (std::abs(w.rssi + w.occupation + w.load - 1.0) > 1e-9) fail("score weights must sum to 1");
  if (cfg.protocol.knn_k < 1) fail("knn_k must be >= 1");
  if (cfg.protocol.rps_r < 1) fail("rps_r must be >= 1");
  if (cfg.protocol.dissemination_fanout < 1) fail("dissemination_fanout must be >= 1");
  if (cfg.protocol.dissemination_hop_budget < 1) fail("dissemination_hop_budget must be >= 1");
  if (cfg.protocol.consensus_decision_delay_s <=
      cfg.bus.intra_cluster_latency_s * cfg.protocol.dissemination_hop_budget)
    fail("consensus_decision_delay_s must exceed the worst-case proposal flood time");

  if (cfg.clusters.count < 1) fail("clusters.count must be >= 1");
  if (cfg.clusters.count > 1 && cfg.clusters.edges.empty())
    fail("multi-cluster scenarios need explicit cluster edges");
  intercluster::ClusterGraph graph(cfg.clusters.count);
  for (auto [a, b] : cfg.clusters.edges) {
    if (a >= cfg.clusters.count || b >= cfg.clusters.count) fail("cluster edge endpoint out of range");
    if (a == b) fail("cluster self-edges are not allowed");
    graph.add_edge(a, b);
  }
  if (!graph.connected()) fail("cluster graph must be connected");

  // Mode structure over the gateway set.
  std::map<ActorId, admin::ActorUsage> registry;
  for (const auto& g : cfg.gateways) {
    if (g.cluster >= cfg.clusters.count) fail("gateway cluster id out of range");
    registry[g.actor].gateways++;
  }
  switch (cfg.mode) {
    case Mode::BaselineSingleActor:
      if (registry.size() != 1) fail("baseline mode requires a single actor owning all gateways");
      break;
    case Mode::TwoActorPartition: {
      if (registry.size() != 2) fail("two-actor mode requires exactly two actors");
      auto it = registry.begin();
      if (it->second.gateways != std::next(it)->second.gateways)
        fail("two-actor mode requires an even gateway split");
      break;
    }
    case Mode::FlipFederation:
      break;
  }

  // Device ownership; generated devices are assigned round-robin over the
  // mode's actor set.
  for (const auto& d : cfg.explicit_devices) registry[d.owner].devices++;
  const std::size_t actors = actor_count(cfg.mode);
  for (int i = 0; i < cfg.device_count; ++i)
    registry[static_cast<ActorId>(static_cast<std::size_t>(i) % actors)].devices++;

  const auto violations = admin::fair_use_check(registry);
  if (!violations.empty())
    fail("fair-use violation: actor " + std::to_string(violations.front()) +
         " deploys end-devices but contributes no gateway");

  const std::size_t total_devices =
      cfg.explicit_devices.size() + static_cast<std::size_t>(cfg.device_count);
  for (const auto& del : cfg.delegations) {
    if (del.device_index >= total_devices) fail("delegation references an unknown device");
    if (!registry.count(del.renter) || registry[del.renter].gateways == 0)
      fail("delegation renter must be an actor contributing a gateway");
  }
}

}  // namespace flip::experiments
