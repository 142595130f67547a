#pragma once

#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "flip/admin/keys.hpp"
#include "flip/consensus/proposal.hpp"
#include "flip/core/ids.hpp"
#include "flip/core/rng.hpp"
#include "flip/membership/profile.hpp"
#include "flip/membership/views.hpp"
#include "flip/pubsub/records.hpp"
#include "flip/radio/duty_cycle.hpp"
#include "flip/radio/occupation.hpp"
#include "flip/radio/receiver.hpp"

namespace flip::engine {

enum class DevicePhase : std::uint8_t { Idle, Joining, Joined };

struct DeviceState {
  DevEui eui = 0;
  ActorId owner = 0;
  GatewayId owner_gateway = 0;
  Vec2 position;
  int payload_size = 16;
  double uplink_period_s = 60.0;
  double rejoin_period_s = 3600.0;
  radio::DutyCycleBudget duty;
  Rng rng;

  DevicePhase phase = DevicePhase::Idle;
  std::uint32_t attempt = 0;  // join attempt counter
  int backoff_stage = 0;
  GatewayId handler = kNoGateway;
  int channel = 0;
  int sf = 7;
  std::uint32_t session_id = 0;
  double next_rejoin_at = 0.0;
  bool counted_attempt = false;
  bool counted_join = false;
};

/// A consensus round for one (device, join attempt) pair as seen by one
/// gateway. Participants heard the join request and hold a matching
/// subscribe; bystanders merely relay proposals.
struct ConsensusRoundState {
  DevEui dev = 0;
  std::uint32_t attempt = 0;
  bool participant = false;
  bool decided = false;
  double opened_at = 0.0;
  double join_rssi_dbm = 0.0;
  pubsub::SubscribeRecord match;
  std::map<GatewayId, consensus::HandlerProposal> proposals;
};

struct DisseminationState {
  pubsub::SubscribeRecord record;
  std::set<GatewayId> contacted;
  int rounds = 0;
  bool done = false;
  bool cold = false;
  int last_round_sent = 0;
  int last_round_seen_acks = 0;
};

/// A device registration held by its handler.
struct HandledDevice {
  int channel = 0;
  int sf = 7;
  std::uint32_t session_id = 0;
  std::uint32_t attempt = 0;
  admin::KeyToken nwk_s_key = 0;
  GatewayId data_dest_gateway = kNoGateway;
  ClusterId data_dest_cluster = 0;
};

/// Routing state owned by whichever gateway currently leads the cluster;
/// handed over wholesale on re-election.
struct LeaderLocal {
  std::uint64_t term = 0;
  std::map<ClusterId, std::vector<ClusterId>> route_cache;  // paths starting at own cluster
  std::map<std::pair<DevEui, std::uint32_t>, GatewayId> pending_sender_map;
};

struct GatewayState {
  GatewayId id = 0;
  ActorId actor = 0;
  ClusterId cluster = 0;
  Vec2 position;

  radio::ChannelReceiverState receiver;
  radio::DutyCycleBudget downlink_duty;
  radio::ChannelOccupation occupation;

  membership::GatewayProfile profile;
  membership::KnnView knn;
  membership::RpsView rps;
  std::map<GatewayId, membership::GatewayProfile> peer_profiles;
  std::set<GatewayId> discovered;          // peers learned about through exchanges
  std::map<DevEui, double> last_heard_at;  // drives staleness eviction

  pubsub::RecordStore records;
  std::uint64_t subscribe_counter = 0;
  std::map<pubsub::RequestId, DisseminationState> dissemination;

  std::map<std::pair<DevEui, std::uint32_t>, ConsensusRoundState> rounds;
  std::set<std::tuple<DevEui, std::uint32_t, GatewayId>> proposals_relayed;

  std::map<DevEui, HandledDevice> handled;

  bool is_leader = false;
  LeaderLocal leader;
  std::map<std::uint64_t, std::map<GatewayId, double>> election_bids;  // term -> bids
};

/// Backend shared by one actor's gateways: root keys, session mints,
/// delegation contracts, and (in the non-federated modes) the network
/// server's association brain.
struct ActorState {
  ActorId id = 0;
  admin::ActorKeyStore keys;
  GatewayId coordinator = kNoGateway;  // lowest-id owned gateway
  std::map<DevEui, admin::DelegationContract> delegations;
  std::map<DevEui, GatewayId> current_handler;  // owner-side view, for revocation

  struct BaselineRound {
    bool decided = false;
    std::map<GatewayId, std::pair<double, std::array<double, radio::kChannelCount>>> reports;
  };
  std::map<std::pair<DevEui, std::uint32_t>, BaselineRound> baseline_rounds;
  std::set<std::pair<DevEui, FrameId>> delivered_frames;  // network-server dedup
};

}  // namespace flip::engine
