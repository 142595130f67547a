#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "flip/admin/keys.hpp"
#include "flip/consensus/proposal.hpp"
#include "flip/core/ids.hpp"
#include "flip/membership/profile.hpp"
#include "flip/pubsub/records.hpp"

namespace flip::engine {

/// Message vocabulary of the in-process gateway bus. This transport stands
/// in for the REST APIs between gateway containers: reliable, FIFO per
/// sender/receiver pair, with configurable latency (zero inside a cluster
/// by default, non-zero between cluster leaders).
enum class MsgKind : std::uint8_t {
  // Membership overlay
  ProfileExchange,
  RpsSample,
  // Handling consensus
  ConsensusInit,
  ConsensusProposal,
  ConsensusDecision,
  // Local pub/sub dissemination
  SubscribeForward,
  SubscribeAck,
  // Inter-cluster (leader-to-leader)
  SubscribeFlood,
  PublishMatch,
  DeviceData,
  KeyMaterial,
  // Leader election and state handoff
  LeaderBid,
  LeaderHandoff,
  // Owner-side registry maintenance
  HandlerRevoke,
  // Non-federated modes: per-actor network-server emulation
  BaselineHearReport,
  BaselineAssign,
  // Local timers realized as self-addressed messages
  ConsensusDecide,
  DisseminationRound,
  BaselineDecide,
  DelegationStart,
};

inline const char* msg_kind_name(MsgKind k) {
  switch (k) {
    case MsgKind::ProfileExchange: return "profile_exchange";
    case MsgKind::RpsSample: return "rps_sample";
    case MsgKind::ConsensusInit: return "consensus_init";
    case MsgKind::ConsensusProposal: return "consensus_proposal";
    case MsgKind::ConsensusDecision: return "consensus_decision_msg";
    case MsgKind::SubscribeForward: return "subscribe_forward";
    case MsgKind::SubscribeAck: return "subscribe_ack";
    case MsgKind::SubscribeFlood: return "subscribe_flood";
    case MsgKind::PublishMatch: return "publish_match";
    case MsgKind::DeviceData: return "device_data";
    case MsgKind::KeyMaterial: return "key_material";
    case MsgKind::LeaderBid: return "leader_bid";
    case MsgKind::LeaderHandoff: return "leader_handoff";
    case MsgKind::HandlerRevoke: return "handler_revoke";
    case MsgKind::BaselineHearReport: return "baseline_hear";
    case MsgKind::BaselineAssign: return "baseline_assign";
    case MsgKind::ConsensusDecide: return "consensus_decide";
    case MsgKind::DisseminationRound: return "dissemination_round";
    case MsgKind::BaselineDecide: return "baseline_decide";
    case MsgKind::DelegationStart: return "delegation_start";
  }
  return "?";
}

struct ProfileExchangePayload {
  membership::GatewayProfile profile;
  bool reply = false;
  std::vector<GatewayId> known;  // sender's current kNN members
};

struct RpsSamplePayload {
  std::vector<GatewayId> members;
};

struct ConsensusProposalPayload {
  DevEui dev = 0;
  std::uint32_t attempt = 0;
  consensus::HandlerProposal proposal;
  GatewayId origin = 0;  // the hearer that emitted the proposal
  int hops = 0;
};

struct ConsensusDecisionPayload {
  DevEui dev = 0;
  std::uint32_t attempt = 0;
  GatewayId winner = 0;
};

struct SubscribeForwardPayload {
  pubsub::SubscribeRecord record;
};

struct SubscribeAckPayload {
  pubsub::RequestId request_id;
  bool had_seen = false;
};

struct SubscribeFloodPayload {
  pubsub::SubscribeRecord record;
  std::vector<ClusterId> path;  // clusters traversed, origin first
};

struct PublishMatchPayload {
  DevEui dev = 0;
  std::uint32_t attempt = 0;
  GatewayId handler = 0;
  ClusterId handler_cluster = 0;
  double rssi_dbm = 0.0;
  int channel = 0;
  int sf = 7;
  GatewayId dest_gateway = 0;
  ClusterId dest_cluster = 0;
  std::vector<ClusterId> path;  // explicit source route, filled by the origin leader
};

struct DeviceDataPayload {
  admin::SealedPayload sealed;
  FrameId frame = 0;
  GatewayId handler = 0;
  GatewayId dest_gateway = 0;
  ClusterId dest_cluster = 0;
  std::vector<ClusterId> path;
};

enum class KeyMaterialKind : std::uint8_t { ToHandler, ToRenter };

struct KeyMaterialPayload {
  KeyMaterialKind material = KeyMaterialKind::ToHandler;
  DevEui dev = 0;
  std::uint32_t attempt = 0;
  std::uint32_t session_id = 0;
  admin::KeyToken nwk_s_key = 0;
  admin::SessionKeys app_session;  // only for ToRenter
  int channel = 0;
  int sf = 7;
  GatewayId data_dest_gateway = 0;   // where the handler must forward uplinks
  ClusterId data_dest_cluster = 0;
  GatewayId dest_gateway = 0;
  ClusterId dest_cluster = 0;
  std::vector<ClusterId> path;
};

struct LeaderBidPayload {
  ClusterId cluster = 0;
  std::uint64_t term = 0;
  double occupation = 0.0;
};

struct LeaderHandoffPayload {
  std::map<ClusterId, std::vector<ClusterId>> route_cache;
  std::map<std::pair<DevEui, std::uint32_t>, GatewayId> pending_sender_map;
};

struct HandlerRevokePayload {
  DevEui dev = 0;
  std::uint32_t session_id = 0;  // sessions older than this are stale
  GatewayId dest_gateway = 0;
  ClusterId dest_cluster = 0;
  std::vector<ClusterId> path;
};

struct BaselineHearReportPayload {
  DevEui dev = 0;
  std::uint32_t attempt = 0;
  bool is_data = false;
  FrameId frame = 0;
  double rssi_dbm = 0.0;
  GatewayId hearer = 0;
  std::array<double, radio::kChannelCount> occupation{};
  admin::SealedPayload sealed;  // for data frames
};

struct BaselineAssignPayload {
  DevEui dev = 0;
  std::uint32_t attempt = 0;
  std::uint32_t session_id = 0;
  int channel = 0;
  int sf = 7;
};

struct ConsensusDecidePayload {
  DevEui dev = 0;
  std::uint32_t attempt = 0;
};

struct DisseminationRoundPayload {
  pubsub::RequestId request_id;
};

struct BaselineDecidePayload {
  DevEui dev = 0;
  std::uint32_t attempt = 0;
};

struct DelegationStartPayload {
  DevEui dev = 0;
  ActorId renter = 0;
};

using MsgPayload =
    std::variant<ProfileExchangePayload, RpsSamplePayload, ConsensusProposalPayload,
                 ConsensusDecisionPayload, SubscribeForwardPayload, SubscribeAckPayload,
                 SubscribeFloodPayload, PublishMatchPayload, DeviceDataPayload,
                 KeyMaterialPayload, LeaderBidPayload, LeaderHandoffPayload,
                 HandlerRevokePayload, BaselineHearReportPayload, BaselineAssignPayload,
                 ConsensusDecidePayload, DisseminationRoundPayload, BaselineDecidePayload,
                 DelegationStartPayload>;

struct BusMessage {
  MsgKind kind = MsgKind::ProfileExchange;
  GatewayId from = 0;
  GatewayId to = kNoGateway;                 // direct address, or
  std::optional<ClusterId> to_leader_of;     // resolved to the leader at delivery time
  MsgPayload payload;
};

}  // namespace flip::engine
