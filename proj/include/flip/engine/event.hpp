#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <variant>
#include <vector>

#include "flip/engine/bus.hpp"
#include "flip/radio/frame.hpp"

namespace flip::engine {

enum class EventKind : std::uint8_t {
  RadioTxStart,
  RadioRxComplete,
  GossipTick,
  LeaderTick,
  PubSubExpiryTick,
  DeviceWake,
  ClusterMessageDelivery,
};

enum class WakeAction : std::uint8_t { InitialWake, JoinTx, JoinTimeout, Uplink };

/// Join accept metadata riding the downlink, consumed by the device.
struct JoinAcceptInfo {
  DevEui dev = 0;
  std::uint32_t attempt = 0;
  GatewayId handler = 0;
  int channel = 0;
  int sf = 7;
  std::uint32_t session_id = 0;
};

struct TxStartPayload {
  radio::Frame frame;
  bool downlink = false;
  GatewayId tx_gateway = kNoGateway;  // transmitter when downlink
  JoinAcceptInfo accept;              // valid when downlink
  double accept_first_try = 0.0;      // deferral window anchor
};

struct RxCompletePayload {
  GatewayId gateway = kNoGateway;  // receiving gateway for uplinks
  int channel = 0;
  FrameId frame_id = 0;
  bool device_side = false;  // join accept landing at the device
  JoinAcceptInfo accept;
};

struct GossipTickPayload {
  GatewayId gateway = 0;
  bool immediate = false;  // out-of-period round after a profile change
};

struct LeaderTickPayload {
  ClusterId cluster = 0;
  bool decide = false;  // false: collect bids, true: settle the election
  std::uint64_t term = 0;
};

struct ExpiryTickPayload {
  GatewayId gateway = 0;
};

struct DeviceWakePayload {
  DevEui dev = 0;
  WakeAction action = WakeAction::InitialWake;
  std::uint32_t attempt = 0;  // guards stale join timeouts
};

using EventPayload = std::variant<TxStartPayload, RxCompletePayload, GossipTickPayload,
                                  LeaderTickPayload, ExpiryTickPayload, DeviceWakePayload,
                                  BusMessage>;

struct SimEvent {
  double time = 0.0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::DeviceWake;
  EventPayload payload;
};

/// Discrete-event queue with a deterministic total order: time first, then
/// insertion sequence. Scheduling into the past is a logic error.
class Scheduler {
 public:
  void schedule(double time, EventKind kind, EventPayload payload) {
    if (time < now_) throw std::logic_error("scheduling into the past");
    queue_.push(SimEvent{time, next_seq_++, kind, std::move(payload)});
  }

  bool empty() const { return queue_.empty(); }
  double next_time() const { return queue_.top().time; }
  double now() const { return now_; }

  SimEvent pop() {
    SimEvent ev = queue_.top();
    queue_.pop();
    if (ev.time < now_) throw std::logic_error("event order violated");
    now_ = ev.time;
    return ev;
  }

  void clear() {
    queue_ = {};
  }

 private:
  struct Later {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  double now_ = 0.0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<SimEvent, std::vector<SimEvent>, Later> queue_;
};

}  // namespace flip::engine
