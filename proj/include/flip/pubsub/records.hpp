#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>

#include "flip/core/ids.hpp"

namespace flip::pubsub {

/// Network-unique id for a Subscribe request: issuing gateway + counter.
struct RequestId {
  GatewayId owner = 0;
  std::uint64_t counter = 0;

  bool operator==(const RequestId&) const = default;
  auto operator<=>(const RequestId&) const = default;
};

/// Deployment intent: "this device will appear, route it to me". Expires so
/// that forgotten devices stop congesting the system. A renter gateway may
/// be attached when the device has been delegated to another actor.
struct SubscribeRecord {
  RequestId request_id;
  DevEui dev_eui = 0;
  GatewayId owner_gateway = 0;
  std::optional<GatewayId> renter_gateway;
  ClusterId owner_cluster = 0;
  double created_at = 0.0;
  double expires_at = 0.0;

  bool live(double now) const { return now < expires_at; }
};

/// Device presence: generated locally when a join request is actually
/// received over the radio. Never disseminated.
struct PublishRecord {
  DevEui dev_eui = 0;
  GatewayId hearing_gateway = 0;
  double rssi_dbm = 0.0;
  double created_at = 0.0;
};

/// Per-gateway Publish/Subscribe memory with expiry sweeping and
/// request-id deduplication.
class RecordStore {
 public:
  /// Stores a record unless its id was already seen. Returns true when the
  /// record is new (and should be disseminated further).
  bool store_subscribe(const SubscribeRecord& rec) {
    if (!seen_.insert(rec.request_id).second) return false;
    subscribes_[rec.request_id] = rec;
    return true;
  }

  bool seen(const RequestId& id) const { return seen_.count(id) > 0; }

  void store_publish(const PublishRecord& rec) { publishes_[rec.dev_eui] = rec; }

  bool holds_publish(DevEui dev) const { return publishes_.count(dev) > 0; }

  /// The matching live subscribe for a device, preferring the most recent
  /// (a renter-tagged record supersedes the owner's earlier one).
  std::optional<SubscribeRecord> match(DevEui dev, double now) const {
    std::optional<SubscribeRecord> best;
    for (const auto& [id, rec] : subscribes_) {
      if (rec.dev_eui != dev || !rec.live(now)) continue;
      if (!best || rec.created_at > best->created_at ||
          (rec.created_at == best->created_at && id > best->request_id))
        best = rec;
    }
    return best;
  }

  /// Removes expired subscribes (boundary exclusive: a record whose
  /// expires_at equals `now` is purged) and stale publishes. Returns the
  /// number of records removed.
  std::size_t expiry_sweep(double now, double publish_staleness) {
    std::size_t purged = 0;
    for (auto it = subscribes_.begin(); it != subscribes_.end();) {
      if (!it->second.live(now)) {
        it = subscribes_.erase(it);
        ++purged;
      } else {
        ++it;
      }
    }
    for (auto it = publishes_.begin(); it != publishes_.end();) {
      if (it->second.created_at + publish_staleness <= now) {
        it = publishes_.erase(it);
        ++purged;
      } else {
        ++it;
      }
    }
    return purged;
  }

  const std::map<RequestId, SubscribeRecord>& subscribes() const { return subscribes_; }
  const std::map<DevEui, PublishRecord>& publishes() const { return publishes_; }

 private:
  std::map<RequestId, SubscribeRecord> subscribes_;
  std::map<DevEui, PublishRecord> publishes_;
  std::set<RequestId> seen_;  // dedup survives record expiry
};

}  // namespace flip::pubsub
