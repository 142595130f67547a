#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>

#include "flip/core/ids.hpp"
#include "flip/core/rng.hpp"

namespace flip::admin {

/// Opaque key token. Possession of the right token is what grants access;
/// no actual cipher runs anywhere in the simulator. The security argument
/// being exercised is key distribution, not cryptography.
using KeyToken = std::uint64_t;

struct DeviceIdentity {
  DevEui dev_eui = 0;
  std::uint64_t app_eui = 0;
  KeyToken app_key = 0;  // root secret, held only by the owner actor
};

/// Per-join session material. The network key goes to whichever gateway
/// handles the device; the application key stays with the owner (and is
/// shared with a renter for the duration of a delegation).
struct SessionKeys {
  KeyToken nwk_s_key = 0;
  KeyToken app_s_key = 0;
  std::uint32_t session_id = 0;
  double valid_from = 0.0;
};

/// Deterministic derivation from the root key and the session counter.
inline SessionKeys derive_session_keys(const DeviceIdentity& dev, std::uint32_t session_id,
                                       double now) {
  std::uint64_t x = dev.app_key ^ (static_cast<std::uint64_t>(session_id) << 32) ^ dev.dev_eui;
  SessionKeys keys;
  keys.nwk_s_key = Rng::splitmix64(x);
  keys.app_s_key = Rng::splitmix64(x);
  keys.session_id = session_id;
  keys.valid_from = now;
  return keys;
}

/// An application payload in transit: readable only with the matching
/// application session key.
struct SealedPayload {
  DevEui dev_eui = 0;
  std::uint32_t session_id = 0;
  KeyToken app_s_key = 0;  // the token the payload was sealed under
  int payload_size = 0;
};

struct DelegationContract {
  DevEui dev_eui = 0;
  ActorId owner = 0;
  ActorId renter = 0;
  enum class State { Pending, Active, Expired } state = State::Pending;
  std::uint32_t active_session = 0;
};

/// Key material held by one actor (shared across that actor's gateways,
/// mirroring an operator's backend).
class ActorKeyStore {
 public:
  explicit ActorKeyStore(ActorId actor = 0) : actor_(actor) {}

  ActorId actor() const { return actor_; }

  void register_identity(const DeviceIdentity& id) { identities_[id.dev_eui] = id; }
  bool owns(DevEui dev) const { return identities_.count(dev) > 0; }

  const DeviceIdentity& identity(DevEui dev) const {
    auto it = identities_.find(dev);
    if (it == identities_.end()) throw std::logic_error("actor does not own this device");
    return it->second;
  }

  /// Mints the next session for an owned device. Session ids strictly
  /// increase per device; stale payloads stop decrypting.
  SessionKeys mint_session(DevEui dev, double now) {
    const auto& id = identity(dev);
    const std::uint32_t sid = ++session_counter_[dev];
    SessionKeys keys = derive_session_keys(id, sid, now);
    app_keys_[dev] = keys;
    return keys;
  }

  /// Accept an application session key handed over by the owner (renter
  /// side of a delegation).
  void grant_app_key(DevEui dev, const SessionKeys& keys) { app_keys_[dev] = keys; }

  void revoke_app_key(DevEui dev) { app_keys_.erase(dev); }

  std::optional<SessionKeys> app_session(DevEui dev) const {
    auto it = app_keys_.find(dev);
    if (it == app_keys_.end()) return std::nullopt;
    return it->second;
  }

  /// Payload access check: succeeds only when this actor holds the exact
  /// application session key the payload was sealed under. Anything else --
  /// no key, stale session, foreign token -- yields nothing.
  std::optional<int> decrypt(const SealedPayload& sealed) const {
    auto it = app_keys_.find(sealed.dev_eui);
    if (it == app_keys_.end()) return std::nullopt;
    if (it->second.session_id != sealed.session_id) return std::nullopt;
    if (it->second.app_s_key != sealed.app_s_key) return std::nullopt;
    return sealed.payload_size;
  }

 private:
  ActorId actor_;
  std::map<DevEui, DeviceIdentity> identities_;
  std::map<DevEui, SessionKeys> app_keys_;  // current app session per device
  std::map<DevEui, std::uint32_t> session_counter_;
};

}  // namespace flip::admin
