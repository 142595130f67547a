#include <catch2/catch_amalgamated.hpp>

#include "flip/admin/fair_use.hpp"
#include "flip/admin/keys.hpp"

using namespace flip;
using namespace flip::admin;

TEST_CASE("session keys rotate per join and stale sessions stop decrypting") {
  ActorKeyStore owner(0);
  owner.register_identity({42, 0xa5, 0xdeadbeef});

  const auto s1 = owner.mint_session(42, 10.0);
  const auto s2 = owner.mint_session(42, 20.0);
  CHECK(s2.session_id == s1.session_id + 1);
  CHECK(s1.app_s_key != s2.app_s_key);
  CHECK(s1.nwk_s_key != s2.nwk_s_key);

  // Key derivation is deterministic: the device, holding the same AppKey,
  // derives identical session material.
  const auto re1 = derive_session_keys({42, 0xa5, 0xdeadbeef}, 1, 0.0);
  CHECK(re1.app_s_key == s1.app_s_key);
  CHECK(re1.nwk_s_key == s1.nwk_s_key);

  const SealedPayload old_payload{42, s1.session_id, s1.app_s_key, 16};
  const SealedPayload new_payload{42, s2.session_id, s2.app_s_key, 16};
  CHECK_FALSE(owner.decrypt(old_payload).has_value());  // superseded session
  CHECK(owner.decrypt(new_payload).has_value());
}

TEST_CASE("only holders of the application session key can read") {
  ActorKeyStore owner(0);
  owner.register_identity({7, 0x11, 0x1234});
  const auto keys = owner.mint_session(7, 0.0);
  const SealedPayload payload{7, keys.session_id, keys.app_s_key, 20};

  ActorKeyStore handler(1);  // got the network key only: nothing to decrypt with
  CHECK_FALSE(handler.decrypt(payload).has_value());

  ActorKeyStore renter(2);
  renter.grant_app_key(7, keys);
  CHECK(renter.decrypt(payload).has_value());

  // After the next join cycle the renter's key is stale.
  const auto keys2 = owner.mint_session(7, 100.0);
  const SealedPayload payload2{7, keys2.session_id, keys2.app_s_key, 20};
  CHECK_FALSE(renter.decrypt(payload2).has_value());
  CHECK(owner.decrypt(payload2).has_value());
}

TEST_CASE("a forged token with the right session id still fails") {
  ActorKeyStore owner(0);
  owner.register_identity({9, 0x22, 0x777});
  const auto keys = owner.mint_session(9, 0.0);
  SealedPayload forged{9, keys.session_id, keys.app_s_key ^ 1, 8};
  CHECK_FALSE(owner.decrypt(forged).has_value());
}

TEST_CASE("fair use: device owners must contribute gateways") {
  std::map<ActorId, ActorUsage> registry;
  registry[0] = {10, 1};  // devices + a gateway: fine
  registry[1] = {0, 2};   // pure contributor: fine
  registry[2] = {3, 0};   // freeloader
  const auto violations = fair_use_check(registry);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0] == 2);
}
