#include <catch2/catch_amalgamated.hpp>

#include "flip/pubsub/records.hpp"

using namespace flip;
using namespace flip::pubsub;

namespace {

SubscribeRecord make_sub(GatewayId owner, std::uint64_t counter, DevEui dev, double created,
                         double expires) {
  SubscribeRecord r;
  r.request_id = {owner, counter};
  r.dev_eui = dev;
  r.owner_gateway = owner;
  r.created_at = created;
  r.expires_at = expires;
  return r;
}

}  // namespace

TEST_CASE("store dedups by request id, even after expiry") {
  RecordStore store;
  const auto rec = make_sub(1, 1, 100, 0.0, 10.0);
  CHECK(store.store_subscribe(rec));
  CHECK_FALSE(store.store_subscribe(rec));
  CHECK(store.seen(rec.request_id));

  store.expiry_sweep(20.0, 3600.0);
  CHECK(store.subscribes().empty());
  // A re-delivered stale request is still recognized.
  CHECK_FALSE(store.store_subscribe(rec));
}

TEST_CASE("match requires a live record and prefers the newest") {
  RecordStore store;
  store.store_subscribe(make_sub(1, 1, 100, 0.0, 50.0));
  auto renter_tagged = make_sub(1, 2, 100, 10.0, 50.0);
  renter_tagged.renter_gateway = 7;
  store.store_subscribe(renter_tagged);

  const auto m = store.match(100, 20.0);
  REQUIRE(m.has_value());
  REQUIRE(m->renter_gateway.has_value());
  CHECK(*m->renter_gateway == 7);

  CHECK_FALSE(store.match(101, 20.0).has_value());
}

TEST_CASE("expiry boundary is exclusive: a record dies exactly at expires_at") {
  RecordStore store;
  store.store_subscribe(make_sub(1, 1, 100, 0.0, 30.0));
  CHECK(store.match(100, 29.999).has_value());
  CHECK_FALSE(store.match(100, 30.0).has_value());

  CHECK(store.expiry_sweep(30.0, 3600.0) == 1);
  CHECK(store.subscribes().empty());
}

TEST_CASE("expiry sweep counts and publish staleness") {
  RecordStore store;
  store.store_subscribe(make_sub(1, 1, 100, 0.0, 10.0));
  store.store_subscribe(make_sub(1, 2, 101, 0.0, 100.0));
  store.store_publish({200, 1, -90.0, 0.0});
  store.store_publish({201, 1, -90.0, 50.0});

  CHECK(store.expiry_sweep(5.0, 3600.0) == 0);
  // At t=60: the first subscribe (exp 10) and nothing else; publishes are
  // younger than an hour.
  CHECK(store.expiry_sweep(60.0, 3600.0) == 1);
  // At t=3605: the second subscribe (exp 100) and the first publish
  // (created 0) both age out.
  CHECK(store.expiry_sweep(3605.0, 3600.0) == 2);
  CHECK(store.holds_publish(201));
  CHECK_FALSE(store.holds_publish(200));
}

TEST_CASE("publish records gate the local-match shortcut") {
  RecordStore store;
  CHECK_FALSE(store.holds_publish(5));
  store.store_publish({5, 2, -77.0, 1.0});
  CHECK(store.holds_publish(5));
}
