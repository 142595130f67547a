#include <catch2/catch_amalgamated.hpp>

#include "flip/core/rng.hpp"
#include "flip/membership/profile.hpp"
#include "flip/membership/views.hpp"

using namespace flip;
using namespace flip::membership;

namespace {

GatewayProfile make_profile(GatewayId id, std::initializer_list<std::pair<DevEui, double>> heard) {
  GatewayProfile p;
  p.gateway_id = id;
  for (auto [d, r] : heard) p.heard[d] = r;
  return p;
}

GatewayProfile random_profile(Rng& rng, GatewayId id) {
  GatewayProfile p;
  p.gateway_id = id;
  const auto n = rng.uniform_index(12);
  for (std::uint64_t i = 0; i < n; ++i)
    p.heard[rng.uniform_index(20)] = rng.uniform(-130.0, -60.0);
  return p;
}

}  // namespace

TEST_CASE("similarity endpoints") {
  const auto a = make_profile(1, {{10, -80.0}, {11, -95.0}});
  CHECK(similarity(a, a) == Catch::Approx(1.0));

  const auto b = make_profile(2, {{20, -80.0}, {21, -95.0}});
  CHECK(similarity(a, b) == Catch::Approx(0.0));
}

TEST_CASE("similarity hand-evaluated weighted Jaccard") {
  // a = {d1: -80}, b = {d1: -80, d2: -90}: shared weight 1, union size 2.
  const auto a = make_profile(1, {{1, -80.0}});
  const auto b = make_profile(2, {{1, -80.0}, {2, -90.0}});
  CHECK(similarity(a, b, 60.0) == Catch::Approx(0.5));

  // RSSI disagreement shrinks the shared weight: |(-80)-(-95)| / 60 = 0.25.
  const auto c = make_profile(3, {{1, -95.0}});
  CHECK(similarity(a, c, 60.0) == Catch::Approx(0.75));
}

TEST_CASE("similarity is symmetric and bounded over random profiles") {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const auto a = random_profile(rng, 1);
    const auto b = random_profile(rng, 2);
    const double ab = similarity(a, b);
    const double ba = similarity(b, a);
    CHECK(ab == Catch::Approx(ba).margin(1e-12));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
  }
}

TEST_CASE("knn view keeps the k best, no self, no duplicates") {
  KnnView view(3);
  CHECK_FALSE(view.offer(1, 1, 0.9));  // self is rejected
  view.offer(1, 2, 0.5);
  view.offer(1, 3, 0.8);
  view.offer(1, 4, 0.2);
  view.offer(1, 5, 0.7);
  REQUIRE(view.entries().size() == 3);
  CHECK(view.entries()[0].gateway_id == 3);
  CHECK(view.entries()[1].gateway_id == 5);
  CHECK(view.entries()[2].gateway_id == 2);

  // Refreshing an existing member re-ranks rather than duplicating.
  view.offer(1, 2, 0.95);
  REQUIRE(view.entries().size() == 3);
  CHECK(view.entries()[0].gateway_id == 2);
  CHECK(view.contains(5));
  CHECK_FALSE(view.contains(4));

  // Ties break to the lower id.
  KnnView tied(2);
  tied.offer(9, 7, 0.5);
  tied.offer(9, 3, 0.5);
  tied.offer(9, 5, 0.5);
  CHECK(tied.entries()[0].gateway_id == 3);
  CHECK(tied.entries()[1].gateway_id == 5);
}

TEST_CASE("knn view with k >= membership holds everyone") {
  KnnView view(10);
  for (GatewayId id = 2; id <= 6; ++id) view.offer(1, id, 0.1 * id);
  CHECK(view.entries().size() == 5);
}
