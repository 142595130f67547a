#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "flip/consensus/channel_assign.hpp"
#include "flip/consensus/proposal.hpp"
#include "flip/core/rng.hpp"

using namespace flip;
using namespace flip::consensus;

TEST_CASE("score is monotone in rssi, occupation and load") {
  ScoreWeights w;
  HandlerProposal base{1, 0.3, -100.0, 5};
  HandlerProposal better_rssi = base;
  better_rssi.rssi_dbm = -80.0;
  CHECK(score(better_rssi, w) > score(base, w));

  HandlerProposal busier = base;
  busier.occupation = 0.6;
  CHECK(score(busier, w) < score(base, w));

  HandlerProposal loaded = base;
  loaded.pending_load = 30;
  CHECK(score(loaded, w) < score(base, w));
}

TEST_CASE("score fixture ranking matches hand arithmetic") {
  // Weights 0.5 / 0.3 / 0.2, rssi normalized over [-140, -30], load cap 64.
  ScoreWeights w;
  const HandlerProposal a{1, 0.10, -70.0, 0};
  const HandlerProposal b{2, 0.00, -100.0, 8};
  const HandlerProposal c{3, 0.50, -60.0, 32};
  // a: 0.5*(70/110)    - 0.3*0.10 - 0.2*0      = 0.288181..
  // b: 0.5*(40/110)    - 0.3*0    - 0.2*0.125  = 0.156818..
  // c: 0.5*(80/110)    - 0.3*0.50 - 0.2*0.5    = 0.113636..
  CHECK(score(a, w) == Catch::Approx(0.5 * (70.0 / 110.0) - 0.03).margin(1e-12));
  CHECK(score(b, w) == Catch::Approx(0.5 * (40.0 / 110.0) - 0.025).margin(1e-12));
  CHECK(score(c, w) == Catch::Approx(0.5 * (80.0 / 110.0) - 0.25).margin(1e-12));
  CHECK(elect_handler({a, b, c}, w) == 1);
  CHECK(elect_handler({b, c}, w) == 2);
}

TEST_CASE("equal scores break ties to the lowest gateway id") {
  ScoreWeights w;
  const HandlerProposal a{7, 0.2, -90.0, 4};
  HandlerProposal b = a;
  b.gateway_id = 3;
  CHECK(elect_handler({a, b}, w) == 3);
  CHECK(elect_handler({b, a}, w) == 3);
}

TEST_CASE("single proposal elects itself") {
  ScoreWeights w;
  CHECK(elect_handler({HandlerProposal{42, 0.9, -130.0, 60}}, w) == 42);
}

TEST_CASE("shannon entropy bounds and the uniform maximum") {
  std::vector<double> uniform(radio::kChannelCount, 0.125);
  CHECK(shannon_entropy(uniform) == Catch::Approx(3.0).margin(1e-12));

  // Any scaling of the distribution leaves the entropy unchanged.
  std::vector<double> scaled(radio::kChannelCount, 7.3);
  CHECK(shannon_entropy(scaled) == Catch::Approx(3.0).margin(1e-12));

  std::vector<double> point{1.0, 0.0, 0.0};
  CHECK(shannon_entropy(point) == Catch::Approx(0.0).margin(1e-12));
  CHECK(shannon_entropy(std::vector<double>{}) == 0.0);
  CHECK(shannon_entropy(std::vector<double>(8, 0.0)) == 0.0);

  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    std::vector<double> w(radio::kChannelCount);
    for (auto& x : w) x = rng.uniform(0.0, 5.0);
    const double h = shannon_entropy(w);
    CHECK(h >= 0.0);
    CHECK(h <= 3.0 + 1e-12);
  }
}

TEST_CASE("entropy argmax is invariant under uniform scaling of occupations") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::array<double, radio::kChannelCount> own{};
    for (auto& x : own) x = rng.uniform(0.0, 0.4);
    std::vector<std::array<double, radio::kChannelCount>> peers(2);
    for (auto& p : peers)
      for (auto& x : p) x = rng.uniform(0.0, 0.4);

    const auto pick = choose_channel(own, peers, 0.05, AssignMode::Altruist);

    auto own_scaled = own;
    auto peers_scaled = peers;
    for (auto& x : own_scaled) x *= 3.0;
    for (auto& p : peers_scaled)
      for (auto& x : p) x *= 3.0;
    const auto pick_scaled = choose_channel(own_scaled, peers_scaled, 0.15, AssignMode::Altruist);
    CHECK(pick == pick_scaled);
  }
}

TEST_CASE("channel assignment: idle world ties to channel 0 in both modes") {
  std::array<double, radio::kChannelCount> idle{};
  CHECK(choose_channel(idle, {}, 0.01, AssignMode::Selfish).index() == 0);
  CHECK(choose_channel(idle, {}, 0.01, AssignMode::Altruist).index() == 0);
}

TEST_CASE("channel assignment: uniform aggregate ties to channel 0") {
  std::array<double, radio::kChannelCount> own{};
  own.fill(0.125);
  CHECK(choose_channel(own, {}, 0.02, AssignMode::Altruist).index() == 0);
}

TEST_CASE("altruist avoids the neighbourhood-saturated channel that selfish picks") {
  // The winner's own channel 2 is its least used, but the neighbours
  // hammer channel 2; entropy maximization steers the new device away.
  std::array<double, radio::kChannelCount> own{};
  own.fill(0.02);
  own[2] = 0.01;
  std::array<double, radio::kChannelCount> neighbour{};
  neighbour.fill(0.05);
  neighbour[2] = 0.60;

  const auto selfish = choose_channel(own, {neighbour}, 0.05, AssignMode::Selfish);
  const auto altruist = choose_channel(own, {neighbour}, 0.05, AssignMode::Altruist);
  CHECK(selfish.index() == 2);
  CHECK(altruist.index() != 2);

  // Exhaustive check of the altruist argmax over all eight candidates.
  std::array<double, radio::kChannelCount> agg{};
  for (int c = 0; c < radio::kChannelCount; ++c)
    agg[static_cast<std::size_t>(c)] =
        own[static_cast<std::size_t>(c)] + neighbour[static_cast<std::size_t>(c)];
  int best = 0;
  double best_h = -1.0;
  for (int c = 0; c < radio::kChannelCount; ++c) {
    auto with = agg;
    with[static_cast<std::size_t>(c)] += 0.05;
    const double h = shannon_entropy(with);
    if (h > best_h) {
      best_h = h;
      best = c;
    }
  }
  CHECK(altruist.index() == best);
}

TEST_CASE("sf choice takes the lowest admitting sensitivity with margin") {
  radio::SensitivityTable table{};  // -123,-126,-129,-132,-134.5,-137
  CHECK(choose_sf(-60.0, table, 3.0).value() == 7);
  CHECK(choose_sf(-120.0, table, 3.0).value() == 7);   // boundary: -123 + 3
  CHECK(choose_sf(-120.5, table, 3.0).value() == 8);
  CHECK(choose_sf(-133.0, table, 3.0).value() == 12);  // only SF12's margin admits
  CHECK(choose_sf(-136.0, table, 3.0).value() == 12);  // fallback: join was heard at SF12
}
