#pragma once

#include <algorithm>
#include <cassert>
#include <map>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include "flip/admin/keys.hpp"
#include "flip/consensus/channel_assign.hpp"
#include "flip/consensus/proposal.hpp"
#include "flip/core/event_log.hpp"
#include "flip/core/ids.hpp"
#include "flip/core/rng.hpp"
#include "flip/engine/bus.hpp"
#include "flip/engine/event.hpp"
#include "flip/engine/state.hpp"
#include "flip/experiments/metrics.hpp"
#include "flip/experiments/scenario.hpp"
#include "flip/intercluster/routing.hpp"
#include "flip/membership/profile.hpp"
#include "flip/pubsub/records.hpp"
#include "flip/radio/path_loss.hpp"

namespace flip::engine {

/// Deterministic single-threaded simulation of one scenario: end-devices
/// and gateways over a shared radio space, with the federation overlays
/// (membership gossip, handling consensus, pub/sub dissemination, leader
/// routing, key administration) running on an in-process message bus.
///
/// All state mutation happens inside the event loop; two Simulation
/// instances share nothing and may run on different threads.
class Simulation {
 public:
  explicit Simulation(experiments::ScenarioConfig cfg) : cfg_(std::move(cfg)) {}

  /// Validates the config and builds the world without running any event.
  /// Tests may tweak entity state (e.g. preset membership views) between
  /// init() and run().
  void init() {
    if (initialized_) return;
    experiments::validate(cfg_);
    log_.set_enabled(cfg_.log_events);
    build_world();
    schedule_initial_events();
    initialized_ = true;
  }

  experiments::RunMetrics run() {
    init();
    run_until(cfg_.duration_s);
    finish();
    return metrics_;
  }

  void run_until(double t) {
    init();
    while (!sched_.empty() && sched_.next_time() <= t) {
      dispatch(sched_.pop());
    }
  }

  // --- introspection (tests, tools) ---
  const experiments::ScenarioConfig& config() const { return cfg_; }
  EventLog& log() { return log_; }
  const EventLog& log() const { return log_; }
  std::vector<DeviceState>& devices() { return devices_; }
  std::vector<GatewayState>& gateways() { return gateways_; }
  std::vector<ActorState>& actors() { return actors_; }
  const experiments::RunMetrics& metrics() const { return metrics_; }
  const intercluster::ClusterGraph& cluster_graph() const { return graph_; }
  GatewayId cluster_leader(ClusterId c) const { return leaders_.at(c); }
  double now() const { return sched_.now(); }

  /// Issues a deployment-intent subscribe at a gateway, as the device's
  /// owner would. Exposed for fixtures; scenario-driven subscribes call
  /// this too.
  pubsub::SubscribeRecord issue_subscribe(GatewayId gw_id, DevEui dev, double ttl,
                                          std::optional<GatewayId> renter = std::nullopt) {
    auto& g = gw(gw_id);
    pubsub::SubscribeRecord rec;
    rec.request_id = {g.id, ++g.subscribe_counter};
    rec.dev_eui = dev;
    rec.owner_gateway = g.id;
    rec.renter_gateway = renter;
    rec.owner_cluster = g.cluster;
    rec.created_at = now();
    rec.expires_at = now() + ttl;
    subscribe(g, rec);
    return rec;
  }

 private:
  // ======================================================================
  // World construction
  // ======================================================================

  void build_world() {
    Rng root(cfg_.seed);
    placement_rng_ = root.fork("placement");
    params_rng_ = root.fork("device_params");
    proto_rng_ = root.fork("protocol");
    keys_rng_ = root.fork("app_keys");

    graph_ = intercluster::ClusterGraph(cfg_.clusters.count);
    for (auto [a, b] : cfg_.clusters.edges) graph_.add_edge(a, b);

    auto gw_specs = cfg_.gateways;
    for (std::size_t i = 0; i < gw_specs.size(); ++i) {
      GatewayState g;
      g.id = static_cast<GatewayId>(i);
      g.actor = gw_specs[i].actor;
      g.cluster = gw_specs[i].cluster;
      g.position = gw_specs[i].position;
      g.downlink_duty = radio::DutyCycleBudget(cfg_.devices.duty_limit);
      g.occupation = radio::ChannelOccupation(cfg_.protocol.occupation_window_s);
      g.profile.gateway_id = g.id;
      g.knn = membership::KnnView(cfg_.protocol.knn_k);
      gateways_.push_back(std::move(g));
      cluster_members_[gw_specs[i].cluster].push_back(static_cast<GatewayId>(i));
      log_.line(0.0, ent_gw(static_cast<GatewayId>(i)), "position x=%.3f y=%.3f actor=%u cluster=%u",
                gw_specs[i].position.x, gw_specs[i].position.y, gw_specs[i].actor,
                gw_specs[i].cluster);
    }

    // Actor backends. The coordinator doubles as the per-actor network
    // server in the non-federated modes.
    std::set<ActorId> actor_ids;
    for (const auto& g : gateways_) actor_ids.insert(g.actor);
    for (ActorId a : actor_ids) {
      ActorState st;
      st.id = a;
      st.keys = admin::ActorKeyStore(a);
      for (const auto& g : gateways_)
        if (g.actor == a && (st.coordinator == kNoGateway || g.id < st.coordinator))
          st.coordinator = g.id;
      actor_index_[a] = actors_.size();
      actors_.push_back(std::move(st));
    }

    // Devices: explicit fixtures first, then generated placement. The
    // position and parameter streams never depend on the mode, so runs
    // that share a seed share device geometry across modes.
    const std::size_t n_actors = experiments::actor_count(cfg_.mode);
    std::vector<experiments::DeviceSpec> specs = cfg_.explicit_devices;
    for (int i = 0; i < cfg_.device_count; ++i) {
      experiments::DeviceSpec d;
      const double half = cfg_.grid_side_m / 2.0;
      d.position.x = placement_rng_.uniform(-half, half);
      d.position.y = placement_rng_.uniform(-half, half);
      d.payload_size = static_cast<int>(
          params_rng_.uniform_int(cfg_.devices.payload_min, cfg_.devices.payload_max));
      d.uplink_period_s =
          params_rng_.uniform(cfg_.devices.uplink_period_min_s, cfg_.devices.uplink_period_max_s);
      d.rejoin_period_s =
          params_rng_.uniform(cfg_.devices.rejoin_period_min_s, cfg_.devices.rejoin_period_max_s);
      d.wake_at_s = params_rng_.uniform(0.0, cfg_.devices.wake_window_s);
      d.owner = static_cast<ActorId>(static_cast<std::size_t>(specs.size()) % n_actors);
      specs.push_back(d);
    }

    for (std::size_t i = 0; i < specs.size(); ++i) {
      const auto& s = specs[i];
      DeviceState d;
      d.eui = static_cast<DevEui>(i);
      d.owner = s.owner;
      d.position = s.position;
      d.payload_size = s.payload_size;
      d.uplink_period_s = s.uplink_period_s;
      d.rejoin_period_s = s.rejoin_period_s;
      d.duty = radio::DutyCycleBudget(cfg_.devices.duty_limit);
      d.rng = Rng(cfg_.seed).fork("device", d.eui);
      // The owner gateway is the actor's lowest-id gateway.
      d.owner_gateway = actor(d.owner).coordinator;
      wake_at_[d.eui] = s.wake_at_s;
      devices_.push_back(std::move(d));

      admin::DeviceIdentity ident;
      ident.dev_eui = static_cast<DevEui>(i);
      ident.app_eui = 0xa55a0000u + static_cast<std::uint64_t>(i);
      ident.app_key = keys_rng_.next_u64();
      actor(s.owner).keys.register_identity(ident);
      log_.line(0.0, ent_dev(static_cast<DevEui>(i)), "position x=%.3f y=%.3f owner=%u",
                s.position.x, s.position.y, s.owner);
    }

    // Term-0 leaders: lowest gateway id per cluster.
    for (auto& [c, members] : cluster_members_) {
      std::sort(members.begin(), members.end());
      leaders_[c] = members.front();
      gw(members.front()).is_leader = true;
      log_.line(0.0, ent_gw(members.front()), "leader cluster=%u term=0", c);
    }
  }

  void schedule_initial_events() {
    for (const auto& d : devices_) {
      sched_.schedule(wake_at_.at(d.eui), EventKind::DeviceWake,
                      DeviceWakePayload{d.eui, WakeAction::InitialWake, 0});
    }

    if (cfg_.mode == experiments::Mode::FlipFederation) {
      // Deployment intents: every owner announces its devices up front.
      for (const auto& d : devices_)
        issue_subscribe(d.owner_gateway, d.eui, cfg_.protocol.subscribe_ttl_s);

      if (cfg_.protocol.gossip_period_s > 0.0) {
        for (const auto& g : gateways_) {
          const double first = proto_rng_.uniform(0.0, cfg_.protocol.gossip_period_s);
          sched_.schedule(first, EventKind::GossipTick, GossipTickPayload{g.id, false});
        }
      }
      if (cfg_.protocol.leader_period_s > 0.0) {
        for (const auto& [c, members] : cluster_members_) {
          sched_.schedule(cfg_.protocol.leader_period_s, EventKind::LeaderTick,
                          LeaderTickPayload{c, false, 1});
        }
      }
      if (cfg_.protocol.expiry_sweep_period_s > 0.0) {
        for (const auto& g : gateways_)
          sched_.schedule(cfg_.protocol.expiry_sweep_period_s, EventKind::PubSubExpiryTick,
                          ExpiryTickPayload{g.id});
      }
      for (const auto& del : cfg_.delegations) {
        const DevEui dev_eui = static_cast<DevEui>(del.device_index);
        send_timer(devices_[del.device_index].owner_gateway, MsgKind::DelegationStart,
                   DelegationStartPayload{dev_eui, del.renter}, del.at_s);
      }
    }
  }

  void finish() {
    metrics_.finalize();
    log_.line(cfg_.duration_s, "sim",
              "run_end join_attempts=%llu join_successes=%llu collisions=%llu frames_sent=%llu "
              "delivered=%llu",
              static_cast<unsigned long long>(metrics_.join_attempts),
              static_cast<unsigned long long>(metrics_.join_successes),
              static_cast<unsigned long long>(metrics_.collisions),
              static_cast<unsigned long long>(metrics_.frames_sent),
              static_cast<unsigned long long>(metrics_.frames_delivered_to_owner));
  }

  // ======================================================================
  // Event dispatch
  // ======================================================================

  void dispatch(const SimEvent& ev) {
    switch (ev.kind) {
      case EventKind::RadioTxStart:
        on_tx_start(std::get<TxStartPayload>(ev.payload));
        break;
      case EventKind::RadioRxComplete:
        on_rx_complete(std::get<RxCompletePayload>(ev.payload));
        break;
      case EventKind::GossipTick:
        on_gossip_tick(std::get<GossipTickPayload>(ev.payload));
        break;
      case EventKind::LeaderTick:
        on_leader_tick(std::get<LeaderTickPayload>(ev.payload));
        break;
      case EventKind::PubSubExpiryTick:
        on_expiry_tick(std::get<ExpiryTickPayload>(ev.payload));
        break;
      case EventKind::DeviceWake:
        on_device_wake(std::get<DeviceWakePayload>(ev.payload));
        break;
      case EventKind::ClusterMessageDelivery:
        on_bus_message(std::get<BusMessage>(ev.payload));
        break;
    }
  }

  // ======================================================================
  // Device behaviour
  // ======================================================================

  void on_device_wake(const DeviceWakePayload& w) {
    auto& d = dev(w.dev);
    switch (w.action) {
      case WakeAction::InitialWake:
        d.phase = DevicePhase::Joining;
        start_join_attempt(d);
        break;
      case WakeAction::JoinTx:
        if (d.phase == DevicePhase::Joining) start_join_attempt(d);
        break;
      case WakeAction::JoinTimeout:
        if (d.phase == DevicePhase::Joining && d.attempt == w.attempt) {
          ++d.backoff_stage;
          double delay = cfg_.join.backoff_initial_s;
          for (int i = 1; i < d.backoff_stage; ++i) delay *= cfg_.join.backoff_factor;
          delay = std::min(delay, cfg_.join.backoff_cap_s);
          delay *= 1.0 + cfg_.join.backoff_jitter * (2.0 * d.rng.uniform01() - 1.0);
          log_.line(now(), ent_dev(d.eui), "join_timeout attempt=%u retry_in=%.3f", w.attempt,
                    delay);
          sched_.schedule(now() + delay, EventKind::DeviceWake,
                          DeviceWakePayload{d.eui, WakeAction::JoinTx, 0});
        }
        break;
      case WakeAction::Uplink:
        if (d.phase != DevicePhase::Joined) break;
        if (now() >= d.next_rejoin_at) {
          // Periodic re-association: back to the join cycle.
          d.phase = DevicePhase::Joining;
          d.backoff_stage = 0;
          log_.line(now(), ent_dev(d.eui), "rejoin_start");
          start_join_attempt(d);
          break;
        }
        device_uplink(d);
        break;
    }
  }

  void start_join_attempt(DeviceState& d) {
    const radio::SpreadingFactor sf(cfg_.join.join_sf);
    const double toa = radio::time_on_air(cfg_.join.join_payload_bytes, sf, cfg_.phy);
    const auto decision = d.duty.consume(toa, now());
    if (std::holds_alternative<radio::Deferred>(decision)) {
      const double t = std::get<radio::Deferred>(decision).next_allowed_time;
      log_.line(now(), ent_dev(d.eui), "duty_defer kind=join until=%.6f", t);
      sched_.schedule(t, EventKind::DeviceWake, DeviceWakePayload{d.eui, WakeAction::JoinTx, 0});
      return;
    }
    ++d.attempt;
    const radio::Channel ch(static_cast<int>(d.rng.uniform_index(radio::kChannelCount)));
    radio::Frame f = radio::make_frame(++next_frame_id_, radio::FrameKind::JoinRequest, d.eui, ch,
                                       sf, cfg_.join.join_payload_bytes, now(), d.position,
                                       cfg_.tx_power_dbm, cfg_.phy);
    f.attempt = d.attempt;
    if (!d.counted_attempt) {
      d.counted_attempt = true;
      ++metrics_.join_attempts;
    }
    ++metrics_.joins_sent;
    log_.line(now(), ent_dev(d.eui), "tx_start kind=join frame=%llu ch=%d sf=%d toa=%.6f attempt=%u",
              static_cast<unsigned long long>(f.id), ch.index(), sf.value(), f.airtime, d.attempt);
    broadcast_uplink(f);
    sched_.schedule(now() + cfg_.join.join_timeout_s, EventKind::DeviceWake,
                    DeviceWakePayload{d.eui, WakeAction::JoinTimeout, d.attempt});
  }

  void device_uplink(DeviceState& d) {
    const radio::SpreadingFactor sf(d.sf);
    const double toa = radio::time_on_air(d.payload_size, sf, cfg_.phy);
    const auto decision = d.duty.consume(toa, now());
    if (std::holds_alternative<radio::Deferred>(decision)) {
      const double t = std::get<radio::Deferred>(decision).next_allowed_time;
      log_.line(now(), ent_dev(d.eui), "duty_defer kind=data until=%.6f", t);
      sched_.schedule(t, EventKind::DeviceWake, DeviceWakePayload{d.eui, WakeAction::Uplink, 0});
      return;
    }
    radio::Frame f =
        radio::make_frame(++next_frame_id_, radio::FrameKind::DataUplink, d.eui,
                          radio::Channel(d.channel), sf, d.payload_size, now(), d.position,
                          cfg_.tx_power_dbm, cfg_.phy);
    ++metrics_.frames_sent;
    log_.line(now(), ent_dev(d.eui), "tx_start kind=data frame=%llu ch=%d sf=%d toa=%.6f",
              static_cast<unsigned long long>(f.id), d.channel, d.sf, f.airtime);
    broadcast_uplink(f);
    sched_.schedule(now() + d.uplink_period_s, EventKind::DeviceWake,
                    DeviceWakePayload{d.eui, WakeAction::Uplink, 0});
  }

  /// Radio propagation: every gateway whose sensitivity admits the frame's
  /// RSSI at its position starts a reception; receivers are independent.
  void broadcast_uplink(const radio::Frame& f) {
    int receivers = 0;
    for (auto& g : gateways_) {
      const double rssi = radio::rssi_at(f.origin, g.position, f.tx_power_dbm, cfg_.path);
      if (!radio::in_range(rssi, f.sf, cfg_.sensitivity)) continue;
      ++receivers;
      // Finalize a reception that ended exactly now: back-to-back frames
      // do not collide.
      if (auto done = g.receiver.finalize_if_due(f.channel, now()))
        gateway_on_frame(g, *done);
      g.occupation.add(f.channel, now(), f.airtime);
      const auto outcome = g.receiver.begin_reception(f, now());
      switch (outcome) {
        case radio::ReceptionStart::Clean:
          sched_.schedule(now() + f.airtime, EventKind::RadioRxComplete,
                          RxCompletePayload{g.id, f.channel.index(), f.id, false, {}});
          break;
        case radio::ReceptionStart::CollisionKeptOld:
          ++metrics_.collisions;
          log_.line(now(), ent_gw(g.id), "collision ch=%d kept=%llu lost=%llu", f.channel.index(),
                    static_cast<unsigned long long>(g.receiver.slot(f.channel)->frame.id),
                    static_cast<unsigned long long>(f.id));
          break;
        case radio::ReceptionStart::CollisionKeptNew:
          ++metrics_.collisions;
          log_.line(now(), ent_gw(g.id), "collision ch=%d kept=%llu lost_previous=1",
                    f.channel.index(), static_cast<unsigned long long>(f.id));
          sched_.schedule(now() + f.airtime, EventKind::RadioRxComplete,
                          RxCompletePayload{g.id, f.channel.index(), f.id, false, {}});
          break;
      }
    }
    if (receivers == 0) {
      ++metrics_.lost_no_coverage;
      log_.line(now(), ent_dev(f.dev_eui), "lost_no_coverage frame=%llu",
                static_cast<unsigned long long>(f.id));
    }
  }

  void on_rx_complete(const RxCompletePayload& rx) {
    if (rx.device_side) {
      deliver_accept_to_device(rx);
      return;
    }
    auto& g = gw(rx.gateway);
    if (auto frame = g.receiver.finalize_if_due(radio::Channel(rx.channel), now()))
      gateway_on_frame(g, *frame);
  }

  // ======================================================================
  // Gateway radio ingress
  // ======================================================================

  void gateway_on_frame(GatewayState& g, const radio::Frame& f) {
    const double rssi = radio::rssi_at(f.origin, g.position, f.tx_power_dbm, cfg_.path);
    log_.line(now(), ent_gw(g.id), "rx_ok frame=%llu kind=%s dev=%llu rssi=%.2f",
              static_cast<unsigned long long>(f.id), radio::frame_kind_name(f.kind),
              static_cast<unsigned long long>(f.dev_eui), rssi);

    const bool new_device = g.profile.heard.find(f.dev_eui) == g.profile.heard.end();
    g.profile.observe(f.dev_eui, rssi, cfg_.protocol.rssi_ema_alpha);
    g.last_heard_at[f.dev_eui] = now();
    if (new_device && cfg_.mode == experiments::Mode::FlipFederation &&
        cfg_.protocol.gossip_period_s > 0.0) {
      // A profile change re-runs the similarity classification immediately,
      // and only at the gateways that actually heard the device.
      sched_.schedule(now(), EventKind::GossipTick, GossipTickPayload{g.id, true});
    }

    switch (f.kind) {
      case radio::FrameKind::JoinRequest:
        on_join_request(g, f, rssi);
        break;
      case radio::FrameKind::DataUplink:
        on_data_uplink(g, f, rssi);
        break;
      default:
        break;
    }
  }

  void on_join_request(GatewayState& g, const radio::Frame& f, double rssi) {
    if (cfg_.mode != experiments::Mode::FlipFederation) {
      // Non-federated operation: only the owner's infrastructure reacts,
      // reporting to the actor's network-server stand-in.
      if (g.actor != dev(f.dev_eui).owner) return;
      BaselineHearReportPayload rep;
      rep.dev = f.dev_eui;
      rep.attempt = f.attempt;
      rep.rssi_dbm = rssi;
      rep.hearer = g.id;
      rep.occupation = g.occupation.fractions(now());
      send_direct(g.id, actor(g.actor).coordinator, MsgKind::BaselineHearReport, rep);
      return;
    }

    g.records.store_publish({f.dev_eui, g.id, rssi, now()});
    log_.line(now(), ent_gw(g.id), "publish dev=%llu rssi=%.2f",
              static_cast<unsigned long long>(f.dev_eui), rssi);
    const auto match = g.records.match(f.dev_eui, now());
    if (!match) {
      log_.line(now(), ent_gw(g.id), "join_ignored dev=%llu attempt=%u",
                static_cast<unsigned long long>(f.dev_eui), f.attempt);
      return;
    }
    open_consensus(g, f, rssi, *match);
  }

  void on_data_uplink(GatewayState& g, const radio::Frame& f, double rssi) {
    (void)rssi;
    const auto& d = dev(f.dev_eui);
    const admin::SealedPayload sealed = seal_for_device(d, f.payload_size);

    if (cfg_.mode != experiments::Mode::FlipFederation) {
      if (g.actor != d.owner) return;
      BaselineHearReportPayload rep;
      rep.dev = f.dev_eui;
      rep.is_data = true;
      rep.frame = f.id;
      rep.hearer = g.id;
      rep.sealed = sealed;
      send_direct(g.id, actor(g.actor).coordinator, MsgKind::BaselineHearReport, rep);
      return;
    }

    auto it = g.handled.find(f.dev_eui);
    if (it == g.handled.end() || it->second.session_id != sealed.session_id) return;
    const HandledDevice& h = it->second;
    if (h.data_dest_gateway == g.id) {
      deliver_to_owner(g, sealed, f.id);
      return;
    }
    probe_decrypt(g, sealed, f.id);  // the handler can route but not read
    DeviceDataPayload p;
    p.sealed = sealed;
    p.frame = f.id;
    p.handler = g.id;
    p.dest_gateway = h.data_dest_gateway;
    p.dest_cluster = h.data_dest_cluster;
    if (h.data_dest_cluster == g.cluster) {
      send_direct(g.id, h.data_dest_gateway, MsgKind::DeviceData, p);
    } else {
      send_direct(g.id, leaders_.at(g.cluster), MsgKind::DeviceData, p);
    }
  }

  // ======================================================================
  // Membership: gossip rounds and the RPS service
  // ======================================================================

  void on_gossip_tick(const GossipTickPayload& t) {
    auto& g = gw(t.gateway);
    // The cluster sampling service answers with uniform random live
    // members; the round proper continues on receipt of the sample.
    const auto& members = cluster_members_.at(g.cluster);
    std::vector<GatewayId> pool;
    for (GatewayId m : members)
      if (m != g.id) pool.push_back(m);
    RpsSamplePayload sample;
    const auto idx = proto_rng_.sample_indices(pool.size(), cfg_.protocol.rps_r);
    for (auto i : idx) sample.members.push_back(pool[i]);
    send_direct(g.id, g.id, MsgKind::RpsSample, sample);

    if (!t.immediate && cfg_.protocol.gossip_period_s > 0.0 &&
        now() + cfg_.protocol.gossip_period_s <= cfg_.duration_s) {
      sched_.schedule(now() + cfg_.protocol.gossip_period_s, EventKind::GossipTick,
                      GossipTickPayload{g.id, false});
    }
  }

  void on_rps_sample(GatewayState& g, const RpsSamplePayload& sample) {
    g.rps.entries = sample.members;
    g.profile.channel_occupation = g.occupation.fractions(now());
    std::set<GatewayId> targets(sample.members.begin(), sample.members.end());
    for (GatewayId m : g.knn.members()) targets.insert(m);
    ProfileExchangePayload p{g.profile, false, g.knn.members()};
    for (GatewayId to : targets) send_direct(g.id, to, MsgKind::ProfileExchange, p);
  }

  void on_profile_exchange(GatewayState& g, GatewayId from, const ProfileExchangePayload& p) {
    g.peer_profiles[from] = p.profile;
    for (GatewayId k : p.known)
      if (k != g.id) g.discovered.insert(k);
    g.discovered.insert(from);
    const double sim = membership::similarity(g.profile, p.profile,
                                              cfg_.protocol.rssi_dynamic_range_db);
    g.knn.offer(g.id, from, sim);
    if (!p.reply) {
      g.profile.channel_occupation = g.occupation.fractions(now());
      ProfileExchangePayload back{g.profile, true, g.knn.members()};
      send_direct(g.id, from, MsgKind::ProfileExchange, back);
    }
  }

  // ======================================================================
  // Pub/sub: subscribe storage and local dissemination
  // ======================================================================

  /// Store + disseminate a locally issued subscribe. Dissemination is
  /// skipped when a matching publish announcement is already held.
  void subscribe(GatewayState& g, const pubsub::SubscribeRecord& rec) {
    if (!g.records.store_subscribe(rec)) return;
    log_.line(now(), ent_gw(g.id), "subscribe_stored req=%u:%llu dev=%llu renter=%d",
              rec.request_id.owner, static_cast<unsigned long long>(rec.request_id.counter),
              static_cast<unsigned long long>(rec.dev_eui),
              rec.renter_gateway ? static_cast<int>(*rec.renter_gateway) : -1);
    if (g.records.holds_publish(rec.dev_eui)) {
      log_.line(now(), ent_gw(g.id), "subscribe_match_local req=%u:%llu dev=%llu",
                rec.request_id.owner, static_cast<unsigned long long>(rec.request_id.counter),
                static_cast<unsigned long long>(rec.dev_eui));
      return;
    }
    start_dissemination(g, rec);
    // The owner also pushes the record straight to its cluster leader so
    // inter-cluster propagation starts without waiting for gossip reach.
    const GatewayId leader = leaders_.at(g.cluster);
    if (leader != g.id)
      send_direct(g.id, leader, MsgKind::SubscribeForward, SubscribeForwardPayload{rec});
    else
      leader_flood_subscribe(g, rec, {g.cluster});
  }

  void start_dissemination(GatewayState& g, const pubsub::SubscribeRecord& rec) {
    if (g.dissemination.count(rec.request_id)) return;
    DisseminationState st;
    st.record = rec;
    g.dissemination[rec.request_id] = std::move(st);
    dissemination_round(g, rec.request_id);
  }

  std::vector<GatewayId> view_union(const GatewayState& g) const {
    std::set<GatewayId> u;
    for (GatewayId m : g.knn.members()) u.insert(m);
    for (GatewayId m : g.rps.entries) u.insert(m);
    for (GatewayId m : g.discovered) u.insert(m);
    u.erase(g.id);
    return {u.begin(), u.end()};
  }

  /// One round of Algorithm-2-style dissemination: contact up to `fanout`
  /// not-yet-contacted view members, then either go cold (everyone
  /// contacted, or only already-seen acks came back on a full round) or
  /// schedule the next round. A hard hop budget backstops termination.
  void dissemination_round(GatewayState& g, const pubsub::RequestId& id) {
    auto it = g.dissemination.find(id);
    if (it == g.dissemination.end() || it->second.done) return;
    auto& st = it->second;
    if (!st.record.live(now())) {
      st.done = true;
      return;
    }
    if (st.rounds >= cfg_.protocol.dissemination_hop_budget) {
      st.done = true;
      log_.line(now(), ent_gw(g.id), "dissemination_done req=%u:%llu rounds=%d cold=0",
                id.owner, static_cast<unsigned long long>(id.counter), st.rounds);
      return;
    }
    std::vector<GatewayId> uncontacted;
    for (GatewayId m : view_union(g))
      if (!st.contacted.count(m)) uncontacted.push_back(m);
    if (uncontacted.empty()) {
      st.done = true;
      st.cold = st.last_round_sent > 0 && st.last_round_seen_acks == st.last_round_sent;
      log_.line(now(), ent_gw(g.id), "dissemination_done req=%u:%llu rounds=%d cold=%d",
                id.owner, static_cast<unsigned long long>(id.counter), st.rounds,
                st.cold ? 1 : 0);
      return;
    }
    const std::size_t fanout =
        std::min<std::size_t>(static_cast<std::size_t>(cfg_.protocol.dissemination_fanout),
                              uncontacted.size());
    const auto picks = proto_rng_.sample_indices(uncontacted.size(), fanout);
    st.last_round_sent = static_cast<int>(picks.size());
    st.last_round_seen_acks = 0;
    for (auto i : picks) {
      const GatewayId to = uncontacted[i];
      st.contacted.insert(to);
      log_.line(now(), ent_gw(g.id), "subscribe_forward req=%u:%llu to=%u", id.owner,
                static_cast<unsigned long long>(id.counter), to);
      send_direct(g.id, to, MsgKind::SubscribeForward, SubscribeForwardPayload{st.record});
    }
    ++st.rounds;
    send_timer(g.id, MsgKind::DisseminationRound, DisseminationRoundPayload{id},
               cfg_.protocol.dissemination_round_interval_s);
  }

  void on_subscribe_forward(GatewayState& g, GatewayId from, const SubscribeForwardPayload& p) {
    g.discovered.insert(from);
    const bool had_seen = g.records.seen(p.record.request_id);
    send_direct(g.id, from, MsgKind::SubscribeAck, SubscribeAckPayload{p.record.request_id, had_seen});
    if (had_seen) return;
    if (!p.record.live(now())) return;  // expired in transit: drop, do not store
    g.records.store_subscribe(p.record);
    log_.line(now(), ent_gw(g.id), "subscribe_stored req=%u:%llu dev=%llu renter=%d",
              p.record.request_id.owner,
              static_cast<unsigned long long>(p.record.request_id.counter),
              static_cast<unsigned long long>(p.record.dev_eui),
              p.record.renter_gateway ? static_cast<int>(*p.record.renter_gateway) : -1);
    start_dissemination(g, p.record);  // store-and-forward
    if (g.is_leader && p.record.owner_cluster == g.cluster)
      leader_flood_subscribe(g, p.record, {g.cluster});
  }

  void on_subscribe_ack(GatewayState& g, const SubscribeAckPayload& p) {
    auto it = g.dissemination.find(p.request_id);
    if (it == g.dissemination.end()) return;
    if (p.had_seen) ++it->second.last_round_seen_acks;
  }

  // ======================================================================
  // Handling consensus
  // ======================================================================

  void open_consensus(GatewayState& g, const radio::Frame& f, double rssi,
                      const pubsub::SubscribeRecord& match) {
    const auto key = std::make_pair(f.dev_eui, f.attempt);
    auto& round = g.rounds[key];
    round.dev = f.dev_eui;
    round.attempt = f.attempt;
    round.participant = true;
    round.opened_at = now();
    round.join_rssi_dbm = rssi;
    round.match = match;

    consensus::HandlerProposal mine;
    mine.gateway_id = g.id;
    mine.occupation = g.occupation.mean_fraction(now());
    mine.rssi_dbm = rssi;
    mine.pending_load = static_cast<int>(g.handled.size());
    round.proposals[g.id] = mine;

    log_.line(now(), ent_gw(g.id), "consensus_open dev=%llu attempt=%u",
              static_cast<unsigned long long>(f.dev_eui), f.attempt);

    ConsensusProposalPayload p;
    p.dev = f.dev_eui;
    p.attempt = f.attempt;
    p.proposal = mine;
    p.origin = g.id;
    p.hops = 0;
    g.proposals_relayed.insert({f.dev_eui, f.attempt, g.id});
    for (GatewayId to : view_union(g)) send_direct(g.id, to, MsgKind::ConsensusInit, p);

    send_timer(g.id, MsgKind::ConsensusDecide, ConsensusDecidePayload{f.dev_eui, f.attempt},
               cfg_.protocol.consensus_decision_delay_s);
  }

  /// Proposals flood the cluster with per-origin dedup; participants
  /// collect them, bystanders only relay. The flood converges well inside
  /// the decision delay, so every participant scores an identical set.
  void on_consensus_proposal(GatewayState& g, GatewayId from, const ConsensusProposalPayload& p) {
    g.discovered.insert(from);
    if (!g.proposals_relayed.insert({p.dev, p.attempt, p.origin}).second) return;
    auto it = g.rounds.find({p.dev, p.attempt});
    if (it != g.rounds.end() && it->second.participant && !it->second.decided)
      it->second.proposals[p.origin] = p.proposal;
    if (p.hops + 1 <= cfg_.protocol.dissemination_hop_budget) {
      ConsensusProposalPayload fwd = p;
      fwd.hops = p.hops + 1;
      for (GatewayId to : view_union(g))
        if (to != from && to != p.origin) send_direct(g.id, to, MsgKind::ConsensusProposal, fwd);
    }
  }

  void on_consensus_decide(GatewayState& g, const ConsensusDecidePayload& p) {
    auto it = g.rounds.find({p.dev, p.attempt});
    if (it == g.rounds.end() || !it->second.participant || it->second.decided) return;
    auto& round = it->second;
    round.decided = true;

    std::vector<consensus::HandlerProposal> proposals;
    for (const auto& [id, prop] : round.proposals) proposals.push_back(prop);
    const GatewayId winner = consensus::elect_handler(proposals, cfg_.protocol.score);
    log_.line(now(), ent_gw(g.id), "consensus_decision dev=%llu attempt=%u winner=%u proposals=%zu",
              static_cast<unsigned long long>(p.dev), p.attempt, winner, proposals.size());
    if (winner != g.id) {
      send_direct(g.id, winner, MsgKind::ConsensusDecision,
                  ConsensusDecisionPayload{p.dev, p.attempt, winner});
      return;
    }
    winner_proceed(g, round);
  }

  /// The elected handler fixes the device's channel and spreading factor,
  /// then requests session keys from the owner gateway.
  void winner_proceed(GatewayState& g, ConsensusRoundState& round) {
    const auto sf = consensus::choose_sf(round.join_rssi_dbm, cfg_.sensitivity,
                                         cfg_.protocol.sf_margin_db);
    const int mean_payload = (cfg_.devices.payload_min + cfg_.devices.payload_max) / 2;
    const double projected =
        radio::time_on_air(std::max(mean_payload, 1), sf, cfg_.phy) *
        cfg_.protocol.projected_frames_per_hour / 3600.0;
    std::vector<std::array<double, radio::kChannelCount>> neighbour_occ;
    for (GatewayId m : g.knn.members()) {
      auto it = g.peer_profiles.find(m);
      if (it != g.peer_profiles.end()) neighbour_occ.push_back(it->second.channel_occupation);
    }
    const auto ch = consensus::choose_channel(
        g.occupation.fractions(now()), neighbour_occ, projected,
        cfg_.altruist ? consensus::AssignMode::Altruist : consensus::AssignMode::Selfish);

    PublishMatchPayload pm;
    pm.dev = round.dev;
    pm.attempt = round.attempt;
    pm.handler = g.id;
    pm.handler_cluster = g.cluster;
    pm.rssi_dbm = round.join_rssi_dbm;
    pm.channel = ch.index();
    pm.sf = sf.value();
    pm.dest_gateway = round.match.owner_gateway;
    pm.dest_cluster = round.match.owner_cluster;

    if (pm.dest_gateway == g.id) {
      owner_on_publish_match(g, pm);
    } else if (pm.dest_cluster == g.cluster) {
      send_direct(g.id, pm.dest_gateway, MsgKind::PublishMatch, pm);
    } else {
      send_direct(g.id, leaders_.at(g.cluster), MsgKind::PublishMatch, pm);
    }
  }

  void on_consensus_decision_msg(GatewayState& g, GatewayId from,
                                 const ConsensusDecisionPayload& p) {
    (void)g;
    (void)from;
    (void)p;  // agreement is audited from the per-participant decision log
  }

  // ======================================================================
  // Admin: session keys, join accepts, delegation
  // ======================================================================

  admin::SealedPayload seal_for_device(const DeviceState& d, int payload_size) const {
    // Devices derive their session keys from the root AppKey they carry,
    // exactly as the owner's backend does.
    const auto& ident = actor_const(d.owner).keys.identity(d.eui);
    const auto keys = admin::derive_session_keys(ident, d.session_id, 0.0);
    return {d.eui, d.session_id, keys.app_s_key, payload_size};
  }

  /// Owner-side join handling: mint fresh session keys, activate or expire
  /// a delegation, revoke the previous handler, and ship the network key
  /// plus the crafted accept back to the handler.
  void owner_on_publish_match(GatewayState& owner_gw, const PublishMatchPayload& pm) {
    auto& a = actor(owner_gw.actor);
    if (!a.keys.owns(pm.dev)) {
      log_.line(now(), ent_gw(owner_gw.id), "publish_match_unknown dev=%llu",
                static_cast<unsigned long long>(pm.dev));
      return;
    }
    const auto keys = a.keys.mint_session(pm.dev, now());
    log_.line(now(), ent_gw(owner_gw.id), "session_minted dev=%llu sid=%u handler=%u",
              static_cast<unsigned long long>(pm.dev), keys.session_id, pm.handler);

    // Delegation lifecycle: a pending contract activates on this join; an
    // active one expires (the owner regains exclusive access).
    GatewayId data_dest = owner_gw.id;
    ClusterId data_dest_cluster = owner_gw.cluster;
    auto del = a.delegations.find(pm.dev);
    if (del != a.delegations.end()) {
      auto& contract = del->second;
      if (contract.state == admin::DelegationContract::State::Active) {
        contract.state = admin::DelegationContract::State::Expired;
        log_.line(now(), ent_actor(a.id), "delegation dev=%llu renter=%u state=expired",
                  static_cast<unsigned long long>(pm.dev), contract.renter);
      } else if (contract.state == admin::DelegationContract::State::Pending) {
        contract.state = admin::DelegationContract::State::Active;
        contract.active_session = keys.session_id;
        log_.line(now(), ent_actor(a.id), "delegation dev=%llu renter=%u state=active",
                  static_cast<unsigned long long>(pm.dev), contract.renter);
        const GatewayId renter_gw = actor(contract.renter).coordinator;
        KeyMaterialPayload km;
        km.material = KeyMaterialKind::ToRenter;
        km.dev = pm.dev;
        km.attempt = pm.attempt;
        km.session_id = keys.session_id;
        km.app_session = keys;
        km.dest_gateway = renter_gw;
        km.dest_cluster = gw(renter_gw).cluster;
        route_or_send(owner_gw, MsgKind::KeyMaterial, km, km.dest_cluster, km.dest_gateway);
        data_dest = renter_gw;
        data_dest_cluster = gw(renter_gw).cluster;
      }
    }

    // Latest join wins: a previous handler's registration goes stale.
    auto prev = a.current_handler.find(pm.dev);
    if (prev != a.current_handler.end() && prev->second != pm.handler) {
      HandlerRevokePayload rv;
      rv.dev = pm.dev;
      rv.session_id = keys.session_id;
      rv.dest_gateway = prev->second;
      rv.dest_cluster = gw(prev->second).cluster;
      route_or_send(owner_gw, MsgKind::HandlerRevoke, rv, rv.dest_cluster, rv.dest_gateway);
    }
    a.current_handler[pm.dev] = pm.handler;

    KeyMaterialPayload km;
    km.material = KeyMaterialKind::ToHandler;
    km.dev = pm.dev;
    km.attempt = pm.attempt;
    km.session_id = keys.session_id;
    km.nwk_s_key = keys.nwk_s_key;
    km.channel = pm.channel;
    km.sf = pm.sf;
    km.data_dest_gateway = data_dest;
    km.data_dest_cluster = data_dest_cluster;
    km.dest_gateway = pm.handler;
    km.dest_cluster = pm.handler_cluster;
    route_or_send(owner_gw, MsgKind::KeyMaterial, km, pm.handler_cluster, pm.handler);
  }

  void on_key_material(GatewayState& g, const KeyMaterialPayload& km) {
    if (km.material == KeyMaterialKind::ToRenter) {
      actor(g.actor).keys.grant_app_key(km.dev, km.app_session);
      log_.line(now(), ent_gw(g.id), "renter_key dev=%llu sid=%u",
                static_cast<unsigned long long>(km.dev), km.session_id);
      return;
    }
    HandledDevice h;
    h.channel = km.channel;
    h.sf = km.sf;
    h.session_id = km.session_id;
    h.attempt = km.attempt;
    h.nwk_s_key = km.nwk_s_key;
    h.data_dest_gateway = km.data_dest_gateway;
    h.data_dest_cluster = km.data_dest_cluster;
    g.handled[km.dev] = h;
    log_.line(now(), ent_gw(g.id), "handler_registered dev=%llu attempt=%u ch=%d sf=%d sid=%u",
              static_cast<unsigned long long>(km.dev), km.attempt, km.channel, km.sf,
              km.session_id);
    JoinAcceptInfo info{km.dev, km.attempt, g.id, km.channel, km.sf, km.session_id};
    transmit_accept(g, info, now());
  }

  void on_handler_revoke(GatewayState& g, const HandlerRevokePayload& rv) {
    auto it = g.handled.find(rv.dev);
    if (it != g.handled.end() && it->second.session_id < rv.session_id) {
      g.handled.erase(it);
      log_.line(now(), ent_gw(g.id), "handler_revoked dev=%llu",
                static_cast<unsigned long long>(rv.dev));
    }
  }

  void on_delegation_start(GatewayState& g, const DelegationStartPayload& p) {
    auto& a = actor(g.actor);
    if (!a.keys.owns(p.dev)) return;
    auto existing = a.delegations.find(p.dev);
    if (existing != a.delegations.end() &&
        existing->second.state != admin::DelegationContract::State::Expired) {
      log_.line(now(), ent_actor(a.id), "delegation_rejected dev=%llu reason=active",
                static_cast<unsigned long long>(p.dev));
      return;
    }
    admin::DelegationContract c;
    c.dev_eui = p.dev;
    c.owner = a.id;
    c.renter = p.renter;
    c.state = admin::DelegationContract::State::Pending;
    a.delegations[p.dev] = c;
    log_.line(now(), ent_actor(a.id), "delegation dev=%llu renter=%u state=pending",
              static_cast<unsigned long long>(p.dev), p.renter);
    // The renter-tagged subscribe supersedes the owner's earlier record
    // and carries the contractually bound gateway.
    issue_subscribe(g.id, p.dev, cfg_.protocol.subscribe_ttl_s, actor(p.renter).coordinator);
  }

  /// Downlink join accept, duty-cycle checked. Deferrals within the accept
  /// window are retried; beyond it the registration is dropped and the
  /// device is left to its backoff.
  void transmit_accept(GatewayState& g, const JoinAcceptInfo& info, double first_try) {
    const radio::SpreadingFactor sf(info.sf);
    const double toa = radio::time_on_air(cfg_.join.accept_payload_bytes, sf, cfg_.phy);
    const auto decision = g.downlink_duty.consume(toa, now());
    if (std::holds_alternative<radio::Deferred>(decision)) {
      const double t = std::get<radio::Deferred>(decision).next_allowed_time;
      if (t - first_try <= cfg_.protocol.accept_max_defer_s) {
        TxStartPayload tx;
        tx.downlink = true;
        tx.tx_gateway = g.id;
        tx.accept = info;
        tx.accept_first_try = first_try;
        sched_.schedule(t, EventKind::RadioTxStart, tx);
      } else {
        g.handled.erase(info.dev);
        log_.line(now(), ent_gw(g.id), "accept_dropped dev=%llu reason=duty",
                  static_cast<unsigned long long>(info.dev));
      }
      return;
    }
    const FrameId fid = ++next_frame_id_;
    g.occupation.add(radio::Channel(info.channel), now(), toa);
    ++metrics_.accepts_sent;
    log_.line(now(), ent_gw(g.id), "tx_accept dev=%llu frame=%llu ch=%d sf=%d toa=%.6f",
              static_cast<unsigned long long>(info.dev), static_cast<unsigned long long>(fid),
              info.channel, info.sf, toa);
    sched_.schedule(now() + toa, EventKind::RadioRxComplete,
                    RxCompletePayload{g.id, info.channel, fid, true, info});
  }

  void on_tx_start(const TxStartPayload& tx) {
    if (tx.downlink) {
      transmit_accept(gw(tx.tx_gateway), tx.accept, tx.accept_first_try);
      return;
    }
    broadcast_uplink(tx.frame);
  }

  /// Join accepts are point-to-point: the device-side receive window is
  /// open and only the uplink collision domain is modelled. Range still
  /// applies on the way down.
  void deliver_accept_to_device(const RxCompletePayload& rx) {
    const auto& info = rx.accept;
    auto& d = dev(info.dev);
    auto& g = gw(rx.gateway);
    const double rssi = radio::rssi_at(g.position, d.position, cfg_.tx_power_dbm, cfg_.path);
    if (!radio::in_range(rssi, radio::SpreadingFactor(info.sf), cfg_.sensitivity)) {
      log_.line(now(), ent_gw(g.id), "accept_unreachable dev=%llu",
                static_cast<unsigned long long>(info.dev));
      return;
    }
    if (d.phase != DevicePhase::Joining || d.attempt != info.attempt) {
      log_.line(now(), ent_dev(d.eui), "accept_stale attempt=%u", info.attempt);
      return;
    }
    d.phase = DevicePhase::Joined;
    d.handler = info.handler;
    d.channel = info.channel;
    d.sf = info.sf;
    d.session_id = info.session_id;
    d.backoff_stage = 0;
    d.next_rejoin_at = now() + d.rejoin_period_s;
    if (!d.counted_join) {
      d.counted_join = true;
      ++metrics_.join_successes;
    }
    log_.line(now(), ent_dev(d.eui), "joined gw=%u ch=%d sf=%d sid=%u attempt=%u", info.handler,
              info.channel, info.sf, info.session_id, info.attempt);
    const double first_uplink = now() + d.rng.uniform01() * d.uplink_period_s;
    sched_.schedule(first_uplink, EventKind::DeviceWake,
                    DeviceWakePayload{d.eui, WakeAction::Uplink, 0});
  }

  // ======================================================================
  // Delivery and the key-privacy audit
  // ======================================================================

  const char* decrypt_role(const GatewayState& g, DevEui dev_eui) const {
    const auto& a = actor_const(g.actor);
    if (a.keys.owns(dev_eui)) return "owner";
    if (a.keys.app_session(dev_eui)) return "renter";
    auto it = g.handled.find(dev_eui);
    if (it != g.handled.end()) return "handler";
    return "transit";
  }

  /// Every node touching a payload in transit probes it against its own
  /// key store and logs the outcome; the privacy audit replays these lines.
  bool probe_decrypt(GatewayState& g, const admin::SealedPayload& sealed, FrameId frame) {
    const auto got = actor(g.actor).keys.decrypt(sealed);
    log_.line(now(), ent_gw(g.id), "decrypt dev=%llu sid=%u frame=%llu result=%s role=%s",
              static_cast<unsigned long long>(sealed.dev_eui), sealed.session_id,
              static_cast<unsigned long long>(frame), got ? "ok" : "opaque",
              decrypt_role(g, sealed.dev_eui));
    return got.has_value();
  }

  void deliver_to_owner(GatewayState& g, const admin::SealedPayload& sealed, FrameId frame) {
    if (!probe_decrypt(g, sealed, frame)) return;
    ++metrics_.frames_delivered_to_owner;
    log_.line(now(), ent_gw(g.id), "delivered dev=%llu frame=%llu",
              static_cast<unsigned long long>(sealed.dev_eui),
              static_cast<unsigned long long>(frame));
  }

  // ======================================================================
  // Inter-cluster: leader flood, source routing, forwarding
  // ======================================================================

  void leader_flood_subscribe(GatewayState& leader, const pubsub::SubscribeRecord& rec,
                              std::vector<ClusterId> path) {
    for (ClusterId n : graph_.neighbours(leader.cluster)) {
      if (std::find(path.begin(), path.end(), n) != path.end()) continue;
      log_.line(now(), ent_gw(leader.id), "subscribe_flood req=%u:%llu to_cluster=%u",
                rec.request_id.owner, static_cast<unsigned long long>(rec.request_id.counter), n);
      SubscribeFloodPayload p{rec, path};
      send_to_leader(leader.id, n, MsgKind::SubscribeFlood, p);
    }
  }

  void on_subscribe_flood(GatewayState& g, const SubscribeFloodPayload& p) {
    // Delivered to whichever gateway holds the leader port of this cluster.
    std::vector<ClusterId> path = p.path;
    path.push_back(g.cluster);
    if (g.records.seen(p.record.request_id)) return;  // flood dedup
    log_.line(now(), ent_gw(g.id), "flood_recv req=%u:%llu from_cluster=%u depth=%zu",
              p.record.request_id.owner,
              static_cast<unsigned long long>(p.record.request_id.counter),
              p.path.empty() ? g.cluster : p.path.back(), path.size() - 1);
    // Reverse of the traversed path is a shortest route back to the origin
    // (first arrival on a uniform-latency flood is breadth-first).
    std::vector<ClusterId> back(path.rbegin(), path.rend());
    g.leader.route_cache[p.record.owner_cluster] = back;
    g.records.store_subscribe(p.record);
    start_dissemination(g, p.record);
    leader_flood_subscribe(g, p.record, path);
  }

  /// Unicast toward a gateway in another cluster: hand the message to the
  /// local leader, which stamps the explicit path and relays. Messages for
  /// the local cluster go straight to the destination gateway.
  void route_or_send(GatewayState& from, MsgKind kind, MsgPayload payload, ClusterId dest_cluster,
                     GatewayId dest_gateway) {
    if (dest_cluster == from.cluster) {
      if (dest_gateway == from.id)
        deliver_local(from, BusMessage{kind, from.id, dest_gateway, std::nullopt, payload});
      else
        send_direct(from.id, dest_gateway, kind, payload);
      return;
    }
    const GatewayId leader = leaders_.at(from.cluster);
    if (leader == from.id)
      leader_dispatch_unicast(from, kind, std::move(payload), dest_cluster, dest_gateway);
    else
      send_direct(from.id, leader, kind, payload);
  }

  /// At the origin leader: look up (or build) the route, stamp it into the
  /// message, remember the local sender, and relay to the next hop.
  void leader_dispatch_unicast(GatewayState& leader, MsgKind kind, MsgPayload payload,
                               ClusterId dest_cluster, GatewayId dest_gateway) {
    (void)dest_gateway;
    auto route_it = leader.leader.route_cache.find(dest_cluster);
    std::vector<ClusterId> route;
    if (route_it != leader.leader.route_cache.end()) {
      route = route_it->second;
    } else {
      route = intercluster::build_route(leader.cluster, dest_cluster, graph_);
      leader.leader.route_cache[dest_cluster] = route;
      log_.line(now(), ent_gw(leader.id), "route_built dest_cluster=%u hops=%zu", dest_cluster,
                route.size() - 1);
    }
    set_path(payload, route);
    remember_sender(leader, payload);
    relay_next(leader, kind, std::move(payload), route);
  }

  void remember_sender(GatewayState& leader, const MsgPayload& payload) {
    if (const auto* pm = std::get_if<PublishMatchPayload>(&payload))
      leader.leader.pending_sender_map[{pm->dev, pm->attempt}] = pm->handler;
  }

  static void set_path(MsgPayload& payload, const std::vector<ClusterId>& route) {
    std::visit(
        [&](auto& p) {
          if constexpr (requires { p.path; }) p.path = route;
        },
        payload);
  }

  void relay_next(GatewayState& leader, MsgKind kind, MsgPayload payload,
                  const std::vector<ClusterId>& route) {
    auto self = std::find(route.begin(), route.end(), leader.cluster);
    if (self == route.end() || self + 1 == route.end())
      throw std::logic_error("relay at a cluster that is not on the route");
    const ClusterId next = *(self + 1);
    if (!graph_.has_edge(leader.cluster, next))
      throw std::logic_error("route hops across a non-edge");
    log_.line(now(), ent_gw(leader.id), "route_forward kind=%s next=%u", msg_kind_name(kind), next);
    send_to_leader(leader.id, next, kind, std::move(payload));
  }

  // ======================================================================
  // Leader election
  // ======================================================================

  void on_leader_tick(const LeaderTickPayload& t) {
    const auto& members = cluster_members_.at(t.cluster);
    if (!t.decide) {
      for (GatewayId m : members) {
        auto& g = gw(m);
        LeaderBidPayload bid{t.cluster, t.term, g.occupation.mean_fraction(now())};
        for (GatewayId peer : members) send_direct(m, peer, MsgKind::LeaderBid, bid);
      }
      sched_.schedule(now() + cfg_.protocol.election_settle_s, EventKind::LeaderTick,
                      LeaderTickPayload{t.cluster, true, t.term});
      return;
    }
    // Settle: everyone ranks the collected bids identically.
    GatewayId winner = kNoGateway;
    double best = 0.0;
    for (GatewayId m : members) {
      auto& g = gw(m);
      auto bids = g.election_bids.find(t.term);
      if (bids == g.election_bids.end()) continue;
      GatewayId local_winner = kNoGateway;
      double local_best = 0.0;
      for (const auto& [id, occ] : bids->second) {
        if (local_winner == kNoGateway || occ < local_best ||
            (occ == local_best && id < local_winner)) {
          local_winner = id;
          local_best = occ;
        }
      }
      g.election_bids.erase(t.term);
      winner = local_winner;  // identical at every member by construction
      best = local_best;
    }
    if (winner == kNoGateway) return;
    const GatewayId previous = leaders_.at(t.cluster);
    if (winner != previous) {
      auto& old_leader = gw(previous);
      LeaderHandoffPayload handoff{old_leader.leader.route_cache,
                                   old_leader.leader.pending_sender_map};
      old_leader.is_leader = false;
      old_leader.leader = LeaderLocal{};
      send_direct(previous, winner, MsgKind::LeaderHandoff, handoff);
    }
    set_leader(t.cluster, winner, t.term);
    log_.line(now(), ent_gw(winner), "leader cluster=%u term=%llu occupation=%.4f", t.cluster,
              static_cast<unsigned long long>(t.term), best);
    if (cfg_.protocol.leader_period_s > 0.0 &&
        now() + cfg_.protocol.leader_period_s <= cfg_.duration_s) {
      sched_.schedule(now() + cfg_.protocol.leader_period_s, EventKind::LeaderTick,
                      LeaderTickPayload{t.cluster, false, t.term + 1});
    }
  }

  void set_leader(ClusterId c, GatewayId id, std::uint64_t term) {
    leaders_[c] = id;
    auto& g = gw(id);
    g.is_leader = true;
    g.leader.term = term;
  }

  // ======================================================================
  // Expiry sweeping
  // ======================================================================

  void on_expiry_tick(const ExpiryTickPayload& t) {
    auto& g = gw(t.gateway);
    const auto purged = g.records.expiry_sweep(now(), cfg_.protocol.publish_staleness_s);
    if (purged > 0)
      log_.line(now(), ent_gw(g.id), "expiry_sweep purged=%zu", purged);

    // Stale consensus rounds and finished disseminations.
    for (auto it = g.rounds.begin(); it != g.rounds.end();)
      it = it->second.opened_at + 60.0 <= now() ? g.rounds.erase(it) : std::next(it);
    for (auto it = g.dissemination.begin(); it != g.dissemination.end();)
      it = it->second.done && !it->second.record.live(now()) ? g.dissemination.erase(it)
                                                             : std::next(it);

    // Device staleness: entries quietly vanish from the profile, which is
    // a profile change and re-runs the classification immediately.
    bool evicted = false;
    for (auto it = g.last_heard_at.begin(); it != g.last_heard_at.end();) {
      if (it->second + cfg_.protocol.heard_staleness_s <= now()) {
        g.profile.heard.erase(it->first);
        it = g.last_heard_at.erase(it);
        evicted = true;
      } else {
        ++it;
      }
    }
    if (evicted && cfg_.protocol.gossip_period_s > 0.0)
      sched_.schedule(now(), EventKind::GossipTick, GossipTickPayload{g.id, true});

    if (cfg_.protocol.expiry_sweep_period_s > 0.0 &&
        now() + cfg_.protocol.expiry_sweep_period_s <= cfg_.duration_s)
      sched_.schedule(now() + cfg_.protocol.expiry_sweep_period_s, EventKind::PubSubExpiryTick,
                      ExpiryTickPayload{g.id});
  }

  // ======================================================================
  // Non-federated modes: per-actor association service
  // ======================================================================

  void on_baseline_hear(GatewayState& coord, GatewayId from, const BaselineHearReportPayload& rep) {
    auto& a = actor(coord.actor);
    if (rep.is_data) {
      // Network-server style dedup: the first gateway to report a frame
      // delivers it.
      if (!a.delivered_frames.insert({rep.dev, rep.frame}).second) return;
      deliver_to_owner(coord, rep.sealed, rep.frame);
      return;
    }
    const auto key = std::make_pair(rep.dev, rep.attempt);
    auto& round = a.baseline_rounds[key];
    if (round.decided) return;
    const bool first = round.reports.empty();
    round.reports[rep.hearer] = {rep.rssi_dbm, rep.occupation};
    if (first)
      send_timer(coord.id, MsgKind::BaselineDecide, BaselineDecidePayload{rep.dev, rep.attempt},
                 cfg_.protocol.baseline_decision_delay_s);
  }

  /// Immediate association with the best-heard gateway; the channel choice
  /// is the winner's own least-occupied channel.
  void on_baseline_decide(GatewayState& coord, const BaselineDecidePayload& p) {
    auto& a = actor(coord.actor);
    auto it = a.baseline_rounds.find({p.dev, p.attempt});
    if (it == a.baseline_rounds.end() || it->second.decided) return;
    it->second.decided = true;
    GatewayId winner = kNoGateway;
    double best_rssi = 0.0;
    for (const auto& [id, r] : it->second.reports) {
      if (winner == kNoGateway || r.first > best_rssi ||
          (r.first == best_rssi && id < winner)) {
        winner = id;
        best_rssi = r.first;
      }
    }
    if (winner == kNoGateway) return;
    const auto& occ = it->second.reports.at(winner).second;
    const auto ch = consensus::choose_channel(occ, {}, 0.0, consensus::AssignMode::Selfish);
    const auto sf = consensus::choose_sf(best_rssi, cfg_.sensitivity, cfg_.protocol.sf_margin_db);
    if (!a.keys.owns(p.dev)) return;
    const auto keys = a.keys.mint_session(p.dev, now());
    a.current_handler[p.dev] = winner;
    BaselineAssignPayload assign{p.dev, p.attempt, keys.session_id, ch.index(), sf.value()};
    send_direct(coord.id, winner, MsgKind::BaselineAssign, assign);
  }

  void on_baseline_assign(GatewayState& g, const BaselineAssignPayload& p) {
    HandledDevice h;
    h.channel = p.channel;
    h.sf = p.sf;
    h.session_id = p.session_id;
    h.attempt = p.attempt;
    g.handled[p.dev] = h;
    log_.line(now(), ent_gw(g.id), "handler_registered dev=%llu attempt=%u ch=%d sf=%d sid=%u",
              static_cast<unsigned long long>(p.dev), p.attempt, p.channel, p.sf, p.session_id);
    transmit_accept(g, JoinAcceptInfo{p.dev, p.attempt, g.id, p.channel, p.sf, p.session_id},
                    now());
  }

  // ======================================================================
  // Bus plumbing
  // ======================================================================

  void send_direct(GatewayId from, GatewayId to, MsgKind kind, MsgPayload payload) {
    BusMessage m{kind, from, to, std::nullopt, std::move(payload)};
    const double latency = gw(from).cluster == gw(to).cluster
                               ? cfg_.bus.intra_cluster_latency_s
                               : cfg_.bus.inter_cluster_latency_s;
    sched_.schedule(now() + latency, EventKind::ClusterMessageDelivery, std::move(m));
  }

  void send_to_leader(GatewayId from, ClusterId cluster, MsgKind kind, MsgPayload payload) {
    BusMessage m{kind, from, kNoGateway, cluster, std::move(payload)};
    sched_.schedule(now() + cfg_.bus.inter_cluster_latency_s, EventKind::ClusterMessageDelivery,
                    std::move(m));
  }

  void send_timer(GatewayId gw_id, MsgKind kind, MsgPayload payload, double delay) {
    BusMessage m{kind, gw_id, gw_id, std::nullopt, std::move(payload)};
    sched_.schedule(now() + delay, EventKind::ClusterMessageDelivery, std::move(m));
  }

  void on_bus_message(const BusMessage& m) {
    // Leader-port addressing resolves to whoever leads at delivery time.
    const GatewayId to = m.to_leader_of ? leaders_.at(*m.to_leader_of) : m.to;
    deliver_local(gw(to), m);
  }

  void deliver_local(GatewayState& g, const BusMessage& m) {
    switch (m.kind) {
      case MsgKind::ProfileExchange:
        on_profile_exchange(g, m.from, std::get<ProfileExchangePayload>(m.payload));
        break;
      case MsgKind::RpsSample:
        on_rps_sample(g, std::get<RpsSamplePayload>(m.payload));
        break;
      case MsgKind::ConsensusInit:
      case MsgKind::ConsensusProposal:
        on_consensus_proposal(g, m.from, std::get<ConsensusProposalPayload>(m.payload));
        break;
      case MsgKind::ConsensusDecision:
        on_consensus_decision_msg(g, m.from, std::get<ConsensusDecisionPayload>(m.payload));
        break;
      case MsgKind::SubscribeForward:
        on_subscribe_forward(g, m.from, std::get<SubscribeForwardPayload>(m.payload));
        break;
      case MsgKind::SubscribeAck:
        on_subscribe_ack(g, std::get<SubscribeAckPayload>(m.payload));
        break;
      case MsgKind::SubscribeFlood:
        on_subscribe_flood(g, std::get<SubscribeFloodPayload>(m.payload));
        break;
      case MsgKind::PublishMatch: {
        const auto& pm = std::get<PublishMatchPayload>(m.payload);
        route_step(g, m.kind, pm, [&] { owner_on_publish_match(g, pm); });
        break;
      }
      case MsgKind::DeviceData: {
        const auto& dd = std::get<DeviceDataPayload>(m.payload);
        route_step(
            g, m.kind, dd, [&] { deliver_to_owner(g, dd.sealed, dd.frame); },
            [&] { probe_decrypt(g, dd.sealed, dd.frame); });
        break;
      }
      case MsgKind::KeyMaterial: {
        const auto& km = std::get<KeyMaterialPayload>(m.payload);
        route_step(g, m.kind, km, [&] { on_key_material(g, km); });
        break;
      }
      case MsgKind::HandlerRevoke: {
        const auto& rv = std::get<HandlerRevokePayload>(m.payload);
        route_step(g, m.kind, rv, [&] { on_handler_revoke(g, rv); });
        break;
      }
      case MsgKind::LeaderBid: {
        const auto& bid = std::get<LeaderBidPayload>(m.payload);
        g.election_bids[bid.term][m.from] = bid.occupation;
        break;
      }
      case MsgKind::LeaderHandoff: {
        const auto& h = std::get<LeaderHandoffPayload>(m.payload);
        g.leader.route_cache = h.route_cache;
        g.leader.pending_sender_map = h.pending_sender_map;
        break;
      }
      case MsgKind::BaselineHearReport:
        on_baseline_hear(g, m.from, std::get<BaselineHearReportPayload>(m.payload));
        break;
      case MsgKind::BaselineAssign:
        on_baseline_assign(g, std::get<BaselineAssignPayload>(m.payload));
        break;
      case MsgKind::ConsensusDecide:
        on_consensus_decide(g, std::get<ConsensusDecidePayload>(m.payload));
        break;
      case MsgKind::DisseminationRound:
        dissemination_round(g, std::get<DisseminationRoundPayload>(m.payload).request_id);
        break;
      case MsgKind::BaselineDecide:
        on_baseline_decide(g, std::get<BaselineDecidePayload>(m.payload));
        break;
      case MsgKind::DelegationStart:
        on_delegation_start(g, std::get<DelegationStartPayload>(m.payload));
        break;
    }
  }

  /// One routing step for an explicitly addressed unicast payload: consume
  /// at the destination gateway, dispatch at the origin leader, hand over
  /// at the destination cluster's leader, or relay in transit.
  template <typename P, typename Consume, typename TransitProbe = void (*)()>
  void route_step(
      GatewayState& g, MsgKind kind, const P& p, Consume consume,
      TransitProbe transit_probe = [] {}) {
    if (p.dest_gateway == g.id && p.dest_cluster == g.cluster) {
      if (g.is_leader && !p.path.empty()) cache_reverse_route(g, p.path);
      consume();
      return;
    }
    if (!g.is_leader) {
      log_.line(now(), ent_gw(g.id), "route_misdelivery kind=%s", msg_kind_name(kind));
      return;
    }
    if (p.dest_cluster == g.cluster) {
      // Arrived at the destination cluster's leader port.
      cache_reverse_route(g, p.path);
      GatewayId target = p.dest_gateway;
      if constexpr (std::is_same_v<P, KeyMaterialPayload>) {
        if (p.material == KeyMaterialKind::ToHandler) {
          auto it = g.leader.pending_sender_map.find({p.dev, p.attempt});
          if (it != g.leader.pending_sender_map.end()) target = it->second;
        }
      }
      send_direct(g.id, target, kind, p);
      return;
    }
    if (p.path.empty()) {
      leader_dispatch_unicast(g, kind, p, p.dest_cluster, p.dest_gateway);
      return;
    }
    transit_probe();
    relay_next(g, kind, p, p.path);
  }

  void cache_reverse_route(GatewayState& leader, const std::vector<ClusterId>& path) {
    if (path.empty()) return;
    std::vector<ClusterId> back(path.rbegin(), path.rend());
    leader.leader.route_cache[path.front()] = back;
  }

  // ======================================================================
  // Entity access
  // ======================================================================

  GatewayState& gw(GatewayId id) { return gateways_.at(id); }
  DeviceState& dev(DevEui id) { return devices_.at(static_cast<std::size_t>(id)); }
  ActorState& actor(ActorId id) { return actors_.at(actor_index_.at(id)); }
  const ActorState& actor_const(ActorId id) const { return actors_.at(actor_index_.at(id)); }

  static std::string ent_gw(GatewayId id) { return "gw:" + std::to_string(id); }
  static std::string ent_dev(DevEui id) { return "dev:" + std::to_string(id); }
  static std::string ent_actor(ActorId id) { return "actor:" + std::to_string(id); }

  // ======================================================================

  experiments::ScenarioConfig cfg_;
  bool initialized_ = false;

  Scheduler sched_;
  EventLog log_;
  experiments::RunMetrics metrics_;

  Rng placement_rng_, params_rng_, proto_rng_, keys_rng_;
  intercluster::ClusterGraph graph_;

  std::vector<DeviceState> devices_;
  std::vector<GatewayState> gateways_;
  std::vector<ActorState> actors_;
  std::map<ActorId, std::size_t> actor_index_;
  std::map<ClusterId, std::vector<GatewayId>> cluster_members_;
  std::map<ClusterId, GatewayId> leaders_;
  std::map<DevEui, double> wake_at_;

  FrameId next_frame_id_ = 0;
};

}  // namespace flip::engine
