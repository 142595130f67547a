#pragma once

#include <deque>
#include <limits>
#include <stdexcept>
#include <variant>

namespace flip::radio {

struct Allowed {};
struct Deferred {
  double next_allowed_time;
};
using DutyDecision = std::variant<Allowed, Deferred>;

/// Rolling-window duty-cycle ledger for one transmitter and sub-band.
/// ETSI phrases the cap per hour; the strictest reading is enforced here:
/// at any instant, the airtime transmitted within the trailing window must
/// not exceed limit * window_length.
class DutyCycleBudget {
 public:
  DutyCycleBudget() = default;
  DutyCycleBudget(double limit, double window_length_s = 3600.0)
      : limit_(limit), window_(window_length_s) {}

  double limit() const { return limit_; }
  double window_length() const { return window_; }

  /// Airtime consumed inside the window ending at `now`.
  double window_used(double now) {
    prune(now);
    double used = 0.0;
    for (const auto& e : entries_) used += e.airtime;
    return used;
  }

  /// Decide whether a transmission of `airtime` seconds starting at `now`
  /// is lawful. When allowed, the airtime is recorded against the budget.
  /// When deferred, the earliest lawful start time is returned and nothing
  /// is recorded.
  DutyDecision consume(double airtime, double now) {
    if (airtime <= 0.0) throw std::domain_error("airtime must be positive");
    prune(now);
    const double cap = limit_ * window_;
    if (airtime > cap) {
      // A single frame longer than the whole budget can never be sent.
      return Deferred{std::numeric_limits<double>::infinity()};
    }
    double used = 0.0;
    for (const auto& e : entries_) used += e.airtime;
    if (used + airtime <= cap) {
      entries_.push_back({now, airtime});
      return Allowed{};
    }
    // Walk entries oldest-first; each expires window_ after its start.
    double t = now;
    for (const auto& e : entries_) {
      used -= e.airtime;
      t = e.start + window_;
      if (used + airtime <= cap) break;
    }
    return Deferred{t};
  }

 private:
  struct Entry {
    double start;
    double airtime;
  };

  void prune(double now) {
    while (!entries_.empty() && entries_.front().start + window_ <= now) entries_.pop_front();
  }

  double limit_ = 0.01;
  double window_ = 3600.0;
  std::deque<Entry> entries_;
};

}  // namespace flip::radio
