#pragma once

#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace flip {

/// Append-only simulation trace. One line per record:
///
///   <time> <entity> <kind> [key=value ...]
///
/// Times are printed with fixed six-digit precision so that a re-run of the
/// same (config, seed) pair produces a byte-identical log. The metrics
/// reducer and the audit checks consume exactly this format, so the
/// vocabulary of `kind` tokens is part of the stable interface (documented
/// in the README).
class EventLog {
 public:
  void set_enabled(bool on) { enabled_ = on; }
  bool enabled() const { return enabled_; }

  void line(double time, const std::string& entity, const char* fmt, ...)
      __attribute__((format(printf, 4, 5))) {
    if (!enabled_) return;
    char head[64];
    std::snprintf(head, sizeof(head), "%.6f ", time);
    char body[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(body, sizeof(body), fmt, args);
    va_end(args);
    lines_.push_back(std::string(head) + entity + " " + body);
  }

  const std::vector<std::string>& lines() const { return lines_; }
  void clear() { lines_.clear(); }

  void write_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write event log: " + path);
    for (const auto& l : lines_) out << l << '\n';
  }

 private:
  bool enabled_ = true;
  std::vector<std::string> lines_;
};

}  // namespace flip
