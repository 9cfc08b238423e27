#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "orgsim/digest.hpp"
#include "orgsim/energy.hpp"

namespace orgsim {

/// One log line: `<tick> <subject> <kind> key=value ...`.
/// Values are percent-escaped so they never contain spaces, '=' or newlines.
struct LogRecord {
  std::uint64_t tick = 0;
  std::string subject;  // run, world, m<id>, o<id>, s<id>
  std::string kind;
  std::vector<std::pair<std::string, std::string>> fields;

  const std::string* field(std::string_view key) const;
};

std::string escape_value(std::string_view v);
std::string unescape_value(std::string_view v);
std::string format_record(const LogRecord& r);
/// Throws ParseError(line_no, ...) on a malformed line.
LogRecord parse_record(std::string_view line, std::size_t line_no);

/// Append-only event log with a running FNV-1a 64 digest over its bytes.
/// The closing `end` record carries the line count and digest of everything
/// before it.
class EventLog {
 public:
  explicit EventLog(bool keep_text = true, std::ostream* mirror = nullptr) : keep_(keep_text), mirror_(mirror) {}
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  void append(const LogRecord& r);
  /// Writes the end record; further appends are an error.
  void close(std::uint64_t tick, std::uint64_t ticks_run);

  std::uint64_t digest() const { return digest_; }
  std::uint64_t lines() const { return lines_; }
  bool closed() const { return closed_; }
  const std::string& text() const { return text_; }

 private:
  bool keep_;
  std::ostream* mirror_;
  std::string text_;
  std::uint64_t digest_ = kFnvOffset;
  std::uint64_t lines_ = 0;
  bool closed_ = false;
};

std::string hex_digest(std::uint64_t d);

struct LedgerSummary {
  double efficiency = 0;
  double initial_stored = 0;
  double drawn = 0;
  double consumed = 0;
  double stored = 0;
  double residual = 0;
  bool operator==(const LedgerSummary&) const = default;
};

struct RunMetrics {
  std::uint64_t seed = 0;
  std::uint64_t ticks = 0;
  std::uint32_t roster = 0;
  std::uint32_t survivors = 0;
  std::uint32_t energy_dead = 0;
  std::uint32_t hardware_dead = 0;
  SwHwRatio sw_hw_ratio;
  std::uint32_t disposed_to_graveyard = 0;
  std::vector<double> mean_battery_per_day;  // fraction, one entry per completed (or final partial) day
  double coverage_fraction = 0;
  LedgerSummary ledger;
  std::vector<std::pair<std::string, std::string>> config;
  std::string cognitive_embodiment = "not-computed";
  std::string log_digest;

  bool operator==(const RunMetrics&) const = default;
  std::string to_json() const;
};

/// Builds RunMetrics from log records; the run and replay share it.
class MetricsAccumulator {
 public:
  void consume(const LogRecord& r);
  /// Finalise with the digest recorded in the end record.
  RunMetrics result(std::uint64_t ticks, const std::string& digest) const;

 private:
  RunMetrics m_;
  std::uint32_t dead_ = 0;
};

/// Recompute RunMetrics from log text alone. Empty, truncated, or tampered
/// logs raise ParseError with the offending line number.
RunMetrics replay_log(std::string_view text);

}  // namespace orgsim
