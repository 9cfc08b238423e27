#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace orgsim {

/// Root of every exception the simulator throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or forbidden configuration value. `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Illegal docking transition or port precondition violation.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Drive command the module's drive cannot execute (e.g. lateral on tracks).
class InvalidCommandError : public Error {
 public:
  using Error::Error;
};

/// Controller broke the process contract (proposal budget).
class FrameworkError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Thrown by config validation; carries every finding, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> findings)
      : Error(join(findings)), findings_(std::move(findings)) {}
  const std::vector<std::string>& findings() const noexcept { return findings_; }

 private:
  static std::string join(const std::vector<std::string>& f) {
    std::string out = "invalid config";
    for (const auto& s : f) out += "\n  " + s;
    return out;
  }
  std::vector<std::string> findings_;
};

/// A runtime invariant failed mid-run. This is a simulator bug, not an outcome.
class InvariantBreach : public Error {
 public:
  InvariantBreach(std::uint64_t tick, std::string invariant, const std::string& detail)
      : Error("invariant '" + invariant + "' breached at tick " + std::to_string(tick) +
              (detail.empty() ? "" : ": " + detail)),
        tick_(tick),
        invariant_(std::move(invariant)) {}
  std::uint64_t tick() const noexcept { return tick_; }
  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::uint64_t tick_;
  std::string invariant_;
};

}  // namespace orgsim
