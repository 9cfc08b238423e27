#include "orgsim/event_log.hpp"

#include <charconv>
#include <ostream>

#include "json.hpp"

#include "orgsim/error.hpp"

namespace orgsim {

const std::string* LogRecord::field(std::string_view key) const {
  for (const auto& [k, v] : fields)
    if (k == key) return &v;
  return nullptr;
}

std::string escape_value(std::string_view v) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(v.size());
  for (unsigned char c : v) {
    if (c <= ' ' || c == '%' || c == '=' || c >= 0x7f) {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 15];
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

std::string unescape_value(std::string_view v) {
  std::string out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != '%') {
      out += v[i];
      continue;
    }
    unsigned value = 0;
    if (i + 2 >= v.size()) throw std::invalid_argument("short escape");
    auto r = std::from_chars(v.data() + i + 1, v.data() + i + 3, value, 16);
    if (r.ec != std::errc() || r.ptr != v.data() + i + 3) throw std::invalid_argument("bad escape");
    out += static_cast<char>(value);
    i += 2;
  }
  return out;
}

std::string format_record(const LogRecord& r) {
  std::string line = std::to_string(r.tick);
  line += ' ';
  line += r.subject;
  line += ' ';
  line += r.kind;
  for (const auto& [k, v] : r.fields) {
    line += ' ';
    line += k;
    line += '=';
    line += escape_value(v);
  }
  return line;
}

LogRecord parse_record(std::string_view line, std::size_t line_no) {
  auto next_token = [&](std::string_view& rest) {
    const auto sp = rest.find(' ');
    std::string_view tok = rest.substr(0, sp);
    rest = sp == std::string_view::npos ? std::string_view{} : rest.substr(sp + 1);
    return tok;
  };
  std::string_view rest = line;
  LogRecord r;
  const auto tick = next_token(rest);
  auto res = std::from_chars(tick.data(), tick.data() + tick.size(), r.tick);
  if (tick.empty() || res.ec != std::errc() || res.ptr != tick.data() + tick.size())
    throw ParseError(line_no, "bad tick '" + std::string(tick) + "'");
  r.subject = next_token(rest);
  r.kind = next_token(rest);
  if (r.subject.empty() || r.kind.empty()) throw ParseError(line_no, "record needs tick, subject and kind");
  while (!rest.empty()) {
    const auto tok = next_token(rest);
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos || eq == 0) throw ParseError(line_no, "bad field '" + std::string(tok) + "'");
    try {
      r.fields.emplace_back(std::string(tok.substr(0, eq)), unescape_value(tok.substr(eq + 1)));
    } catch (const std::invalid_argument&) {
      throw ParseError(line_no, "bad escape in field '" + std::string(tok) + "'");
    }
  }
  return r;
}

std::string hex_digest(std::uint64_t d) {
  char buf[17];
  auto r = std::to_chars(buf, buf + 16, d, 16);
  std::string s(buf, r.ptr);
  return std::string(16 - s.size(), '0') + s;
}

void EventLog::append(const LogRecord& r) {
  if (closed_) throw Error("event log already closed");
  std::string line = format_record(r);
  line += '\n';
  digest_ = fnv1a64(line, digest_);
  ++lines_;
  if (mirror_) *mirror_ << line;
  if (keep_) text_ += line;
}

void EventLog::close(std::uint64_t tick, std::uint64_t ticks_run) {
  LogRecord end{tick, "run", "end",
                {{"ticks", std::to_string(ticks_run)}, {"lines", std::to_string(lines_)}, {"digest", hex_digest(digest_)}}};
  std::string line = format_record(end) + "\n";
  if (mirror_) *mirror_ << line << std::flush;
  if (keep_) text_ += line;
  closed_ = true;
}

// ------------------------------------------------------------------ metrics

std::string RunMetrics::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["ticks"] = ticks;
  j["roster"] = roster;
  j["survivors"] = survivors;
  j["energy_dead"] = energy_dead;
  j["hardware_dead"] = hardware_dead;
  if (sw_hw_ratio.kind == SwHwRatio::Kind::Value)
    j["sw_hw_ratio"] = sw_hw_ratio.value;
  else
    j["sw_hw_ratio"] = sw_hw_ratio.str();
  j["disposed_to_graveyard"] = disposed_to_graveyard;
  j["mean_battery_per_day"] = mean_battery_per_day;
  j["coverage_fraction"] = coverage_fraction;
  j["ledger"] = {{"efficiency", ledger.efficiency}, {"initial_stored", ledger.initial_stored},
                 {"drawn", ledger.drawn},           {"consumed", ledger.consumed},
                 {"stored", ledger.stored},         {"residual", ledger.residual}};
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config) cfg[k] = v;
  j["config"] = cfg;
  j["cognitive_embodiment"] = cognitive_embodiment;
  j["log_digest"] = log_digest;
  return j.dump(2);
}

namespace {

double num(const LogRecord& r, std::string_view key) {
  const auto* v = r.field(key);
  if (!v) throw Error("record '" + r.kind + "' lacks field '" + std::string(key) + "'");
  double d = 0;
  auto res = std::from_chars(v->data(), v->data() + v->size(), d);
  if (res.ec != std::errc() || res.ptr != v->data() + v->size())
    throw Error("record '" + r.kind + "' has bad number in '" + std::string(key) + "'");
  return d;
}

}  // namespace

void MetricsAccumulator::consume(const LogRecord& r) {
  if (r.subject == "run") {
    if (r.kind == "config") {
      const auto* k = r.field("key");
      const auto* v = r.field("value");
      if (!k || !v) throw Error("config record needs key and value");
      m_.config.emplace_back(*k, *v);
      if (*k == "run.seed") m_.seed = std::stoull(*v);
    } else if (r.kind == "day") {
      m_.mean_battery_per_day.push_back(num(r, "mean_battery"));
      m_.coverage_fraction = num(r, "coverage");
    } else if (r.kind == "ledger") {
      m_.ledger = {num(r, "efficiency"), num(r, "initial"), num(r, "drawn"),
                   num(r, "consumed"),   num(r, "stored"),  num(r, "residual")};
    }
    return;
  }
  if (r.subject.empty() || r.subject[0] != 'm') return;
  auto count_death = [&](std::string_view cause) {
    if (cause == "energy")
      ++m_.energy_dead;
    else if (cause == "hardware")
      ++m_.hardware_dead;
    else
      throw Error("unknown death cause '" + std::string(cause) + "'");
  };
  if (r.kind == "spawn") {
    ++m_.roster;
    const auto* h = r.field("health");
    if (h && *h == to_string(Health::EnergyDead)) count_death("energy");
    if (h && *h == to_string(Health::HardwareDead)) count_death("hardware");
  } else if (r.kind == "death") {
    const auto* c = r.field("cause");
    if (!c) throw Error("death record lacks cause");
    count_death(*c);
  } else if (r.kind == "disposed") {
    ++m_.disposed_to_graveyard;
  }
}

RunMetrics MetricsAccumulator::result(std::uint64_t ticks, const std::string& digest) const {
  RunMetrics m = m_;
  m.ticks = ticks;
  m.survivors = m.roster - m.energy_dead - m.hardware_dead;
  if (m.hardware_dead > 0)
    m.sw_hw_ratio = {SwHwRatio::Kind::Value, static_cast<double>(m.energy_dead) / m.hardware_dead};
  else if (m.energy_dead > 0)
    m.sw_hw_ratio = {SwHwRatio::Kind::Infinite, 0.0};
  m.log_digest = digest;
  return m;
}

RunMetrics replay_log(std::string_view text) {
  if (text.empty()) throw ParseError(1, "empty log");
  MetricsAccumulator acc;
  std::uint64_t digest = kFnvOffset;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) throw ParseError(line_no + 1, "log truncated mid-line");
    const auto line = text.substr(pos, nl - pos);
    ++line_no;
    const auto rec = parse_record(line, line_no);
    if (rec.subject == "run" && rec.kind == "end") {
      if (nl + 1 != text.size()) throw ParseError(line_no + 1, "records after the end record");
      const auto* lines = rec.field("lines");
      const auto* dg = rec.field("digest");
      const auto* ticks = rec.field("ticks");
      if (!lines || !dg || !ticks) throw ParseError(line_no, "end record lacks lines, ticks or digest");
      if (*lines != std::to_string(line_no - 1))
        throw ParseError(line_no, "log has " + std::to_string(line_no - 1) + " records, end record says " + *lines);
      if (*dg != hex_digest(digest)) throw ParseError(line_no, "digest mismatch: log content was altered");
      return acc.result(std::stoull(*ticks), *dg);
    }
    digest = fnv1a64(text.substr(pos, nl - pos + 1), digest);
    try {
      acc.consume(rec);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(line_no, e.what());
    }
    pos = nl + 1;
  }
  throw ParseError(line_no, "log truncated: no end record");
}

}  // namespace orgsim
