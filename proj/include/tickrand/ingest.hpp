#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "tickrand/error.hpp"

namespace tickrand {

/// Time of day in nanoseconds after midnight.
using Nanos = std::int64_t;

inline constexpr Nanos kNanosPerSecond = 1'000'000'000;

struct TradeEvent {
  Nanos time = 0;
  int event_type = 0;
  std::int64_t order_id = 0;
  std::int64_t size = 0;
  std::int64_t price = 0;  // 1/10000 currency units
  int direction = 1;
};

/// Executions of one ticker on one day, in file order. `times` runs parallel
/// to `prices` and is empty for day files that were stored without times.
struct TradeDay {
  std::string ticker;
  std::string date;
  std::vector<std::int64_t> prices;
  std::vector<Nanos> times;

  bool empty() const noexcept { return prices.empty(); }
  friend bool operator==(const TradeDay&, const TradeDay&) = default;
};

enum class Field { Time, EventType, OrderId, Size, Price, Direction };

/// Column positions of the six message fields, and which event codes count as executions.
struct ColumnMap {
  // position[f] is the 0-based column of field f.
  std::array<int, 6> position{0, 1, 2, 3, 4, 5};
  std::set<int> exec_codes{4, 5};

  int column(Field f) const { return position[static_cast<int>(f)]; }

  /// Parses an ordering such as "time,event_type,order_id,size,price,direction".
  static ColumnMap from_order(std::string_view order) {
    static constexpr std::array<std::string_view, 6> names{"time",  "event_type", "order_id",
                                                           "size",  "price",      "direction"};
    ColumnMap map;
    map.position.fill(-1);
    int col = 0;
    std::size_t start = 0;
    while (start <= order.size()) {
      auto end = order.find(',', start);
      if (end == std::string_view::npos) end = order.size();
      auto name = order.substr(start, end - start);
      bool found = false;
      for (int f = 0; f < 6; ++f) {
        if (names[f] != name) continue;
        if (map.position[f] != -1) throw Error("column '" + std::string(name) + "' mapped twice");
        map.position[f] = col;
        found = true;
      }
      if (!found) throw Error("unknown column '" + std::string(name) + "'");
      ++col;
      start = end + 1;
    }
    for (int f = 0; f < 6; ++f)
      if (map.position[f] == -1) throw Error("column '" + std::string(names[f]) + "' not mapped");
    if (col != 6) throw Error("column order must list exactly six fields");
    return map;
  }

  static std::set<int> parse_codes(std::string_view text) {
    std::set<int> codes;
    std::size_t start = 0;
    while (start < text.size()) {
      auto end = text.find(',', start);
      if (end == std::string_view::npos) end = text.size();
      auto token = text.substr(start, end - start);
      int v = 0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc{} || ptr != token.data() + token.size()) throw Error("bad event code '" + std::string(token) + "'");
      codes.insert(v);
      start = end + 1;
    }
    if (codes.empty()) throw Error("empty execution code list");
    return codes;
  }
};

namespace detail {

template <typename T>
bool parse_int(std::string_view s, T& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

// Decimal seconds ("34200.123456789") to exact nanoseconds; digits beyond 1e-9 are truncated.
inline bool parse_seconds(std::string_view s, Nanos& out) {
  auto dot = s.find('.');
  std::int64_t whole = 0;
  if (!parse_int(s.substr(0, dot), whole) || whole < 0) return false;
  Nanos frac = 0;
  if (dot != std::string_view::npos) {
    auto digits = s.substr(dot + 1);
    Nanos scale = kNanosPerSecond / 10;
    for (char c : digits) {
      if (c < '0' || c > '9') return false;
      frac += (c - '0') * scale;
      scale /= 10;
    }
  }
  out = whole * kNanosPerSecond + frac;
  return true;
}

inline std::string format_seconds(Nanos t) {
  std::string frac = std::to_string(t % kNanosPerSecond);
  return std::to_string(t / kNanosPerSecond) + "." + std::string(9 - frac.size(), '0') + frac;
}

inline void trim_cr(std::string& line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
}

}  // namespace detail

/// Parses "HH:MM[:SS[.fff]]" into nanoseconds after midnight.
inline Nanos parse_clock(std::string_view text) {
  int h = 0, m = 0;
  Nanos sec = 0;
  auto c1 = text.find(':');
  if (c1 == std::string_view::npos || !detail::parse_int(text.substr(0, c1), h)) throw Error("bad time '" + std::string(text) + "'");
  auto rest = text.substr(c1 + 1);
  auto c2 = rest.find(':');
  if (!detail::parse_int(rest.substr(0, c2), m)) throw Error("bad time '" + std::string(text) + "'");
  if (c2 != std::string_view::npos && !detail::parse_seconds(rest.substr(c2 + 1), sec))
    throw Error("bad time '" + std::string(text) + "'");
  if (h < 0 || h > 24 || m < 0 || m > 59) throw Error("bad time '" + std::string(text) + "'");
  return (h * 3600LL + m * 60LL) * kNanosPerSecond + sec;
}

/// Parses one message line. Throws ParseError tagged with `line_no`.
inline TradeEvent parse_message_line(std::string_view line, const ColumnMap& map, std::size_t line_no) {
  std::array<std::string_view, 6> cols;
  std::size_t start = 0;
  int n = 0;
  while (true) {
    auto end = line.find(',', start);
    if (n == 6) throw ParseError("expected 6 fields, got more", line_no);
    cols[n++] = line.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  if (n != 6) throw ParseError("expected 6 fields, got " + std::to_string(n), line_no);

  TradeEvent ev;
  auto field = [&](Field f) { return cols[map.column(f)]; };
  if (!detail::parse_seconds(field(Field::Time), ev.time)) throw ParseError("bad time field", line_no);
  if (!detail::parse_int(field(Field::EventType), ev.event_type)) throw ParseError("bad event type", line_no);
  if (!detail::parse_int(field(Field::OrderId), ev.order_id)) throw ParseError("bad order id", line_no);
  if (!detail::parse_int(field(Field::Size), ev.size)) throw ParseError("bad size", line_no);
  if (!detail::parse_int(field(Field::Price), ev.price)) throw ParseError("bad price", line_no);
  if (ev.price <= 0) throw ParseError("nonpositive price", line_no);
  if (!detail::parse_int(field(Field::Direction), ev.direction) || (ev.direction != 1 && ev.direction != -1))
    throw ParseError("direction must be -1 or 1", line_no);
  return ev;
}

/// Reads a message stream, keeping execution prices in file order. Single pass.
inline TradeDay parse_message_stream(std::istream& in, const ColumnMap& map = {}) {
  TradeDay day;
  std::string line;
  std::size_t line_no = 0;
  Nanos last_time = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::trim_cr(line);
    if (line.empty()) continue;
    TradeEvent ev = parse_message_line(line, map, line_no);
    if (ev.time < last_time) throw ParseError("time decreases", line_no);
    last_time = ev.time;
    if (!map.exec_codes.contains(ev.event_type)) continue;
    day.prices.push_back(ev.price);
    day.times.push_back(ev.time);
  }
  return day;
}

/// Ticker and date from a LOBSTER file name such as
/// "AAPL_2012-06-21_34200000_57600000_message_10.csv". Empty strings if the name does not match.
inline std::pair<std::string, std::string> lobster_name_parts(const std::filesystem::path& path) {
  std::string stem = path.filename().string();
  auto u1 = stem.find('_');
  if (u1 == std::string::npos) return {};
  auto u2 = stem.find('_', u1 + 1);
  std::string date = stem.substr(u1 + 1, u2 == std::string::npos ? std::string::npos : u2 - u1 - 1);
  if (date.size() != 10 || date[4] != '-' || date[7] != '-') return {};
  return {stem.substr(0, u1), date};
}

/// Parses a message file. Ticker and date are taken from the LOBSTER file name when it has that shape.
/// A day with no executions is returned with empty() == true.
inline TradeDay parse_message_file(const std::filesystem::path& path, const ColumnMap& map = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  TradeDay day = parse_message_stream(in, map);
  std::tie(day.ticker, day.date) = lobster_name_parts(path);
  return day;
}

/// Writes executions back as message lines (event type 4, synthetic order ids, unit size).
inline void write_message_stream(std::ostream& out, const TradeDay& day, const ColumnMap& map = {}) {
  if (day.times.size() != day.prices.size()) throw Error("day has no event times to serialize");
  const int code = *map.exec_codes.begin();
  for (std::size_t i = 0; i < day.prices.size(); ++i) {
    std::array<std::string, 6> cols;
    cols[map.column(Field::Time)] = detail::format_seconds(day.times[i]);
    cols[map.column(Field::EventType)] = std::to_string(code);
    cols[map.column(Field::OrderId)] = std::to_string(i + 1);
    cols[map.column(Field::Size)] = "100";
    cols[map.column(Field::Price)] = std::to_string(day.prices[i]);
    cols[map.column(Field::Direction)] = "1";
    out << cols[0];
    for (int c = 1; c < 6; ++c) out << ',' << cols[c];
    out << '\n';
  }
}

inline constexpr Nanos kDefaultOpen = 9LL * 3600 * kNanosPerSecond + 30LL * 60 * kNanosPerSecond;
inline constexpr Nanos kDefaultClose = 16LL * 3600 * kNanosPerSecond;

/// Keeps executions with open <= time <= close.
inline TradeDay restrict_session(const TradeDay& day, Nanos open = kDefaultOpen, Nanos close = kDefaultClose) {
  if (!(open < close)) throw DomainError("session open must precede close");
  if (day.times.size() != day.prices.size()) throw Error("day has no event times to restrict");
  TradeDay out{day.ticker, day.date, {}, {}};
  for (std::size_t i = 0; i < day.prices.size(); ++i) {
    if (day.times[i] < open || day.times[i] > close) continue;
    out.prices.push_back(day.prices[i]);
    out.times.push_back(day.times[i]);
  }
  return out;
}

// Day files: "ticker,date,count" header, one values line, "price" header, one price per line.

inline void write_day_file(const std::filesystem::path& path, const TradeDay& day) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "ticker,date,count\n" << day.ticker << ',' << day.date << ',' << day.prices.size() << "\nprice\n";
  for (auto p : day.prices) out << p << '\n';
}

inline TradeDay read_day_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || (detail::trim_cr(line), line != "ticker,date,count"))
    throw ParseError("expected header 'ticker,date,count'", line_no);
  ++line_no;
  if (!std::getline(in, line)) throw ParseError("missing ticker line", line_no);
  detail::trim_cr(line);
  TradeDay day;
  auto c1 = line.find(',');
  auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) throw ParseError("expected ticker,date,count", line_no);
  day.ticker = line.substr(0, c1);
  day.date = line.substr(c1 + 1, c2 - c1 - 1);
  std::size_t count = 0;
  if (!detail::parse_int(std::string_view(line).substr(c2 + 1), count)) throw ParseError("bad count", line_no);
  ++line_no;
  if (!std::getline(in, line) || (detail::trim_cr(line), line != "price")) throw ParseError("expected header 'price'", line_no);
  day.prices.reserve(count);
  while (std::getline(in, line)) {
    ++line_no;
    detail::trim_cr(line);
    if (line.empty()) continue;
    std::int64_t p = 0;
    if (!detail::parse_int(std::string_view(line), p)) throw ParseError("bad price", line_no);
    if (p <= 0) throw ParseError("nonpositive price", line_no);
    day.prices.push_back(p);
  }
  if (day.prices.size() != count) throw ParseError("count mismatch: header says " + std::to_string(count), line_no);
  return day;
}

}  // namespace tickrand
