#pragma once

// Activity event logs: the EventRecord model, CSV parsing and writing,
// and the dataset summary.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "common.hpp"

namespace learnseq {

enum class ActivityKind { animated_example, basic_example, parameterized_exercise };

inline constexpr ActivityKind kAllKinds[] = {ActivityKind::animated_example,
                                             ActivityKind::basic_example,
                                             ActivityKind::parameterized_exercise};

enum class Outcome { none, pass, fail };

inline std::string to_string(ActivityKind k) {
  switch (k) {
    case ActivityKind::animated_example: return "animated_example";
    case ActivityKind::basic_example: return "basic_example";
    case ActivityKind::parameterized_exercise: return "parameterized_exercise";
  }
  return "?";
}

inline std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::pass: return "pass";
    case Outcome::fail: return "fail";
    case Outcome::none: return "";
  }
  return "";
}

inline std::optional<ActivityKind> parse_kind(std::string_view s) {
  const auto l = lower(s);
  for (auto k : kAllKinds)
    if (l == to_string(k)) return k;
  return std::nullopt;
}

struct EventRecord {
  std::string user_id;
  std::string session_id;
  std::string topic_id;
  ActivityKind kind = ActivityKind::animated_example;
  std::int64_t start = 0;     // seconds since epoch, UTC
  std::int64_t duration = 0;  // seconds
  Outcome outcome = Outcome::none;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

/// Throws ValidationError when the record breaks the outcome/duration rules.
inline void validate(const EventRecord& r) {
  if (r.duration < 0) throw ValidationError("negative duration");
  const bool exercise = r.kind == ActivityKind::parameterized_exercise;
  if (exercise && r.outcome == Outcome::none)
    throw ValidationError("parameterized_exercise requires outcome pass or fail");
  if (!exercise && r.outcome != Outcome::none)
    throw ValidationError("outcome present on non-exercise kind " + to_string(r.kind));
}

inline const csv::Row& event_log_header() {
  static const csv::Row h{"user_id", "session_id", "topic_id", "kind",
                          "start",   "duration",   "outcome"};
  return h;
}

namespace detail {

// Integer seconds; a fractional part is truncated toward zero.
inline std::optional<std::int64_t> parse_seconds(std::string_view s) {
  std::string t = csv::trim(s);
  if (t.empty()) return std::nullopt;
  auto dot = t.find('.');
  std::string whole = t.substr(0, dot);
  if (dot != std::string::npos) {
    auto frac = std::string_view(t).substr(dot + 1);
    if (!std::all_of(frac.begin(), frac.end(), [](char c) { return c >= '0' && c <= '9'; }))
      return std::nullopt;
  }
  if (whole.empty() || whole == "-" || whole == "+") {
    if (dot == std::string::npos) return std::nullopt;
    return 0;
  }
  if (whole[0] == '+') whole.erase(0, 1);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), v);
  if (ec != std::errc{} || p != whole.data() + whole.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Parses the event-log CSV. Rows come back in file order. Blank lines are
/// skipped; any other malformed row raises ParseError with its line number.
inline std::vector<EventRecord> parse_event_log(std::istream& in) {
  std::size_t line = 0;
  csv::expect_header(in, event_log_header(), line);
  std::vector<EventRecord> out;
  csv::Row row;
  while (true) {
    const std::size_t row_line = line + 1;
    if (!csv::read_row(in, row, line)) break;
    if (csv::is_blank(row)) continue;
    if (row.size() != 7)
      throw ParseError(row_line, "expected 7 fields, got " + std::to_string(row.size()));
    EventRecord r;
    r.user_id = row[0];
    r.session_id = row[1];
    r.topic_id = row[2];
    if (r.user_id.empty() || r.session_id.empty() || r.topic_id.empty())
      throw ParseError(row_line, "empty identifier");
    auto kind = parse_kind(csv::trim(row[3]));
    if (!kind) throw ParseError(row_line, "unknown activity kind `" + row[3] + "`");
    r.kind = *kind;
    auto start = detail::parse_seconds(row[4]);
    if (!start) throw ParseError(row_line, "bad start `" + row[4] + "`");
    r.start = *start;
    auto duration = detail::parse_seconds(row[5]);
    if (!duration) throw ParseError(row_line, "bad duration `" + row[5] + "`");
    r.duration = *duration;
    const auto outcome = lower(csv::trim(row[6]));
    if (outcome.empty()) r.outcome = Outcome::none;
    else if (outcome == "pass") r.outcome = Outcome::pass;
    else if (outcome == "fail") r.outcome = Outcome::fail;
    else throw ParseError(row_line, "unknown outcome `" + row[6] + "`");
    try {
      validate(r);
    } catch (const ValidationError& e) {
      throw ParseError(row_line, e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_event_log(std::ostream& out, const std::vector<EventRecord>& records) {
  csv::write_row(out, event_log_header());
  for (const auto& r : records)
    csv::write_row(out, {r.user_id, r.session_id, r.topic_id, to_string(r.kind),
                         std::to_string(r.start), std::to_string(r.duration),
                         to_string(r.outcome)});
}

struct DatasetStats {
  std::size_t n_students = 0;
  std::size_t n_topics = 0;
  std::size_t max_sessions_per_student = 0;
  std::size_t n_records = 0;

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

inline DatasetStats dataset_stats(const std::vector<EventRecord>& records) {
  std::map<std::string, std::set<std::string>> sessions;
  std::set<std::string> topics;
  for (const auto& r : records) {
    sessions[r.user_id].insert(r.session_id);
    topics.insert(r.topic_id);
  }
  DatasetStats s;
  s.n_students = sessions.size();
  s.n_topics = topics.size();
  for (const auto& [_, ss] : sessions)
    s.max_sessions_per_student = std::max(s.max_sessions_per_student, ss.size());
  s.n_records = records.size();
  return s;
}

inline nlohmann::ordered_json to_json(const DatasetStats& s) {
  nlohmann::ordered_json j;
  j["n_students"] = s.n_students;
  j["n_topics"] = s.n_topics;
  j["max_sessions_per_student"] = s.max_sessions_per_student;
  j["n_records"] = s.n_records;
  return j;
}

}  // namespace learnseq
