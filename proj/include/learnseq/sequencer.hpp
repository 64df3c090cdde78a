#pragma once

// Median-threshold labeling and segmentation of event records into
// per-(user, session, topic) labeled sequences.

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "common.hpp"
#include "ingest.hpp"

namespace learnseq {

enum class Label : std::uint8_t { AnEx, anex, ex, Ex, P, p, F, f };

inline constexpr Label kAllLabels[] = {Label::AnEx, Label::anex, Label::ex, Label::Ex,
                                       Label::P,    Label::p,    Label::F,  Label::f};

inline std::string to_string(Label l) {
  static constexpr const char* names[] = {"AnEx", "anex", "ex", "Ex", "P", "p", "F", "f"};
  return names[static_cast<int>(l)];
}

/// Exact (case-sensitive) inverse of to_string.
inline std::optional<Label> parse_label(std::string_view s) {
  for (auto l : kAllLabels)
    if (s == to_string(l)) return l;
  return std::nullopt;
}

inline bool is_exercise(Label l) {
  return l == Label::P || l == Label::p || l == Label::F || l == Label::f;
}

inline std::string render(const std::vector<Label>& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out.push_back(' ');
    out += to_string(labels[i]);
  }
  return out;
}

inline std::vector<Label> parse_labels(std::string_view text) {
  std::vector<Label> out;
  for (const auto& tok : split_ws(text)) {
    auto l = parse_label(tok);
    if (!l) throw ValidationError("unknown label `" + tok + "`");
    out.push_back(*l);
  }
  return out;
}

/// Per-kind median duration, present only for kinds seen in the input.
class MedianTable {
public:
  MedianTable() = default;

  void set(ActivityKind k, double median) { medians_[index(k)] = median; }
  bool has(ActivityKind k) const { return medians_[index(k)].has_value(); }

  double at(ActivityKind k) const {
    const auto& m = medians_[index(k)];
    if (!m) throw ValidationError("no median for activity kind " + to_string(k));
    return *m;
  }

private:
  static std::size_t index(ActivityKind k) { return static_cast<std::size_t>(k); }
  std::array<std::optional<double>, 3> medians_{};
};

/// Median of a non-empty sample; even counts average the two middle values.
inline double median_of(std::vector<double> v) {
  if (v.empty()) throw ValidationError("median of empty sample");
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return lo + (hi - lo) / 2;
}

inline MedianTable compute_medians(const std::vector<EventRecord>& records) {
  std::array<std::vector<double>, 3> by_kind;
  for (const auto& r : records)
    by_kind[static_cast<std::size_t>(r.kind)].push_back(static_cast<double>(r.duration));
  MedianTable t;
  for (auto k : kAllKinds) {
    auto& d = by_kind[static_cast<std::size_t>(k)];
    if (!d.empty()) t.set(k, median_of(std::move(d)));
  }
  return t;
}

/// Which casing of the basic-example label means "longer than median".
/// By default long → `ex` and short → `Ex`. The opposite reading is also in
/// circulation, so the choice is a switch.
struct LabelScheme {
  bool basic_long_is_lowercase = true;
};

/// Ties (duration == median) land on the short side.
inline Label label_activity(const EventRecord& r, const MedianTable& medians,
                            LabelScheme scheme = {}) {
  const bool longer = static_cast<double>(r.duration) > medians.at(r.kind);
  switch (r.kind) {
    case ActivityKind::animated_example:
      return longer ? Label::AnEx : Label::anex;
    case ActivityKind::basic_example: {
      const bool lowercase = longer == scheme.basic_long_is_lowercase;
      return lowercase ? Label::ex : Label::Ex;
    }
    case ActivityKind::parameterized_exercise:
      switch (r.outcome) {
        case Outcome::pass: return longer ? Label::P : Label::p;
        case Outcome::fail: return longer ? Label::F : Label::f;
        case Outcome::none: break;
      }
      throw ValidationError("parameterized_exercise without outcome");
  }
  throw ValidationError("unknown activity kind");
}

struct LabeledSequence {
  std::string user_id;
  std::string session_id;
  std::string topic_id;
  std::vector<Label> labels;
  std::vector<std::int64_t> starts;
  // Aligned with `labels`; needed to measure idle gaps.
  std::vector<std::int64_t> durations;

  friend bool operator==(const LabeledSequence&, const LabeledSequence&) = default;
};

/// Groups by (user, session, topic), orders each group by start time (file
/// order breaks ties) and labels it. Output is sorted by the group key.
inline std::vector<LabeledSequence> build_sequences(const std::vector<EventRecord>& records,
                                                    const MedianTable& medians,
                                                    LabelScheme scheme = {}) {
  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, std::vector<const EventRecord*>> groups;
  for (const auto& r : records) groups[{r.user_id, r.session_id, r.topic_id}].push_back(&r);

  std::vector<LabeledSequence> out;
  out.reserve(groups.size());
  for (auto& [key, rs] : groups) {
    std::stable_sort(rs.begin(), rs.end(),
                     [](const EventRecord* a, const EventRecord* b) { return a->start < b->start; });
    LabeledSequence s{std::get<0>(key), std::get<1>(key), std::get<2>(key), {}, {}, {}};
    for (const auto* r : rs) {
      s.labels.push_back(label_activity(*r, medians, scheme));
      s.starts.push_back(r->start);
      s.durations.push_back(r->duration);
    }
    out.push_back(std::move(s));
  }
  return out;
}

struct BoundaryConfig {
  bool require_gap_below_median = false;
  bool require_mixed_activity = false;
  bool require_exercise_ending = false;

  bool any() const {
    return require_gap_below_median || require_mixed_activity || require_exercise_ending;
  }
};

/// Idle time between activity i-1 finishing and activity i starting.
inline std::int64_t idle_gap(const LabeledSequence& s, std::size_t i) {
  return s.starts[i] - (s.starts[i - 1] + s.durations[i - 1]);
}

/// Median of every within-sequence idle gap, or nullopt if there are none.
inline std::optional<double> median_gap(const std::vector<LabeledSequence>& seqs) {
  std::vector<double> gaps;
  for (const auto& s : seqs)
    for (std::size_t i = 1; i < s.labels.size(); ++i)
      gaps.push_back(static_cast<double>(idle_gap(s, i)));
  if (gaps.empty()) return std::nullopt;
  return median_of(std::move(gaps));
}

/// Applies the enabled boundary rules in order: gap split, mixed-activity,
/// exercise ending. All flags off is the identity.
inline std::vector<LabeledSequence> filter_sequences(std::vector<LabeledSequence> seqs,
                                                     const BoundaryConfig& cfg) {
  if (cfg.require_gap_below_median) {
    if (auto threshold = median_gap(seqs)) {
      std::vector<LabeledSequence> split;
      for (auto& s : seqs) {
        LabeledSequence cur{s.user_id, s.session_id, s.topic_id, {}, {}, {}};
        for (std::size_t i = 0; i < s.labels.size(); ++i) {
          if (i > 0 && static_cast<double>(idle_gap(s, i)) >= *threshold) {
            split.push_back(cur);
            cur.labels.clear();
            cur.starts.clear();
            cur.durations.clear();
          }
          cur.labels.push_back(s.labels[i]);
          cur.starts.push_back(s.starts[i]);
          cur.durations.push_back(s.durations[i]);
        }
        split.push_back(std::move(cur));
      }
      seqs = std::move(split);
    }
  }
  if (cfg.require_mixed_activity) {
    std::erase_if(seqs, [](const LabeledSequence& s) {
      const auto n = std::count_if(s.labels.begin(), s.labels.end(), is_exercise);
      return n == 0 || n == static_cast<std::ptrdiff_t>(s.labels.size());
    });
  }
  if (cfg.require_exercise_ending) {
    std::erase_if(seqs, [](const LabeledSequence& s) { return !is_exercise(s.labels.back()); });
  }
  return seqs;
}

inline const csv::Row& sequences_header() {
  static const csv::Row h{"user_id", "session_id", "topic_id", "labels"};
  return h;
}

inline void write_sequences(std::ostream& out, const std::vector<LabeledSequence>& seqs) {
  csv::write_row(out, sequences_header());
  for (const auto& s : seqs)
    csv::write_row(out, {s.user_id, s.session_id, s.topic_id, render(s.labels)});
}

/// Reads the sequences CSV. Timing is not part of that format, so `starts`
/// is filled with positions and `durations` with zeros.
inline std::vector<LabeledSequence> read_sequences(std::istream& in) {
  std::size_t line = 0;
  csv::expect_header(in, sequences_header(), line);
  std::vector<LabeledSequence> out;
  csv::Row row;
  while (true) {
    const auto row_line = line + 1;
    if (!csv::read_row(in, row, line)) break;
    if (csv::is_blank(row)) continue;
    if (row.size() != 4)
      throw ParseError(row_line, "expected 4 fields, got " + std::to_string(row.size()));
    LabeledSequence s{row[0], row[1], row[2], {}, {}, {}};
    try {
      s.labels = parse_labels(row[3]);
    } catch (const ValidationError& e) {
      throw ParseError(row_line, e.what());
    }
    if (s.labels.empty()) throw ParseError(row_line, "empty label sequence");
    s.starts.resize(s.labels.size());
    std::iota(s.starts.begin(), s.starts.end(), std::int64_t{0});
    s.durations.assign(s.labels.size(), 0);
    out.push_back(std::move(s));
  }
  return out;
}

/// Sequences grouped by user, users in sorted order.
inline std::map<std::string, std::vector<LabeledSequence>> by_user(
    const std::vector<LabeledSequence>& seqs) {
  std::map<std::string, std::vector<LabeledSequence>> out;
  for (const auto& s : seqs) out[s.user_id].push_back(s);
  return out;
}

}  // namespace learnseq
