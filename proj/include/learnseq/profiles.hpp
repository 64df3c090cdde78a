#pragma once

// Per-user pattern occurrence counts and smoothed frequency profiles.

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "common.hpp"
#include "sequencer.hpp"
#include "spam.hpp"

namespace learnseq {

using PatternVocabulary = std::vector<std::vector<Label>>;

inline PatternVocabulary vocabulary_of(const std::vector<Pattern>& ps) {
  PatternVocabulary v;
  v.reserve(ps.size());
  for (const auto& p : ps) v.push_back(p.items);
  return v;
}

/// Number of gap-respecting occurrences (distinct position tuples) of
/// `pattern` in `seq`. Overlapping occurrences each count.
template <class Item>
std::uint64_t occurrences(const std::vector<Item>& seq, const std::vector<Item>& pattern,
                          Bound maxgap) {
  const std::size_t m = pattern.size(), n = seq.size();
  if (m == 0 || n < m) return 0;
  // ends[j] = occurrences of pattern[0..k] ending exactly at position j
  std::vector<std::uint64_t> ends(n), next(n);
  for (std::size_t j = 0; j < n; ++j) ends[j] = seq[j] == pattern[0] ? 1 : 0;
  for (std::size_t k = 1; k < m; ++k) {
    std::uint64_t window = 0;  // sum of ends[j-g .. j-1]
    for (std::size_t j = 0; j < n; ++j) {
      if (maxgap && j > *maxgap) window -= ends[j - *maxgap - 1];
      next[j] = seq[j] == pattern[k] ? window : 0;
      window += ends[j];
    }
    std::swap(ends, next);
  }
  std::uint64_t total = 0;
  for (auto e : ends) total += e;
  return total;
}

using CountVector = std::vector<std::uint64_t>;

/// Occurrence counts per user over `vocab`, summed across the user's sequences.
inline std::map<std::string, CountVector> count_occurrences(
    const std::vector<LabeledSequence>& seqs, const PatternVocabulary& vocab, Bound maxgap) {
  if (vocab.empty()) throw ValidationError("pattern vocabulary is empty");
  std::map<std::string, CountVector> out;
  for (const auto& s : seqs) {
    auto& counts = out.try_emplace(s.user_id, vocab.size(), 0).first->second;
    for (std::size_t v = 0; v < vocab.size(); ++v) counts[v] += occurrences(s.labels, vocab[v], maxgap);
  }
  return out;
}

inline constexpr double kDefaultEpsilon = 0.0001;

/// Zero counts become `epsilon`, then the vector is scaled to sum to 1.
inline std::vector<double> build_profile(const CountVector& counts,
                                         double epsilon = kDefaultEpsilon) {
  if (counts.empty()) throw ValidationError("cannot build a profile from an empty count vector");
  if (!(epsilon > 0)) throw ValidationError("epsilon must be positive");
  std::vector<double> w(counts.size());
  double total = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    w[i] = counts[i] ? static_cast<double>(counts[i]) : epsilon;
    total += w[i];
  }
  for (auto& x : w) x /= total;
  return w;
}

struct PatternProfile {
  std::string user_id;
  std::vector<double> weights;
};

/// One profile per user with at least one sequence, sorted by user id.
inline std::vector<PatternProfile> build_profiles(const std::vector<LabeledSequence>& seqs,
                                                  const PatternVocabulary& vocab, Bound maxgap,
                                                  double epsilon = kDefaultEpsilon) {
  std::vector<PatternProfile> out;
  for (auto& [user, counts] : count_occurrences(seqs, vocab, maxgap))
    out.push_back({user, build_profile(counts, epsilon)});
  return out;
}

inline void write_profiles(std::ostream& out, const PatternVocabulary& vocab,
                           const std::vector<PatternProfile>& profiles) {
  csv::Row header{"user_id"};
  for (const auto& p : vocab) header.push_back(render(p));
  csv::write_row(out, header);
  for (const auto& pr : profiles) {
    csv::Row row{pr.user_id};
    for (double w : pr.weights) row.push_back(fixed(w, 10));
    csv::write_row(out, row);
  }
}

struct ProfileTable {
  PatternVocabulary vocab;
  std::vector<PatternProfile> profiles;
};

inline ProfileTable read_profiles(std::istream& in) {
  std::size_t line = 0;
  csv::Row row;
  if (!csv::read_row(in, row, line) || row.empty() || csv::trim(row[0]) != "user_id")
    throw ParseError(1, "profiles header must start with user_id");
  ProfileTable t;
  try {
    for (std::size_t i = 1; i < row.size(); ++i) t.vocab.push_back(parse_labels(row[i]));
  } catch (const ValidationError& e) {
    throw ParseError(1, e.what());
  }
  while (true) {
    const auto row_line = line + 1;
    if (!csv::read_row(in, row, line)) break;
    if (csv::is_blank(row)) continue;
    if (row.size() != t.vocab.size() + 1)
      throw ParseError(row_line, "expected " + std::to_string(t.vocab.size() + 1) + " fields");
    PatternProfile p{row[0], {}};
    try {
      for (std::size_t i = 1; i < row.size(); ++i) p.weights.push_back(std::stod(row[i]));
    } catch (const std::exception& e) {
      throw ParseError(row_line, std::string("bad weight: ") + e.what());
    }
    t.profiles.push_back(std::move(p));
  }
  return t;
}

}  // namespace learnseq
