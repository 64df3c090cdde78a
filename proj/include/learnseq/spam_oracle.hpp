#pragma once

// Brute-force reference miner for small databases. It shares no code with
// the bitmap search: containment is decided by enumerating position tuples.

#include <map>
#include <set>
#include <vector>

#include "spam.hpp"

namespace learnseq {

/// True iff `pattern` occurs in `seq` at positions i1 < i2 < ... with each
/// step i(k+1) - i(k) <= maxgap.
template <class Item>
bool contains(const std::vector<Item>& seq, const std::vector<Item>& pattern, Bound maxgap) {
  if (pattern.empty()) return true;
  auto from = [&](auto&& self, std::size_t k, std::size_t pos) -> bool {
    if (k == pattern.size()) return true;
    const std::size_t hi = maxgap ? std::min(seq.size(), pos + *maxgap + 1) : seq.size();
    for (std::size_t j = pos + 1; j < hi; ++j)
      if (seq[j] == pattern[k] && self(self, k + 1, j)) return true;
    return false;
  };
  for (std::size_t i = 0; i < seq.size(); ++i)
    if (seq[i] == pattern[0] && from(from, 1, i)) return true;
  return false;
}

namespace detail {

// Every gap-respecting subsequence of `seq` up to `maxlen` items.
template <class Item>
void enumerate_subsequences(const std::vector<Item>& seq, Bound maxgap, std::size_t maxlen,
                            std::set<std::vector<Item>>& out) {
  std::vector<Item> cur;
  auto walk = [&](auto&& self, std::size_t last) -> void {
    out.insert(cur);
    if (cur.size() >= maxlen) return;
    const std::size_t hi = maxgap ? std::min(seq.size(), last + *maxgap + 1) : seq.size();
    for (std::size_t j = last + 1; j < hi; ++j) {
      cur.push_back(seq[j]);
      self(self, j);
      cur.pop_back();
    }
  };
  for (std::size_t i = 0; i < seq.size(); ++i) {
    cur.assign(1, seq[i]);
    walk(walk, i);
  }
}

}  // namespace detail

/// Same contract as mine(). Candidates are every label list that occurs in
/// some sequence (anything else has support 0 < minsup); each sequence's
/// containment set comes from exhaustive position enumeration.
template <class Item>
std::vector<BasicPattern<Item>> brute_force_mine(const BasicSequenceDatabase<Item>& db,
                                                 const MiningParams& params) {
  params.validate();
  if (db.empty()) return {};
  std::size_t longest = 0;
  for (const auto& s : db.sequences()) longest = std::max(longest, s.items.size());
  const std::size_t maxlen = params.maxlen ? std::min(*params.maxlen, longest) : longest;

  std::map<std::vector<Item>, std::size_t> counts;
  for (const auto& s : db.sequences()) {
    std::set<std::vector<Item>> here;
    detail::enumerate_subsequences(s.items, params.maxgap, maxlen, here);
    for (const auto& p : here) ++counts[p];
  }

  const double n = static_cast<double>(db.size());
  std::vector<BasicPattern<Item>> out;
  for (const auto& [items, count] : counts) {
    if (items.size() < params.minlen) continue;
    if (static_cast<double>(count) < params.minsup * n - 1e-9) continue;
    out.push_back({items, count, static_cast<double>(count) / n});
  }
  sort_patterns(out);
  return out;
}

}  // namespace learnseq
