#pragma once

// SPAM-style frequent sequential pattern mining over single-item sequences.
//
// Each item owns a vertical bitmap: one run of 64-bit words per database
// sequence, bit j-1 of a run set iff the item sits at position j. A prefix
// bitmap marks the positions where a gap-respecting occurrence of the prefix
// ends. Extending a prefix by item x is s_step(prefix) & bitmap(x); a
// sequence supports the result iff its run is non-zero.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <iterator>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "common.hpp"
#include "sequencer.hpp"

namespace learnseq {

template <class Item>
struct BasicSequence {
  std::string id;
  std::vector<Item> items;
};

template <class Item>
class BasicSequenceDatabase {
public:
  BasicSequenceDatabase() = default;

  void add(std::string id, std::vector<Item> items) {
    if (items.empty()) throw ValidationError("sequence `" + id + "` is empty");
    if (!ids_.insert(id).second) throw ValidationError("duplicate sequence id `" + id + "`");
    seqs_.push_back({std::move(id), std::move(items)});
  }

  const std::vector<BasicSequence<Item>>& sequences() const { return seqs_; }
  std::size_t size() const { return seqs_.size(); }
  bool empty() const { return seqs_.empty(); }

  /// Distinct items in ascending order.
  std::vector<Item> alphabet() const {
    std::set<Item> s;
    for (const auto& q : seqs_) s.insert(q.items.begin(), q.items.end());
    return {s.begin(), s.end()};
  }

private:
  std::vector<BasicSequence<Item>> seqs_;
  std::set<std::string> ids_;
};

using SequenceDatabase = BasicSequenceDatabase<Label>;

/// Sequence ids are the running index; gap-split fragments may share keys.
inline SequenceDatabase make_database(const std::vector<LabeledSequence>& seqs) {
  SequenceDatabase db;
  for (std::size_t i = 0; i < seqs.size(); ++i) db.add(std::to_string(i), seqs[i].labels);
  return db;
}

struct MiningParams {
  double minsup = 0.04;
  Bound maxgap = 1;
  std::size_t minlen = 2;
  Bound maxlen = kUnbounded;
  unsigned threads = 1;  // execution only; never changes the result

  void validate() const {
    if (!(minsup > 0.0 && minsup <= 1.0)) throw ConfigError("minsup must be in (0, 1]");
    if (maxgap && *maxgap < 1) throw ConfigError("maxgap must be >= 1");
    if (minlen < 1) throw ConfigError("minlen must be >= 1");
    if (maxlen && *maxlen < minlen) throw ConfigError("maxlen must be >= minlen");
  }
};

/// Absolute support threshold ceil(minsup * n). The epsilon absorbs products
/// such as 0.07 * 100 landing just above an integer.
inline std::size_t min_support_count(double minsup, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(minsup * static_cast<double>(n) - 1e-9));
}

template <class Item>
struct BasicPattern {
  std::vector<Item> items;
  std::size_t count = 0;  // supporting sequences
  double support = 0.0;   // count / |db|

  friend bool operator==(const BasicPattern&, const BasicPattern&) = default;
};

using Pattern = BasicPattern<Label>;

/// Descending support, then ascending items.
template <class Item>
void sort_patterns(std::vector<BasicPattern<Item>>& ps) {
  std::sort(ps.begin(), ps.end(), [](const auto& a, const auto& b) {
    if (a.count != b.count) return a.count > b.count;
    return std::lexicographical_compare(a.items.begin(), a.items.end(), b.items.begin(),
                                        b.items.end());
  });
}

/// Word layout shared by all bitmaps of one database.
class BitmapLayout {
public:
  explicit BitmapLayout(std::vector<std::size_t> lengths) : lengths_(std::move(lengths)) {
    offsets_.reserve(lengths_.size() + 1);
    offsets_.push_back(0);
    for (auto len : lengths_) offsets_.push_back(offsets_.back() + (len + 63) / 64);
  }

  std::size_t sequences() const { return lengths_.size(); }
  std::size_t length(std::size_t s) const { return lengths_[s]; }
  std::size_t offset(std::size_t s) const { return offsets_[s]; }
  std::size_t words(std::size_t s) const { return offsets_[s + 1] - offsets_[s]; }
  std::size_t total_words() const { return offsets_.back(); }

private:
  std::vector<std::size_t> lengths_;
  std::vector<std::size_t> offsets_;
};

class VerticalBitmap {
public:
  explicit VerticalBitmap(std::shared_ptr<const BitmapLayout> layout)
      : layout_(std::move(layout)), words_(layout_->total_words(), 0) {}

  const BitmapLayout& layout() const { return *layout_; }
  const std::shared_ptr<const BitmapLayout>& layout_ptr() const { return layout_; }

  /// Position is 1-based within sequence `s`.
  void set(std::size_t s, std::size_t pos) {
    const auto b = pos - 1;
    words_[layout_->offset(s) + b / 64] |= std::uint64_t{1} << (b % 64);
  }
  bool test(std::size_t s, std::size_t pos) const {
    const auto b = pos - 1;
    return (words_[layout_->offset(s) + b / 64] >> (b % 64)) & 1U;
  }

  bool any(std::size_t s) const {
    const auto* w = run(s);
    for (std::size_t i = 0; i < layout_->words(s); ++i)
      if (w[i]) return true;
    return false;
  }

  /// Number of sequences with at least one set bit.
  std::size_t support() const {
    std::size_t n = 0;
    for (std::size_t s = 0; s < layout_->sequences(); ++s) n += any(s) ? 1 : 0;
    return n;
  }

  std::size_t popcount(std::size_t s) const {
    std::size_t n = 0;
    const auto* w = run(s);
    for (std::size_t i = 0; i < layout_->words(s); ++i) n += std::popcount(w[i]);
    return n;
  }

  /// Bits of sequence `s` as '0'/'1', position 1 first.
  std::string bits(std::size_t s) const {
    std::string out;
    for (std::size_t p = 1; p <= layout_->length(s); ++p) out.push_back(test(s, p) ? '1' : '0');
    return out;
  }

  VerticalBitmap& operator&=(const VerticalBitmap& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
    return *this;
  }
  friend VerticalBitmap operator&(VerticalBitmap a, const VerticalBitmap& b) { return a &= b; }

  friend bool operator==(const VerticalBitmap& a, const VerticalBitmap& b) {
    return a.words_ == b.words_;
  }

  std::uint64_t* run(std::size_t s) { return words_.data() + layout_->offset(s); }
  const std::uint64_t* run(std::size_t s) const { return words_.data() + layout_->offset(s); }

private:
  std::shared_ptr<const BitmapLayout> layout_;
  std::vector<std::uint64_t> words_;
};

template <class Item>
std::map<Item, VerticalBitmap> build_vertical_bitmaps(const BasicSequenceDatabase<Item>& db) {
  std::vector<std::size_t> lengths;
  for (const auto& s : db.sequences()) lengths.push_back(s.items.size());
  auto layout = std::make_shared<const BitmapLayout>(std::move(lengths));
  std::map<Item, VerticalBitmap> out;
  for (std::size_t s = 0; s < db.size(); ++s) {
    const auto& items = db.sequences()[s].items;
    for (std::size_t j = 0; j < items.size(); ++j)
      out.try_emplace(items[j], layout).first->second.set(s, j + 1);
  }
  return out;
}

namespace detail {

// dst = src << shift over an n-word little-endian run (bit 0 of word 0 first).
inline void shift_left(const std::uint64_t* src, std::uint64_t* dst, std::size_t n,
                       std::size_t shift) {
  const std::size_t ws = shift / 64, bs = shift % 64;
  for (std::size_t i = n; i-- > 0;) {
    std::uint64_t v = 0;
    if (i >= ws) {
      v = src[i - ws] << bs;
      if (bs && i >= ws + 1) v |= src[i - ws - 1] >> (64 - bs);
    }
    dst[i] = v;
  }
}

inline void clear_beyond(std::uint64_t* run, std::size_t words, std::size_t length) {
  if (words == 0) return;
  const std::size_t used = length % 64;
  if (used) run[words - 1] &= (std::uint64_t{1} << used) - 1;
}

}  // namespace detail

/// Marks, for every set bit at position j, positions j+1 .. j+maxgap of the
/// same sequence (clamped to its length); the original bits are dropped.
/// Unbounded gap marks every position after the first set bit.
inline VerticalBitmap s_step(const VerticalBitmap& prefix, Bound maxgap) {
  const auto& layout = prefix.layout();
  VerticalBitmap out(prefix.layout_ptr());
  std::vector<std::uint64_t> tmp;
  for (std::size_t s = 0; s < layout.sequences(); ++s) {
    const std::size_t n = layout.words(s), len = layout.length(s);
    const std::uint64_t* src = prefix.run(s);
    std::uint64_t* dst = out.run(s);
    if (!maxgap || *maxgap >= len) {
      std::size_t w = 0;
      while (w < n && src[w] == 0) ++w;
      if (w == n) continue;
      const auto first = static_cast<std::size_t>(std::countr_zero(src[w]));
      // bits strictly above `first` in word w, then everything after
      dst[w] = first == 63 ? 0 : ~std::uint64_t{0} << (first + 1);
      for (std::size_t i = w + 1; i < n; ++i) dst[i] = ~std::uint64_t{0};
    } else {
      // Window {1..g} of shifts by doubling: covered shifts {1..c} grow to
      // {1..c+step} with each OR of a shifted copy.
      detail::shift_left(src, dst, n, 1);
      tmp.resize(n);
      for (std::size_t covered = 1; covered < *maxgap;) {
        const std::size_t step = std::min(covered, *maxgap - covered);
        detail::shift_left(dst, tmp.data(), n, step);
        for (std::size_t i = 0; i < n; ++i) dst[i] |= tmp[i];
        covered += step;
      }
    }
    detail::clear_beyond(dst, n, len);
  }
  return out;
}

namespace detail {

template <class Item>
class SpamSearch {
public:
  SpamSearch(const BasicSequenceDatabase<Item>& db, const MiningParams& params)
      : params_(params), threshold_(std::max<std::size_t>(1, min_support_count(params.minsup, db.size()))),
        n_(db.size()) {
    for (auto& [item, bm] : build_vertical_bitmaps(db)) {
      const auto count = bm.support();
      if (count >= threshold_) {
        items_.push_back(item);
        bitmaps_.push_back(std::move(bm));
        counts_.push_back(count);
      }
    }
  }

  std::vector<BasicPattern<Item>> run() {
    const std::size_t roots = items_.size();
    std::vector<std::vector<BasicPattern<Item>>> shards(roots);
    all_.resize(roots);
    std::iota(all_.begin(), all_.end(), std::size_t{0});

    auto work = [&](std::size_t r) {
      std::vector<std::size_t> prefix{r};
      if (params_.minlen <= 1) emit(prefix, counts_[r], shards[r]);
      extend(prefix, bitmaps_[r], all_, shards[r]);
    };

    const unsigned threads = std::max(1u, std::min<unsigned>(params_.threads, roots));
    if (threads <= 1) {
      for (std::size_t r = 0; r < roots; ++r) work(r);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
          for (std::size_t r; (r = next.fetch_add(1)) < roots;) work(r);
        });
      for (auto& th : pool) th.join();
    }

    std::vector<BasicPattern<Item>> out;
    for (auto& sh : shards) std::move(sh.begin(), sh.end(), std::back_inserter(out));
    sort_patterns(out);
    return out;
  }

private:
  void emit(const std::vector<std::size_t>& prefix, std::size_t count,
            std::vector<BasicPattern<Item>>& sink) const {
    BasicPattern<Item> p;
    for (auto i : prefix) p.items.push_back(items_[i]);
    p.count = count;
    p.support = static_cast<double>(count) / static_cast<double>(n_);
    sink.push_back(std::move(p));
  }

  void extend(std::vector<std::size_t>& prefix, const VerticalBitmap& bitmap,
              const std::vector<std::size_t>& candidates,
              std::vector<BasicPattern<Item>>& sink) const {
    if (params_.maxlen && prefix.size() >= *params_.maxlen) return;
    const VerticalBitmap reach = s_step(bitmap, params_.maxgap);

    struct Child {
      std::size_t item;
      VerticalBitmap bitmap;
      std::size_t count;
    };
    std::vector<Child> children;
    for (auto c : candidates) {
      VerticalBitmap b = reach & bitmaps_[c];
      const auto count = b.support();
      if (count >= threshold_) children.push_back({c, std::move(b), count});
    }

    // Sibling pruning is only sound without a gap bound: an occurrence of
    // prefix+y+x then implies one of prefix+x.
    std::vector<std::size_t> next;
    if (!params_.maxgap)
      for (const auto& ch : children) next.push_back(ch.item);
    const auto& next_candidates = params_.maxgap ? all_ : next;

    for (const auto& ch : children) {
      prefix.push_back(ch.item);
      if (prefix.size() >= params_.minlen) emit(prefix, ch.count, sink);
      extend(prefix, ch.bitmap, next_candidates, sink);
      prefix.pop_back();
    }
  }

  MiningParams params_;
  std::size_t threshold_;
  std::size_t n_;
  std::vector<Item> items_;
  std::vector<VerticalBitmap> bitmaps_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> all_;
};

}  // namespace detail

/// All patterns with length in [minlen, maxlen] and support >= minsup,
/// depth-first over sequence extensions. A prefix under the threshold is
/// never extended. Sorted by descending support, then items.
template <class Item>
std::vector<BasicPattern<Item>> mine(const BasicSequenceDatabase<Item>& db,
                                     const MiningParams& params) {
  params.validate();
  if (db.empty()) return {};
  return detail::SpamSearch<Item>(db, params).run();
}

inline const csv::Row& patterns_header() {
  static const csv::Row h{"pattern", "support"};
  return h;
}

inline void write_patterns(std::ostream& out, const std::vector<Pattern>& ps) {
  csv::write_row(out, patterns_header());
  for (const auto& p : ps) csv::write_row(out, {render(p.items), fixed(p.support, 6)});
}

/// Reads the patterns CSV back. `count` is not stored there and is left 0.
inline std::vector<Pattern> read_patterns(std::istream& in) {
  std::size_t line = 0;
  csv::expect_header(in, patterns_header(), line);
  std::vector<Pattern> out;
  csv::Row row;
  while (true) {
    const auto row_line = line + 1;
    if (!csv::read_row(in, row, line)) break;
    if (csv::is_blank(row)) continue;
    if (row.size() != 2)
      throw ParseError(row_line, "expected 2 fields, got " + std::to_string(row.size()));
    Pattern p;
    try {
      p.items = parse_labels(row[0]);
      p.support = std::stod(row[1]);
    } catch (const std::exception& e) {
      throw ParseError(row_line, e.what());
    }
    if (p.items.empty()) throw ParseError(row_line, "empty pattern");
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace learnseq
