#pragma once

// Agglomerative Ward clustering of user profiles, tree cutting, per-cluster
// mean profiles, and Newick / DOT dendrogram export.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "common.hpp"
#include "profiles.hpp"

namespace learnseq {

/// Node ids follow the usual linkage convention: leaves are 0..n-1, the
/// node created by merge i is n+i.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::vector<std::string> leaves;  // sorted user ids
  std::vector<Merge> merges;        // n-1 entries, non-decreasing height

  std::size_t node_count() const { return leaves.size() + merges.size(); }
  bool is_leaf(std::size_t node) const { return node < leaves.size(); }
  double height(std::size_t node) const {
    return is_leaf(node) ? 0.0 : merges[node - leaves.size()].height;
  }

  /// Leaf indices under `node`, ascending.
  std::vector<std::size_t> members(std::size_t node) const {
    std::vector<std::size_t> out, stack{node};
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      if (is_leaf(v)) {
        out.push_back(v);
      } else {
        stack.push_back(merges[v - leaves.size()].left);
        stack.push_back(merges[v - leaves.size()].right);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }
};

inline double squared_euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

/// Ward linkage via the Lance-Williams update on squared Euclidean
/// distances; merge heights are the unsquared Ward distances. Profiles are
/// ordered by user id first, and ties between equal distances go to the
/// pair whose (smaller, larger) minimum member ids compare lowest, so the
/// result does not depend on input order.
inline Dendrogram ward_cluster(std::vector<PatternProfile> profiles) {
  const std::size_t n = profiles.size();
  if (n < 2) throw ValidationError("ward_cluster needs at least 2 profiles");
  std::sort(profiles.begin(), profiles.end(),
            [](const auto& a, const auto& b) { return a.user_id < b.user_id; });
  for (std::size_t i = 1; i < n; ++i) {
    if (profiles[i].user_id == profiles[i - 1].user_id)
      throw ValidationError("duplicate user id `" + profiles[i].user_id + "`");
    if (profiles[i].weights.size() != profiles[0].weights.size())
      throw ValidationError("profile length mismatch for `" + profiles[i].user_id + "`");
  }

  Dendrogram tree;
  for (const auto& p : profiles) tree.leaves.push_back(p.user_id);

  // Leaves are sorted, so a cluster's smallest leaf index is its tie-break key.
  std::vector<std::vector<double>> d2(n, std::vector<double>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      d2[i][j] = d2[j][i] = squared_euclidean(profiles[i].weights, profiles[j].weights);
  std::vector<std::size_t> size(n, 1), node(n), key(n);
  std::iota(node.begin(), node.end(), std::size_t{0});
  std::iota(key.begin(), key.end(), std::size_t{0});
  std::vector<bool> alive(n, true);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = 0, bj = 0;
    double best = std::numeric_limits<double>::infinity();
    auto pair_key = [&](std::size_t i, std::size_t j) {
      return std::pair{std::min(key[i], key[j]), std::max(key[i], key[j])};
    };
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!alive[j]) continue;
        if (d2[i][j] < best || (d2[i][j] == best && pair_key(i, j) < pair_key(bi, bj))) {
          best = d2[i][j];
          bi = i;
          bj = j;
        }
      }
    }
    const double ni = static_cast<double>(size[bi]), nj = static_cast<double>(size[bj]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!alive[k] || k == bi || k == bj) continue;
      const double nk = static_cast<double>(size[k]);
      const double v =
          ((ni + nk) * d2[bi][k] + (nj + nk) * d2[bj][k] - nk * d2[bi][bj]) / (ni + nj + nk);
      d2[bi][k] = d2[k][bi] = std::max(v, 0.0);
    }
    std::size_t l = node[bi], r = node[bj];
    if (key[bj] < key[bi]) std::swap(l, r);
    const double h = std::sqrt(best);
    if (!tree.merges.empty() && h < tree.merges.back().height * (1 - 1e-12) - 1e-15)
      throw std::logic_error("ward_cluster: non-monotone merge heights");
    tree.merges.push_back({l, r, h, size[bi] + size[bj]});
    size[bi] += size[bj];
    key[bi] = std::min(key[bi], key[bj]);
    node[bi] = n + step;
    alive[bj] = false;
  }
  return tree;
}

/// Cluster index in 1..k per user id. Cutting undoes the k-1 last (highest)
/// merges; clusters are numbered by descending size, then smallest member.
inline std::map<std::string, std::size_t> cut_tree(const Dendrogram& tree, std::size_t k) {
  const std::size_t n = tree.leaves.size();
  if (k < 1 || k > n)
    throw ValidationError("k must be in [1, " + std::to_string(n) + "], got " + std::to_string(k));
  std::vector<std::size_t> parent(tree.node_count());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n - k; ++i) {
    const auto& m = tree.merges[i];
    parent[find(m.left)] = n + i;
    parent[find(m.right)] = n + i;
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t leaf = 0; leaf < n; ++leaf) groups[find(leaf)].push_back(leaf);
  std::vector<std::vector<std::size_t>> ordered;
  for (auto& [_, g] : groups) ordered.push_back(std::move(g));
  // Members are ascending leaf indices, and leaves are sorted ids.
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a.front() < b.front();
  });
  std::map<std::string, std::size_t> out;
  for (std::size_t c = 0; c < ordered.size(); ++c)
    for (auto leaf : ordered[c]) out[tree.leaves[leaf]] = c + 1;
  return out;
}

struct ClusterSummary {
  std::size_t cluster = 0;
  std::vector<std::string> members;
  std::vector<double> mean_frequency;
};

inline std::vector<ClusterSummary> cluster_report(
    const std::map<std::string, std::size_t>& assignment,
    const std::vector<PatternProfile>& profiles) {
  std::map<std::size_t, ClusterSummary> acc;
  for (const auto& p : profiles) {
    auto it = assignment.find(p.user_id);
    if (it == assignment.end()) throw ValidationError("user `" + p.user_id + "` has no cluster");
    auto& s = acc[it->second];
    s.cluster = it->second;
    if (s.mean_frequency.empty()) s.mean_frequency.assign(p.weights.size(), 0.0);
    if (s.mean_frequency.size() != p.weights.size())
      throw ValidationError("profile length mismatch for `" + p.user_id + "`");
    for (std::size_t i = 0; i < p.weights.size(); ++i) s.mean_frequency[i] += p.weights[i];
    s.members.push_back(p.user_id);
  }
  std::vector<ClusterSummary> out;
  for (auto& [_, s] : acc) {
    for (auto& x : s.mean_frequency) x /= static_cast<double>(s.members.size());
    std::sort(s.members.begin(), s.members.end());
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_assignments(std::ostream& out,
                              const std::map<std::string, std::size_t>& assignment) {
  csv::write_row(out, {"user_id", "cluster"});
  for (const auto& [user, c] : assignment) csv::write_row(out, {user, std::to_string(c)});
}

inline void write_cluster_report(std::ostream& out, const std::vector<ClusterSummary>& report,
                                 const PatternVocabulary& vocab) {
  csv::write_row(out, {"cluster", "pattern", "mean_frequency"});
  for (const auto& s : report)
    for (std::size_t i = 0; i < vocab.size(); ++i)
      csv::write_row(out, {std::to_string(s.cluster), render(vocab[i]), fixed(s.mean_frequency[i], 10)});
}

namespace detail {

inline std::string newick_label(const std::string& s) {
  if (s.find_first_of(" \t()[]':;,") == std::string::npos) return s;
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  return out + "'";
}

}  // namespace detail

/// Branch lengths are parent height minus child height.
inline std::string to_newick(const Dendrogram& tree) {
  const std::size_t n = tree.leaves.size();
  if (n == 0) return ";";
  if (tree.merges.empty()) return detail::newick_label(tree.leaves[0]) + ";";
  auto rec = [&](auto&& self, std::size_t node) -> std::string {
    if (tree.is_leaf(node)) return detail::newick_label(tree.leaves[node]);
    const auto& m = tree.merges[node - n];
    return "(" + self(self, m.left) + ":" + fixed(m.height - tree.height(m.left), 10) + "," +
           self(self, m.right) + ":" + fixed(m.height - tree.height(m.right), 10) + ")";
  };
  return rec(rec, tree.node_count() - 1) + ";";
}

inline std::string to_dot(const Dendrogram& tree) {
  const std::size_t n = tree.leaves.size();
  std::string out = "digraph dendrogram {\n  node [shape=box];\n";
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') q.push_back('\\');
      q.push_back(c);
    }
    return q + "\"";
  };
  for (std::size_t i = 0; i < n; ++i)
    out += "  n" + std::to_string(i) + " [label=" + quote(tree.leaves[i]) + "];\n";
  for (std::size_t i = 0; i < tree.merges.size(); ++i) {
    const auto& m = tree.merges[i];
    const auto id = "n" + std::to_string(n + i);
    out += "  " + id + " [shape=point, label=\"\", xlabel=\"" + fixed(m.height, 6) + "\"];\n";
    out += "  " + id + " -> n" + std::to_string(m.left) + ";\n";
    out += "  " + id + " -> n" + std::to_string(m.right) + ";\n";
  }
  return out + "}\n";
}

}  // namespace learnseq
