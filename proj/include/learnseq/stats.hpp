#pragma once

// Distribution distances, the paired t-test, and the split-half
// identifiability experiment.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <nlohmann/json.hpp>

#include "common.hpp"
#include "profiles.hpp"
#include "sequencer.hpp"

namespace learnseq {

enum class LogBase { two, natural };

/// Shannon entropy; zero entries contribute nothing.
inline double shannon_entropy(const std::vector<double>& p, LogBase base = LogBase::two) {
  double h = 0;
  for (double x : p)
    if (x > 0) h -= x * std::log(x);
  return base == LogBase::two ? h / std::log(2.0) : h;
}

/// JSD(P,Q) = H((P+Q)/2) - (H(P)+H(Q))/2. Bounded by 1 in base 2.
inline double js_divergence(const std::vector<double>& p, const std::vector<double>& q,
                            LogBase base = LogBase::two) {
  if (p.size() != q.size())
    throw ValidationError("js_divergence: length mismatch (" + std::to_string(p.size()) + " vs " +
                          std::to_string(q.size()) + ")");
  if (p.empty()) throw ValidationError("js_divergence: empty distribution");
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = (p[i] + q[i]) / 2;
  const double d = shannon_entropy(m, base) - (shannon_entropy(p, base) + shannon_entropy(q, base)) / 2;
  const double hi = base == LogBase::two ? 1.0 : std::log(2.0);
  return std::clamp(d, 0.0, hi);
}

inline double cosine_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw ValidationError("cosine_distance: length mismatch");
  double dot = 0, np = 0, nq = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    dot += p[i] * q[i];
    np += p[i] * p[i];
    nq += q[i] * q[i];
  }
  if (np == 0 || nq == 0) throw ValidationError("cosine_distance: zero vector");
  const double d = 1.0 - dot / (std::sqrt(np) * std::sqrt(nq));
  return std::max(d, 0.0);
}

struct TTest {
  double t = 0;
  std::size_t df = 0;
  double p = 1;
};

/// Two-sided paired t-test on xs - ys. Negative t means xs is smaller.
inline TTest paired_t_test(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw ValidationError("paired_t_test: length mismatch");
  const std::size_t n = xs.size();
  if (n < 2) throw ValidationError("paired_t_test: need at least 2 pairs");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = xs[i] - ys[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TTest r;
  r.df = n - 1;
  if (sd == 0) {
    if (mean == 0) return r;
    r.t = mean > 0 ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
    r.p = 0;
    return r;
  }
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  // P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2)
  const double nu = static_cast<double>(r.df);
  r.p = std::clamp(boost::math::ibeta(nu / 2, 0.5, nu / (nu + r.t * r.t)), 0.0, 1.0);
  return r;
}

/// Seeded shuffle keyed by (seed, user); the first ceil(n/2) go to half A.
template <class T>
std::pair<std::vector<T>, std::vector<T>> split_halves(std::vector<T> items, std::uint64_t seed,
                                                       std::string_view user_id) {
  if (items.size() < 2) throw ValidationError("split_halves: need at least 2 sequences");
  auto rng = Rng::derive(seed, user_id);
  rng.shuffle(items);
  const std::size_t a = (items.size() + 1) / 2;
  std::vector<T> half_b(std::make_move_iterator(items.begin() + static_cast<std::ptrdiff_t>(a)),
                        std::make_move_iterator(items.end()));
  items.resize(a);
  return {std::move(items), std::move(half_b)};
}

enum class Measure { js_divergence, cosine_distance };

inline std::string to_string(Measure m) {
  return m == Measure::js_divergence ? "js_divergence" : "cosine_distance";
}

inline std::optional<Measure> parse_measure(std::string_view s) {
  const auto l = lower(s);
  if (l == "js_divergence" || l == "js") return Measure::js_divergence;
  if (l == "cosine_distance" || l == "cosine") return Measure::cosine_distance;
  return std::nullopt;
}

struct MeasureSummary {
  Measure measure;
  double self_distance = 0;      // mean over users
  double distance_to_other = 0;  // mean over users
  TTest test;
};

struct UserDistances {
  std::string user_id;
  std::vector<double> self_distance;      // one per measure, report order
  std::vector<double> distance_to_other;
};

struct StabilityReport {
  std::vector<Measure> measures;
  std::vector<MeasureSummary> summaries;
  std::vector<UserDistances> users;
  std::vector<std::string> excluded;  // fewer than 2 sequences
};

struct StabilityOptions {
  Bound maxgap = 1;
  double epsilon = kDefaultEpsilon;
  std::uint64_t seed = 0;
  std::vector<Measure> measures{Measure::js_divergence, Measure::cosine_distance};
  LogBase base = LogBase::two;
};

inline double distance(Measure m, const std::vector<double>& a, const std::vector<double>& b,
                       LogBase base) {
  return m == Measure::js_divergence ? js_divergence(a, b, base) : cosine_distance(a, b);
}

/// Splits each user's sequences in two, profiles both halves, and compares
/// d(A_i, B_i) against the mean of d(A_i, B_j) over j != i.
inline StabilityReport stability_experiment(
    const std::map<std::string, std::vector<LabeledSequence>>& per_user,
    const PatternVocabulary& vocab, const StabilityOptions& opt) {
  if (opt.measures.empty()) throw ConfigError("no distance measure selected");
  StabilityReport rep;
  rep.measures = opt.measures;

  std::vector<std::string> users;
  std::vector<std::vector<double>> half_a, half_b;
  for (const auto& [user, seqs] : per_user) {
    if (seqs.size() < 2) {
      rep.excluded.push_back(user);
      continue;
    }
    auto [a, b] = split_halves(seqs, opt.seed, user);
    auto profile = [&](const std::vector<LabeledSequence>& half) {
      return build_profile(count_occurrences(half, vocab, opt.maxgap).begin()->second, opt.epsilon);
    };
    users.push_back(user);
    half_a.push_back(profile(a));
    half_b.push_back(profile(b));
  }
  const std::size_t n = users.size();
  if (n < 2)
    throw ValidationError("stability experiment needs at least 2 users with >= 2 sequences, got " +
                          std::to_string(n));

  for (std::size_t i = 0; i < n; ++i) rep.users.push_back({users[i], {}, {}});
  for (auto m : opt.measures) {
    std::vector<double> self(n), other(n);
    for (std::size_t i = 0; i < n; ++i) {
      self[i] = distance(m, half_a[i], half_b[i], opt.base);
      double sum = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) sum += distance(m, half_a[i], half_b[j], opt.base);
      other[i] = sum / static_cast<double>(n - 1);
      rep.users[i].self_distance.push_back(self[i]);
      rep.users[i].distance_to_other.push_back(other[i]);
    }
    MeasureSummary s{m, 0, 0, {}};
    s.self_distance = std::accumulate(self.begin(), self.end(), 0.0) / static_cast<double>(n);
    s.distance_to_other = std::accumulate(other.begin(), other.end(), 0.0) / static_cast<double>(n);
    s.test = paired_t_test(self, other);
    rep.summaries.push_back(s);
  }
  return rep;
}

inline void write_stability_csv(std::ostream& out, const StabilityReport& rep) {
  csv::Row header{"user_id"};
  for (auto m : rep.measures) {
    header.push_back(to_string(m) + "_self");
    header.push_back(to_string(m) + "_other");
  }
  csv::write_row(out, header);
  for (const auto& u : rep.users) {
    csv::Row row{u.user_id};
    for (std::size_t k = 0; k < rep.measures.size(); ++k) {
      row.push_back(fixed(u.self_distance[k], 10));
      row.push_back(fixed(u.distance_to_other[k], 10));
    }
    csv::write_row(out, row);
  }
}

inline nlohmann::ordered_json stability_summary_json(const StabilityReport& rep) {
  nlohmann::ordered_json j;
  j["n_users"] = rep.users.size();
  j["excluded_users"] = rep.excluded;
  auto& rows = j["measures"] = nlohmann::ordered_json::array();
  for (const auto& s : rep.summaries) {
    nlohmann::ordered_json r;
    r["measure"] = to_string(s.measure);
    r["self_distance"] = s.self_distance;
    r["distance_to_other"] = s.distance_to_other;
    r["t"] = std::isfinite(s.test.t) ? nlohmann::ordered_json(s.test.t)
                                     : nlohmann::ordered_json(s.test.t > 0 ? "inf" : "-inf");
    r["df"] = s.test.df;
    r["p"] = s.test.p;
    rows.push_back(std::move(r));
  }
  return j;
}

}  // namespace learnseq
