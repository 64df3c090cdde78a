#pragma once

// Seeded synthetic cohorts. Each user walks a first-order Markov chain over
// activity kinds inside every (session, topic) episode; durations are
// log-normal and exercise outcomes Bernoulli.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "common.hpp"
#include "ingest.hpp"

namespace learnseq {

struct BehaviorProfile {
  std::array<double, 3> initial{1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::array<std::array<double, 3>, 3> transition{{{1.0 / 3, 1.0 / 3, 1.0 / 3},
                                                   {1.0 / 3, 1.0 / 3, 1.0 / 3},
                                                   {1.0 / 3, 1.0 / 3, 1.0 / 3}}};
  std::array<double, 3> median_duration{90, 60, 45};  // seconds, by kind
  std::array<double, 3> dispersion{0.6, 0.6, 0.6};    // log-scale sigma
  double pass_probability = 0.6;

  friend bool operator==(const BehaviorProfile&, const BehaviorProfile&) = default;

  void validate() const {
    auto stochastic = [](const std::array<double, 3>& row, const char* what) {
      double s = 0;
      for (double x : row) {
        if (!(x >= 0)) throw ConfigError(std::string(what) + ": negative probability");
        s += x;
      }
      if (std::abs(s - 1.0) > 1e-9) throw ConfigError(std::string(what) + ": row does not sum to 1");
    };
    stochastic(initial, "initial");
    for (const auto& row : transition) stochastic(row, "transition");
    for (double m : median_duration)
      if (!(m > 0)) throw ConfigError("median_duration must be > 0");
    for (double d : dispersion)
      if (!(d > 0)) throw ConfigError("dispersion must be > 0");
    if (!(pass_probability >= 0 && pass_probability <= 1))
      throw ConfigError("pass_probability must be in [0, 1]");
  }
};

struct Range {
  std::int64_t lo = 1;
  std::int64_t hi = 1;
};

struct CohortSpec {
  std::size_t n_users = 44;
  Range sessions{4, 10};
  Range topics_per_session{1, 3};
  Range activities{3, 9};
  std::size_t n_topics = 21;  // topic pool
  Range idle_gap{5, 120};     // seconds between activities
  BehaviorProfile base;
  double distinctness = 0.0;  // 0 = everyone shares `base`

  void validate() const {
    if (n_users < 1) throw ConfigError("n_users must be >= 1");
    auto range = [](const Range& r, std::int64_t min, const char* name) {
      if (r.lo < min || r.hi < r.lo)
        throw ConfigError(std::string(name) + ": need " + std::to_string(min) + " <= lo <= hi");
    };
    range(sessions, 1, "sessions");
    range(topics_per_session, 1, "topics_per_session");
    range(activities, 1, "activities");
    range(idle_gap, 1, "idle_gap");
    if (n_topics < 1) throw ConfigError("n_topics must be >= 1");
    if (topics_per_session.hi > static_cast<std::int64_t>(n_topics))
      throw ConfigError("topics_per_session: hi exceeds n_topics");
    if (!(distinctness >= 0 && distinctness <= 1))
      throw ConfigError("distinctness must be in [0, 1]");
    base.validate();
  }
};

namespace detail {

inline std::array<double, 3> random_simplex(Rng& rng) {
  // Dirichlet(1,1,1) via normalized exponentials
  std::array<double, 3> v;
  double s = 0;
  for (auto& x : v) {
    double u;
    do u = rng.uniform();
    while (u <= 0.0);
    x = -std::log(u);
    s += x;
  }
  for (auto& x : v) x /= s;
  return v;
}

inline std::array<double, 3> mix(const std::array<double, 3>& a, const std::array<double, 3>& b,
                                 double t) {
  std::array<double, 3> out;
  for (std::size_t i = 0; i < 3; ++i) out[i] = (1 - t) * a[i] + t * b[i];
  return out;
}

}  // namespace detail

/// The behavior of user `index`: `base` moved toward an independently drawn
/// profile by `distinctness` (linear for probabilities, geometric for medians).
inline BehaviorProfile user_profile(const CohortSpec& spec, std::uint64_t seed, std::size_t index) {
  if (spec.distinctness == 0.0) return spec.base;
  auto rng = Rng::derive(seed, "profile/" + std::to_string(index));
  BehaviorProfile own;
  own.initial = detail::random_simplex(rng);
  for (auto& row : own.transition) row = detail::random_simplex(rng);
  for (std::size_t k = 0; k < 3; ++k) own.median_duration[k] = 15.0 * std::exp(rng.uniform() * std::log(16.0));
  own.dispersion = spec.base.dispersion;
  own.pass_probability = 0.1 + 0.8 * rng.uniform();

  const double t = spec.distinctness;
  BehaviorProfile p = spec.base;
  p.initial = detail::mix(spec.base.initial, own.initial, t);
  for (std::size_t r = 0; r < 3; ++r) p.transition[r] = detail::mix(spec.base.transition[r], own.transition[r], t);
  for (std::size_t k = 0; k < 3; ++k)
    p.median_duration[k] = std::exp((1 - t) * std::log(spec.base.median_duration[k]) +
                                    t * std::log(own.median_duration[k]));
  p.pass_probability = (1 - t) * spec.base.pass_probability + t * own.pass_probability;
  return p;
}

inline std::string user_name(std::size_t index, std::size_t n_users) {
  const auto width = std::to_string(n_users).size();
  auto s = std::to_string(index + 1);
  return "u" + std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

/// Records grouped by user, sessions in time order, episodes back to back.
inline std::vector<EventRecord> generate_cohort(const CohortSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<EventRecord> out;
  constexpr std::int64_t kEpoch = 1'500'000'000;  // fixed origin, no clock reads
  constexpr std::int64_t kDay = 86'400;
  for (std::size_t u = 0; u < spec.n_users; ++u) {
    const auto behavior = user_profile(spec, seed, u);
    const auto user = user_name(u, spec.n_users);
    auto rng = Rng::derive(seed, "events/" + std::to_string(u));
    const auto n_sessions = rng.between(spec.sessions.lo, spec.sessions.hi);
    for (std::int64_t s = 0; s < n_sessions; ++s) {
      std::int64_t clock = kEpoch + s * kDay + rng.between(0, 3600);
      const auto session = "s" + std::to_string(s + 1);
      std::vector<std::size_t> pool(spec.n_topics);
      for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
      rng.shuffle(pool);
      const auto n_topics = rng.between(spec.topics_per_session.lo, spec.topics_per_session.hi);
      for (std::int64_t t = 0; t < n_topics; ++t) {
        const auto topic = "t" + std::to_string(pool[static_cast<std::size_t>(t)] + 1);
        const auto n_acts = rng.between(spec.activities.lo, spec.activities.hi);
        std::size_t kind = rng.categorical(behavior.initial.data(), 3);
        for (std::int64_t a = 0; a < n_acts; ++a) {
          if (a > 0) kind = rng.categorical(behavior.transition[kind].data(), 3);
          EventRecord r;
          r.user_id = user;
          r.session_id = session;
          r.topic_id = topic;
          r.kind = static_cast<ActivityKind>(kind);
          const double secs = behavior.median_duration[kind] *
                              std::exp(behavior.dispersion[kind] * rng.normal());
          r.duration = std::max<std::int64_t>(1, std::llround(secs));
          if (r.kind == ActivityKind::parameterized_exercise)
            r.outcome = rng.uniform() < behavior.pass_probability ? Outcome::pass : Outcome::fail;
          r.start = clock;
          clock += r.duration + rng.between(spec.idle_gap.lo, spec.idle_gap.hi);
          out.push_back(std::move(r));
        }
      }
    }
  }
  return out;
}

namespace detail {

inline std::map<std::string, std::string> read_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto t = csv::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(n, "expected key = value");
    kv[csv::trim(std::string_view(t).substr(0, eq))] = csv::trim(std::string_view(t).substr(eq + 1));
  }
  return kv;
}

inline std::vector<double> parse_numbers(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::string s = v;
  for (auto& c : s)
    if (c == ',') c = ' ';
  for (const auto& tok : split_ws(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError(key + ": bad number `" + tok + "`");
    }
  }
  return out;
}

}  // namespace detail

/// Reads a cohort spec from `key = value` lines (`#` starts a comment).
/// Ranges are written `lo hi` (or `lo,hi`); unknown keys are rejected.
///
///   n_users, n_topics, distinctness
///   sessions, topics_per_session, activities, idle_gap       (ranges)
///   initial                                                  (3 numbers)
///   transition_animated, transition_basic, transition_exercise  (3 numbers)
///   median_duration, dispersion                              (3 numbers, by kind)
///   pass_probability
inline CohortSpec read_cohort_spec(std::istream& in) {
  CohortSpec spec;
  for (const auto& [key, value] : detail::read_key_values(in)) {
    const auto nums = detail::parse_numbers(key, value);
    auto want = [&](std::size_t n) {
      if (nums.size() != n)
        throw ConfigError(key + ": expected " + std::to_string(n) + " value(s)");
    };
    auto count = [&] {
      want(1);
      if (nums[0] < 0 || nums[0] != std::floor(nums[0]))
        throw ConfigError(key + ": expected a non-negative integer");
      return static_cast<std::size_t>(nums[0]);
    };
    auto range = [&] {
      want(2);
      return Range{std::llround(nums[0]), std::llround(nums[1])};
    };
    auto triple = [&] {
      want(3);
      return std::array<double, 3>{nums[0], nums[1], nums[2]};
    };
    if (key == "n_users") spec.n_users = count();
    else if (key == "n_topics") spec.n_topics = count();
    else if (key == "distinctness") { want(1); spec.distinctness = nums[0]; }
    else if (key == "sessions") spec.sessions = range();
    else if (key == "topics_per_session") spec.topics_per_session = range();
    else if (key == "activities") spec.activities = range();
    else if (key == "idle_gap") spec.idle_gap = range();
    else if (key == "initial") spec.base.initial = triple();
    else if (key == "transition_animated") spec.base.transition[0] = triple();
    else if (key == "transition_basic") spec.base.transition[1] = triple();
    else if (key == "transition_exercise") spec.base.transition[2] = triple();
    else if (key == "median_duration") spec.base.median_duration = triple();
    else if (key == "dispersion") spec.base.dispersion = triple();
    else if (key == "pass_probability") { want(1); spec.base.pass_probability = nums[0]; }
    else throw ConfigError("unknown cohort key `" + key + "`");
  }
  spec.validate();
  return spec;
}

}  // namespace learnseq
