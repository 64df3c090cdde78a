// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "learnseq/learnseq.hpp"
#include "learnseq/spam_oracle.hpp"
#include "ward_oracle.hpp"

using namespace learnseq;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Collects failure notes for one criterion.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
    if (!ok) ++failed;
  }
  std::size_t failed = 0;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("learnseq_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_cohort(const fs::path& file, const CohortSpec& spec, std::uint64_t seed) {
  std::ofstream out(file, std::ios::binary);
  write_event_log(out, generate_cohort(spec, seed));
}

// The cohort shape used throughout: 44 users, up to 42 sessions, 21 topics.
CohortSpec study_cohort(double distinctness) {
  CohortSpec spec;
  spec.n_users = 44;
  spec.n_topics = 21;
  spec.sessions = {10, 42};
  spec.distinctness = distinctness;
  return spec;
}

// 1 -------------------------------------------------------------------------

Check miner_matches_oracle() {
  Check c;
  const auto t0 = Clock::now();
  Rng rng(20240601);
  for (int trial = 0; trial < 200; ++trial) {
    SequenceDatabase db;
    const auto n = rng.between(1, 20);
    for (std::int64_t i = 0; i < n; ++i) {
      std::vector<Label> s(static_cast<std::size_t>(rng.between(1, 12)));
      for (auto& l : s) l = kAllLabels[rng.below(8)];
      db.add("s" + std::to_string(i), s);
    }
    for (double minsup : {0.1, 0.25, 0.5, 0.9})
      for (Bound gap : {Bound{1}, Bound{2}, kUnbounded})
        for (std::size_t minlen : {1u, 2u}) {
          MiningParams p;
          p.minsup = minsup;
          p.maxgap = gap;
          p.minlen = minlen;
          c.expect(mine(db, p) == brute_force_mine(db, p),
                   "db " + std::to_string(trial) + " minsup " + num(minsup) + " maxgap " +
                       (gap ? std::to_string(*gap) : "unbounded") + " minlen " + std::to_string(minlen));
        }
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 60, "runtime " + num(secs) + " s");
  return c;
}

// 2 -------------------------------------------------------------------------

Check default_configuration_runs() {
  Check c;
  const auto dir = scratch("defaults");
  write_cohort(dir / "events.csv", study_cohort(0.5), 1);
  RunConfig cfg;  // minsup 0.04, maxgap 1, minlen 2
  cfg.input = (dir / "events.csv").string();
  cfg.output = (dir / "out").string();
  try {
    const auto sum = run_pipeline(cfg);
    c.expect(sum.stats.n_students == 44, "students " + std::to_string(sum.stats.n_students));
    c.expect(sum.stats.n_topics <= 21, "topics " + std::to_string(sum.stats.n_topics));
    c.expect(sum.stats.max_sessions_per_student <= 42, "sessions per student");
    c.expect(sum.n_patterns > 0, "no patterns mined");
    for (const auto& f : pipeline_outputs())
      c.expect(fs::exists(fs::path(cfg.output) / f), "missing " + f);
  } catch (const std::exception& e) {
    c.expect(false, e.what());
  }
  fs::remove_all(dir);
  return c;
}

// 3 -------------------------------------------------------------------------

Check identifiability() {
  Check c;
  const auto t0 = Clock::now();
  const auto dir = scratch("identifiability");
  int distinct_ok = 0, null_ok = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    for (double distinctness : {1.0, 0.0}) {
      write_cohort(dir / "events.csv", study_cohort(distinctness), seed);
      RunConfig cfg;
      cfg.input = (dir / "events.csv").string();
      cfg.output = (dir / "out").string();
      cfg.seed = seed;
      const auto rep = run_pipeline(cfg).stability;
      bool separated = rep.summaries.size() == 2, unremarkable = rep.summaries.size() == 2;
      std::string line = "seed " + std::to_string(seed) + " distinctness " + num(distinctness) + ":";
      for (const auto& s : rep.summaries) {
        separated = separated && s.self_distance < s.distance_to_other && s.test.t < 0 && s.test.p < 0.001;
        unremarkable = unremarkable && s.test.p > 0.05;
        line += " " + to_string(s.measure) + " self " + num(s.self_distance) + " other " +
                num(s.distance_to_other) + " t " + num(s.test.t) + " p " + num(s.test.p);
      }
      std::printf("  %s\n", line.c_str());
      if (distinctness > 0) distinct_ok += separated;
      else null_ok += unremarkable;
    }
  }
  fs::remove_all(dir);
  c.expect(distinct_ok >= 9, "distinct cohort separated in " + std::to_string(distinct_ok) + "/10 seeds");
  c.expect(null_ok >= 8, "null cohort p > 0.05 in " + std::to_string(null_ok) + "/10 seeds");
  const double secs = seconds_since(t0);
  c.expect(secs < 120, "runtime " + num(secs) + " s");
  return c;
}

// 4 -------------------------------------------------------------------------

Check statistical_kernels() {
  Check c;
  const double jsd = js_divergence({1, 0}, {0.5, 0.5});
  c.expect(std::abs(jsd - 0.311278) <= 1e-4, "JSD hand value " + num(jsd));

  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const auto n = static_cast<std::size_t>(rng.between(1, 25));
    std::vector<double> p(n), q(n);
    double sp = 0, sq = 0;
    for (std::size_t k = 0; k < n; ++k) {
      // Some exact zeros to exercise the 0 log 0 convention.
      p[k] = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
      q[k] = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
      sp += p[k];
      sq += q[k];
    }
    if (sp == 0) p[0] = sp = 1;
    if (sq == 0) q[0] = sq = 1;
    for (auto& x : p) x /= sp;
    for (auto& x : q) x /= sq;
    const double pq = js_divergence(p, q), qp = js_divergence(q, p);
    c.expect(std::abs(pq - qp) <= 1e-12, "JSD asymmetry " + num(std::abs(pq - qp)));
    c.expect(pq >= 0 && pq <= 1, "JSD out of range " + num(pq));
  }

  const double cd = cosine_distance({1, 1}, {1, 0});
  c.expect(std::abs(cd - 0.292893) <= 1e-6, "cosine hand value " + num(cd));

  const auto t = paired_t_test({2, 4, 6}, {1, 2, 3});  // d = [1, 2, 3]
  c.expect(std::abs(t.t - 3.4641) <= 1e-3, "t " + num(t.t));
  c.expect(std::abs(t.p - 0.0742) <= 1e-3, "p " + num(t.p));

  const auto same = paired_t_test({0.3, 0.1, 0.9, 0.4}, {0.3, 0.1, 0.9, 0.4});
  c.expect(same.t == 0.0 && same.p == 1.0, "xs == ys gives t " + num(same.t) + " p " + num(same.p));
  return c;
}

// 5 -------------------------------------------------------------------------

std::vector<PatternProfile> random_profiles(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<PatternProfile> out;
  for (std::size_t i = 0; i < n; ++i) {
    PatternProfile p{"u" + std::to_string(rng.below(1000000)) + "_" + std::to_string(i), {}};
    for (std::size_t d = 0; d < dim; ++d) p.weights.push_back(rng.uniform());
    out.push_back(std::move(p));
  }
  return out;
}

Check clustering() {
  Check c;
  const auto small = ward_cluster({{"a", {0}}, {"b", {1}}, {"c", {10}}});
  c.expect(small.merges.size() == 2 && std::abs(small.merges[1].height - std::sqrt(361.0 / 3.0)) <= 1e-9,
           "second merge height " + (small.merges.size() == 2 ? num(small.merges[1].height) : "missing"));

  Rng rng(55);
  for (int i = 0; i < 100; ++i) {
    const auto n = static_cast<std::size_t>(rng.between(2, 30));
    const auto tree = ward_cluster(random_profiles(rng, n, static_cast<std::size_t>(rng.between(1, 6))));
    for (std::size_t m = 1; m < tree.merges.size(); ++m)
      c.expect(tree.merges[m].height >= tree.merges[m - 1].height, "non-monotone heights, instance " + std::to_string(i));
  }

  for (int i = 0; i < 300; ++i) {
    const auto n = static_cast<std::size_t>(rng.between(2, 8));
    const auto ps = random_profiles(rng, n, static_cast<std::size_t>(rng.between(1, 5)));
    std::string why;
    c.expect(oracle::same_merges(ward_cluster(ps), oracle::ward_by_centroids(ps), 1e-9, &why),
             "oracle disagreement, instance " + std::to_string(i) + ": " + why);
  }

  for (int i = 0; i < 50; ++i) {
    const auto na = static_cast<std::size_t>(rng.between(2, 15)), nb = static_cast<std::size_t>(rng.between(2, 15));
    const std::size_t dim = 4;
    std::vector<PatternProfile> ps;
    std::set<std::string> group_a;
    for (std::size_t k = 0; k < na + nb; ++k) {
      const bool in_a = k < na;
      PatternProfile p{"g" + std::to_string(rng.below(1000)) + "_" + std::to_string(k), {}};
      for (std::size_t d = 0; d < dim; ++d) p.weights.push_back((in_a ? 0.0 : 10.0) + rng.uniform());
      if (in_a) group_a.insert(p.user_id);
      ps.push_back(std::move(p));
    }
    const auto assignment = cut_tree(ward_cluster(ps), 2);
    std::set<std::size_t> labels_a, labels_b;
    for (const auto& [user, label] : assignment) (group_a.count(user) ? labels_a : labels_b).insert(label);
    c.expect(labels_a.size() == 1 && labels_b.size() == 1 && labels_a != labels_b,
             "planted groups not separated, instance " + std::to_string(i));
  }
  return c;
}

// 6 -------------------------------------------------------------------------

Check labeling() {
  Check c;
  MedianTable medians;
  for (auto k : kAllKinds) medians.set(k, 60);
  struct Case {
    ActivityKind kind;
    Outcome outcome;
    Label longer, not_longer;
  };
  const Case cases[] = {
      {ActivityKind::animated_example, Outcome::none, Label::AnEx, Label::anex},
      {ActivityKind::basic_example, Outcome::none, Label::ex, Label::Ex},
      {ActivityKind::parameterized_exercise, Outcome::pass, Label::P, Label::p},
      {ActivityKind::parameterized_exercise, Outcome::fail, Label::F, Label::f},
  };
  std::set<Label> seen;
  for (const auto& k : cases) {
    for (std::int64_t duration : {61, 60, 59, 1, 10000}) {
      EventRecord r;
      r.user_id = "u";
      r.session_id = "s";
      r.topic_id = "t";
      r.kind = k.kind;
      r.outcome = k.outcome;
      r.duration = duration;
      const auto want = duration > 60 ? k.longer : k.not_longer;
      const auto got = label_activity(r, medians);
      seen.insert(got);
      c.expect(got == want, to_string(k.kind) + " duration " + std::to_string(duration) + " -> " +
                                to_string(got) + ", expected " + to_string(want));
    }
  }
  c.expect(seen.size() == 8, "only " + std::to_string(seen.size()) + " distinct labels produced");
  return c;
}

// 7 -------------------------------------------------------------------------

Check determinism() {
  Check c;
  const auto dir = scratch("determinism");
  write_cohort(dir / "events.csv", study_cohort(0.7), 3);
  RunConfig cfg;
  cfg.input = (dir / "events.csv").string();
  cfg.seed = 19;

  auto snapshot = [&](unsigned threads, const std::string& out) {
    auto run = cfg;
    run.threads = threads;
    run.output = (dir / out).string();
    run_pipeline(run);
    std::map<std::string, std::string> files;
    for (const auto& f : pipeline_outputs()) files[f] = slurp(fs::path(run.output) / f);
    return files;
  };
  const auto first = snapshot(1, "out");
  const auto again = snapshot(1, "out");
  const auto parallel = snapshot(4, "out");
  const auto elsewhere = snapshot(3, "other");
  for (const auto& f : pipeline_outputs()) {
    c.expect(!first.at(f).empty(), f + " is empty");
    c.expect(first.at(f) == again.at(f), f + " differs on rerun");
    c.expect(first.at(f) == parallel.at(f), f + " differs under parallel mining");
    // The manifest records its own output directory.
    if (f != "manifest.json") c.expect(first.at(f) == elsewhere.at(f), f + " differs in another directory");
  }
  fs::remove_all(dir);
  return c;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Check()>> criteria[] = {
      {"1 miner matches brute-force oracle", miner_matches_oracle},
      {"2 default configuration runs end to end", default_configuration_runs},
      {"3 identifiability on synthetic cohorts", identifiability},
      {"4 statistical kernels", statistical_kernels},
      {"5 clustering correctness", clustering},
      {"6 labeling totality", labeling},
      {"7 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = Clock::now();
    Check c;
    try {
      c = run();
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    std::printf("%s criterion %s (%.1f s)\n", c.failed ? "FAIL" : "PASS", name, seconds_since(t0));
    for (const auto& f : c.failures) std::printf("    %s\n", f.c_str());
    if (c.failed > c.failures.size()) std::printf("    ... %zu failures in total\n", c.failed);
    failed += c.failed != 0;
  }
  std::printf("%d of %zu criteria failed\n", failed, std::size(criteria));
  return failed ? 1 : 0;
}
