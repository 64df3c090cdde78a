#pragma once

// End-to-end run: ingest -> sequence -> mine -> profile -> stability ->
// cluster, with every artifact written to one output directory.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cluster.hpp"
#include "common.hpp"
#include "ingest.hpp"
#include "profiles.hpp"
#include "sequencer.hpp"
#include "spam.hpp"
#include "stats.hpp"
#include "synth.hpp"

namespace learnseq {

/// An error raised inside a named pipeline stage.
class StageError : public Error {
public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

private:
  std::string stage_;
};

struct RunConfig {
  std::string input;
  std::string output = "out";
  double minsup = 0.04;
  Bound maxgap = 1;
  std::size_t minlen = 2;
  Bound maxlen = kUnbounded;
  double epsilon = kDefaultEpsilon;
  BoundaryConfig boundary;
  std::size_t k = 2;
  std::uint64_t seed = 0;
  std::vector<Measure> measures{Measure::js_divergence, Measure::cosine_distance};
  LogBase log_base = LogBase::two;
  bool basic_long_uppercase = false;
  unsigned threads = 1;  // not recorded: it cannot change any output

  MiningParams mining() const { return {minsup, maxgap, minlen, maxlen, threads}; }

  void validate() const {
    mining().validate();
    if (!(epsilon > 0)) throw ConfigError("epsilon must be > 0");
    if (k < 1) throw ConfigError("k must be >= 1");
    if (measures.empty()) throw ConfigError("measures must not be empty");
  }
};

namespace detail {

inline Bound parse_bound(const std::string& key, const std::string& v) {
  const auto l = lower(csv::trim(v));
  if (l == "unbounded" || l == "none" || l == "inf") return kUnbounded;
  try {
    std::size_t used = 0;
    const long long n = std::stoll(l, &used);
    if (used != l.size() || n < 0) throw std::invalid_argument(l);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer or `unbounded`, got `" + v + "`");
  }
}

inline std::string bound_text(Bound b) { return b ? std::to_string(*b) : "unbounded"; }

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got `" + v + "`");
  }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const auto n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got `" + v + "`");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  const auto l = lower(v);
  if (l == "true" || l == "1" || l == "yes") return true;
  if (l == "false" || l == "0" || l == "no") return false;
  throw ConfigError(key + ": expected true or false, got `" + v + "`");
}

}  // namespace detail

/// Applies one configuration entry. Keys match the manifest and the long
/// command-line flags with `-` replaced by `_`.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& raw) {
  const auto v = csv::trim(raw);
  if (key == "input") cfg.input = v;
  else if (key == "output") cfg.output = v;
  else if (key == "minsup") cfg.minsup = detail::parse_double(key, v);
  else if (key == "maxgap") cfg.maxgap = detail::parse_bound(key, v);
  else if (key == "minlen") cfg.minlen = detail::parse_u64(key, v);
  else if (key == "maxlen") cfg.maxlen = detail::parse_bound(key, v);
  else if (key == "epsilon") cfg.epsilon = detail::parse_double(key, v);
  else if (key == "k") cfg.k = detail::parse_u64(key, v);
  else if (key == "seed") cfg.seed = detail::parse_u64(key, v);
  else if (key == "require_gap_below_median") cfg.boundary.require_gap_below_median = detail::parse_bool(key, v);
  else if (key == "require_mixed_activity") cfg.boundary.require_mixed_activity = detail::parse_bool(key, v);
  else if (key == "require_exercise_ending") cfg.boundary.require_exercise_ending = detail::parse_bool(key, v);
  else if (key == "basic_long_uppercase") cfg.basic_long_uppercase = detail::parse_bool(key, v);
  else if (key == "log_base") {
    if (v == "2") cfg.log_base = LogBase::two;
    else if (v == "e") cfg.log_base = LogBase::natural;
    else throw ConfigError("log_base: expected 2 or e");
  } else if (key == "measures") {
    std::string s = v;
    for (auto& c : s)
      if (c == ',') c = ' ';
    cfg.measures.clear();
    for (const auto& tok : split_ws(s)) {
      auto m = parse_measure(tok);
      if (!m) throw ConfigError("measures: unknown measure `" + tok + "`");
      cfg.measures.push_back(*m);
    }
  } else {
    throw ConfigError("unknown config key `" + key + "`");
  }
}

/// The manifest object: every setting that influences an output byte.
inline nlohmann::ordered_json to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["input"] = cfg.input;
  j["output"] = cfg.output;
  j["minsup"] = cfg.minsup;
  j["maxgap"] = detail::bound_text(cfg.maxgap);
  j["minlen"] = cfg.minlen;
  j["maxlen"] = detail::bound_text(cfg.maxlen);
  j["epsilon"] = cfg.epsilon;
  j["require_gap_below_median"] = cfg.boundary.require_gap_below_median;
  j["require_mixed_activity"] = cfg.boundary.require_mixed_activity;
  j["require_exercise_ending"] = cfg.boundary.require_exercise_ending;
  j["k"] = cfg.k;
  j["seed"] = cfg.seed;
  std::string measures;
  for (auto m : cfg.measures) measures += (measures.empty() ? "" : ",") + to_string(m);
  j["measures"] = measures;
  j["log_base"] = cfg.log_base == LogBase::two ? "2" : "e";
  j["basic_long_uppercase"] = cfg.basic_long_uppercase;
  return j;
}

/// Loads a config file: either a JSON object (such as a previous run's
/// manifest.json) or `key = value` lines.
inline void load_config(RunConfig& cfg, std::istream& in) {
  std::stringstream buf;
  buf << in.rdbuf();
  const auto text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config JSON: ") + e.what());
    }
    for (const auto& [key, value] : j.items()) {
      if (key == "outputs") continue;
      if (value.is_string()) apply_setting(cfg, key, value.get<std::string>());
      else if (value.is_boolean()) apply_setting(cfg, key, value.get<bool>() ? "true" : "false");
      else if (value.is_number_integer() || value.is_number_unsigned()) apply_setting(cfg, key, value.dump());
      else if (value.is_number_float()) {
        std::ostringstream os;
        os.precision(17);
        os << value.get<double>();
        apply_setting(cfg, key, os.str());
      } else throw ConfigError("config JSON: unsupported value for `" + key + "`");
    }
    return;
  }
  std::istringstream is(text);
  for (const auto& [key, value] : detail::read_key_values(is)) apply_setting(cfg, key, value);
}

inline const std::vector<std::string>& pipeline_outputs() {
  static const std::vector<std::string> files{
      "stats.json",        "sequences.csv",          "patterns.csv",   "profiles.csv",
      "stability.csv",     "stability_summary.json", "dendrogram.nwk", "dendrogram.dot",
      "assignments.csv",   "cluster_report.csv",     "manifest.json"};
  return files;
}

struct RunSummary {
  DatasetStats stats;
  std::size_t n_sequences = 0;
  std::size_t n_patterns = 0;
  StabilityReport stability;
  std::map<std::string, std::size_t> assignment;
};

namespace detail {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed for " + path.string());
}

template <class F>
std::string render_to_string(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

}  // namespace detail

inline RunSummary run_pipeline(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  detail::stage("config", [&] { cfg.validate(); return 0; });
  const fs::path dir(cfg.output);
  detail::stage("output", [&] { fs::create_directories(dir); return 0; });

  RunSummary sum;
  const auto records = detail::stage("ingest", [&] {
    std::ifstream in(cfg.input, std::ios::binary);
    if (!in) throw Error("cannot open input `" + cfg.input + "`");
    auto rs = parse_event_log(in);
    sum.stats = dataset_stats(rs);
    detail::write_file(dir / "stats.json", to_json(sum.stats).dump(2) + "\n");
    return rs;
  });

  const auto seqs = detail::stage("sequence", [&] {
    const auto medians = compute_medians(records);
    auto built = build_sequences(records, medians, LabelScheme{!cfg.basic_long_uppercase});
    auto kept = filter_sequences(std::move(built), cfg.boundary);
    detail::write_file(dir / "sequences.csv",
                       detail::render_to_string([&](auto& os) { write_sequences(os, kept); }));
    return kept;
  });
  sum.n_sequences = seqs.size();

  const auto patterns = detail::stage("mine", [&] {
    auto ps = mine(make_database(seqs), cfg.mining());
    detail::write_file(dir / "patterns.csv",
                       detail::render_to_string([&](auto& os) { write_patterns(os, ps); }));
    if (ps.empty()) throw Error("no frequent patterns at minsup " + fixed(cfg.minsup, 6));
    return ps;
  });
  sum.n_patterns = patterns.size();
  const auto vocab = vocabulary_of(patterns);

  const auto profiles = detail::stage("profile", [&] {
    auto pr = build_profiles(seqs, vocab, cfg.maxgap, cfg.epsilon);
    detail::write_file(dir / "profiles.csv",
                       detail::render_to_string([&](auto& os) { write_profiles(os, vocab, pr); }));
    return pr;
  });

  sum.stability = detail::stage("stability", [&] {
    StabilityOptions opt{cfg.maxgap, cfg.epsilon, cfg.seed, cfg.measures, cfg.log_base};
    auto rep = stability_experiment(by_user(seqs), vocab, opt);
    detail::write_file(dir / "stability.csv",
                       detail::render_to_string([&](auto& os) { write_stability_csv(os, rep); }));
    detail::write_file(dir / "stability_summary.json", stability_summary_json(rep).dump(2) + "\n");
    return rep;
  });

  sum.assignment = detail::stage("cluster", [&] {
    const auto tree = ward_cluster(profiles);
    auto assignment = cut_tree(tree, cfg.k);
    detail::write_file(dir / "dendrogram.nwk", to_newick(tree) + "\n");
    detail::write_file(dir / "dendrogram.dot", to_dot(tree));
    detail::write_file(dir / "assignments.csv",
                       detail::render_to_string([&](auto& os) { write_assignments(os, assignment); }));
    const auto report = cluster_report(assignment, profiles);
    detail::write_file(dir / "cluster_report.csv", detail::render_to_string([&](auto& os) {
                         write_cluster_report(os, report, vocab);
                       }));
    return assignment;
  });

  detail::stage("manifest", [&] {
    auto j = to_json(cfg);
    j["outputs"] = pipeline_outputs();
    detail::write_file(dir / "manifest.json", j.dump(2) + "\n");
    return 0;
  });
  return sum;
}

}  // namespace learnseq
