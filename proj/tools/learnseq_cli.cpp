// learnseq: command-line driver for the behavioral sequence pipeline.
//
//   learnseq run --input events.csv --output out/ [--config run.conf] [flags]
//   learnseq synth --seed 7 --output events.csv [--config cohort.conf]
//   learnseq ingest | sequence | mine | profile | stability | cluster ...

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "learnseq/learnseq.hpp"

using namespace learnseq;
namespace fs = std::filesystem;

namespace {

/// Settings given on the command line; applied after any config file.
struct Overrides {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::map<std::string, bool> flags;
  std::string config;

  void option(CLI::App* app, const std::string& key, const std::string& help) {
    std::string flag = "--" + key;
    for (auto& c : flag)
      if (c == '_') c = '-';
    options[key] = app->add_option(flag, values[key], help);
  }

  void flag(CLI::App* app, const std::string& key, const std::string& help) {
    std::string name = "--" + key;
    for (auto& c : name)
      if (c == '_') c = '-';
    flags[key] = false;
    options[key] = app->add_flag(name, flags[key], help);
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config.empty()) {
      std::ifstream in(config);
      if (!in) throw ConfigError("cannot open config `" + config + "`");
      load_config(cfg, in);
    }
    for (const auto& [key, opt] : options) {
      if (opt->count() == 0) continue;
      auto f = flags.find(key);
      apply_setting(cfg, key, f != flags.end() ? (f->second ? "true" : "false") : values.at(key));
    }
    return cfg;
  }
};

void add_mining(CLI::App* app, Overrides& o) {
  o.option(app, "minsup", "minimum support fraction (default 0.04)");
  o.option(app, "maxgap", "maximum position gap, integer or `unbounded` (default 1)");
  o.option(app, "minlen", "minimum pattern length (default 2)");
  o.option(app, "maxlen", "maximum pattern length or `unbounded` (default)");
}

void add_boundary(CLI::App* app, Overrides& o) {
  o.flag(app, "require_gap_below_median", "split sequences at idle gaps >= the median gap");
  o.flag(app, "require_mixed_activity", "drop sequences with only examples or only exercises");
  o.flag(app, "require_exercise_ending", "drop sequences not ending with an exercise");
  o.flag(app, "basic_long_uppercase", "label long basic examples `Ex` instead of `ex`");
}

void add_stability(CLI::App* app, Overrides& o) {
  o.option(app, "epsilon", "smoothing value for absent patterns (default 0.0001)");
  o.option(app, "seed", "random seed for split halves (default 0)");
  o.option(app, "measures", "comma-separated: js_divergence,cosine_distance");
  o.option(app, "log_base", "JS divergence log base: 2 or e (default 2)");
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open `" + path + "`");
  return in;
}

template <class F>
void emit(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write `" + path + "`");
  write(out);
}

void write_text(const fs::path& path, const std::string& text) {
  emit(path.string(), [&](std::ostream& os) { os << text; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavioral sequence mining for learning-activity logs"};
  app.require_subcommand(1);

  // run
  Overrides run_o;
  auto* run = app.add_subcommand("run", "run every stage and write all reports");
  run->add_option("--config", run_o.config, "key = value file or a manifest.json to replay");
  run_o.option(run, "input", "event log CSV");
  run_o.option(run, "output", "output directory (default out)");
  add_mining(run, run_o);
  add_boundary(run, run_o);
  add_stability(run, run_o);
  run_o.option(run, "k", "number of clusters (default 2)");
  unsigned threads = 1;
  run->add_option("--threads", threads, "mining threads (does not affect output)");

  // ingest
  std::string ingest_in, ingest_out;
  auto* ingest = app.add_subcommand("ingest", "validate an event log and print dataset stats");
  ingest->add_option("--input", ingest_in, "event log CSV")->required();
  ingest->add_option("--output", ingest_out, "stats JSON path (default stdout)");

  // sequence
  Overrides seq_o;
  std::string seq_in, seq_out;
  auto* sequence = app.add_subcommand("sequence", "label activities and build sequences");
  sequence->add_option("--input", seq_in, "event log CSV")->required();
  sequence->add_option("--output", seq_out, "sequences CSV (default stdout)");
  add_boundary(sequence, seq_o);

  // mine
  Overrides mine_o;
  std::string mine_in, mine_out;
  auto* mine_cmd = app.add_subcommand("mine", "mine frequent sequential patterns");
  mine_cmd->add_option("--input", mine_in, "sequences CSV")->required();
  mine_cmd->add_option("--output", mine_out, "patterns CSV (default stdout)");
  add_mining(mine_cmd, mine_o);
  mine_cmd->add_option("--threads", threads, "mining threads (does not affect output)");

  // profile
  Overrides prof_o;
  std::string prof_seqs, prof_pats, prof_out;
  auto* profile = app.add_subcommand("profile", "per-user smoothed pattern profiles");
  profile->add_option("--sequences", prof_seqs, "sequences CSV")->required();
  profile->add_option("--patterns", prof_pats, "patterns CSV")->required();
  profile->add_option("--output", prof_out, "profiles CSV (default stdout)");
  prof_o.option(profile, "maxgap", "gap used when counting occurrences (default 1)");
  prof_o.option(profile, "epsilon", "smoothing value (default 0.0001)");

  // stability
  Overrides stab_o;
  std::string stab_seqs, stab_pats, stab_dir = ".";
  auto* stability = app.add_subcommand("stability", "split-half identifiability experiment");
  stability->add_option("--sequences", stab_seqs, "sequences CSV")->required();
  stability->add_option("--patterns", stab_pats, "patterns CSV")->required();
  stability->add_option("--output-dir", stab_dir, "directory for stability.csv and summary");
  stab_o.option(stability, "maxgap", "gap used when counting occurrences (default 1)");
  add_stability(stability, stab_o);

  // cluster
  Overrides clu_o;
  std::string clu_in, clu_dir = ".";
  auto* cluster = app.add_subcommand("cluster", "Ward clustering of profiles");
  cluster->add_option("--profiles", clu_in, "profiles CSV")->required();
  cluster->add_option("--output-dir", clu_dir, "directory for dendrogram and reports");
  clu_o.option(cluster, "k", "number of clusters (default 2)");

  // synth
  std::string synth_cfg, synth_out;
  std::uint64_t synth_seed = 0;
  std::optional<double> synth_distinct;
  std::optional<std::size_t> synth_users;
  auto* synth = app.add_subcommand("synth", "generate a synthetic event log");
  synth->add_option("--config", synth_cfg, "cohort spec (key = value)");
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--distinctness", synth_distinct, "override: 0 = shared behavior, 1 = distinct");
  synth->add_option("--n-users", synth_users, "override: number of users");
  synth->add_option("--output", synth_out, "event log CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto cfg = run_o.resolve();
      cfg.threads = threads;
      if (cfg.input.empty()) throw ConfigError("input is required");
      const auto s = run_pipeline(cfg);
      std::cerr << "users " << s.stats.n_students << ", sequences " << s.n_sequences
                << ", patterns " << s.n_patterns << ", written to " << cfg.output << "\n";
      for (const auto& m : s.stability.summaries)
        std::cerr << "  " << to_string(m.measure) << ": self " << fixed(m.self_distance, 4)
                  << " other " << fixed(m.distance_to_other, 4) << " t " << fixed(m.test.t, 3)
                  << " p " << m.test.p << "\n";
    } else if (*ingest) {
      auto in = open_in(ingest_in);
      const auto stats = dataset_stats(parse_event_log(in));
      emit(ingest_out, [&](std::ostream& os) { os << to_json(stats).dump(2) << "\n"; });
    } else if (*sequence) {
      const auto cfg = seq_o.resolve();
      auto in = open_in(seq_in);
      const auto records = parse_event_log(in);
      auto seqs = build_sequences(records, compute_medians(records),
                                  LabelScheme{!cfg.basic_long_uppercase});
      seqs = filter_sequences(std::move(seqs), cfg.boundary);
      emit(seq_out, [&](std::ostream& os) { write_sequences(os, seqs); });
    } else if (*mine_cmd) {
      auto cfg = mine_o.resolve();
      cfg.threads = threads;
      auto in = open_in(mine_in);
      const auto ps = mine(make_database(read_sequences(in)), cfg.mining());
      emit(mine_out, [&](std::ostream& os) { write_patterns(os, ps); });
    } else if (*profile) {
      const auto cfg = prof_o.resolve();
      auto sin = open_in(prof_seqs);
      auto pin = open_in(prof_pats);
      const auto seqs = read_sequences(sin);
      const auto vocab = vocabulary_of(read_patterns(pin));
      const auto profiles = build_profiles(seqs, vocab, cfg.maxgap, cfg.epsilon);
      emit(prof_out, [&](std::ostream& os) { write_profiles(os, vocab, profiles); });
    } else if (*stability) {
      const auto cfg = stab_o.resolve();
      cfg.validate();
      auto sin = open_in(stab_seqs);
      auto pin = open_in(stab_pats);
      const auto seqs = read_sequences(sin);
      const auto vocab = vocabulary_of(read_patterns(pin));
      StabilityOptions opt{cfg.maxgap, cfg.epsilon, cfg.seed, cfg.measures, cfg.log_base};
      const auto rep = stability_experiment(by_user(seqs), vocab, opt);
      fs::create_directories(stab_dir);
      emit((fs::path(stab_dir) / "stability.csv").string(),
           [&](std::ostream& os) { write_stability_csv(os, rep); });
      write_text(fs::path(stab_dir) / "stability_summary.json",
                 stability_summary_json(rep).dump(2) + "\n");
    } else if (*cluster) {
      const auto cfg = clu_o.resolve();
      auto in = open_in(clu_in);
      const auto table = read_profiles(in);
      const auto tree = ward_cluster(table.profiles);
      const auto assignment = cut_tree(tree, cfg.k);
      const fs::path dir(clu_dir);
      fs::create_directories(dir);
      write_text(dir / "dendrogram.nwk", to_newick(tree) + "\n");
      write_text(dir / "dendrogram.dot", to_dot(tree));
      emit((dir / "assignments.csv").string(),
           [&](std::ostream& os) { write_assignments(os, assignment); });
      const auto report = cluster_report(assignment, table.profiles);
      emit((dir / "cluster_report.csv").string(),
           [&](std::ostream& os) { write_cluster_report(os, report, table.vocab); });
    } else if (*synth) {
      CohortSpec spec;
      if (!synth_cfg.empty()) {
        auto in = open_in(synth_cfg);
        spec = read_cohort_spec(in);
      }
      if (synth_distinct) spec.distinctness = *synth_distinct;
      if (synth_users) spec.n_users = *synth_users;
      const auto records = generate_cohort(spec, synth_seed);
      emit(synth_out, [&](std::ostream& os) { write_event_log(os, records); });
    }
  } catch (const std::exception& e) {
    std::cerr << "learnseq: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
