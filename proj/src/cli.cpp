#include "modc/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <unordered_set>

#include <CLI11.hpp>

#include "modc/datagen.hpp"
#include "modc/error.hpp"
#include "modc/io.hpp"
#include "modc/mode_discovery.hpp"
#include "modc/parallel.hpp"
#include "modc/sampler.hpp"

namespace modc::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Common {
  std::uint64_t seed = 0;
  int jobs = default_jobs();
};

struct SearchOpts {
  int beam = SearchDefaults{}.beam_width;
  int budget = SearchDefaults{}.node_budget;
  double noise_fraction = SearchDefaults{}.noise_fraction;

  SearchDefaults resolve() const {
    SearchDefaults d;
    d.beam_width = beam;
    d.node_budget = budget;
    d.noise_fraction = noise_fraction;
    return d;
  }
};

struct SpaceOpts {
  Value target_max = ProblemSpace{}.target_max;
  Value number_max = ProblemSpace{}.number_max;
  int n_start = ProblemSpace{}.n_start;

  ProblemSpace resolve() const {
    ProblemSpace s;
    s.target_max = target_max;
    s.number_max = number_max;
    s.n_start = n_start;
    return s;
  }
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Master seed (MODC_SEED overrides)")->capture_default_str();
  sub->add_option("--jobs", c.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
}

void add_search(CLI::App* sub, SearchOpts& s) {
  sub->add_option("--beam", s.beam, "Beam width")->capture_default_str();
  sub->add_option("--budget", s.budget, "Node expansion budget per search")->capture_default_str();
  sub->add_option("--noise-fraction", s.noise_fraction, "Heuristic noise as a fraction of the target")
      ->capture_default_str();
}

void add_space(CLI::App* sub, SpaceOpts& s) {
  sub->add_option("--target-max", s.target_max, "Largest target")->capture_default_str();
  sub->add_option("--number-max", s.number_max, "Largest starting number")->capture_default_str();
  sub->add_option("--n-start", s.n_start, "Starting numbers per problem")->capture_default_str();
}

std::vector<Problem> load_problems(const fs::path& path) {
  std::vector<Problem> out;
  for (const json& r : io::read_jsonl(path)) out.push_back(io::problem_from_json(r));
  return out;
}

// Bookkeeping shared by every subcommand: timing, inputs, outputs.
class Manifest {
 public:
  Manifest(const CLI::App& sub, const std::vector<std::string>& args)
      : start_(std::chrono::steady_clock::now()) {
    data_["command"] = sub.get_name();
    data_["args"] = args;
    // Every option of the subcommand with defaults filled in; loadable again
    // through --config.
    data_["config"] = "[" + sub.get_name() + "]\n" + sub.config_to_str(true, false);
    data_["version"] = kVersion;
  }
  void seed(std::uint64_t s) { data_["seed"] = s; }
  void input(const fs::path& p) { data_["inputs"].push_back(p.string()); }
  void output(const fs::path& p) { outputs_.push_back(p); }
  json& extra() { return data_; }

  void write() {
    data_["wall_clock_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    for (const auto& p : outputs_) data_["outputs"].push_back(p.string());
    for (const auto& p : outputs_) io::write_manifest(p, data_);
  }

 private:
  std::chrono::steady_clock::time_point start_;
  json data_ = json::object();
  std::vector<fs::path> outputs_;
};

json summary_to_json(const TrainingSummary& s) {
  return {{"attempts", s.attempts},
          {"kept", s.kept},
          {"attempted", {{"dfs", s.attempted_per_mode[0]}, {"bfs", s.attempted_per_mode[1]}}},
          {"solved", {{"dfs", s.solved_per_mode[0]}, {"bfs", s.solved_per_mode[1]}}},
          {"kept_per_mode", {{"dfs", s.kept_per_mode[0]}, {"bfs", s.kept_per_mode[1]}}},
          {"kept_per_heuristic", {{"sum", s.kept_per_heuristic[0]}, {"nearest", s.kept_per_heuristic[1]}}},
          {"total_expansions", s.total_expansions}};
}

fs::path sibling(const fs::path& out, const std::string& name) {
  return out.has_parent_path() ? out.parent_path() / name : fs::path(name);
}

std::vector<SamplingPolicy> parse_policies(const std::vector<std::string>& texts) {
  std::vector<SamplingPolicy> out;
  for (const auto& t : texts) out.push_back(parse_policy(t));
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Mode-conditioned sampling experiments on Countdown search traces", "modc"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Key/value config file; command-line flags win");
  app.set_version_flag("--version", kVersion);

  Common common;
  SearchOpts search;
  SpaceOpts space;

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Rejection-sampled training trajectories");
  int gen_n = 5000;
  std::string gen_sampling = "uniform";
  fs::path gen_out = "train.jsonl";
  add_common(gen, common);
  add_search(gen, search);
  add_space(gen, space);
  gen->add_option("--n", gen_n, "Kept trajectories")->capture_default_str();
  gen->add_option("--mode-sampling", gen_sampling, "uniform | balanced")->capture_default_str();
  gen->add_option("--out", gen_out, "Output JSONL")->capture_default_str();

  // build-testsets
  auto* bt = app.add_subcommand("build-testsets", "Natural and adversarial test sets");
  fs::path bt_train;
  int bt_natural = 500, bt_pool = 2000, bt_runs = 40;
  double bt_threshold = 0.05;
  bool bt_disjoint = false;
  Value bt_test_target_max = 0;
  fs::path bt_dir = ".";
  add_common(bt, common);
  add_search(bt, search);
  add_space(bt, space);
  bt->add_option("--train", bt_train, "Training JSONL whose problems are excluded")->required();
  bt->add_option("--natural", bt_natural, "Natural test set size")->capture_default_str();
  bt->add_option("--adversarial-pool", bt_pool, "Fresh problems screened for the adversarial set")
      ->capture_default_str();
  bt->add_option("--threshold", bt_threshold, "Success-rate threshold")->capture_default_str();
  bt->add_option("--runs", bt_runs, "Searches per mode when profiling")->capture_default_str();
  bt->add_flag("--disjoint-targets", bt_disjoint, "Also exclude every training target");
  bt->add_option("--test-target-max", bt_test_target_max,
                 "Largest test target (default: target-max, doubled with --disjoint-targets)");
  bt->add_option("--out-dir", bt_dir, "Directory for natural/adversarial/profiles JSONL")->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "pass@k curves per sampling policy");
  fs::path sim_testset, sim_profiles, sim_out = "curves.csv";
  std::vector<std::string> sim_policies{"standard:beta(0.3,0.3)", "modc-separate"};
  int sim_kmax = 64, sim_samples = 64;
  bool sim_deep = false;
  std::string sim_label;
  add_common(sim, common);
  add_search(sim, search);
  sim->add_option("--testset", sim_testset, "Problems JSONL")->required();
  sim->add_option("--policy", sim_policies, "Sampling policy (repeatable)")->capture_default_str();
  sim->add_option("--k-max", sim_kmax, "Largest k")->capture_default_str();
  sim->add_option("--samples", sim_samples, "Samples per problem")->capture_default_str();
  sim->add_flag("--deep", sim_deep, "k-max and samples 1024");
  sim->add_option("--testset-label", sim_label, "Test set name in the CSV (default: file stem)");
  sim->add_option("--profiles", sim_profiles,
                  "Replace searches by coin flips with these per-problem success rates");
  sim->add_option("--out", sim_out, "Output CSV")->capture_default_str();

  // histogram
  auto* hist = app.add_subcommand("histogram", "Per-problem mode-balance histograms");
  fs::path hist_testset, hist_out = "histogram.csv";
  std::vector<std::string> hist_policies{"standard:beta(0.3,0.3)", "modc-prefix:0.9", "modc-separate"};
  int hist_k = 16, hist_batches = 1, hist_bins = 20;
  add_common(hist, common);
  add_search(hist, search);
  hist->add_option("--testset", hist_testset, "Problems JSONL")->required();
  hist->add_option("--policy", hist_policies, "Sampling policy (repeatable)")->capture_default_str();
  hist->add_option("--k", hist_k, "Samples per batch")->capture_default_str();
  hist->add_option("--batches", hist_batches, "Batches per problem")->capture_default_str();
  hist->add_option("--bins", hist_bins, "Histogram bins")->capture_default_str();
  hist->add_option("--out", hist_out, "Output CSV")->capture_default_str();

  // discover-modes
  auto* dm = app.add_subcommand("discover-modes", "Cluster training trajectories by gradient");
  fs::path dm_train, dm_out = "train_annotated.jsonl";
  DiscoveryConfig dcfg;
  std::string dm_model = "fitted", dm_truth = "mode";
  add_common(dm, common);
  dm->add_option("--train", dm_train, "Training JSONL")->required();
  dm->add_option("--clusters", dcfg.clusters, "Number of clusters")->capture_default_str();
  dm->add_option("--dim", dcfg.dim, "Projection dimension")->capture_default_str();
  dm->add_option("--model", dm_model, "fitted | random-init")->capture_default_str();
  dm->add_option("--epochs", dcfg.fit.epochs, "Fitting epochs")->capture_default_str();
  dm->add_option("--lr", dcfg.fit.lr, "Initial step size")->capture_default_str();
  dm->add_option("--iters", dcfg.max_iters, "k-means iterations")->capture_default_str();
  dm->add_option("--restarts", dcfg.n_restarts, "k-means restarts")->capture_default_str();
  dm->add_option("--truth-field", dm_truth, "Field holding true labels for the F1 report")->capture_default_str();
  dm->add_option("--out", dm_out, "Annotated JSONL; f1_report.json goes next to it")->capture_default_str();

  // eval-f1
  auto* ef = app.add_subcommand("eval-f1", "Macro-F1 of an annotation against a truth field");
  fs::path ef_in, ef_out;
  std::string ef_truth = "mode", ef_cluster = "mode_cluster";
  ef->add_option("--annotated", ef_in, "Annotated JSONL")->required();
  ef->add_option("--truth-field", ef_truth)->capture_default_str();
  ef->add_option("--cluster-field", ef_cluster)->capture_default_str();
  ef->add_option("--out", ef_out, "Optional JSON report");

  // report
  auto* rep = app.add_subcommand("report", "Gap tables from curve CSVs");
  std::vector<fs::path> rep_curves;
  fs::path rep_out = "report.md", rep_csv;
  rep->add_option("--curves", rep_curves, "Curve CSV (repeatable)")->required();
  rep->add_option("--out", rep_out, "Markdown summary")->capture_default_str();
  rep->add_option("--gaps-csv", rep_csv, "Gap table CSV (default: next to --out)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (const char* env = std::getenv("MODC_SEED"); env && *env) {
      common.seed = std::stoull(env);
    }
    const std::vector<std::string> argv(args.begin() + (args.empty() ? 0 : 1), args.end());

    if (*gen) {
      Manifest m(*gen, argv);
      m.seed(common.seed);
      DatasetConfig cfg;
      cfg.space = space.resolve();
      cfg.search = search.resolve();
      cfg.n_problems = gen_n;
      cfg.mode_sampling = parse_mode_sampling(gen_sampling);
      cfg.master_seed = common.seed;
      std::cout << "generating " << gen_n << " trajectories (" << gen_sampling << ")\n";
      TrainingSet set = build_training_set(cfg, common.jobs);
      std::vector<json> records;
      for (const auto& ex : set.examples) records.push_back(io::example_to_json(ex));
      io::write_jsonl(gen_out, records);
      const fs::path stats_path = sibling(gen_out, gen_out.stem().string() + ".stats.json");
      io::write_text(stats_path, summary_to_json(set.summary).dump(2) + "\n");
      m.extra()["node_expansions"] = set.summary.total_expansions;
      m.output(gen_out);
      m.output(stats_path);
      m.write();
      std::cout << "kept dfs=" << set.summary.kept_per_mode[0] << " bfs=" << set.summary.kept_per_mode[1]
                << " from " << set.summary.attempts << " attempts -> " << gen_out.string() << "\n";
      return kOk;
    }

    if (*bt) {
      Manifest m(*bt, argv);
      m.seed(common.seed);
      m.input(bt_train);
      std::unordered_set<std::string> exclude;
      std::unordered_set<Value> targets;
      for (const json& r : io::read_jsonl(bt_train)) {
        Problem p = io::problem_from_json(r);
        exclude.insert(p.id);
        targets.insert(p.target);
      }
      ProblemSpace test_space = space.resolve();
      if (bt_test_target_max > 0) {
        test_space.target_max = bt_test_target_max;
      } else if (bt_disjoint) {
        test_space.target_max = 2 * space.target_max;
      }
      const std::unordered_set<Value> no_targets;
      const auto& excluded_targets = bt_disjoint ? targets : no_targets;
      std::vector<Problem> natural = build_natural_testset(bt_natural, exclude, test_space,
                                                           derive_seed(common.seed, "natural"), excluded_targets);
      for (const auto& p : natural) exclude.insert(p.id);
      std::vector<Problem> pool = build_natural_testset(bt_pool, exclude, test_space,
                                                        derive_seed(common.seed, "pool"), excluded_targets);

      const fs::path nat_path = bt_dir / "natural.jsonl";
      const fs::path adv_path = bt_dir / "adversarial.jsonl";
      const fs::path prof_path = bt_dir / "profiles.jsonl";
      std::vector<json> recs;
      for (const auto& p : natural) recs.push_back(io::problem_to_json(p));
      io::write_jsonl(nat_path, recs);
      m.output(nat_path);
      std::cout << natural.size() << " natural problems -> " << nat_path.string() << "\n";

      std::cout << "profiling " << pool.size() << " pool problems, " << bt_runs << " runs per mode\n";
      const auto profiles =
          estimate_mode_profiles(pool, bt_runs, derive_seed(common.seed, "profiles"), search.resolve(), common.jobs);
      recs.clear();
      for (const auto& p : profiles) recs.push_back(io::profile_to_json(p));
      io::write_jsonl(prof_path, recs);
      m.output(prof_path);

      std::vector<Problem> adversarial;
      try {
        adversarial = select_adversarial(pool, profiles, bt_threshold);
      } catch (const EmptyResult&) {
        io::write_jsonl(adv_path, {});
        m.output(adv_path);
        m.extra()["adversarial"] = 0;
        m.write();
        throw;
      }
      recs.clear();
      for (const auto& p : adversarial) recs.push_back(io::problem_to_json(p));
      io::write_jsonl(adv_path, recs);
      m.output(adv_path);
      m.extra()["natural"] = natural.size();
      m.extra()["adversarial"] = adversarial.size();
      m.write();
      std::cout << adversarial.size() << " adversarial problems -> " << adv_path.string() << "\n";
      return kOk;
    }

    if (*sim) {
      Manifest m(*sim, argv);
      m.seed(common.seed);
      m.input(sim_testset);
      if (sim_deep) sim_kmax = sim_samples = 1024;
      const auto problems = load_problems(sim_testset);
      const auto policies = parse_policies(sim_policies);
      const std::string label = sim_label.empty() ? sim_testset.stem().string() : sim_label;
      const SearchTrialRunner search_runner(search.resolve());
      BernoulliTrialRunner coin_runner;
      const TrialRunner* runner = &search_runner;
      if (!sim_profiles.empty()) {
        m.input(sim_profiles);
        for (const json& r : io::read_jsonl(sim_profiles)) {
          const auto p = io::profile_from_json(r);
          coin_runner.set(p.problem_id, p.p_dfs, p.p_bfs);
        }
        runner = &coin_runner;
      }
      std::cout << "simulating " << policies.size() << " policies on " << problems.size() << " problems\n";
      const PolicyComparison cmp = compare_policies(problems, policies, doubling_ks(sim_kmax), sim_samples,
                                                    common.seed, *runner, common.jobs, label);
      io::write_text(sim_out, io::curves_to_csv(cmp.curves));
      m.output(sim_out);
      m.write();
      for (const auto& c : cmp.curves) {
        std::cout << "  " << c.strategy << " pass@" << c.ks.back() << " = " << c.values.back() << "\n";
      }
      return kOk;
    }

    if (*hist) {
      Manifest m(*hist, argv);
      m.seed(common.seed);
      m.input(hist_testset);
      const auto problems = load_problems(hist_testset);
      const SearchTrialRunner runner(search.resolve());
      std::vector<BalanceHistogram> hs;
      for (const auto& policy : parse_policies(hist_policies)) {
        hs.push_back(balance_histogram(problems, policy, hist_k, hist_batches, common.seed, runner, common.jobs,
                                       hist_bins));
        std::cout << "  " << policy.label << " extremity mass " << hs.back().extremity_mass() << "\n";
      }
      io::write_text(hist_out, io::histograms_to_csv(hs));
      m.output(hist_out);
      m.write();
      return kOk;
    }

    if (*dm) {
      Manifest m(*dm, argv);
      m.seed(common.seed);
      m.input(dm_train);
      dcfg.seed = common.seed;
      dcfg.jobs = common.jobs;
      dcfg.init = parse_model_init(dm_model);
      auto records = io::read_jsonl(dm_train);
      std::vector<TokenSeq> corpus;
      std::vector<int> truth;
      std::map<std::string, int> label_ids{{"dfs", 0}, {"bfs", 1}};
      bool have_truth = !records.empty();
      for (const json& r : records) {
        const TrainingExample ex = io::example_from_json(r);
        corpus.push_back(serialize_trajectory(ex.problem, ex.trajectory));
        if (have_truth && r.contains(dm_truth)) {
          const std::string t = r[dm_truth].is_string() ? r[dm_truth].get<std::string>() : r[dm_truth].dump();
          truth.push_back(label_ids.try_emplace(t, static_cast<int>(label_ids.size())).first->second);
        } else {
          have_truth = false;
        }
      }
      if (!have_truth) truth.clear();
      std::cout << "clustering " << corpus.size() << " trajectories into " << dcfg.clusters << "\n";
      const DiscoveryResult res = discover_modes(corpus, Vocabulary::trajectory_tokens(), dcfg, truth);
      for (std::size_t i = 0; i < records.size(); ++i) records[i]["mode_cluster"] = res.cluster[i];
      io::write_jsonl(dm_out, records);

      json report = {{"n", records.size()}, {"clusters", dcfg.clusters}, {"wcss", res.wcss}};
      if (res.f1) {
        report["truth_field"] = dm_truth;
        report["macro_f1"] = *res.f1;
      }
      for (const auto& c : res.clusters) {
        json jc = {{"cluster", c.cluster}, {"size", c.size}};
        if (res.f1) jc["dfs_share"] = c.dfs_share;
        report["per_cluster"].push_back(jc);
      }
      if (res.f1) report["policy"] = cluster_policy(res).label;
      const fs::path rep_path = sibling(dm_out, "f1_report.json");
      io::write_text(rep_path, report.dump(2) + "\n");
      m.output(dm_out);
      m.output(rep_path);
      m.write();
      if (res.f1) {
        std::cout << "macro-F1 vs " << dm_truth << ": " << *res.f1 << "\n";
      } else {
        std::cout << "no truth field; F1 omitted\n";
      }
      return kOk;
    }

    if (*ef) {
      std::vector<int> clusters;
      std::vector<std::string> truth;
      for (const json& r : io::read_jsonl(ef_in)) {
        if (!r.contains(ef_cluster) || !r.contains(ef_truth)) {
          throw LabelMismatch("record lacks \"" + ef_cluster + "\" or \"" + ef_truth + "\"");
        }
        clusters.push_back(r[ef_cluster].get<int>());
        truth.push_back(r[ef_truth].is_string() ? r[ef_truth].get<std::string>() : r[ef_truth].dump());
      }
      const double f1 = cluster_f1(clusters, truth);
      std::cout << "macro-F1: " << f1 << "\n";
      if (!ef_out.empty()) {
        io::write_text(ef_out, json{{"macro_f1", f1}, {"n", clusters.size()}, {"truth_field", ef_truth}}.dump(2) + "\n");
      }
      return kOk;
    }

    if (*rep) {
      Manifest m(*rep, argv);
      std::vector<PassKCurve> curves;
      for (const auto& p : rep_curves) {
        m.input(p);
        auto cs = io::curves_from_csv(io::read_text(p));
        curves.insert(curves.end(), cs.begin(), cs.end());
      }
      if (curves.empty()) throw SchemaMismatch("no curves");
      std::vector<std::string> testsets;
      for (const auto& c : curves) {
        if (std::find(testsets.begin(), testsets.end(), c.testset) == testsets.end()) testsets.push_back(c.testset);
      }
      std::string md = "# pass@k gaps\n";
      std::string csv = "testset,k,strategy,baseline,gap,pooled_stderr\n";
      std::map<std::pair<std::string, std::string>, double> final_gap;  // (testset, strategy)
      for (const auto& ts : testsets) {
        std::vector<const PassKCurve*> group;
        for (const auto& c : curves) {
          if (c.testset == ts) group.push_back(&c);
        }
        const PassKCurve* base = group.front();
        for (const auto* c : group) {
          if (c->strategy.rfind("standard", 0) == 0) {
            base = c;
            break;
          }
        }
        md += "\n## " + ts + " (baseline " + base->strategy + ")\n\n| k | strategy | pass@k | gap | pooled stderr |\n|---|---|---|---|---|\n";
        for (const auto* c : group) {
          if (c == base) continue;
          for (const GapRow& g : curve_gaps(*c, *base)) {
            md += "| " + std::to_string(g.k) + " | " + g.policy + " | " + io::format_double(c->at(g.k)) + " | " +
                  io::format_double(g.gap) + " | " + io::format_double(g.pooled_stderr) + " |\n";
            csv += ts + "," + std::to_string(g.k) + ",\"" + g.policy + "\",\"" + g.baseline + "\"," +
                   io::format_double(g.gap) + "," + io::format_double(g.pooled_stderr) + "\n";
            final_gap[{ts, g.policy}] = g.gap;
          }
        }
      }
      // Directional check between an adversarial and a natural bundle.
      std::string flags;
      for (const auto& [key, gap] : final_gap) {
        if (key.first != "adversarial") continue;
        auto nat = final_gap.find({"natural", key.second});
        if (nat == final_gap.end()) continue;
        const bool larger = gap > nat->second;
        flags += "- " + key.second + ": gap_adversarial(k_max) = " + io::format_double(gap) +
                 (larger ? " > " : " <= ") + "gap_natural(k_max) = " + io::format_double(nat->second) +
                 (larger ? " (larger on adversarial)" : " (NOT larger on adversarial)") + "\n";
      }
      if (!flags.empty()) md += "\n## adversarial vs natural\n\n" + flags;
      io::write_text(rep_out, md);
      const fs::path gaps_path = rep_csv.empty() ? sibling(rep_out, rep_out.stem().string() + "_gaps.csv") : rep_csv;
      io::write_text(gaps_path, csv);
      m.output(rep_out);
      m.output(gaps_path);
      m.write();
      std::cout << "report -> " << rep_out.string() << "\n";
      return kOk;
    }
  } catch (const Error& e) {
    std::cerr << "modc: " << e.what() << "\n";
    switch (e.code()) {
      case Errc::EmptyResult:
      case Errc::EmptyCorpus:
      case Errc::ExhaustedRetries:
        return kEmptyResult;
      default:
        return kValidation;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "modc: invalid value: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "modc: internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}

}  // namespace modc::cli
