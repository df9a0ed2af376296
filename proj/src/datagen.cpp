#include "modc/datagen.hpp"

#include <algorithm>
#include <optional>

#include "modc/error.hpp"
#include "modc/parallel.hpp"

namespace modc {

SearchConfig SearchDefaults::make_config(Mode mode, HeuristicKind heuristic, Value target,
                                         std::uint64_t seed) const {
  SearchConfig c;
  c.mode = mode;
  c.heuristic = {heuristic, noise_fraction * static_cast<double>(std::max<Value>(target, 1))};
  c.beam_width = beam_width;
  c.node_budget = node_budget;
  c.seed = seed;
  c.rules = rules;
  c.record_limit = record_limit;
  return c;
}

HeuristicKind SearchDefaults::draw_heuristic(Rng& rng) const {
  if (heuristics.empty()) throw InvalidArgument("no heuristics configured");
  return heuristics[static_cast<std::size_t>(rng.integer(0, heuristics.size() - 1))];
}

Problem gen_problem(Rng& rng, const ProblemSpace& space) {
  if (space.n_start < 2) throw InvalidArgument("n_start must be >= 2");
  if (space.target_min < 1 || space.target_max < space.target_min) {
    throw InvalidArgument("target range must be a non-empty subrange of positive integers");
  }
  if (space.number_min < 1 || space.number_max < space.number_min) {
    throw InvalidArgument("starting-number range must be a non-empty subrange of positive integers");
  }
  const Value target = rng.integer(space.target_min, space.target_max);
  for (int attempt = 0; attempt < space.retry_cap; ++attempt) {
    std::vector<Value> nums(space.n_start);
    for (Value& v : nums) v = rng.integer(space.number_min, space.number_max);
    Problem p = Problem::make(std::move(nums), target);
    if (is_reachable(p, space.rules)) return p;
  }
  throw ExhaustedRetries("no reachable starting numbers for target " + std::to_string(target) +
                         " after " + std::to_string(space.retry_cap) + " draws");
}

std::string_view to_string(ModeSampling sampling) {
  return sampling == ModeSampling::Uniform ? "uniform" : "balanced";
}

ModeSampling parse_mode_sampling(std::string_view text) {
  if (text == "uniform") return ModeSampling::Uniform;
  if (text == "balanced") return ModeSampling::Balanced5050;
  throw InvalidArgument("unknown mode sampling '" + std::string(text) + "'");
}

namespace {

std::size_t mode_index(Mode m) { return m == Mode::DFS ? 0 : 1; }
std::size_t heuristic_index(HeuristicKind h) { return h == HeuristicKind::SumDistance ? 0 : 1; }

struct Candidate {
  Problem problem;
  Trajectory trajectory;
};

Candidate make_candidate(const DatasetConfig& config, std::int64_t index) {
  Rng rng(derive_seed(config.master_seed, "train", index));
  Candidate c;
  c.problem = gen_problem(rng, config.space);
  const Mode mode = rng.bernoulli(0.5) ? Mode::DFS : Mode::BFS;
  const HeuristicKind h = config.search.draw_heuristic(rng);
  const std::uint64_t search_seed = rng.next();
  c.trajectory = run_search(c.problem, config.search.make_config(mode, h, c.problem.target, search_seed));
  return c;
}

}  // namespace

TrainingSet build_training_set(const DatasetConfig& config, int jobs) {
  if (config.n_problems < 1) throw InvalidArgument("n_problems must be >= 1");
  TrainingSet out;
  TrainingSummary& sum = out.summary;
  const std::int64_t n = config.n_problems;
  const std::int64_t max_attempts = n * std::max(config.max_attempts_factor, 1);
  // Balanced sampling: DFS takes the odd leftover when n is odd.
  const std::array<std::int64_t, 2> quota{(n + 1) / 2, n / 2};
  std::unordered_set<std::string> kept_ids;
  const std::int64_t batch = std::max<std::int64_t>(256, 64 * std::max(jobs, 1));

  for (std::int64_t base = 0; sum.kept < n; base += batch) {
    if (base >= max_attempts) {
      throw ExhaustedRetries("kept " + std::to_string(sum.kept) + " of " + std::to_string(n) +
                             " problems after " + std::to_string(base) + " candidates");
    }
    const std::int64_t count = std::min(batch, max_attempts - base);
    std::vector<Candidate> cands(count);
    parallel_for(count, jobs, [&](std::size_t i) { cands[i] = make_candidate(config, base + i); });

    for (Candidate& c : cands) {
      if (sum.kept == n) break;
      const std::size_t m = mode_index(c.trajectory.mode_used);
      ++sum.attempts;
      ++sum.attempted_per_mode[m];
      sum.total_expansions += c.trajectory.expanded_nodes;
      if (!c.trajectory.solved) continue;
      ++sum.solved_per_mode[m];
      if (kept_ids.contains(c.problem.id)) continue;
      if (config.mode_sampling == ModeSampling::Balanced5050 && sum.kept_per_mode[m] >= quota[m]) {
        continue;
      }
      kept_ids.insert(c.problem.id);
      ++sum.kept;
      ++sum.kept_per_mode[m];
      ++sum.kept_per_heuristic[heuristic_index(c.trajectory.config.heuristic.kind)];
      out.examples.push_back({std::move(c.problem), std::move(c.trajectory)});
    }
  }
  std::sort(out.examples.begin(), out.examples.end(),
            [](const TrainingExample& a, const TrainingExample& b) { return a.problem.id < b.problem.id; });
  return out;
}

std::vector<Problem> build_natural_testset(int n, const std::unordered_set<std::string>& exclude_ids,
                                           const ProblemSpace& space, std::uint64_t seed,
                                           const std::unordered_set<Value>& exclude_targets) {
  if (n < 0) throw InvalidArgument("test set size must be non-negative");
  std::vector<Problem> out;
  std::unordered_set<std::string> picked;
  const std::int64_t max_attempts = 100 * static_cast<std::int64_t>(n) + 1000;
  for (std::int64_t i = 0; static_cast<int>(out.size()) < n; ++i) {
    if (i >= max_attempts) {
      throw ExhaustedRetries("found " + std::to_string(out.size()) + " of " + std::to_string(n) +
                             " unseen problems");
    }
    Rng rng(derive_seed(seed, "testset", i));
    ProblemSpace s = space;
    Problem p = gen_problem(rng, s);
    if (exclude_ids.contains(p.id) || picked.contains(p.id)) continue;
    if (exclude_targets.contains(p.target)) continue;
    picked.insert(p.id);
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(), [](const Problem& a, const Problem& b) { return a.id < b.id; });
  return out;
}

ModeSuccessProfile estimate_mode_profile(const Problem& problem, int n_runs, std::uint64_t seed,
                                         const SearchDefaults& defaults) {
  if (n_runs < 1) throw InvalidArgument("n_runs must be >= 1");
  ModeSuccessProfile prof;
  prof.problem_id = problem.id;
  prof.n_runs = n_runs;
  for (Mode mode : kAllModes) {
    int successes = 0;
    for (int r = 0; r < n_runs; ++r) {
      Rng rng(derive_seed(seed, "profile", problem.id, to_string(mode), r));
      const HeuristicKind h = defaults.draw_heuristic(rng);
      const auto cfg = defaults.make_config(mode, h, problem.target, rng.next());
      if (run_search(problem, cfg).solved) ++successes;
    }
    (mode == Mode::DFS ? prof.p_dfs : prof.p_bfs) = static_cast<double>(successes) / n_runs;
  }
  return prof;
}

std::vector<ModeSuccessProfile> estimate_mode_profiles(const std::vector<Problem>& pool, int n_runs,
                                                       std::uint64_t seed,
                                                       const SearchDefaults& defaults, int jobs) {
  std::vector<ModeSuccessProfile> out(pool.size());
  parallel_for(pool.size(), jobs,
               [&](std::size_t i) { out[i] = estimate_mode_profile(pool[i], n_runs, seed, defaults); });
  return out;
}

bool is_adversarial(const ModeSuccessProfile& p, double threshold) {
  const bool dfs_low = p.p_dfs < threshold;
  const bool bfs_low = p.p_bfs < threshold;
  return dfs_low != bfs_low;
}

std::vector<Problem> select_adversarial(const std::vector<Problem>& pool,
                                        const std::vector<ModeSuccessProfile>& profiles,
                                        double threshold) {
  if (threshold < 0.0 || threshold > 1.0) throw InvalidArgument("threshold must lie in [0, 1]");
  if (pool.size() != profiles.size()) throw InvalidArgument("one profile per pool problem required");
  std::vector<Problem> out;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (is_adversarial(profiles[i], threshold)) out.push_back(pool[i]);
  }
  if (out.empty()) {
    throw EmptyResult("no problem in a pool of " + std::to_string(pool.size()) +
                      " has exactly one mode below threshold " + std::to_string(threshold));
  }
  return out;
}

AdversarialSet build_adversarial_testset(const std::vector<Problem>& pool, int n_runs,
                                         double threshold, std::uint64_t seed,
                                         const SearchDefaults& defaults, int jobs) {
  if (threshold < 0.0 || threshold > 1.0) throw InvalidArgument("threshold must lie in [0, 1]");
  AdversarialSet out;
  out.profiles = estimate_mode_profiles(pool, n_runs, seed, defaults, jobs);
  out.problems = select_adversarial(pool, out.profiles, threshold);
  return out;
}

}  // namespace modc
