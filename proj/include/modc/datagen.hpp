#pragma once

// Rejection-sampled training data and the natural / adversarial test sets.

#include <array>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "modc/countdown.hpp"
#include "modc/random.hpp"
#include "modc/search.hpp"

namespace modc {

/// Search parameters shared by every sampled run. These are tuned
/// constants (see configs/defaults.conf), not values taken from any
/// published pipeline.
struct SearchDefaults {
  int beam_width = 4;
  int node_budget = 16;
  /// Heuristic noise as a fraction of the problem's target, which is the
  /// natural scale of both heuristics' scores.
  double noise_fraction = 0.5;
  std::vector<HeuristicKind> heuristics{HeuristicKind::SumDistance, HeuristicKind::NearestNumber};
  Rules rules;
  std::size_t record_limit = 256;

  SearchConfig make_config(Mode mode, HeuristicKind heuristic, Value target,
                           std::uint64_t seed) const;
  /// Heuristic drawn uniformly from `heuristics`.
  HeuristicKind draw_heuristic(Rng& rng) const;
};

struct ProblemSpace {
  Value target_min = 1;
  Value target_max = 200;
  int n_start = 4;
  Value number_min = 1;
  Value number_max = 50;
  Rules rules;
  /// Resampling attempts before gen_problem gives up.
  int retry_cap = 10'000;
};

/// Draws a target uniformly, then resamples starting numbers until the
/// target is reachable. Throws ExhaustedRetries after space.retry_cap tries.
Problem gen_problem(Rng& rng, const ProblemSpace& space);

enum class ModeSampling { Uniform, Balanced5050 };

std::string_view to_string(ModeSampling sampling);
ModeSampling parse_mode_sampling(std::string_view text);

struct DatasetConfig {
  ProblemSpace space;
  SearchDefaults search;
  int n_problems = 5000;
  ModeSampling mode_sampling = ModeSampling::Uniform;
  std::uint64_t master_seed = 0;
  /// Candidate budget as a multiple of n_problems.
  int max_attempts_factor = 50;
};

struct TrainingExample {
  Problem problem;
  Trajectory trajectory;
};

struct TrainingSummary {
  std::int64_t attempts = 0;
  std::int64_t kept = 0;
  std::array<std::int64_t, 2> attempted_per_mode{};
  std::array<std::int64_t, 2> solved_per_mode{};
  std::array<std::int64_t, 2> kept_per_mode{};
  std::array<std::int64_t, 2> kept_per_heuristic{};
  std::int64_t total_expansions = 0;
};

struct TrainingSet {
  /// Sorted by problem id; one example per problem.
  std::vector<TrainingExample> examples;
  TrainingSummary summary;
};

/// Generates candidates, runs one search each with a sampled mode and
/// heuristic, and keeps solved runs until n_problems distinct problems are
/// kept. Candidate i depends only on (master_seed, i), and acceptance is
/// decided in index order, so the result is independent of `jobs`.
TrainingSet build_training_set(const DatasetConfig& config, int jobs = 1);

/// n reachable problems, none of whose ids is in `exclude_ids`. With
/// `exclude_targets` non-empty, targets in it are also rejected. Sorted by id.
std::vector<Problem> build_natural_testset(int n, const std::unordered_set<std::string>& exclude_ids,
                                           const ProblemSpace& space, std::uint64_t seed,
                                           const std::unordered_set<Value>& exclude_targets = {});

struct ModeSuccessProfile {
  std::string problem_id;
  double p_dfs = 0.0;
  double p_bfs = 0.0;
  int n_runs = 0;

  double p(Mode mode) const { return mode == Mode::DFS ? p_dfs : p_bfs; }
};

/// n_runs searches per mode, each with a freshly drawn heuristic and seed.
ModeSuccessProfile estimate_mode_profile(const Problem& problem, int n_runs, std::uint64_t seed,
                                         const SearchDefaults& defaults);

std::vector<ModeSuccessProfile> estimate_mode_profiles(const std::vector<Problem>& pool, int n_runs,
                                                       std::uint64_t seed,
                                                       const SearchDefaults& defaults, int jobs = 1);

/// Exactly one mode below threshold, the other at or above it.
bool is_adversarial(const ModeSuccessProfile& profile, double threshold);

/// Problems of `pool` whose profile passes is_adversarial. `profiles` is
/// parallel to `pool`. Throws EmptyResult when nothing qualifies.
std::vector<Problem> select_adversarial(const std::vector<Problem>& pool,
                                        const std::vector<ModeSuccessProfile>& profiles,
                                        double threshold);

struct AdversarialSet {
  std::vector<Problem> problems;
  std::vector<ModeSuccessProfile> profiles;  // one per pool problem
};

AdversarialSet build_adversarial_testset(const std::vector<Problem>& pool, int n_runs,
                                         double threshold, std::uint64_t seed,
                                         const SearchDefaults& defaults, int jobs = 1);

}  // namespace modc
