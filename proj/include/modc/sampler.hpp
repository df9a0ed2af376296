#pragma once

// Test-time sampling regimes emulated over the stochastic searchers.
//
// A policy turns each problem into a set of sample groups. Every group gets
// an even share of the budget and a per-problem probability of using DFS:
//
//   StandardMixture   one group; w ~ weight_dist drawn once per problem
//   ModCSeparate      DFS specialist + BFS specialist
//   ModCPrefix        one group per prefix; each prefix is honoured for the
//                     whole problem with probability `fidelity`, else the
//                     sampler runs the other mode for that prefix
//   RandomPartition   two specialists trained on random halves of the data;
//                     each inherits the full mixture, so each draws its own w
//   ModCClusters      one specialist per discovered cluster, using DFS with a
//                     per-problem weight centred on the cluster's DFS share

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "modc/countdown.hpp"
#include "modc/datagen.hpp"
#include "modc/passk.hpp"
#include "modc/search.hpp"

namespace modc {

struct SamplingPolicy {
  enum class Kind { StandardMixture, ModCSeparate, ModCPrefix, RandomPartition, ModCClusters };

  Kind kind = Kind::ModCSeparate;
  WeightDistribution weight_dist = WeightDistribution::beta(0.3, 0.3);
  double fidelity = 1.0;
  std::uint64_t partition_seed = 0;
  std::vector<double> group_dfs_fraction;
  /// alpha + beta of the per-problem Beta weight used by cluster specialists.
  double cluster_concentration = 0.6;
  /// Names the policy in outputs and keys its random streams.
  std::string label;

  static SamplingPolicy standard(WeightDistribution dist);
  static SamplingPolicy modc_separate();
  static SamplingPolicy modc_prefix(double fidelity);
  static SamplingPolicy random_partition(std::uint64_t seed = 0,
                                         WeightDistribution dist = WeightDistribution::beta(0.3, 0.3));
  /// Groups are ordered as given; callers put the largest cluster first.
  static SamplingPolicy modc_clusters(std::vector<double> dfs_fractions, double concentration = 0.6);

  int n_groups() const;
  bool is_allocating() const { return kind != Kind::StandardMixture; }
};

/// "modc-separate", "standard:beta(0.3,0.3)", "modc-prefix:0.9",
/// "random-partition[:seed]", "modc-clusters:0.98,0.02".
SamplingPolicy parse_policy(std::string_view text);

/// Produces one trajectory for a requested mode. The runner owns every
/// remaining random choice (heuristic, search seed) and must derive them
/// from `seed` alone.
class TrialRunner {
 public:
  virtual ~TrialRunner() = default;
  virtual Trajectory run(const Problem& problem, Mode mode, std::uint64_t seed) const = 0;
};

class SearchTrialRunner final : public TrialRunner {
 public:
  explicit SearchTrialRunner(SearchDefaults defaults = {}) : defaults_(std::move(defaults)) {}
  Trajectory run(const Problem& problem, Mode mode, std::uint64_t seed) const override;

 private:
  SearchDefaults defaults_;
};

/// Success is a coin flip with a known per-problem, per-mode probability.
/// Problems without an entry always fail.
class BernoulliTrialRunner final : public TrialRunner {
 public:
  void set(const std::string& problem_id, double p_dfs, double p_bfs);
  Trajectory run(const Problem& problem, Mode mode, std::uint64_t seed) const override;

 private:
  std::unordered_map<std::string, std::pair<double, double>> probs_;
};

/// Per-problem DFS probability of each sample group.
std::vector<double> group_dfs_probabilities(const Problem& problem, const SamplingPolicy& policy,
                                            std::uint64_t seed);

struct SampleBatch {
  std::string problem_id;
  std::vector<Trajectory> trajectories;
  std::vector<int> group;  // group index of each trajectory
  std::string policy_label;
  double realized_bfs_fraction = 0.0;
};

SampleBatch sample_batch(const Problem& problem, const SamplingPolicy& policy, int k,
                         std::uint64_t seed, const TrialRunner& runner);

struct BalanceHistogram {
  std::vector<double> edges;  // bins + 1 edges on [0, 1]
  std::vector<int> counts;
  std::string label;
  std::vector<double> fractions;  // one per problem

  /// Share of problems with BFS fraction < 0.1 or > 0.9.
  double extremity_mass() const;
};

BalanceHistogram balance_histogram(const std::vector<Problem>& testset, const SamplingPolicy& policy,
                                   int k, int batches_per_problem, std::uint64_t seed,
                                   const TrialRunner& runner, int jobs = 1, int bins = 20);

struct PassKCurve {
  std::vector<int> ks;
  std::vector<double> values;
  std::vector<double> stderrs;
  std::string strategy;
  std::string testset;
  int n_samples = 0;
  int n_problems = 0;

  double at(int k) const;
  double stderr_at(int k) const;
};

/// Powers of two from 1 up to and including k_max (k_max appended if it is
/// not a power of two).
std::vector<int> doubling_ks(int k_max);

/// Per-problem unbiased pass@k from n_samples draws, averaged over problems.
/// Allocating policies estimate each group's pool separately and combine
/// the group failure estimates by product. Throws BudgetExceedsSamples when
/// max(ks) > n_samples and InvalidArgument when ks is not strictly ascending.
PassKCurve passk_curve(const std::vector<Problem>& testset, const SamplingPolicy& policy,
                       const std::vector<int>& ks, int n_samples, std::uint64_t seed,
                       const TrialRunner& runner, int jobs = 1, std::string testset_label = "");

struct GapRow {
  int k = 0;
  std::string policy;
  std::string baseline;
  double gap = 0.0;
  double pooled_stderr = 0.0;
};

struct PolicyComparison {
  std::vector<PassKCurve> curves;
  /// Every policy against the first StandardMixture policy (or the first
  /// policy when none is a standard mixture).
  std::vector<GapRow> gaps;
};

PolicyComparison compare_policies(const std::vector<Problem>& testset,
                                  const std::vector<SamplingPolicy>& policies,
                                  const std::vector<int>& ks, int n_samples, std::uint64_t seed,
                                  const TrialRunner& runner, int jobs = 1,
                                  std::string testset_label = "");

std::vector<GapRow> curve_gaps(const PassKCurve& curve, const PassKCurve& baseline);

}  // namespace modc
