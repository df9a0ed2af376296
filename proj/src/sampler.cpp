#include "modc/sampler.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "modc/error.hpp"
#include "modc/parallel.hpp"

namespace modc {

namespace {

std::string fmt(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

double parse_double(std::string_view s, std::string_view context) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidArgument("bad number '" + std::string(s) + "' in " + std::string(context));
  }
  return v;
}

}  // namespace

SamplingPolicy SamplingPolicy::standard(WeightDistribution dist) {
  SamplingPolicy p;
  p.kind = Kind::StandardMixture;
  p.label = "standard:" + dist.label();
  p.weight_dist = std::move(dist);
  return p;
}

SamplingPolicy SamplingPolicy::modc_separate() {
  SamplingPolicy p;
  p.kind = Kind::ModCSeparate;
  p.label = "modc-separate";
  return p;
}

SamplingPolicy SamplingPolicy::modc_prefix(double fidelity) {
  if (!(fidelity >= 0.5 && fidelity <= 1.0)) throw InvalidArgument("prefix fidelity must lie in [0.5, 1]");
  SamplingPolicy p;
  p.kind = Kind::ModCPrefix;
  p.fidelity = fidelity;
  p.label = "modc-prefix:" + fmt(fidelity);
  return p;
}

SamplingPolicy SamplingPolicy::random_partition(std::uint64_t seed, WeightDistribution dist) {
  SamplingPolicy p;
  p.kind = Kind::RandomPartition;
  p.partition_seed = seed;
  p.weight_dist = std::move(dist);
  p.label = seed == 0 ? "random-partition" : "random-partition:" + std::to_string(seed);
  return p;
}

SamplingPolicy SamplingPolicy::modc_clusters(std::vector<double> dfs_fractions, double concentration) {
  if (dfs_fractions.empty()) throw InvalidArgument("cluster policy needs at least one cluster");
  for (double q : dfs_fractions) {
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("cluster DFS share outside [0, 1]");
  }
  if (!(concentration > 0.0)) throw InvalidArgument("cluster concentration must be positive");
  SamplingPolicy p;
  p.kind = Kind::ModCClusters;
  p.cluster_concentration = concentration;
  p.label = "modc-clusters:";
  for (std::size_t i = 0; i < dfs_fractions.size(); ++i) {
    p.label += (i ? "," : "") + fmt(dfs_fractions[i]);
  }
  p.group_dfs_fraction = std::move(dfs_fractions);
  return p;
}

int SamplingPolicy::n_groups() const {
  switch (kind) {
    case Kind::StandardMixture: return 1;
    case Kind::ModCSeparate:
    case Kind::ModCPrefix:
    case Kind::RandomPartition: return 2;
    case Kind::ModCClusters: return static_cast<int>(group_dfs_fraction.size());
  }
  return 1;
}

SamplingPolicy parse_policy(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string_view arg = colon == std::string_view::npos ? "" : text.substr(colon + 1);
  if (name == "modc-separate" && arg.empty()) return SamplingPolicy::modc_separate();
  if (name == "standard") {
    return SamplingPolicy::standard(arg.empty() ? WeightDistribution::beta(0.3, 0.3)
                                                : parse_weight_distribution(arg));
  }
  if (name == "modc-prefix") return SamplingPolicy::modc_prefix(arg.empty() ? 0.9 : parse_double(arg, text));
  if (name == "random-partition") {
    std::uint64_t seed = 0;
    if (!arg.empty()) {
      auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), seed);
      if (ec != std::errc() || ptr != arg.data() + arg.size()) {
        throw InvalidArgument("bad partition seed in " + std::string(text));
      }
    }
    return SamplingPolicy::random_partition(seed);
  }
  if (name == "modc-clusters" && !arg.empty()) {
    std::vector<double> q;
    std::string_view rest = arg;
    while (true) {
      const auto comma = rest.find(',');
      q.push_back(parse_double(rest.substr(0, comma), text));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    return SamplingPolicy::modc_clusters(std::move(q));
  }
  throw InvalidArgument("unknown sampling policy '" + std::string(text) + "'");
}

Trajectory SearchTrialRunner::run(const Problem& problem, Mode mode, std::uint64_t seed) const {
  Rng rng(seed);
  const HeuristicKind h = defaults_.draw_heuristic(rng);
  return run_search(problem, defaults_.make_config(mode, h, problem.target, rng.next()));
}

void BernoulliTrialRunner::set(const std::string& problem_id, double p_dfs, double p_bfs) {
  probs_[problem_id] = {p_dfs, p_bfs};
}

Trajectory BernoulliTrialRunner::run(const Problem& problem, Mode mode, std::uint64_t seed) const {
  Trajectory t;
  t.problem_id = problem.id;
  t.mode_used = mode;
  t.config.mode = mode;
  t.config.seed = seed;
  auto it = probs_.find(problem.id);
  if (it != probs_.end()) {
    Rng rng(seed);
    t.solved = rng.bernoulli(mode == Mode::DFS ? it->second.first : it->second.second);
  }
  return t;
}

std::vector<double> group_dfs_probabilities(const Problem& problem, const SamplingPolicy& policy,
                                            std::uint64_t seed) {
  Rng rng(derive_seed(seed, "plan", problem.id, policy.label, policy.partition_seed));
  using Kind = SamplingPolicy::Kind;
  switch (policy.kind) {
    case Kind::StandardMixture: return {std::clamp(policy.weight_dist.sample(rng), 0.0, 1.0)};
    case Kind::ModCSeparate: return {1.0, 0.0};
    case Kind::ModCPrefix: {
      const bool dfs_obeys = rng.bernoulli(policy.fidelity);
      const bool bfs_obeys = rng.bernoulli(policy.fidelity);
      return {dfs_obeys ? 1.0 : 0.0, bfs_obeys ? 0.0 : 1.0};
    }
    case Kind::RandomPartition: {
      const double wa = std::clamp(policy.weight_dist.sample(rng), 0.0, 1.0);
      const double wb = std::clamp(policy.weight_dist.sample(rng), 0.0, 1.0);
      return {wa, wb};
    }
    case Kind::ModCClusters: {
      std::vector<double> out;
      const double c = policy.cluster_concentration;
      for (double q : policy.group_dfs_fraction) {
        out.push_back(q <= 0.0 || q >= 1.0 ? q : rng.beta(c * q, c * (1.0 - q)));
      }
      return out;
    }
  }
  throw InvalidArgument("unknown policy kind");
}

namespace {

struct GroupedDraws {
  std::vector<int> group;
  std::vector<Trajectory> trajectories;
};

GroupedDraws draw_samples(const Problem& problem, const SamplingPolicy& policy, int n,
                          std::uint64_t seed, const TrialRunner& runner) {
  const std::vector<double> dfs_prob = group_dfs_probabilities(problem, policy, seed);
  const AllocationSpec alloc = AllocationSpec::even(n, static_cast<int>(dfs_prob.size()));
  GroupedDraws out;
  out.group.reserve(n);
  out.trajectories.reserve(n);
  int j = 0;
  for (std::size_t g = 0; g < dfs_prob.size(); ++g) {
    for (int i = 0; i < alloc.per_mode[g]; ++i, ++j) {
      const std::uint64_t s = derive_seed(seed, "sample", problem.id, policy.label, j);
      Rng rng(s);
      const Mode mode = rng.bernoulli(dfs_prob[g]) ? Mode::DFS : Mode::BFS;
      out.group.push_back(static_cast<int>(g));
      out.trajectories.push_back(runner.run(problem, mode, rng.next()));
    }
  }
  return out;
}

double bfs_share(const std::vector<Trajectory>& ts) {
  if (ts.empty()) return 0.0;
  const auto bfs = std::count_if(ts.begin(), ts.end(),
                                 [](const Trajectory& t) { return t.mode_used == Mode::BFS; });
  return static_cast<double>(bfs) / ts.size();
}

}  // namespace

SampleBatch sample_batch(const Problem& problem, const SamplingPolicy& policy, int k,
                         std::uint64_t seed, const TrialRunner& runner) {
  if (k < 1) throw InvalidArgument("batch size k must be >= 1");
  GroupedDraws d = draw_samples(problem, policy, k, seed, runner);
  SampleBatch b;
  b.problem_id = problem.id;
  b.policy_label = policy.label;
  b.group = std::move(d.group);
  b.trajectories = std::move(d.trajectories);
  b.realized_bfs_fraction = bfs_share(b.trajectories);
  return b;
}

double BalanceHistogram::extremity_mass() const {
  if (fractions.empty()) return 0.0;
  const auto n = std::count_if(fractions.begin(), fractions.end(),
                               [](double f) { return f < 0.1 || f > 0.9; });
  return static_cast<double>(n) / fractions.size();
}

BalanceHistogram balance_histogram(const std::vector<Problem>& testset, const SamplingPolicy& policy,
                                   int k, int batches_per_problem, std::uint64_t seed,
                                   const TrialRunner& runner, int jobs, int bins) {
  if (k < 1 || batches_per_problem < 1 || bins < 1) {
    throw InvalidArgument("k, batches per problem and bin count must be >= 1");
  }
  BalanceHistogram h;
  h.label = policy.label;
  h.counts.assign(bins, 0);
  for (int i = 0; i <= bins; ++i) h.edges.push_back(static_cast<double>(i) / bins);
  h.fractions.assign(testset.size(), 0.0);
  parallel_for(testset.size(), jobs, [&](std::size_t i) {
    double total = 0.0;
    for (int b = 0; b < batches_per_problem; ++b) {
      total += sample_batch(testset[i], policy, k, derive_seed(seed, "batch", b), runner)
                   .realized_bfs_fraction;
    }
    h.fractions[i] = total / batches_per_problem;
  });
  for (double f : h.fractions) {
    const int bin = std::min(bins - 1, static_cast<int>(std::floor(f * bins)));
    ++h.counts[bin];
  }
  return h;
}

double PassKCurve::at(int k) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return values[i];
  }
  throw InvalidArgument("curve has no value at k = " + std::to_string(k));
}

double PassKCurve::stderr_at(int k) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return stderrs[i];
  }
  throw InvalidArgument("curve has no value at k = " + std::to_string(k));
}

std::vector<int> doubling_ks(int k_max) {
  if (k_max < 1) throw InvalidArgument("k_max must be >= 1");
  std::vector<int> ks;
  for (int k = 1; k <= k_max; k *= 2) ks.push_back(k);
  if (ks.back() != k_max) ks.push_back(k_max);
  return ks;
}

namespace {

void validate_ks(const std::vector<int>& ks, int n_samples) {
  if (ks.empty()) throw InvalidArgument("need at least one k");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 1) throw InvalidArgument("k values must be >= 1");
    if (i > 0 && ks[i] <= ks[i - 1]) throw InvalidArgument("k values must be strictly ascending");
  }
  if (ks.back() > n_samples) {
    throw BudgetExceedsSamples("k = " + std::to_string(ks.back()) + " exceeds " +
                               std::to_string(n_samples) + " samples per problem");
  }
}

}  // namespace

PassKCurve passk_curve(const std::vector<Problem>& testset, const SamplingPolicy& policy,
                       const std::vector<int>& ks, int n_samples, std::uint64_t seed,
                       const TrialRunner& runner, int jobs, std::string testset_label) {
  validate_ks(ks, n_samples);
  const int groups = policy.n_groups();
  const AllocationSpec pools = AllocationSpec::even(n_samples, groups);
  std::vector<AllocationSpec> allocs;
  for (int k : ks) allocs.push_back(AllocationSpec::even(k, groups));

  // estimates[problem][k index]
  std::vector<std::vector<double>> estimates(testset.size());
  parallel_for(testset.size(), jobs, [&](std::size_t i) {
    const GroupedDraws d = draw_samples(testset[i], policy, n_samples, seed, runner);
    std::vector<int> successes(groups, 0);
    for (std::size_t j = 0; j < d.trajectories.size(); ++j) {
      if (d.trajectories[j].solved) ++successes[d.group[j]];
    }
    auto& row = estimates[i];
    row.resize(ks.size());
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      double fail = 1.0;
      for (int g = 0; g < groups; ++g) {
        fail *= fail_all_estimate(pools.per_mode[g], successes[g], allocs[ki].per_mode[g]);
      }
      row[ki] = 1.0 - fail;
    }
  });

  PassKCurve c;
  c.ks = ks;
  c.strategy = policy.label;
  c.testset = std::move(testset_label);
  c.n_samples = n_samples;
  c.n_problems = static_cast<int>(testset.size());
  const double n = static_cast<double>(testset.size());
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    double mean = 0.0;
    for (const auto& row : estimates) mean += row[ki];
    mean = n > 0 ? mean / n : 0.0;
    double ss = 0.0;
    for (const auto& row : estimates) ss += (row[ki] - mean) * (row[ki] - mean);
    c.values.push_back(mean);
    c.stderrs.push_back(n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0);
  }
  return c;
}

std::vector<GapRow> curve_gaps(const PassKCurve& curve, const PassKCurve& baseline) {
  if (curve.ks != baseline.ks) throw SchemaMismatch("curves were evaluated at different k values");
  std::vector<GapRow> rows;
  for (std::size_t i = 0; i < curve.ks.size(); ++i) {
    rows.push_back({curve.ks[i], curve.strategy, baseline.strategy,
                    curve.values[i] - baseline.values[i],
                    std::hypot(curve.stderrs[i], baseline.stderrs[i])});
  }
  return rows;
}

PolicyComparison compare_policies(const std::vector<Problem>& testset,
                                  const std::vector<SamplingPolicy>& policies,
                                  const std::vector<int>& ks, int n_samples, std::uint64_t seed,
                                  const TrialRunner& runner, int jobs, std::string testset_label) {
  if (policies.empty()) throw InvalidArgument("need at least one policy");
  PolicyComparison out;
  for (const SamplingPolicy& p : policies) {
    out.curves.push_back(passk_curve(testset, p, ks, n_samples, seed, runner, jobs, testset_label));
  }
  std::size_t base = 0;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    if (policies[i].kind == SamplingPolicy::Kind::StandardMixture) {
      base = i;
      break;
    }
  }
  for (std::size_t i = 0; i < policies.size(); ++i) {
    if (i == base) continue;
    auto rows = curve_gaps(out.curves[i], out.curves[base]);
    out.gaps.insert(out.gaps.end(), rows.begin(), rows.end());
  }
  return out;
}

}  // namespace modc
