// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "modc/countdown.hpp"
#include "modc/datagen.hpp"
#include "modc/io.hpp"
#include "modc/mode_discovery.hpp"
#include "modc/parallel.hpp"
#include "modc/passk.hpp"
#include "modc/sampler.hpp"
#include "oracles.hpp"

using namespace modc;

namespace {

constexpr std::uint64_t kSeed = 7;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Pipeline artifacts shared by several criteria, built once.
struct Pipeline {
  TrainingSet train;
  std::vector<Problem> natural;
  std::vector<Problem> adversarial;
  std::vector<ModeSuccessProfile> pool_profiles;
  SearchDefaults defaults;
  int jobs = default_jobs();

  void build_train() {
    DatasetConfig cfg;
    cfg.n_problems = 5000;
    cfg.master_seed = kSeed;
    train = build_training_set(cfg, jobs);
  }

  void build_testsets() {
    if (train.examples.empty()) build_train();
    std::unordered_set<std::string> seen;
    for (const auto& ex : train.examples) seen.insert(ex.problem.id);
    natural = build_natural_testset(500, seen, ProblemSpace{}, derive_seed(kSeed, "natural"));
    for (const auto& p : natural) seen.insert(p.id);
    const auto pool = build_natural_testset(2000, seen, ProblemSpace{}, derive_seed(kSeed, "pool"));
    AdversarialSet adv = build_adversarial_testset(pool, 40, 0.05, derive_seed(kSeed, "profiles"), defaults, jobs);
    adversarial = std::move(adv.problems);
    pool_profiles = std::move(adv.profiles);
  }
};

Pipeline& pipeline() {
  static Pipeline p;
  return p;
}

// Even k grid of p1 != p2: allocation strictly beats standard sampling at
// the mean success rate; equal within 1e-12 when p1 = p2.
Outcome criterion1() {
  long checked = 0, violations = 0;
  double worst_equal = 0.0;
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 20; ++j) {
      const double p1 = i * 0.05, p2 = j * 0.05;
      const double mean = (i + j) * 0.025;
      for (int k = 2; k <= 1024; k += 2) {
        ++checked;
        if (i == j) {
          worst_equal = std::max(worst_equal, std::abs(passk_modc(p1, p2, k) - passk_std(mean, k)));
          continue;
        }
        const double lm = log_fail_modc({p1, p2}, AllocationSpec::even(k));
        const double ls = log_fail_std(mean, k);
        if (!(lm < ls)) ++violations;
      }
    }
  }
  return {violations == 0 && worst_equal <= 1e-12,
          fmt("%ld grid points, %ld violations, max |diff| at p1=p2 %.2e", checked, violations, worst_equal)};
}

// E_w[pass@k] <= pass@k(E[w]); quadrature within 1e-8 of exact oracles and
// Monte Carlo within 3 stderr at 1e6 draws.
Outcome criterion2() {
  struct Dist {
    WeightDistribution d;
    std::function<long double(double, double, int)> exact_fail;
  };
  const std::vector<Dist> dists{
      {WeightDistribution::beta(0.3, 0.3), [](double a, double b, int k) { return oracle::beta_fail_moment(a, b, k, 0.3, 0.3); }},
      {WeightDistribution::beta(2, 2), [](double a, double b, int k) { return oracle::beta_fail_moment(a, b, k, 2, 2); }},
      {WeightDistribution::uniform(0, 1), [](double a, double b, int k) { return oracle::uniform_fail_moment(a, b, k, 0, 1); }},
      {WeightDistribution::uniform(0.25, 0.75),
       [](double a, double b, int k) { return oracle::uniform_fail_moment(a, b, k, 0.25, 0.75); }},
      {WeightDistribution::point_mass(0.5),
       [](double a, double b, int k) { return std::pow(1.0L - 0.5L * a - 0.5L * b, (long double)k); }},
  };
  int jensen_bad = 0, quad_bad = 0, mc_bad = 0, mc_runs = 0;
  double worst_quad = 0.0, worst_z = 0.0;
  for (const auto& [dist, exact] : dists) {
    for (int k : {2, 8, 64, 1024}) {
      for (int i = 0; i <= 10; ++i) {
        for (int j = 0; j <= 10; ++j) {
          const double p1 = i * 0.1, p2 = j * 0.1;
          const JensenGap g = jensen_gap(p1, p2, k, dist);
          if (g.expected_std > g.std_at_mean + 1e-12) ++jensen_bad;
          const double err = std::abs(g.expected_std - oracle::passk_from_fail(exact(p1, p2, k)));
          worst_quad = std::max(worst_quad, err);
          if (err > 1e-8) ++quad_bad;
        }
      }
      for (auto [p1, p2] : {std::pair{0.3, 0.1}, std::pair{0.05, 0.0}, std::pair{0.9, 0.2}}) {
        const MeanStderr mc = mc_expected_passk_mixture(p1, p2, k, dist, 1'000'000,
                                                        derive_seed(kSeed, "mc", dist.label(), k, mc_runs));
        const double q = expected_passk_mixture(p1, p2, k, dist);
        ++mc_runs;
        const double diff = std::abs(mc.mean - q);
        if (diff > 1e-12) worst_z = std::max(worst_z, diff / mc.stderr_);
        if (diff > 3.0 * mc.stderr_ + 1e-12) ++mc_bad;
      }
    }
  }
  return {jensen_bad == 0 && quad_bad == 0 && mc_bad == 0,
          fmt("Jensen violations %d, quadrature max err %.2e (%d > 1e-8), MC %d/%d beyond 3 stderr (max z %.2f)",
              jensen_bad, worst_quad, quad_bad, mc_bad, mc_runs, worst_z)};
}

Outcome criterion3() {
  long cases = 0, mismatches = 0;
  for (int n = 1; n <= 12; ++n) {
    for (int c = 0; c <= n; ++c) {
      for (int k = 1; k <= n; ++k) {
        ++cases;
        const auto [hit, total] = oracle::subset_passk(n, c, k);
        const Rational exact = passk_unbiased_exact(n, c, k);
        const bool rational_ok = exact == Rational{hit, total};
        const double ref = static_cast<double>(hit) / static_cast<double>(total);
        const bool double_ok = std::abs(passk_unbiased_estimate(n, c, k) - ref) <= 1e-14;
        if (!rational_ok || !double_ok) ++mismatches;
      }
    }
  }
  return {mismatches == 0, fmt("%ld (n,c,k) cases, %ld mismatches", cases, mismatches)};
}

Outcome criterion4() {
  const Problem p = Problem::make({10, 10, 4, 6}, 16);
  const Expression e{{{10, 10, Op::Mul, 100}, {100, 4, Op::Sub, 96}, {96, 6, Op::Div, 16}}};
  const bool verified = verify_expression(p, e);
  const auto all = enumerate_solutions(p);
  const bool found = std::find(all.begin(), all.end(), e) != all.end();
  return {verified && found, fmt("verify=%d, oracle lists it=%d among %zu solutions", verified, found, all.size())};
}

Outcome criterion5() {
  auto& pl = pipeline();
  pl.build_train();
  const auto& s = pl.train.summary;
  return {s.kept_per_mode[0] > s.kept_per_mode[1],
          fmt("kept DFS %lld vs BFS %lld from %lld attempts", (long long)s.kept_per_mode[0],
              (long long)s.kept_per_mode[1], (long long)s.attempts)};
}

Outcome criterion6() {
  auto& pl = pipeline();
  if (pl.natural.empty()) pl.build_testsets();
  const SearchTrialRunner runner(pl.defaults);
  const auto seed = derive_seed(kSeed, "histogram");
  const double standard = balance_histogram(pl.natural, SamplingPolicy::standard(WeightDistribution::beta(0.3, 0.3)),
                                            16, 1, seed, runner, pl.jobs).extremity_mass();
  const double prefix = balance_histogram(pl.natural, SamplingPolicy::modc_prefix(0.9), 16, 1, seed, runner, pl.jobs)
                            .extremity_mass();
  const double separate =
      balance_histogram(pl.natural, SamplingPolicy::modc_separate(), 16, 1, seed, runner, pl.jobs).extremity_mass();
  return {standard > prefix && prefix > separate && separate == 0.0,
          fmt("extremity mass standard %.3f > prefix %.3f > separate %.3f", standard, prefix, separate)};
}

Outcome criterion7() {
  auto& pl = pipeline();
  if (pl.natural.empty()) pl.build_testsets();
  const SearchTrialRunner runner(pl.defaults);
  const std::vector<SamplingPolicy> policies{SamplingPolicy::standard(WeightDistribution::beta(0.3, 0.3)),
                                             SamplingPolicy::modc_separate(), SamplingPolicy::random_partition()};
  const auto ks = doubling_ks(64);
  const auto seed = derive_seed(kSeed, "curves");
  const auto adv = compare_policies(pl.adversarial, policies, ks, 64, seed, runner, pl.jobs, "adversarial");
  const auto nat = compare_policies(pl.natural, policies, ks, 64, seed, runner, pl.jobs, "natural");
  const auto gap_at = [](const PolicyComparison& c, const std::string& policy) {
    for (const GapRow& g : c.gaps) {
      if (g.policy == policy && g.k == 64) return g;
    }
    return GapRow{};
  };
  const GapRow ga = gap_at(adv, "modc-separate");
  const GapRow gn = gap_at(nat, "modc-separate");
  const bool a = ga.gap >= 3.0 * ga.pooled_stderr;
  const bool b = ga.gap > gn.gap;
  const double sep = adv.curves[1].at(64), rp = adv.curves[2].at(64);
  const bool c = sep >= rp;
  return {a && b && c,
          fmt("(a) adversarial n=%zu gap %.4f vs 3*stderr %.4f: %s; (b) natural gap %.4f: %s; (c) separate %.4f vs "
              "random-partition %.4f: %s",
              pl.adversarial.size(), ga.gap, 3.0 * ga.pooled_stderr, a ? "ok" : "no", gn.gap, b ? "ok" : "no", sep, rp,
              c ? "ok" : "no")};
}

// The Bernoulli runner's sampling distribution is known exactly, so the
// simulated means are z-tested against the exact standard error of the
// estimator under the theoretical success rates. The empirical stderr is
// unreliable here: near pass@k = 1 the per-problem estimate is a rare-event
// variable whose sample spread is usually zero.
Outcome criterion8() {
  constexpr int kSamples = 64;
  constexpr int kProblems = 400;
  const std::vector<int> ks = doubling_ks(64);
  int checks = 0, bad = 0;
  double worst_z = 0.0;
  for (auto [p1, p2] : {std::pair{0.3, 0.05}, std::pair{0.6, 0.0}}) {
    std::vector<Problem> set;
    BernoulliTrialRunner runner;
    for (int i = 0; i < kProblems; ++i) {
      set.push_back(Problem::make({1, 2, 3, 4 + i}, 1));
      runner.set(set.back().id, p1, p2);
    }
    const auto beta = WeightDistribution::beta(0.3, 0.3);
    const auto pool_dfs = oracle::binomial_pmf(kSamples / 2, p1);
    const auto pool_bfs = oracle::binomial_pmf(kSamples / 2, p2);
    const auto pool_all_dfs = oracle::binomial_pmf(kSamples, p1);
    const auto pool_mixed = oracle::beta_binomial_mixture_pmf(kSamples, p1, p2, 0.3, 0.3);
    struct Case {
      SamplingPolicy policy;
      std::function<double(int)> theory;
      std::function<double(int)> variance;  // of one problem's estimate
    };
    const auto single_pool = [](const std::vector<long double>& pmf) {
      return [pmf](int k) {
        const auto m = oracle::fail_moments(kSamples, k, pmf);
        return static_cast<double>(m.second - m.mean * m.mean);
      };
    };
    const std::vector<Case> cases{
        {SamplingPolicy::standard(WeightDistribution::point_mass(1.0)), [&](int k) { return passk_std(p1, k); },
         single_pool(pool_all_dfs)},
        {SamplingPolicy::modc_separate(), [&](int k) { return passk_modc({p1, p2}, AllocationSpec::even(k)); },
         [&](int k) {
           const int k1 = (k + 1) / 2, k2 = k / 2;
           const auto a = oracle::fail_moments(kSamples / 2, k1, pool_dfs);
           const auto b = oracle::fail_moments(kSamples / 2, k2, pool_bfs);
           return static_cast<double>(a.second * b.second - a.mean * a.mean * b.mean * b.mean);
         }},
        {SamplingPolicy::standard(beta), [&](int k) { return expected_passk_mixture(p1, p2, k, beta); },
         single_pool(pool_mixed)},
    };
    for (const auto& [policy, theory, variance] : cases) {
      const PassKCurve c =
          passk_curve(set, policy, ks, kSamples, derive_seed(kSeed, "bernoulli", static_cast<int>(p1 * 100)), runner, 1);
      for (int k : ks) {
        ++checks;
        const double se = std::sqrt(std::max(variance(k), 0.0) / kProblems);
        const double diff = std::abs(c.at(k) - theory(k));
        if (diff > 1e-12) worst_z = std::max(worst_z, se > 0.0 ? diff / se : INFINITY);
        if (diff > 3.0 * se + 1e-12) {
          ++bad;
          std::fprintf(stderr, "  %s p=(%.2f,%.2f) k=%d sim %.8f theory %.8f exact stderr %.3g\n",
                       policy.label.c_str(), p1, p2, k, c.at(k), theory(k), se);
        }
      }
    }
  }
  return {bad == 0, fmt("%d of %d (policy, k) points beyond 3 exact stderr, max z %.2f", bad, checks, worst_z)};
}

Outcome criterion9() {
  auto& pl = pipeline();
  if (pl.natural.empty()) pl.build_testsets();
  DiscoveryConfig cfg;
  cfg.seed = derive_seed(kSeed, "discover");
  cfg.jobs = pl.jobs;
  const DiscoveryResult r = discover_modes(pl.train.examples, cfg);
  const double f1 = r.f1.value_or(0.0);

  const SearchTrialRunner runner(pl.defaults);
  const auto ks = doubling_ks(64);
  const auto seed = derive_seed(kSeed, "downstream");
  const SamplingPolicy discovered = cluster_policy(r);
  const PassKCurve a = passk_curve(pl.natural, discovered, ks, 64, seed, runner, pl.jobs, "natural");
  const PassKCurve b = passk_curve(pl.natural, SamplingPolicy::modc_separate(), ks, 64, seed, runner, pl.jobs, "natural");
  int bad = 0;
  double worst_z = 0.0;
  for (int k : ks) {
    const double se = std::hypot(a.stderr_at(k), b.stderr_at(k));
    const double diff = std::abs(a.at(k) - b.at(k));
    if (se > 0.0) worst_z = std::max(worst_z, diff / se);
    if (diff > 3.0 * se) ++bad;
  }
  return {f1 >= 0.9 && bad == 0, fmt("macro-F1 %.4f; %s vs modc-separate: %d ks beyond 3 stderr (max z %.2f)", f1,
                                     discovered.label.c_str(), bad, worst_z)};
}

Outcome criterion10() {
  // Finite differences on the fitted toy model.
  auto& pl = pipeline();
  if (pl.train.examples.empty()) pl.build_train();
  std::vector<TokenSeq> corpus;
  for (std::size_t i = 0; i < 400; ++i) {
    const auto& ex = pl.train.examples[i];
    corpus.push_back(serialize_trajectory(ex.problem, ex.trajectory));
  }
  const Vocabulary vocab = Vocabulary::trajectory_tokens();
  FitReport fit;
  ToyModel model = fit_toy_model(corpus, vocab, {}, &fit);
  double worst_fd = 0.0;
  Rng rng(derive_seed(kSeed, "fd"));
  for (int e = 0; e < 20; ++e) {
    const TokenSeq& ex = corpus[rng.integer(0, corpus.size() - 1)];
    const auto g = per_example_gradient(model, ex);
    for (int t = 0; t < 10; ++t) {
      const std::size_t i = rng.integer(0, g.size() - 1);
      const double fd = oracle::central_difference(
          [&](const std::vector<double>& x) {
            ToyModel m = model;
            m.logits = x;
            return example_log_likelihood(m, ex);
          },
          model.logits, i, 1e-5);
      const double rel = std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i]));
      worst_fd = std::max(worst_fd, rel);
    }
  }
  bool ll_monotone = true;
  for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i) {
    if (fit.log_likelihood[i] < fit.log_likelihood[i - 1]) ll_monotone = false;
  }

  // WCSS history on real gradient features.
  std::vector<std::vector<double>> features;
  for (const auto& seq : corpus) {
    features.push_back(rademacher_project(per_example_gradient(model, seq), 512, kSeed).projected);
  }
  bool wcss_monotone = true;
  for (int r = 0; r < 5; ++r) {
    KMeansOptions km;
    km.n_restarts = 1;
    km.seed = derive_seed(kSeed, "wcss", r);
    const auto res = kmeans(features, km);
    for (std::size_t i = 1; i < res.wcss_history.size(); ++i) {
      if (res.wcss_history[i] > res.wcss_history[i - 1] * (1 + 1e-12)) wcss_monotone = false;
    }
  }

  // Byte-reproducibility across worker counts.
  const int many = 4;
  const auto render = [&](int jobs) {
    std::ostringstream out;
    DatasetConfig cfg;
    cfg.n_problems = 300;
    cfg.master_seed = kSeed;
    const TrainingSet ts = build_training_set(cfg, jobs);
    std::vector<io::json> recs;
    for (const auto& ex : ts.examples) recs.push_back(io::example_to_json(ex));
    out << io::to_jsonl(recs);
    std::vector<Problem> probs;
    for (std::size_t i = 0; i < 60; ++i) probs.push_back(ts.examples[i].problem);
    for (const auto& p : estimate_mode_profiles(probs, 10, kSeed, SearchDefaults{}, jobs)) {
      out << io::profile_to_json(p).dump() << "\n";
    }
    const SearchTrialRunner runner;
    const auto cmp = compare_policies(probs, {SamplingPolicy::standard(WeightDistribution::beta(0.3, 0.3)),
                                              SamplingPolicy::modc_separate(), SamplingPolicy::modc_prefix(0.9)},
                                      doubling_ks(16), 16, kSeed, runner, jobs, "repro");
    out << io::curves_to_csv(cmp.curves);
    out << io::histograms_to_csv({balance_histogram(probs, SamplingPolicy::standard(WeightDistribution::beta(0.3, 0.3)),
                                                    16, 2, kSeed, runner, jobs)});
    DiscoveryConfig dc;
    dc.seed = kSeed;
    dc.jobs = jobs;
    dc.n_restarts = 4;
    for (int c : discover_modes(ts.examples, dc).cluster) out << c;
    return out.str();
  };
  const std::string one = render(1), n = render(many);
  const bool repro = one == n && one == render(1);

  return {worst_fd <= 1e-5 && ll_monotone && wcss_monotone && repro,
          fmt("max FD rel err %.2e, LL monotone %d, WCSS monotone %d, identical bytes at 1 vs %d workers %d (%zu bytes)",
              worst_fd, ll_monotone, wcss_monotone, many, repro, one.size())};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    Outcome (*fn)();
  };
  const Criterion criteria[] = {
      {1, "even allocation strictly beats standard sampling", 10, criterion1},
      {2, "mixture expectation bounded by its value at the mean", 30, criterion2},
      {3, "unbiased estimator equals subset enumeration", 5, criterion3},
      {4, "worked example verifies and is enumerated", 1, criterion4},
      {5, "DFS-skewed training set under uniform mode sampling", 600, criterion5},
      {6, "balance histogram extremity ordering", 600, criterion6},
      {7, "allocation gains on adversarial vs natural sets", 1800, criterion7},
      {8, "simulated curves match theory", 60, criterion8},
      {9, "gradient clustering recovers modes", 900, criterion9},
      {10, "numerical hygiene and reproducibility", 120, criterion10},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("criterion %2d %s  %s: %s [%.2fs of %.0fs%s]\n", c.id, pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), secs, c.budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
