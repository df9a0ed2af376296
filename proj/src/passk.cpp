#include "modc/passk.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "modc/error.hpp"
#include "modc/quadrature.hpp"

namespace modc {

namespace {

constexpr int kQuadratureNodes = 64;
// Below this budget powers are taken directly; above it in log space.
constexpr int kLogSpaceThreshold = 64;

void check_prob(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("probability outside [0, 1]");
}

void check_k(int k) {
  if (k < 0) throw InvalidArgument("budget k must be non-negative");
}

double fail_pow(double p, int k) {
  if (k == 0) return 1.0;
  if (p >= 1.0) return 0.0;
  if (k <= kLogSpaceThreshold) return std::pow(1.0 - p, k);
  return std::exp(k * std::log1p(-p));
}

}  // namespace

AllocationSpec AllocationSpec::even(int k, int n_modes) {
  if (n_modes < 1) throw InvalidArgument("need at least one mode");
  check_k(k);
  AllocationSpec a;
  a.k = k;
  a.per_mode.assign(n_modes, k / n_modes);
  for (int i = 0; i < k % n_modes; ++i) ++a.per_mode[i];
  return a;
}

void AllocationSpec::validate() const {
  for (int n : per_mode) {
    if (n < 0) throw AllocationMismatch("negative per-mode allocation");
  }
  if (std::accumulate(per_mode.begin(), per_mode.end(), 0) != k) {
    throw AllocationMismatch("per-mode allocation does not sum to k");
  }
}

WeightDistribution WeightDistribution::point_mass(double w) {
  check_prob(w);
  return {Kind::PointMass, w, 0.0, {}};
}

WeightDistribution WeightDistribution::beta(double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw InvalidArgument("Beta parameters must be positive");
  return {Kind::Beta, alpha, beta, {}};
}

WeightDistribution WeightDistribution::uniform(double lo, double hi) {
  check_prob(lo);
  check_prob(hi);
  if (lo > hi) throw InvalidArgument("uniform interval must satisfy lo <= hi");
  return {Kind::Uniform, lo, hi, {}};
}

WeightDistribution WeightDistribution::empirical(std::vector<double> samples) {
  if (samples.empty()) throw InvalidArgument("empirical distribution needs samples");
  for (double w : samples) check_prob(w);
  return {Kind::Empirical, 0.0, 0.0, std::move(samples)};
}

double WeightDistribution::mean() const {
  switch (kind) {
    case Kind::PointMass: return a;
    case Kind::Beta: return a / (a + b);
    case Kind::Uniform: return 0.5 * (a + b);
    case Kind::Empirical:
      return std::accumulate(samples.begin(), samples.end(), 0.0) / samples.size();
  }
  return 0.0;
}

double WeightDistribution::sample(Rng& rng) const {
  switch (kind) {
    case Kind::PointMass: return a;
    case Kind::Beta: return rng.beta(a, b);
    case Kind::Uniform: return rng.uniform(a, b);
    case Kind::Empirical:
      return samples[static_cast<std::size_t>(rng.integer(0, samples.size() - 1))];
  }
  return a;
}

namespace {

std::string fmt(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

}  // namespace

std::string WeightDistribution::label() const {
  switch (kind) {
    case Kind::PointMass: return "point(" + fmt(a) + ")";
    case Kind::Beta: return "beta(" + fmt(a) + "," + fmt(b) + ")";
    case Kind::Uniform: return "uniform(" + fmt(a) + "," + fmt(b) + ")";
    case Kind::Empirical: return "empirical(" + std::to_string(samples.size()) + ")";
  }
  return "";
}

WeightDistribution parse_weight_distribution(std::string_view text) {
  const auto open = text.find('(');
  if (open == std::string_view::npos || text.back() != ')') {
    throw InvalidArgument("weight distribution must look like name(args): " + std::string(text));
  }
  const std::string_view name = text.substr(0, open);
  std::string_view args = text.substr(open + 1, text.size() - open - 2);
  std::vector<double> values;
  while (!args.empty()) {
    const auto comma = args.find(',');
    std::string_view tok = args.substr(0, comma);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw InvalidArgument("bad number '" + std::string(tok) + "' in " + std::string(text));
    }
    values.push_back(v);
    if (comma == std::string_view::npos) break;
    args.remove_prefix(comma + 1);
  }
  auto need = [&](std::size_t n) {
    if (values.size() != n) throw InvalidArgument("wrong argument count in " + std::string(text));
  };
  if (name == "point") {
    need(1);
    return WeightDistribution::point_mass(values[0]);
  }
  if (name == "beta") {
    need(2);
    return WeightDistribution::beta(values[0], values[1]);
  }
  if (name == "uniform") {
    need(2);
    return WeightDistribution::uniform(values[0], values[1]);
  }
  throw InvalidArgument("unknown weight distribution '" + std::string(name) + "'");
}

double log_fail_std(double p, int k) {
  check_prob(p);
  check_k(k);
  if (k == 0) return 0.0;
  if (p >= 1.0) return -std::numeric_limits<double>::infinity();
  return k * std::log1p(-p);
}

double log_fail_modc(const std::vector<double>& probs, const AllocationSpec& alloc) {
  if (probs.size() != alloc.per_mode.size()) {
    throw AllocationMismatch(std::to_string(probs.size()) + " mode probabilities for " +
                             std::to_string(alloc.per_mode.size()) + " allocation entries");
  }
  alloc.validate();
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) s += log_fail_std(probs[i], alloc.per_mode[i]);
  return s;
}

double passk_std(double p, int k) {
  check_prob(p);
  check_k(k);
  if (k > kLogSpaceThreshold) return -std::expm1(log_fail_std(p, k));
  return 1.0 - fail_pow(p, k);
}

double passk_modc(const std::vector<double>& probs, const AllocationSpec& alloc) {
  if (alloc.k > kLogSpaceThreshold) return -std::expm1(log_fail_modc(probs, alloc));
  if (probs.size() != alloc.per_mode.size()) {
    throw AllocationMismatch(std::to_string(probs.size()) + " mode probabilities for " +
                             std::to_string(alloc.per_mode.size()) + " allocation entries");
  }
  alloc.validate();
  double fail = 1.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    check_prob(probs[i]);
    fail *= fail_pow(probs[i], alloc.per_mode[i]);
  }
  return 1.0 - fail;
}

double passk_modc(double p1, double p2, int k) {
  return passk_modc({p1, p2}, AllocationSpec::even(k, 2));
}

double passk_mixture(double p1, double p2, double w, int k) {
  check_prob(p1);
  check_prob(p2);
  check_prob(w);
  const double q = std::clamp(w * p1 + (1.0 - w) * p2, 0.0, 1.0);
  return passk_std(q, k);
}

double expected_passk_mixture(double p1, double p2, int k, const WeightDistribution& dist) {
  auto f = [&](double w) { return passk_mixture(p1, p2, std::clamp(w, 0.0, 1.0), k); };
  switch (dist.kind) {
    case WeightDistribution::Kind::PointMass: return f(dist.a);
    case WeightDistribution::Kind::Beta:
      return gauss_beta_rule(kQuadratureNodes, dist.a, dist.b).integrate(f);
    case WeightDistribution::Kind::Uniform:
      return gauss_uniform_rule(kQuadratureNodes, dist.a, dist.b).integrate(f);
    case WeightDistribution::Kind::Empirical: {
      double s = 0.0;
      for (double w : dist.samples) s += f(w);
      return s / dist.samples.size();
    }
  }
  return 0.0;
}

MeanStderr mc_expected_passk_mixture(double p1, double p2, int k, const WeightDistribution& dist,
                                     std::int64_t n_draws, std::uint64_t seed) {
  if (n_draws < 2) throw InvalidArgument("Monte Carlo needs at least two draws");
  Rng rng(seed);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t i = 0; i < n_draws; ++i) {
    const double x = passk_mixture(p1, p2, std::clamp(dist.sample(rng), 0.0, 1.0), k);
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
  }
  const double var = m2 / static_cast<double>(n_draws - 1);
  return {mean, std::sqrt(var / static_cast<double>(n_draws))};
}

JensenGap jensen_gap(double p1, double p2, int k, const WeightDistribution& dist) {
  JensenGap g;
  g.expected_std = expected_passk_mixture(p1, p2, k, dist);
  g.std_at_mean = passk_mixture(p1, p2, dist.mean(), k);
  g.modc_even = passk_modc(p1, p2, k);
  return g;
}

double fail_all_estimate(int n, int c, int k) {
  if (n < 1 || c < 0 || c > n) throw InvalidArgument("need n >= 1 and 0 <= c <= n");
  if (k < 0) throw InvalidArgument("k must be non-negative");
  if (k > n) {
    throw BudgetExceedsSamples("k = " + std::to_string(k) + " exceeds n = " + std::to_string(n) +
                               " samples");
  }
  if (n - c < k) return 0.0;
  double prod = 1.0;
  for (int i = n - c + 1; i <= n; ++i) prod *= 1.0 - static_cast<double>(k) / i;
  return prod;
}

double passk_unbiased_estimate(int n, int c, int k) {
  if (k < 1) throw InvalidArgument("k must be >= 1");
  return 1.0 - fail_all_estimate(n, c, k);
}

namespace {

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
  return r;
}

}  // namespace

Rational passk_unbiased_exact(int n, int c, int k) {
  if (n > 60) throw TooLarge("exact estimator supports n <= 60");
  if (n < 1 || c < 0 || c > n || k < 1) throw InvalidArgument("need n >= 1, 0 <= c <= n, k >= 1");
  if (k > n) throw BudgetExceedsSamples("k exceeds the number of samples");
  const std::uint64_t den = binomial(n, k);
  const std::uint64_t num = den - binomial(n - c, k);
  const std::uint64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

AllocationSpec optimal_allocation(const std::vector<double>& probs, int k,
                                  std::int64_t max_compositions) {
  if (probs.empty()) throw InvalidArgument("need at least one mode");
  check_k(k);
  for (double p : probs) check_prob(p);
  const int m = static_cast<int>(probs.size());
  // C(k + m - 1, m - 1) compositions; long double keeps the guard overflow-free.
  long double count = 1.0L;
  for (int i = 1; i < m; ++i) count = count * (k + i) / i;
  if (count > static_cast<long double>(max_compositions)) {
    throw TooLarge("too many compositions of k = " + std::to_string(k) + " into " +
                   std::to_string(m) + " parts");
  }

  std::vector<double> logs(m);
  for (int i = 0; i < m; ++i) {
    logs[i] = probs[i] >= 1.0 ? -std::numeric_limits<double>::infinity() : std::log1p(-probs[i]);
  }

  AllocationSpec best;
  double best_log = std::numeric_limits<double>::infinity();
  long double best_spread = std::numeric_limits<long double>::infinity();
  std::vector<int> cur(m, 0);

  auto consider = [&] {
    double lf = 0.0;
    for (int i = 0; i < m; ++i) {
      if (cur[i] > 0) lf += cur[i] * logs[i];
    }
    long double spread = 0.0L;
    for (int n : cur) spread += static_cast<long double>(n) * n;
    bool better;
    if (std::isinf(lf) && std::isinf(best_log)) {
      better = spread < best_spread;
    } else {
      const double tol = 1e-12 * std::max(1.0, std::fabs(best_log));
      if (lf < best_log - tol) {
        better = true;
      } else if (lf <= best_log + tol) {
        better = spread < best_spread;
      } else {
        better = false;
      }
    }
    if (better) {
      best_log = lf;
      best_spread = spread;
      best.per_mode = cur;
    }
  };

  // Enumerate compositions in lexicographically decreasing order of cur[0].
  auto rec = [&](auto&& self, int idx, int left) -> void {
    if (idx == m - 1) {
      cur[idx] = left;
      consider();
      return;
    }
    for (int n = left; n >= 0; --n) {
      cur[idx] = n;
      self(self, idx + 1, left - n);
    }
  };
  rec(rec, 0, k);
  best.k = k;
  return best;
}

}  // namespace modc
