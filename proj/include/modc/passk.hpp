#pragma once

// pass@k analytics: standard sampling, mode-conditioned allocation, the
// per-problem weight mixture, the Jensen gap between them, and the unbiased
// finite-sample estimator.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "modc/random.hpp"

namespace modc {

/// How k samples are split across modes.
struct AllocationSpec {
  int k = 0;
  std::vector<int> per_mode;

  /// Even split across n_modes; the first modes absorb the remainder, so
  /// odd k gives ceil(k/2) to the first of two modes.
  static AllocationSpec even(int k, int n_modes = 2);
  void validate() const;
};

/// Distribution of the per-problem probability w of using the first mode.
struct WeightDistribution {
  enum class Kind { PointMass, Beta, Uniform, Empirical };

  Kind kind = Kind::PointMass;
  double a = 0.5;  // PointMass: w. Beta: alpha. Uniform: lo.
  double b = 0.0;  // Beta: beta. Uniform: hi.
  std::vector<double> samples;

  static WeightDistribution point_mass(double w);
  static WeightDistribution beta(double alpha, double beta);
  static WeightDistribution uniform(double lo, double hi);
  static WeightDistribution empirical(std::vector<double> samples);

  double mean() const;
  double sample(Rng& rng) const;
  /// "point(0.5)", "beta(0.3,0.3)", "uniform(0,1)", "empirical(n)".
  std::string label() const;
};

/// Parses the label() syntax (empirical excluded).
WeightDistribution parse_weight_distribution(std::string_view text);

/// log(1 - pass@k) for a single mode; -inf when p = 1.
double log_fail_std(double p, int k);
/// log(1 - pass@k) under an allocation; throws AllocationMismatch.
double log_fail_modc(const std::vector<double>& probs, const AllocationSpec& alloc);

double passk_std(double p, int k);
double passk_modc(const std::vector<double>& probs, const AllocationSpec& alloc);
/// Two modes, even split.
double passk_modc(double p1, double p2, int k);
double passk_mixture(double p1, double p2, double w, int k);

/// E_w[passk_mixture(p1, p2, w, k)]: closed form for point masses and
/// empirical samples, 64-point Gauss quadrature for Beta and Uniform.
double expected_passk_mixture(double p1, double p2, int k, const WeightDistribution& dist);

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Monte-Carlo estimate of the same expectation from n_draws weight draws.
MeanStderr mc_expected_passk_mixture(double p1, double p2, int k, const WeightDistribution& dist,
                                     std::int64_t n_draws, std::uint64_t seed);

struct JensenGap {
  double expected_std = 0.0;  // E_w[pass@k_std(w)]
  double std_at_mean = 0.0;   // pass@k_std(E[w])
  double modc_even = 0.0;     // pass@k_ModC with an even split
};

/// The three sides of the mixture-vs-allocation comparison. Every weight
/// distribution kind has a deterministic expectation (closed form, sample
/// average or quadrature); mc_expected_passk_mixture is the cross-check.
JensenGap jensen_gap(double p1, double p2, int k, const WeightDistribution& dist);

/// 1 - C(n-c, k) / C(n, k) via the stable product form. Throws
/// BudgetExceedsSamples when k > n.
double passk_unbiased_estimate(int n, int c, int k);
/// C(n-c, k) / C(n, k), the estimated probability that k samples all fail.
double fail_all_estimate(int n, int c, int k);

struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  friend bool operator==(const Rational& x, const Rational& y) {
    return static_cast<unsigned __int128>(x.num) * y.den ==
           static_cast<unsigned __int128>(y.num) * x.den;
  }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Exact value of passk_unbiased_estimate as a reduced fraction (n <= 60).
Rational passk_unbiased_exact(int n, int c, int k);

/// Exhaustive search over integer compositions of k maximizing passk_modc.
/// Ties (relative 1e-12 on the failure log) go to the most even composition.
/// Throws TooLarge when the composition count exceeds `max_compositions`.
AllocationSpec optimal_allocation(const std::vector<double>& probs, int k,
                                  std::int64_t max_compositions = 2'000'000);

}  // namespace modc
