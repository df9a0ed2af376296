#pragma once

#include <vector>

namespace modc {

/// Nodes on [0, 1] and weights summing to one.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  template <typename F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

/// n-point Gauss rule for the Beta(alpha, beta) probability measure on
/// [0, 1] (Gauss-Jacobi via Golub-Welsch). Exact for polynomials of degree
/// up to 2n - 1, including when alpha or beta is below one.
QuadratureRule gauss_beta_rule(int n, double alpha, double beta);

/// n-point Gauss-Legendre rule for the uniform measure on [lo, hi].
QuadratureRule gauss_uniform_rule(int n, double lo, double hi);

}  // namespace modc
