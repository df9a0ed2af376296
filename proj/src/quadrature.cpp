#include "modc/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "modc/error.hpp"

namespace modc {

QuadratureRule gauss_beta_rule(int n, double alpha, double beta) {
  if (n < 1) throw InvalidArgument("quadrature needs at least one node");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw InvalidArgument("Beta parameters must be positive");
  // Jacobi weight (1-x)^a (1+x)^b on [-1, 1]; w = (1+x)/2 maps it to Beta(b+1, a+1).
  const double a = beta - 1.0;
  const double b = alpha - 1.0;
  const double ab = a + b;

  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + ab;
    jacobi(k, k) = (k == 0) ? (b - a) / (ab + 2.0) : (b * b - a * a) / (s * (s + 2.0));
  }
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + ab;
    double beta_k;
    if (k == 1) {
      beta_k = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
    } else {
      beta_k = 4.0 * k * (k + a) * (k + b) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
    }
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(beta_k);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success) throw InvalidArgument("Jacobi matrix eigensolve failed");

  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = 0.5 * (1.0 + solver.eigenvalues()(i));
    const double v = solver.eigenvectors()(0, i);
    rule.weights[i] = v * v;
  }
  return rule;
}

QuadratureRule gauss_uniform_rule(int n, double lo, double hi) {
  if (!(hi >= lo)) throw InvalidArgument("uniform interval must satisfy lo <= hi");
  QuadratureRule rule = gauss_beta_rule(n, 1.0, 1.0);
  for (double& x : rule.nodes) x = lo + (hi - lo) * x;
  return rule;
}

}  // namespace modc
