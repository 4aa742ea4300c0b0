#pragma once

// Axisymmetric spectral discretization of the round n-sphere.
//
// Profiles are functions of the polar angle only, sampled at the Gauss nodes
// of the weight (1 - mu^2)^((n-2)/2) on (-1, 1), where mu = cos(theta). With
// that weight, Gauss quadrature computes averages over S^n directly, and the
// collocation derivatives are exact on polynomials of degree < N.

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace scflow {

using Profile = Eigen::VectorXd;

class Grid {
 public:
  int n() const { return n_; }
  int size() const { return static_cast<int>(nodes_.size()); }

  const Profile& nodes() const { return nodes_; }
  const Profile& weights() const { return weights_; }
  /// Barycentric interpolation weights (up to a common factor).
  const Profile& bary() const { return bary_; }
  /// First-derivative collocation matrix in mu. The diagonal is zero; it is
  /// applied in difference form, sum_j D_ij (p_j - p_i), so constants map to
  /// exactly zero.
  const Eigen::MatrixXd& diff() const { return diff_; }

  /// c_n = 4(n-1)/(n-2).
  double conformal_constant() const { return 4.0 * (n_ - 1) / (n_ - 2); }
  /// 2* = 2n/(n-2).
  double critical_exponent() const { return 2.0 * n_ / (n_ - 2); }

  /// Largest magnitude eigenvalue of the collocated Laplacian, (N-1)(N+n-2).
  double max_laplace_eigenvalue() const;

 private:
  friend Grid build_grid(int n, int N);

  int n_ = 0;
  Profile nodes_;
  Profile weights_;
  Profile bary_;
  Eigen::MatrixXd diff_;
};

/// Gauss nodes/weights for the sphere weight, weights normalized to sum 1.
/// Throws kInvalidArgument for n < 3 or N < 8.
Grid build_grid(int n, int N);

/// Average over S^n: sum_j w_j p_j.
double quad_average(const Profile& p, const Grid& grid);

/// dp/dmu at the nodes.
Profile derivative(const Profile& p, const Grid& grid);

/// Laplace-Beltrami of an axisymmetric profile: (1-mu^2) p'' - n mu p'.
Profile laplace_beltrami(const Profile& p, const Grid& grid);

/// |grad p|^2 = (1-mu^2) (p')^2.
Profile gradient_sq(const Profile& p, const Grid& grid);

/// Barycentric interpolation of the nodal polynomial at x in [-1, 1].
double interpolate(const Profile& p, const Grid& grid, double x);
Profile interpolate(const Profile& p, const Grid& grid, std::span<const double> xs);

/// Extrapolated values at the poles (mu = +1 for pole = +1, mu = -1 otherwise).
double pole_value(const Profile& p, const Grid& grid, int pole);
/// dp/dmu at a pole.
double pole_derivative(const Profile& p, const Grid& grid, int pole);
/// Laplace-Beltrami at a pole: -n p'(1) at the north pole, n p'(-1) at the south.
double pole_laplacian(const Profile& p, const Grid& grid, int pole);

/// Samples a function of mu on the grid nodes.
template <typename F>
Profile sample(const Grid& grid, F&& fn) {
  Profile out(grid.size());
  for (int j = 0; j < grid.size(); ++j) out[j] = fn(grid.nodes()[j]);
  return out;
}

/// Horner evaluation of sum_k coeffs[k] mu^k.
double eval_polynomial(std::span<const double> coeffs, double mu);

}  // namespace scflow
