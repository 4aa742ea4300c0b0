#include "scflow/sphere.hpp"

#include "scflow/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace scflow {
namespace {

// Recurrence coefficient of the orthonormal symmetric Jacobi polynomials
// with parameter a = (n-2)/2: x p_k = b_{k+1} p_{k+1} + b_k p_{k-1}.
double recurrence_b(int k, double a) {
  const double kk = k;
  return std::sqrt(kk * (kk + 2 * a) / ((2 * kk + 2 * a - 1) * (2 * kk + 2 * a + 1)));
}

struct OrthoEval {
  double value;       // p_N(x)
  double derivative;  // p_N'(x)
  double sum_sq;      // sum_{k<N} p_k(x)^2
};

// p_0 = 1 (probability normalization of the weight).
OrthoEval eval_orthonormal(int N, double a, double x) {
  double p_prev = 0.0, p = 1.0;
  double d_prev = 0.0, d = 0.0;
  double sum_sq = 0.0;
  for (int k = 0; k < N; ++k) {
    sum_sq += p * p;
    const double bk = k == 0 ? 0.0 : recurrence_b(k, a);
    const double bk1 = recurrence_b(k + 1, a);
    const double p_next = (x * p - bk * p_prev) / bk1;
    const double d_next = (p + x * d - bk * d_prev) / bk1;
    p_prev = p;
    p = p_next;
    d_prev = d;
    d = d_next;
  }
  return {p, d, sum_sq};
}

void check_length(const Profile& p, const Grid& grid) {
  if (p.size() != grid.size()) {
    throw Error(ErrorCode::kLengthMismatch, "profile has " + std::to_string(p.size()) +
                                                " values, grid has " + std::to_string(grid.size()));
  }
}

}  // namespace

double Grid::max_laplace_eigenvalue() const {
  const double N = size();
  return (N - 1) * (N + n_ - 2);
}

Grid build_grid(int n, int N) {
  if (n < 3) throw Error(ErrorCode::kInvalidArgument, "sphere dimension must be >= 3");
  if (N < 8) throw Error(ErrorCode::kInvalidArgument, "node count must be >= 8");

  const double a = 0.5 * (n - 2);

  // Golub-Welsch for starting values, then Newton on the recurrence.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd sub(N - 1);
  for (int k = 1; k < N; ++k) sub[k - 1] = recurrence_b(k, a);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  Eigen::VectorXd x = solver.eigenvalues();

  for (int j = 0; j < N; ++j) {
    for (int it = 0; it < 10; ++it) {
      const OrthoEval e = eval_orthonormal(N, a, x[j]);
      const double dx = e.value / e.derivative;
      x[j] -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
  }

  Grid g;
  g.n_ = n;
  g.nodes_.resize(N);
  g.weights_.resize(N);
  for (int j = 0; j < N; ++j) g.nodes_[j] = 0.5 * (x[j] - x[N - 1 - j]);
  if (N % 2 == 1) g.nodes_[N / 2] = 0.0;

  for (int j = 0; j < N; ++j) {
    g.weights_[j] = 1.0 / eval_orthonormal(N, a, g.nodes_[j]).sum_sq;
  }
  for (int j = 0; j < N / 2; ++j) {
    const double w = 0.5 * (g.weights_[j] + g.weights_[N - 1 - j]);
    g.weights_[j] = w;
    g.weights_[N - 1 - j] = w;
  }
  g.weights_ /= g.weights_.sum();

  // Gauss-Jacobi barycentric weights: (-1)^j sqrt((1 - x_j^2) w_j).
  g.bary_.resize(N);
  for (int j = 0; j < N; ++j) {
    const double xj = g.nodes_[j];
    g.bary_[j] = (j % 2 == 0 ? 1.0 : -1.0) * std::sqrt((1 - xj) * (1 + xj) * g.weights_[j]);
  }

  g.diff_ = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      if (i != j) g.diff_(i, j) = (g.bary_[j] / g.bary_[i]) / (g.nodes_[i] - g.nodes_[j]);
    }
  }
  return g;
}

double quad_average(const Profile& p, const Grid& grid) {
  check_length(p, grid);
  return grid.weights().dot(p);
}

Profile derivative(const Profile& p, const Grid& grid) {
  check_length(p, grid);
  const int N = grid.size();
  const Eigen::MatrixXd& D = grid.diff();
  Profile out(N);
  for (int i = 0; i < N; ++i) {
    double s = 0.0;
    const double pi = p[i];
    for (int j = 0; j < N; ++j) s += D(i, j) * (p[j] - pi);
    out[i] = s;
  }
  return out;
}

Profile laplace_beltrami(const Profile& p, const Grid& grid) {
  const Profile d1 = derivative(p, grid);
  const Profile d2 = derivative(d1, grid);
  const Profile& mu = grid.nodes();
  const double n = grid.n();
  Profile out(p.size());
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    out[j] = (1 - mu[j]) * (1 + mu[j]) * d2[j] - n * mu[j] * d1[j];
  }
  return out;
}

Profile gradient_sq(const Profile& p, const Grid& grid) {
  const Profile d1 = derivative(p, grid);
  const Profile& mu = grid.nodes();
  Profile out(p.size());
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    out[j] = (1 - mu[j]) * (1 + mu[j]) * d1[j] * d1[j];
  }
  return out;
}

double interpolate(const Profile& p, const Grid& grid, double x) {
  check_length(p, grid);
  const Profile& nodes = grid.nodes();
  const Profile& b = grid.bary();
  double num = 0.0, den = 0.0;
  for (int j = 0; j < grid.size(); ++j) {
    const double diff = x - nodes[j];
    if (diff == 0.0) return p[j];
    const double c = b[j] / diff;
    num += c * p[j];
    den += c;
  }
  return num / den;
}

Profile interpolate(const Profile& p, const Grid& grid, std::span<const double> xs) {
  Profile out(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) out[static_cast<Eigen::Index>(i)] = interpolate(p, grid, xs[i]);
  return out;
}

double pole_value(const Profile& p, const Grid& grid, int pole) {
  return interpolate(p, grid, pole > 0 ? 1.0 : -1.0);
}

double pole_derivative(const Profile& p, const Grid& grid, int pole) {
  return pole_value(derivative(p, grid), grid, pole);
}

double pole_laplacian(const Profile& p, const Grid& grid, int pole) {
  const double n = grid.n();
  const double dp = pole_derivative(p, grid, pole);
  return pole > 0 ? -n * dp : n * dp;
}

double eval_polynomial(std::span<const double> coeffs, double mu) {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * mu + *it;
  return acc;
}

}  // namespace scflow
