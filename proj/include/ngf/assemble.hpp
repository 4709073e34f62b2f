#pragma once

// Finite-difference systems, kernel matrices and the quadrature fast solver.

#include <Eigen/Dense>

#include <filesystem>

#include "ngf/kernel_source.hpp"
#include "ngf/problems.hpp"

namespace ngf {

/// A U = F on the interior nodes x_i = a + i h, i = 1..n, h = (b - a) / (n + 1).
/// Rows are scaled by h^2, so A is O(1) and F = h^2 f(x_i).
struct LinearSystem {
  int n = 0;
  double h = 0.0;
  Eigen::VectorXd nodes;
  Eigen::VectorXd lower;  // A(i + 1, i), length n - 1
  Eigen::VectorXd diag;   // length n
  Eigen::VectorXd upper;  // A(i, i + 1), length n - 1
  Eigen::VectorXd rhs;

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
  Eigen::MatrixXd dense() const;
};

/// Interior node count for mesh width 2^-exponent on the problem's domain.
int mesh_size(const ProblemSpec& spec, int exponent);

/// Conservative three-point scheme with face coefficients c(x_{i +- 1/2}).
/// Interface problems need alpha on a node (InterfacePointError otherwise).
LinearSystem discretize(const ProblemSpec& spec, int n);

/// Gaussian elimination with partial pivoting on the band.
Eigen::VectorXd solve_tridiagonal(const LinearSystem& system, const Eigen::VectorXd& rhs);
inline Eigen::VectorXd solve_direct(const LinearSystem& system) {
  return solve_tridiagonal(system, system.rhs);
}

struct DenseKernelMatrix {
  Eigen::MatrixXd values;
  Eigen::VectorXd nodes;
  double h = 0.0;
  bool scaled = true;
};

/// B(i, j) = G(x_i, x_j), divided by h when `scaled` so that B approximates A^-1.
DenseKernelMatrix kernel_matrix(const KernelSource& source, const LinearSystem& system,
                                bool scaled = true);

enum class Quadrature { Trapezoid, GaussLegendre };

/// u_hat(x) = integral of G(x, y) f(y) dy with n_quad uniform cells, each
/// integral split at y = x (and at the interface).
Eigen::VectorXd fast_solve(const KernelSource& source, const ProblemSpec& spec, int n_quad,
                           const Eigen::VectorXd& eval_points,
                           Quadrature rule = Quadrature::Trapezoid);

/// row,col,value triples.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
/// i,x,lower,diag,upper,rhs
void write_bands_csv(const std::filesystem::path& path, const LinearSystem& system);

}  // namespace ngf
