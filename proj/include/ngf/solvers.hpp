#pragma once

// Krylov and stationary solvers for the assembled systems, plus spectra.

#include <Eigen/Dense>

#include <complex>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ngf/assemble.hpp"

namespace ngf {

using MatVec = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct GmresConfig {
  double tol = 1e-6;
  int max_iter = 1000;
  std::optional<int> restart;

  void validate() const;
};

struct IterTrace {
  std::vector<double> relres;          // ||F - A U|| / ||F||, entry 0 is the initial guess
  std::vector<double> precond_relres;  // preconditioned GMRES only
  std::vector<double> err2;            // when the exact discrete solution is known
  std::vector<Eigen::VectorXd> modes;  // |E_j| per recorded step, when known
  std::vector<std::string> stage;      // hybrid: "start", "kernel", "jacobi"
  bool converged = false;
  bool diverged = false;
  std::string message;

  int iterations() const { return relres.empty() ? 0 : static_cast<int>(relres.size()) - 1; }
  double final_relres() const { return relres.empty() ? 0.0 : relres.back(); }
};

struct SolveResult {
  Eigen::VectorXd u;
  IterTrace trace;
};

/// GMRES from a zero initial guess: modified Gram-Schmidt Arnoldi with
/// selective reorthogonalization and Givens least squares.
SolveResult gmres(const MatVec& apply_a, const Eigen::VectorXd& f, const GmresConfig& config);
SolveResult gmres(const LinearSystem& system, const GmresConfig& config);

/// GMRES on B A U = B F; stops on the true relative residual of A U = F.
SolveResult pgmres(const LinearSystem& system, const Eigen::MatrixXd& bhat,
                   const GmresConfig& config);

/// U + omega D^-1 (F - A U).
Eigen::VectorXd damped_jacobi_step(const LinearSystem& system, const Eigen::VectorXd& u,
                                   double omega);

/// Dense I - omega D^-1 A.
Eigen::MatrixXd jacobi_iteration_matrix(const LinearSystem& system, double omega);

struct HybridConfig {
  double omega = 2.0 / 3.0;
  int jacobi_steps = 1;  // sweeps per cycle
  int cycles = 25;
  double tol = 1e-10;
  double divergence_factor = 1e6;

  void validate() const;
};

/// Cycles of one kernel correction U += B (F - A U) followed by damped Jacobi
/// sweeps, from U = 0. Every sub-step is recorded.
SolveResult hybrid_solve(const LinearSystem& system, const Eigen::MatrixXd& bhat,
                         const HybridConfig& config,
                         const std::optional<Eigen::VectorXd>& exact_u = std::nullopt);

/// `sweeps` damped Jacobi sweeps from U = 0 with the same recording.
SolveResult jacobi_solve(const LinearSystem& system, double omega, int sweeps,
                         const std::optional<Eigen::VectorXd>& exact_u = std::nullopt,
                         double divergence_factor = 1e6);

/// Columns are the orthonormal discrete sine vectors sqrt(2/(n+1)) sin(j p pi/(n+1)).
Eigen::MatrixXd sine_basis(int n);
/// Signed coefficients of `v` in the sine basis.
Eigen::VectorXd mode_coefficients(const Eigen::VectorXd& v);
/// |coefficients|.
Eigen::VectorXd mode_errors(const Eigen::VectorXd& error);

struct SpectralCondition {
  double kappa = 0.0;
  Eigen::VectorXcd eigenvalues;  // ascending real part
  bool complex_spectrum = false;
  bool indefinite = false;
};

/// Diagonal similarity with powers of two that equalizes row and column norms.
Eigen::MatrixXd balance(const Eigen::MatrixXd& m);

/// kappa = l_max l_min / (l_s l_{s+1}) on the real parts, with l_s < 0 < l_{s+1}
/// the innermost eigenvalues; max|l| / min|l| for single-sign spectra.
SpectralCondition spectral_condition(const Eigen::MatrixXd& m);

/// Largest n for which kappa is computed by the command-line tools.
inline constexpr int kKappaSizeCap = 1023;

void write_trace_csv(const std::filesystem::path& path, const IterTrace& trace, bool with_modes);
void write_eigenvalues_csv(const std::filesystem::path& path, const Eigen::VectorXcd& eigenvalues);

}  // namespace ngf
