#pragma once

// Eigenpairs of the kernel integral operator and spectral-bias coefficients.

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

#include "ngf/kernel_source.hpp"
#include "ngf/problems.hpp"
#include "ngf/train.hpp"

namespace ngf {

struct EigenRow {
  int j = 0;
  double mu_hat = 0.0;
  double mu_exact = 0.0;
  double eps_mu = 0.0;
  double eps_phi = 0.0;
  bool paired = false;
  /// At least ten nodes per wavelength of the reference eigenfunction.
  bool resolved = true;
};

struct EigenReport {
  std::vector<EigenRow> rows;
  int n = 0;
  std::string source_id;

  /// Mean eps_mu over rows with first <= j <= last.
  double mean_eps_mu(int first, int last) const;
};

/// Nystrom eigenpairs on n trapezoid cells of [a, b], each paired with the
/// reference eigenpair it correlates with most.
EigenReport kernel_eigs(const KernelSource& source, double a, double b, int n,
                        const std::vector<Eigenpair>& reference);

/// Reference eigenpairs of -u'' - k^2 u on (0, 1), j = 1..count.
EigenReport kernel_eigs(const KernelSource& source, const ProblemSpec& spec, int n, int count);

/// Symmetric Nystrom eigenproblem: eigenvalues ascending and eigenfunctions
/// (columns) normalized in the discrete L2 norm, on nodes a + i (b - a) / n.
struct NystromEigen {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
  Eigen::VectorXd values;
  Eigen::MatrixXd functions;
};
NystromEigen nystrom_eigen(const KernelSource& source, double a, double b, int n);

struct GammaReport {
  Eigen::VectorXd gamma;    // gamma_1..gamma_J
  double misfit_l2sq = 0.0; // double integral of (G_hat - G)^2
};

/// gamma_j = |double integral of (G_hat - G) phi_j(x) phi_j(y)| on (0, 1)
/// with phi_j = sqrt(2) sin(j pi x); G_hat is the unsymmetrized restriction.
GammaReport gamma_coefficients(const KernelSource& source, const ProblemSpec& spec, int count,
                               int n_quad);

/// Sum of gamma_j^2 for eta <= j <= J.
double high_frequency_loss(const Eigen::VectorXd& gamma, int eta);

struct BiasSnapshot {
  int epoch = 0;
  Eigen::VectorXd gamma;
  double misfit_l2sq = 0.0;
  std::vector<double> l_eta_plus;  // aligned with BiasReport::etas
};

struct BiasReport {
  std::vector<int> etas;
  int count = 64;
  std::vector<BiasSnapshot> snapshots;
};

/// Trains with `config` and evaluates gamma coefficients every `cadence`
/// epochs and at the end.
BiasReport bias_track(const ProblemSpec& spec, const TrainConfig& config,
                      const std::vector<int>& etas, int count, int cadence, int n_quad,
                      const TrainOutputs& outputs = {});

/// Snapshot of an already available kernel (no training).
BiasSnapshot bias_snapshot(const KernelSource& source, const ProblemSpec& spec,
                           const std::vector<int>& etas, int count, int n_quad, int epoch);

void write_eigen_report_csv(const std::filesystem::path& path, const EigenReport& report);
void write_bias_report_csv(const std::filesystem::path& path, const BiasReport& report);

}  // namespace ngf
