#pragma once

// The single kernel abstraction consumed by assembly, solvers and spectra:
// a closed-form Green's function or a trained lifted network.

#include <Eigen/Dense>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "ngf/net.hpp"
#include "ngf/problems.hpp"

namespace ngf {

class KernelSource {
 public:
  static KernelSource analytic(KernelFn g, std::string id = "analytic");
  /// 3-input network for smooth problems, 5-input with `alpha` for interface problems.
  static KernelSource neural(Mlp net, std::optional<double> alpha, std::string id = "neural");
  /// Loads a checkpoint and its sidecar metadata.
  static KernelSource load(const std::filesystem::path& checkpoint);
  /// The problem's exact kernel; ConfigError when it has none.
  static KernelSource oracle(const ProblemSpec& spec);

  bool is_neural() const { return static_cast<bool>(net_); }
  const std::string& id() const { return id_; }
  const Mlp* network() const { return net_.get(); }
  std::optional<double> alpha() const { return alpha_; }

  /// ConfigError when the kernel cannot serve `spec` (lifted dimension or interface mismatch).
  void check_compatible(const ProblemSpec& spec) const;

  /// Symmetrized restriction 0.5 * (G_hat(x, y, ..) + G_hat(y, x, ..)) for networks.
  double operator()(double x, double y) const;

  /// Elementwise kernel values at (xs[i], ys[i]).
  Eigen::VectorXd eval_pairs(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) const;

  /// Matrix K(i, j) = kernel(rows[i], cols[j]).
  Eigen::MatrixXd sample(const Eigen::VectorXd& rows, const Eigen::VectorXd& cols) const;

  /// Unsymmetrized network restriction G_hat(x, y, |y - x|, ..); the kernel
  /// itself for analytic sources.
  Eigen::VectorXd eval_pairs_raw(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) const;

 private:
  KernelFn fn_;
  std::shared_ptr<const Mlp> net_;
  std::optional<double> alpha_;
  std::string id_;
};

/// Free-function form of KernelSource::operator().
double kernel_eval(const KernelSource& source, double x, double y);

}  // namespace ngf
