#pragma once

// Lift-and-embed residuals for the Green's function equations in 1D.
//
// The Green's function G(x, y) is represented as the restriction of a smooth
// function of the lifted coordinates
//     (x, y, r)            r = |y - x|                (smooth coefficient)
//     (x, y, r, s1, s2)    s1 = |x - a|, s2 = |y - a|  (jump at a = alpha)
// so the derivative jumps of G across y = x and y = alpha become smooth
// conditions on partial derivatives in the lifted space. All operators are
// hard-coded to one spatial dimension; gradients and Laplacians are scalars.

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ngf/net.hpp"
#include "ngf/problems.hpp"

namespace ngf {

/// Network input slots.
enum LiftedSlot : int { kSlotX = 0, kSlotY = 1, kSlotR = 2, kSlotS1 = 3, kSlotS2 = 4 };

struct LiftedInput {
  double x = 0.0;
  double y = 0.0;
  double r = 0.0;
  std::optional<double> s1;
  std::optional<double> s2;

  int dim() const { return s1 ? 5 : 3; }
  Eigen::VectorXd vector() const;
};

LiftedInput augment(double x, double y, std::optional<double> alpha = std::nullopt);

/// Partial derivatives of the lifted function that the residuals consume.
enum class Deriv : int { Value, Dx, Dy, Dr, Ds1, Ds2, Dyy, Dyr, Drr, Dys2, Drs2, Ds2s2 };
inline constexpr int kDerivCount = 12;
using DerivValues = std::array<double, kDerivCount>;

/// A residual that is affine in the lifted derivatives:
/// residual = constant + sum_d coeff[d] * (d-th derivative).
struct LinearForm {
  std::array<double, kDerivCount> coeff{};
  double constant = 0.0;

  double& operator[](Deriv d) { return coeff[static_cast<int>(d)]; }
  double operator[](Deriv d) const { return coeff[static_cast<int>(d)]; }
  double apply(const DerivValues& v) const;
};

/// Anything that can be evaluated with a second-order jet in the lifted
/// coordinates: a trained network or a closed-form stand-in.
class LiftedModel {
 public:
  virtual ~LiftedModel() = default;
  virtual int input_dim() const = 0;
  virtual Jet2<double> jet(const Eigen::VectorXd& input) const = 0;
  virtual double value(const Eigen::VectorXd& input) const { return jet(input).value; }
};

class NetworkModel final : public LiftedModel {
 public:
  explicit NetworkModel(const Mlp& net) : net_(&net) {}
  int input_dim() const override { return net_->input_dim; }
  Jet2<double> jet(const Eigen::VectorXd& input) const override { return forward_jet(*net_, input); }
  double value(const Eigen::VectorXd& input) const override { return forward(*net_, input); }
  const Mlp& net() const { return *net_; }

 private:
  const Mlp* net_;
};

class AnalyticModel final : public LiftedModel {
 public:
  using JetFn = std::function<Jet2<double>(const Eigen::VectorXd&)>;
  AnalyticModel(int dim, JetFn fn) : dim_(dim), fn_(std::move(fn)) {}
  int input_dim() const override { return dim_; }
  Jet2<double> jet(const Eigen::VectorXd& input) const override { return fn_(input); }

 private:
  int dim_;
  JetFn fn_;
};

/// Exact benchmark kernel as a smooth function of (x, y, r):
/// (P + Q) / 2 - sin(k r) / (2k), with P, Q the two branches of the
/// closed form.
AnalyticModel lifted_exact_helmholtz(double k);

DerivValues derivs_at(const LiftedModel& model, const LiftedInput& at);

// Residual forms. Each throws InterfacePointError where the operator is
// undefined (division by r or s2) or ConfigError on a regime mismatch.
LinearForm interior_smooth_form(const ProblemSpec& spec, double x, double y);
LinearForm gamma_form(const ProblemSpec& spec, double x);
LinearForm interior_piecewise_form(const ProblemSpec& spec, double x, double y);
LinearForm sigma_form(const ProblemSpec& spec, double x);
LinearForm sigma_star_form(const ProblemSpec& spec, double y);
LinearForm alpha_form(const ProblemSpec& spec);
LinearForm value_form();

double residual_interior_smooth(const LiftedModel& g, const ProblemSpec& spec, double x, double y);
double residual_gamma_smooth(const LiftedModel& g, const ProblemSpec& spec, double x);
/// Piecewise diagonal jump 2 dG/dr + 1/c_i at (x, x).
double residual_gamma_piecewise(const LiftedModel& g, const ProblemSpec& spec, double x);
double residual_interior_piecewise(const LiftedModel& g, const ProblemSpec& spec, double x,
                                   double y);
double residual_sigma(const LiftedModel& g, const ProblemSpec& spec, double x);
double residual_sigma_star(const LiftedModel& g, const ProblemSpec& spec, double y);
double residual_alpha(const LiftedModel& g, const ProblemSpec& spec);

struct SampleSizes {
  int n_omega = 160;    // x points
  int n_omega_y = 160;  // interior y points per x
  int n_boundary = 2;
  int n_gamma = 500;
  int n_sigma = 0;
  int n_alpha = 0;
};

struct SampleSets {
  double a = 0.0;
  double b = 1.0;
  std::optional<double> alpha;
  Eigen::VectorXd x_omega;   // N_omega
  Eigen::MatrixXd y_omega;   // N_omega x N'_omega
  std::vector<double> y_boundary;
  Eigen::VectorXd x_gamma;   // piecewise: both subdomains, split on evaluation
  Eigen::VectorXd x_sigma;   // paired with y = alpha
  Eigen::VectorXd y_sigma;   // paired with x = alpha
  int n_alpha = 0;
};

/// Points closer than this to a diagonal/interface surface are redrawn.
inline constexpr double kExclusionRadius = 1e-6;

SampleSets sample_training_sets(const SampleSizes& sizes, const ProblemSpec& spec,
                                std::mt19937_64& rng);

struct PenaltyWeights {
  double boundary = 400.0;
  /// Piecewise problems: per-endpoint boundary weights (left = a, right = b).
  std::optional<double> boundary_left;
  std::optional<double> boundary_right;
  double gamma = 1000.0;
  double sigma = 400.0;
  double alpha = 400.0;
  double sym = 400.0;
  /// epoch -> boundary weight from that epoch onward (overrides `boundary`).
  std::map<int, double> boundary_schedule;

  double boundary_at(int epoch) const;
  void validate() const;
};

/// Indices into a SampleSets selecting one optimisation step's data.
struct MiniBatch {
  std::vector<int> x;
  std::vector<std::vector<int>> y;  // per selected x
  std::vector<int> gamma;
  std::vector<int> sigma;
};

struct BatchSizes {
  int x = 32;       // 0: all
  int y = 0;        // 0: all
  int gamma = 0;    // 0: all
  int sigma = 0;    // 0: all
};

MiniBatch full_batch(const SampleSets& sets);
MiniBatch draw_minibatch(const SampleSets& sets, const BatchSizes& sizes, std::mt19937_64& rng);

/// One family of residuals, contributing mean(point_weight * residual^2).
/// `raw` reporting uses the unweighted mean.
struct ResidualBatch {
  std::string name;
  std::vector<LiftedInput> points;
  std::vector<LinearForm> forms;        // one per point (unused for symmetry batches)
  std::vector<double> point_weights;    // one per point
  bool symmetry = false;                // residual = G(x,y,r) - G(y,x,r)
};

/// All loss families of the lift-and-embed objective for one minibatch.
std::vector<ResidualBatch> build_loss_batches(const SampleSets& sets, const MiniBatch& batch,
                                              const ProblemSpec& spec, const PenaltyWeights& w,
                                              int epoch = 0);

struct LossBreakdown {
  std::map<std::string, double> raw;   // unweighted, summed over batches of the same name
  double total = 0.0;                  // weighted objective
};

/// Pointwise evaluation for any lifted model (slow; tests and diagnostics).
LossBreakdown evaluate_loss(const LiftedModel& model, const std::vector<ResidualBatch>& batches);

/// Batched network evaluation with the exact parameter gradient.
struct NetworkLoss {
  LossBreakdown loss;
  ParamGrad<double> grad;
};
NetworkLoss network_loss_grad(const Mlp& net, const std::vector<ResidualBatch>& batches);
LossBreakdown network_loss(const Mlp& net, const std::vector<ResidualBatch>& batches);

/// Weighted full-batch objective.
LossBreakdown total_loss(const LiftedModel& model, const SampleSets& sets, const ProblemSpec& spec,
                         const PenaltyWeights& w, int epoch = 0);
LossBreakdown total_loss(const Mlp& net, const SampleSets& sets, const ProblemSpec& spec,
                         const PenaltyWeights& w, int epoch = 0);

/// Converts residual batches into network loss terms.
std::vector<JetTerm<double>> make_jet_terms(const std::vector<ResidualBatch>& batches,
                                            int input_dim);

}  // namespace ngf
