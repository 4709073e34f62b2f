#pragma once

// Fully-connected tanh network with second-order input jets and exact
// parameter gradients through those jets.
//
// Layout: `weights[l]` is (out x in), `biases[l]` has `out` rows. There are
// hidden_widths.size() + 1 affine layers; the activation follows every affine
// layer except the last, which produces a single scalar.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ngf/errors.hpp"

namespace ngf {

enum class Activation : std::uint8_t { Tanh = 0 };

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct MlpParams {
  int input_dim = 0;
  std::vector<int> hidden_widths;
  Activation activation = Activation::Tanh;
  std::vector<MatrixX<Scalar>> weights;
  std::vector<VectorX<Scalar>> biases;

  int layer_count() const { return static_cast<int>(weights.size()); }
};

/// Same shape as the network it was computed for.
template <typename Scalar>
struct ParamGrad {
  std::vector<MatrixX<Scalar>> weights;
  std::vector<VectorX<Scalar>> biases;

  ParamGrad& operator+=(const ParamGrad& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      weights[l] += other.weights[l];
      biases[l] += other.biases[l];
    }
    return *this;
  }
};

/// Value, input gradient and (symmetric) input Hessian at one point.
template <typename Scalar>
struct Jet2 {
  Scalar value{};
  VectorX<Scalar> grad;
  MatrixX<Scalar> hess;
};

/// Zero-initialised network of the given architecture.
template <typename Scalar>
MlpParams<Scalar> make_mlp(int input_dim, std::vector<int> hidden_widths,
                           Activation activation = Activation::Tanh) {
  if (input_dim <= 0) throw ShapeError("make_mlp: input_dim must be positive");
  MlpParams<Scalar> p;
  p.input_dim = input_dim;
  p.hidden_widths = std::move(hidden_widths);
  p.activation = activation;
  int prev = input_dim;
  for (int w : p.hidden_widths) {
    if (w <= 0) throw ShapeError("make_mlp: hidden widths must be positive");
    p.weights.push_back(MatrixX<Scalar>::Zero(w, prev));
    p.biases.push_back(VectorX<Scalar>::Zero(w));
    prev = w;
  }
  p.weights.push_back(MatrixX<Scalar>::Zero(1, prev));
  p.biases.push_back(VectorX<Scalar>::Zero(1));
  return p;
}

/// Xavier-uniform weights, zero biases.
template <typename Scalar, typename Rng>
void init_xavier(MlpParams<Scalar>& p, Rng& rng) {
  for (auto& w : p.weights) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = static_cast<Scalar>(dist(rng));
  }
  for (auto& b : p.biases) b.setZero();
}

template <typename Scalar>
ParamGrad<Scalar> zeros_like(const MlpParams<Scalar>& p) {
  ParamGrad<Scalar> g;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    g.weights.push_back(MatrixX<Scalar>::Zero(p.weights[l].rows(), p.weights[l].cols()));
    g.biases.push_back(VectorX<Scalar>::Zero(p.biases[l].rows()));
  }
  return g;
}

/// Throws ShapeError unless layer shapes chain from input_dim to one output.
template <typename Scalar>
void validate(const MlpParams<Scalar>& p) {
  if (p.weights.size() != p.hidden_widths.size() + 1 || p.biases.size() != p.weights.size())
    throw ShapeError("mlp: layer count does not match hidden widths");
  Eigen::Index prev = p.input_dim;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const Eigen::Index out =
        l < p.hidden_widths.size() ? static_cast<Eigen::Index>(p.hidden_widths[l]) : 1;
    if (p.weights[l].cols() != prev || p.weights[l].rows() != out || p.biases[l].rows() != out)
      throw ShapeError("mlp: layer " + std::to_string(l) + " has inconsistent shape");
    prev = out;
  }
}

template <typename Scalar>
std::size_t parameter_count(const MlpParams<Scalar>& p) {
  std::size_t n = 0;
  for (std::size_t l = 0; l < p.weights.size(); ++l)
    n += static_cast<std::size_t>(p.weights[l].size() + p.biases[l].size());
  return n;
}

namespace detail {
// Flat indexing: all of layer 0 weights (column-major), layer 0 biases, layer 1, ...
template <typename Mats, typename Vecs>
auto& flat_entry(Mats& weights, Vecs& biases, std::size_t i) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto nw = static_cast<std::size_t>(weights[l].size());
    if (i < nw) return weights[l].data()[i];
    i -= nw;
    const auto nb = static_cast<std::size_t>(biases[l].size());
    if (i < nb) return biases[l].data()[i];
    i -= nb;
  }
  throw ShapeError("flat parameter index out of range");
}
}  // namespace detail

template <typename Scalar>
Scalar& parameter(MlpParams<Scalar>& p, std::size_t i) {
  return detail::flat_entry(p.weights, p.biases, i);
}
template <typename Scalar>
Scalar parameter(const MlpParams<Scalar>& p, std::size_t i) {
  return detail::flat_entry(p.weights, p.biases, i);
}
template <typename Scalar>
Scalar& entry(ParamGrad<Scalar>& g, std::size_t i) {
  return detail::flat_entry(g.weights, g.biases, i);
}
template <typename Scalar>
Scalar entry(const ParamGrad<Scalar>& g, std::size_t i) {
  return detail::flat_entry(g.weights, g.biases, i);
}

inline void require_smooth(Activation a) {
  if (a != Activation::Tanh) throw UnsupportedActivation("activation has no jet implementation");
}

/// Value-only forward pass for a batch (one column per sample).
template <typename Scalar>
Eigen::Matrix<Scalar, 1, Eigen::Dynamic> forward_batch(const MlpParams<Scalar>& p,
                                                       const MatrixX<Scalar>& inputs) {
  if (inputs.rows() != p.input_dim) throw ShapeError("forward: input dimension mismatch");
  require_smooth(p.activation);
  MatrixX<Scalar> a = inputs;
  const int L = p.layer_count();
  for (int l = 0; l + 1 < L; ++l) {
    MatrixX<Scalar> z = p.weights[l] * a;
    z.colwise() += p.biases[l];
    a = z.array().tanh().matrix();
  }
  MatrixX<Scalar> out = p.weights[L - 1] * a;
  out.array() += p.biases[L - 1](0);
  return out;
}

template <typename Scalar, typename Derived>
Scalar forward(const MlpParams<Scalar>& p, const Eigen::MatrixBase<Derived>& input) {
  if (input.size() != p.input_dim) throw ShapeError("forward: input dimension mismatch");
  return forward_batch(p, MatrixX<Scalar>(input))(0);
}

/// Which input derivatives to carry through the network.
///
/// `dirs` are input indices for first-order channels; `pairs` index into
/// `dirs`. Channel order: value, one per dir, one per pair.
struct JetPlan {
  std::vector<int> dirs;
  std::vector<std::pair<int, int>> pairs;

  int channel_count() const { return 1 + static_cast<int>(dirs.size() + pairs.size()); }
  int first_channel(int dir_slot) const { return 1 + dir_slot; }
  int pair_channel(int pair_slot) const { return 1 + static_cast<int>(dirs.size()) + pair_slot; }

  /// Full gradient and upper-triangular Hessian of a `dim`-input function.
  static JetPlan full(int dim) {
    JetPlan plan;
    for (int i = 0; i < dim; ++i) plan.dirs.push_back(i);
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j) plan.pairs.emplace_back(i, j);
    return plan;
  }
};

/// Batched forward jet with the intermediate state needed for the parameter
/// adjoint. Holds a reference to the parameters; they must outlive the batch.
template <typename Scalar>
class JetBatch {
 public:
  using Matrix = MatrixX<Scalar>;

  JetBatch(const MlpParams<Scalar>& p, const Matrix& inputs, JetPlan plan)
      : params_(&p), plan_(std::move(plan)) {
    if (inputs.rows() != p.input_dim) throw ShapeError("forward_jet: input dimension mismatch");
    require_smooth(p.activation);
    for (int d : plan_.dirs)
      if (d < 0 || d >= p.input_dim) throw ShapeError("jet plan direction out of range");
    for (auto [i, j] : plan_.pairs)
      if (i < 0 || j < 0 || i >= static_cast<int>(plan_.dirs.size()) ||
          j >= static_cast<int>(plan_.dirs.size()))
        throw ShapeError("jet plan pair out of range");

    const int C = plan_.channel_count();
    const int K = static_cast<int>(plan_.dirs.size());
    const Eigen::Index N = inputs.cols();
    const int L = p.layer_count();

    std::vector<Matrix> in(C);
    in[0] = inputs;
    for (int c = 1; c < C; ++c) in[c] = Matrix::Zero(p.input_dim, N);
    for (int i = 0; i < K; ++i) in[1 + i].row(plan_.dirs[i]).setOnes();
    acts_.push_back(std::move(in));

    for (int l = 0; l < L; ++l) {
      const auto& W = p.weights[l];
      const auto& prev = acts_.back();
      std::vector<Matrix> z(C);
      z[0].noalias() = W * prev[0];
      z[0].colwise() += p.biases[l];
      for (int c = 1; c < C; ++c) z[c].noalias() = W * prev[c];

      if (l == L - 1) {
        outputs_.resize(C, N);
        for (int c = 0; c < C; ++c) outputs_.row(c) = z[c];
        break;
      }

      Matrix t = z[0].array().tanh().matrix();
      const auto s1 = (1 - t.array().square()).eval();
      const auto s2 = (-2 * t.array() * s1).eval();
      std::vector<Matrix> a(C);
      a[0] = t;
      for (int i = 0; i < K; ++i) a[1 + i] = (s1 * z[1 + i].array()).matrix();
      for (std::size_t q = 0; q < plan_.pairs.size(); ++q) {
        const auto [i, j] = plan_.pairs[q];
        const int c = plan_.pair_channel(static_cast<int>(q));
        a[c] = (s2 * z[1 + i].array() * z[1 + j].array() + s1 * z[c].array()).matrix();
      }
      z[0].resize(0, 0);
      pre_.push_back(std::move(z));
      tanh_.push_back(std::move(t));
      acts_.push_back(std::move(a));
    }
  }

  const JetPlan& plan() const { return plan_; }
  /// channel_count() x N
  const Matrix& outputs() const { return outputs_; }

  /// Accumulates d(loss)/d(theta) into `grad`, given d(loss)/d(outputs).
  void backward(const Matrix& out_adjoint, ParamGrad<Scalar>& grad) const {
    const auto& p = *params_;
    const int C = plan_.channel_count();
    const int K = static_cast<int>(plan_.dirs.size());
    const int L = p.layer_count();
    if (out_adjoint.rows() != C || out_adjoint.cols() != outputs_.cols())
      throw ShapeError("jet backward: adjoint shape mismatch");

    std::vector<Matrix> zbar(C);
    for (int c = 0; c < C; ++c) zbar[c] = out_adjoint.row(c);

    for (int l = L - 1; l >= 0; --l) {
      const auto& prev = acts_[l];
      for (int c = 0; c < C; ++c) grad.weights[l].noalias() += zbar[c] * prev[c].transpose();
      grad.biases[l] += zbar[0].rowwise().sum();
      if (l == 0) break;

      std::vector<Matrix> abar(C);
      for (int c = 0; c < C; ++c) abar[c].noalias() = p.weights[l].transpose() * zbar[c];

      // Hidden layer l-1: a = tanh(z) with first/second-order channel rules.
      const int h = l - 1;
      const auto t = tanh_[h].array();
      const auto s1 = (1 - t.square()).eval();
      const auto s2 = (-2 * t * s1).eval();
      const auto s3 = (-2 * s1 * (1 - 3 * t.square())).eval();
      const auto& z = pre_[h];

      std::vector<Matrix> next(C);
      next[0] = (s1 * abar[0].array()).matrix();
      for (int i = 0; i < K; ++i) {
        next[0].array() += s2 * abar[1 + i].array() * z[1 + i].array();
        next[1 + i] = (s1 * abar[1 + i].array()).matrix();
      }
      for (std::size_t q = 0; q < plan_.pairs.size(); ++q) {
        const auto [i, j] = plan_.pairs[q];
        const int c = plan_.pair_channel(static_cast<int>(q));
        const auto ab = abar[c].array();
        next[0].array() += ab * (s3 * z[1 + i].array() * z[1 + j].array() + s2 * z[c].array());
        next[1 + i].array() += s2 * ab * z[1 + j].array();
        next[1 + j].array() += s2 * ab * z[1 + i].array();
        next[c] = (s1 * ab).matrix();
      }
      zbar = std::move(next);
    }
  }

 private:
  const MlpParams<Scalar>* params_;
  JetPlan plan_;
  std::vector<std::vector<Matrix>> acts_;  // layer inputs, per channel
  std::vector<std::vector<Matrix>> pre_;   // hidden pre-activations (derivative channels)
  std::vector<Matrix> tanh_;
  Matrix outputs_;
};

template <typename Scalar, typename Derived>
Jet2<Scalar> forward_jet(const MlpParams<Scalar>& p, const Eigen::MatrixBase<Derived>& input) {
  if (input.size() != p.input_dim) throw ShapeError("forward_jet: input dimension mismatch");
  const int d = p.input_dim;
  const JetPlan plan = JetPlan::full(d);
  JetBatch<Scalar> batch(p, MatrixX<Scalar>(input), plan);
  const auto& out = batch.outputs();
  Jet2<Scalar> jet;
  jet.value = out(0, 0);
  jet.grad.resize(d);
  jet.hess.resize(d, d);
  for (int i = 0; i < d; ++i) jet.grad(i) = out(plan.first_channel(i), 0);
  for (std::size_t q = 0; q < plan.pairs.size(); ++q) {
    const auto [i, j] = plan.pairs[q];
    jet.hess(i, j) = jet.hess(j, i) = out(plan.pair_channel(static_cast<int>(q)), 0);
  }
  return jet;
}

/// One contribution to a scalar loss: a jet batch plus a reduction that maps
/// the batch outputs to a value and writes d(value)/d(outputs) into `adjoint`.
template <typename Scalar>
struct JetTerm {
  std::string name;
  MatrixX<Scalar> inputs;
  JetPlan plan;
  std::function<Scalar(const MatrixX<Scalar>& outputs, MatrixX<Scalar>& adjoint)> reduce;
};

template <typename Scalar>
struct LossEval {
  Scalar total{};
  std::vector<Scalar> terms;
  ParamGrad<Scalar> grad;
};

/// Sum of terms and its exact parameter gradient.
template <typename Scalar>
LossEval<Scalar> loss_grad(const MlpParams<Scalar>& p, const std::vector<JetTerm<Scalar>>& terms) {
  LossEval<Scalar> ev;
  ev.grad = zeros_like(p);
  for (const auto& term : terms) {
    JetBatch<Scalar> batch(p, term.inputs, term.plan);
    MatrixX<Scalar> adjoint = MatrixX<Scalar>::Zero(batch.outputs().rows(), batch.outputs().cols());
    const Scalar value = term.reduce(batch.outputs(), adjoint);
    if (!std::isfinite(static_cast<double>(value)) || !adjoint.allFinite())
      throw NonFiniteLoss(term.name, "non-finite loss in term '" + term.name + "'");
    ev.terms.push_back(value);
    ev.total += value;
    batch.backward(adjoint, ev.grad);
  }
  return ev;
}

/// Loss value only; no parameter adjoint.
template <typename Scalar>
std::vector<Scalar> loss_terms(const MlpParams<Scalar>& p,
                               const std::vector<JetTerm<Scalar>>& terms) {
  std::vector<Scalar> values;
  for (const auto& term : terms) {
    JetBatch<Scalar> batch(p, term.inputs, term.plan);
    MatrixX<Scalar> adjoint = MatrixX<Scalar>::Zero(batch.outputs().rows(), batch.outputs().cols());
    values.push_back(term.reduce(batch.outputs(), adjoint));
  }
  return values;
}

template <typename Scalar>
struct AdamState {
  ParamGrad<Scalar> m;
  ParamGrad<Scalar> v;
  std::int64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename Scalar>
AdamState<Scalar> make_adam(const MlpParams<Scalar>& p, double lr = 1e-3, double beta1 = 0.9,
                            double beta2 = 0.999, double eps = 1e-8) {
  AdamState<Scalar> s;
  s.m = zeros_like(p);
  s.v = zeros_like(p);
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  return s;
}

/// Bias-corrected Adam update in place.
template <typename Scalar>
void adam_step(MlpParams<Scalar>& p, const ParamGrad<Scalar>& g, AdamState<Scalar>& s) {
  if (g.weights.size() != p.weights.size() || s.m.weights.size() != p.weights.size())
    throw ShapeError("adam_step: shape mismatch");
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    if (param.rows() != grad.rows() || param.cols() != grad.cols())
      throw ShapeError("adam_step: shape mismatch");
    m = s.beta1 * m + (1.0 - s.beta1) * grad;
    v = s.beta2 * v + (1.0 - s.beta2) * grad.cwiseProduct(grad);
    param.array() -= s.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + s.eps);
  };
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    update(p.weights[l], g.weights[l], s.m.weights[l], s.v.weights[l]);
    update(p.biases[l], g.biases[l], s.m.biases[l], s.v.biases[l]);
  }
}

using Mlp = MlpParams<double>;

}  // namespace ngf
