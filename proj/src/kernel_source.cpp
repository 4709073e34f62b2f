#include "ngf/kernel_source.hpp"

#include <cmath>

#include "ngf/checkpoint.hpp"
#include "ngf/errors.hpp"
#include "ngf/lifted.hpp"

namespace ngf {

namespace {

Eigen::MatrixXd lifted_inputs(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys,
                              std::optional<double> alpha) {
  Eigen::MatrixXd in(alpha ? 5 : 3, xs.size());
  for (Eigen::Index i = 0; i < xs.size(); ++i) in.col(i) = augment(xs(i), ys(i), alpha).vector();
  return in;
}

}  // namespace

KernelSource KernelSource::analytic(KernelFn g, std::string id) {
  if (!g) throw ConfigError("analytic kernel source needs a function");
  KernelSource s;
  s.fn_ = std::move(g);
  s.id_ = std::move(id);
  return s;
}

KernelSource KernelSource::neural(Mlp net, std::optional<double> alpha, std::string id) {
  validate(net);
  const int expected = alpha ? 5 : 3;
  if (net.input_dim != expected)
    throw ConfigError("network with " + std::to_string(net.input_dim) +
                      " inputs cannot serve a " + (alpha ? "piecewise" : "smooth") + " kernel");
  KernelSource s;
  s.net_ = std::make_shared<const Mlp>(std::move(net));
  s.alpha_ = alpha;
  s.id_ = std::move(id);
  return s;
}

KernelSource KernelSource::load(const std::filesystem::path& checkpoint) {
  Mlp net = read_checkpoint(checkpoint);
  const CheckpointMeta meta = read_metadata(checkpoint);
  if (meta.input_dim != 0 && meta.input_dim != net.input_dim)
    throw ConfigError("checkpoint metadata disagrees with the network input dimension");
  return neural(std::move(net), meta.alpha, checkpoint.string());
}

KernelSource KernelSource::oracle(const ProblemSpec& spec) {
  if (!spec.exact_green)
    throw ConfigError("problem '" + spec.name + "' has no closed-form kernel; supply a checkpoint");
  return analytic(spec.exact_green, "oracle:" + spec.name);
}

void KernelSource::check_compatible(const ProblemSpec& spec) const {
  if (!is_neural()) return;
  if (spec.piecewise() != alpha_.has_value())
    throw ConfigError("kernel '" + id_ + "' does not match the regime of problem '" + spec.name + "'");
  if (alpha_ && std::abs(*alpha_ - *spec.alpha()) > 1e-12)
    throw ConfigError("kernel '" + id_ + "' was trained for a different interface location");
}

double KernelSource::operator()(double x, double y) const {
  if (!net_) return fn_(x, y);
  const double forward_xy = forward(*net_, augment(x, y, alpha_).vector());
  const double forward_yx = forward(*net_, augment(y, x, alpha_).vector());
  return 0.5 * (forward_xy + forward_yx);
}

Eigen::VectorXd KernelSource::eval_pairs_raw(const Eigen::VectorXd& xs,
                                             const Eigen::VectorXd& ys) const {
  if (xs.size() != ys.size()) throw ShapeError("eval_pairs: length mismatch");
  if (!net_) {
    Eigen::VectorXd out(xs.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i) out(i) = fn_(xs(i), ys(i));
    return out;
  }
  return forward_batch(*net_, lifted_inputs(xs, ys, alpha_)).transpose();
}

Eigen::VectorXd KernelSource::eval_pairs(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) const {
  if (!net_) return eval_pairs_raw(xs, ys);
  return 0.5 * (eval_pairs_raw(xs, ys) + eval_pairs_raw(ys, xs));
}

Eigen::MatrixXd KernelSource::sample(const Eigen::VectorXd& rows, const Eigen::VectorXd& cols) const {
  const Eigen::Index m = rows.size(), n = cols.size();
  Eigen::VectorXd xs(m * n), ys(m * n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i) {
      xs(j * m + i) = rows(i);
      ys(j * m + i) = cols(j);
    }
  const Eigen::VectorXd v = eval_pairs(xs, ys);
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), m, n);
}

double kernel_eval(const KernelSource& source, double x, double y) { return source(x, y); }

}  // namespace ngf
