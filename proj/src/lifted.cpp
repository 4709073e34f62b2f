#include "ngf/lifted.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <memory>
#include <numeric>

#include "ngf/errors.hpp"

namespace ngf {

namespace {

struct DerivSlots {
  int i = -1;
  int j = -1;
};

// Input slots differentiated by each Deriv (-1: not differentiated).
constexpr std::array<DerivSlots, kDerivCount> kDerivSlots{{
    {-1, -1},                 // Value
    {kSlotX, -1},             // Dx
    {kSlotY, -1},             // Dy
    {kSlotR, -1},             // Dr
    {kSlotS1, -1},            // Ds1
    {kSlotS2, -1},            // Ds2
    {kSlotY, kSlotY},         // Dyy
    {kSlotY, kSlotR},         // Dyr
    {kSlotR, kSlotR},         // Drr
    {kSlotY, kSlotS2},        // Dys2
    {kSlotR, kSlotS2},        // Drs2
    {kSlotS2, kSlotS2},       // Ds2s2
}};

const PiecewiseCoefficients& require_piecewise(const ProblemSpec& spec) {
  const auto* pc = std::get_if<PiecewiseCoefficients>(&spec.coeff);
  if (!pc) throw ConfigError("problem '" + spec.name + "' has no interface");
  return *pc;
}

void require_smooth_problem(const ProblemSpec& spec) {
  if (spec.piecewise())
    throw ConfigError("problem '" + spec.name + "' needs the piecewise residuals");
}

double distance_to(double r, const char* surface) {
  if (!(r > 0.0)) throw InterfacePointError(std::string("residual undefined on ") + surface);
  return r;
}

LiftedInput swapped(const LiftedInput& p) {
  LiftedInput q = p;
  std::swap(q.x, q.y);
  std::swap(q.s1, q.s2);
  return q;
}

std::vector<int> pick(int n, int m, std::mt19937_64& rng) {
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  if (m <= 0 || m >= n) return all;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(m));
  std::sample(all.begin(), all.end(), std::back_inserter(out), m, rng);
  return out;
}

// A residual batch lowered to network inputs plus a dense coefficient table.
struct Lowered {
  Eigen::MatrixXd inputs;
  JetPlan plan;
  std::vector<int> derivs;      // Deriv ids that appear
  std::vector<int> channels;    // output channel per entry of `derivs`
  Eigen::MatrixXd coeff;        // derivs.size() x N
  Eigen::RowVectorXd constant;  // 1 x N
  Eigen::RowVectorXd weight;    // 1 x N
  bool symmetry = false;
  Eigen::Index n = 0;
};

Lowered lower(const ResidualBatch& b, int input_dim) {
  Lowered lw;
  lw.symmetry = b.symmetry;
  lw.n = static_cast<Eigen::Index>(b.points.size());
  const Eigen::Index n = lw.n;
  if (static_cast<Eigen::Index>(b.point_weights.size()) != n)
    throw ShapeError("residual batch '" + b.name + "': weight count mismatch");
  if (!b.symmetry && static_cast<Eigen::Index>(b.forms.size()) != n)
    throw ShapeError("residual batch '" + b.name + "': form count mismatch");

  auto fill = [&](Eigen::Index col, const LiftedInput& p) {
    if (p.dim() != input_dim)
      throw ShapeError("residual batch '" + b.name + "': lifted dimension mismatch");
    lw.inputs.col(col) = p.vector();
  };
  lw.inputs.resize(input_dim, b.symmetry ? 2 * n : n);
  for (Eigen::Index q = 0; q < n; ++q) {
    fill(q, b.points[q]);
    if (b.symmetry) fill(n + q, swapped(b.points[q]));
  }
  lw.weight.resize(n);
  for (Eigen::Index q = 0; q < n; ++q) lw.weight(q) = b.point_weights[q];
  if (b.symmetry) return lw;

  std::array<bool, kDerivCount> used{};
  for (const auto& f : b.forms)
    for (int d = 0; d < kDerivCount; ++d) used[d] = used[d] || f.coeff[d] != 0.0;
  used[0] = true;

  std::array<int, 5> dir_slot;
  dir_slot.fill(-1);
  auto dir_of = [&](int input) {
    if (input >= input_dim) throw ShapeError("residual needs an input the model does not have");
    if (dir_slot[input] < 0) {
      dir_slot[input] = static_cast<int>(lw.plan.dirs.size());
      lw.plan.dirs.push_back(input);
    }
    return dir_slot[input];
  };
  for (int d = 0; d < kDerivCount; ++d) {
    if (!used[d]) continue;
    const auto s = kDerivSlots[d];
    int channel = 0;
    if (s.i >= 0 && s.j < 0) {
      channel = -1 - dir_of(s.i);  // resolved after all dirs are known
    } else if (s.i >= 0) {
      const int a = dir_of(s.i);
      const int c = dir_of(s.j);
      lw.plan.pairs.emplace_back(a, c);
      channel = 1000 + static_cast<int>(lw.plan.pairs.size()) - 1;
    }
    lw.derivs.push_back(d);
    lw.channels.push_back(channel);
  }
  for (int& c : lw.channels) {
    if (c < 0) c = lw.plan.first_channel(-1 - c);
    else if (c >= 1000) c = lw.plan.pair_channel(c - 1000);
  }

  lw.coeff.resize(static_cast<Eigen::Index>(lw.derivs.size()), n);
  lw.constant.resize(n);
  for (Eigen::Index q = 0; q < n; ++q) {
    for (std::size_t e = 0; e < lw.derivs.size(); ++e)
      lw.coeff(static_cast<Eigen::Index>(e), q) = b.forms[q].coeff[lw.derivs[e]];
    lw.constant(q) = b.forms[q].constant;
  }
  return lw;
}

struct Reduced {
  double raw = 0.0;
  double weighted = 0.0;
};

Reduced reduce(const Lowered& lw, const Eigen::MatrixXd& out, Eigen::MatrixXd* adjoint) {
  const Eigen::Index n = lw.n;
  if (n == 0) return {};
  Eigen::RowVectorXd res;
  if (lw.symmetry) {
    res = out.block(0, 0, 1, n) - out.block(0, n, 1, n);
  } else {
    res = lw.constant;
    for (std::size_t e = 0; e < lw.derivs.size(); ++e)
      res.array() += lw.coeff.row(static_cast<Eigen::Index>(e)).array() *
                     out.row(lw.channels[e]).array();
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  Reduced r;
  r.raw = res.squaredNorm() * inv_n;
  r.weighted = (lw.weight.array() * res.array().square()).sum() * inv_n;
  if (adjoint) {
    const Eigen::RowVectorXd dres = (2.0 * inv_n) * (lw.weight.array() * res.array()).matrix();
    if (lw.symmetry) {
      adjoint->block(0, 0, 1, n) += dres;
      adjoint->block(0, n, 1, n) -= dres;
    } else {
      for (std::size_t e = 0; e < lw.derivs.size(); ++e)
        adjoint->row(lw.channels[e]).array() +=
            lw.coeff.row(static_cast<Eigen::Index>(e)).array() * dres.array();
    }
  }
  return r;
}

int model_dim(const ProblemSpec& spec) { return spec.piecewise() ? 5 : 3; }

}  // namespace

Eigen::VectorXd LiftedInput::vector() const {
  Eigen::VectorXd v(dim());
  v(kSlotX) = x;
  v(kSlotY) = y;
  v(kSlotR) = r;
  if (s1) {
    v(kSlotS1) = *s1;
    v(kSlotS2) = s2.value_or(0.0);
  }
  return v;
}

LiftedInput augment(double x, double y, std::optional<double> alpha) {
  LiftedInput p;
  p.x = x;
  p.y = y;
  p.r = std::abs(y - x);
  if (alpha) {
    p.s1 = std::abs(x - *alpha);
    p.s2 = std::abs(y - *alpha);
  }
  return p;
}

double LinearForm::apply(const DerivValues& v) const {
  double s = constant;
  for (int d = 0; d < kDerivCount; ++d) s += coeff[d] * v[d];
  return s;
}

AnalyticModel lifted_exact_helmholtz(double k) {
  check_nonresonant(k);
  if (std::abs(k) < 1e-8) throw ConfigError("lifted closed form needs a nonzero wavenumber");
  const double denom = k * std::sin(k);
  return AnalyticModel(3, [k, denom](const Eigen::VectorXd& in) {
    const double x = in(kSlotX), y = in(kSlotY), r = in(kSlotR);
    // Branch P: sin(kx) sin(k(y-1)); branch Q: sin(k(x-1)) sin(ky).
    const double pa = std::sin(k * x), pca = std::cos(k * x);
    const double pb = std::sin(k * (y - 1.0)), pcb = std::cos(k * (y - 1.0));
    const double qa = std::sin(k * (x - 1.0)), qca = std::cos(k * (x - 1.0));
    const double qb = std::sin(k * y), qcb = std::cos(k * y);
    const double p = -pa * pb / denom;
    const double q = -qa * qb / denom;
    Jet2<double> jet;
    jet.value = 0.5 * (p + q) - std::sin(k * r) / (2.0 * k);
    jet.grad = Eigen::Vector3d::Zero();
    jet.hess = Eigen::Matrix3d::Zero();
    jet.grad(kSlotX) = -0.5 * k * (pca * pb + qca * qb) / denom;
    jet.grad(kSlotY) = -0.5 * k * (pa * pcb + qa * qcb) / denom;
    jet.grad(kSlotR) = -0.5 * std::cos(k * r);
    jet.hess(kSlotX, kSlotX) = -k * k * 0.5 * (p + q);
    jet.hess(kSlotY, kSlotY) = -k * k * 0.5 * (p + q);
    jet.hess(kSlotX, kSlotY) = jet.hess(kSlotY, kSlotX) =
        -0.5 * k * k * (pca * pcb + qca * qcb) / denom;
    jet.hess(kSlotR, kSlotR) = 0.5 * k * std::sin(k * r);
    return jet;
  });
}

DerivValues derivs_at(const LiftedModel& model, const LiftedInput& at) {
  if (at.dim() != model.input_dim()) throw ShapeError("lifted point/model dimension mismatch");
  const auto jet = model.jet(at.vector());
  DerivValues v{};
  v[0] = jet.value;
  for (int d = 1; d < kDerivCount; ++d) {
    const auto s = kDerivSlots[d];
    if (s.i >= model.input_dim() || s.j >= model.input_dim()) continue;
    v[d] = s.j < 0 ? jet.grad(s.i) : jet.hess(s.i, s.j);
  }
  return v;
}

LinearForm value_form() {
  LinearForm f;
  f[Deriv::Value] = 1.0;
  return f;
}

LinearForm interior_smooth_form(const ProblemSpec& spec, double x, double y) {
  require_smooth_problem(spec);
  const double r = distance_to(std::abs(y - x), "the diagonal");
  const double t = (y - x) / r;
  const double c = spec.c(y), dc = spec.dc(y), k = spec.k(y);
  LinearForm f;
  f[Deriv::Dy] = -dc;
  f[Deriv::Dr] = -dc * t;
  f[Deriv::Dyy] = -c;
  f[Deriv::Dyr] = -2.0 * c * t;
  f[Deriv::Drr] = -c;
  f[Deriv::Value] = -k * k;
  return f;
}

LinearForm gamma_form(const ProblemSpec& spec, double x) {
  LinearForm f;
  f[Deriv::Dr] = 2.0;
  if (const auto* pc = std::get_if<PiecewiseCoefficients>(&spec.coeff)) {
    if (x == pc->alpha) throw InterfacePointError("diagonal jump undefined at the interface");
    f.constant = 1.0 / (x < pc->alpha ? pc->c1 : pc->c2);
  } else {
    f.constant = 1.0 / spec.c(x);
  }
  return f;
}

LinearForm interior_piecewise_form(const ProblemSpec& spec, double x, double y) {
  const auto& pc = require_piecewise(spec);
  const double r = distance_to(std::abs(y - x), "the diagonal");
  const double s2 = distance_to(std::abs(y - pc.alpha), "the interface");
  const double t = (y - x) / r;
  const double u = (y - pc.alpha) / s2;
  const double c = y < pc.alpha ? pc.c1 : pc.c2;
  LinearForm f;
  f[Deriv::Dyy] = -c;
  f[Deriv::Dyr] = -2.0 * c * t;
  f[Deriv::Dys2] = -2.0 * c * u;
  f[Deriv::Drr] = -c;
  f[Deriv::Ds2s2] = -c;
  f[Deriv::Drs2] = -2.0 * c * t * u;
  f[Deriv::Value] = -pc.k * pc.k;
  return f;
}

LinearForm sigma_form(const ProblemSpec& spec, double x) {
  const auto& pc = require_piecewise(spec);
  const double r = distance_to(std::abs(pc.alpha - x), "the interface corner");
  const double t = (pc.alpha - x) / r;
  LinearForm f;
  f[Deriv::Dy] = pc.c2 - pc.c1;
  f[Deriv::Dr] = (pc.c2 - pc.c1) * t;
  f[Deriv::Ds2] = pc.c2 + pc.c1;
  return f;
}

LinearForm sigma_star_form(const ProblemSpec& spec, double y) {
  const auto& pc = require_piecewise(spec);
  const double r = distance_to(std::abs(y - pc.alpha), "the interface corner");
  const double t = (pc.alpha - y) / r;
  LinearForm f;
  f[Deriv::Dx] = pc.c2 - pc.c1;
  f[Deriv::Dr] = (pc.c2 - pc.c1) * t;
  f[Deriv::Ds1] = pc.c2 + pc.c1;
  return f;
}

LinearForm alpha_form(const ProblemSpec& spec) {
  const auto& pc = require_piecewise(spec);
  LinearForm f;
  f[Deriv::Dy] = pc.c2 - pc.c1;
  f[Deriv::Dr] = pc.c2 + pc.c1;
  f[Deriv::Ds2] = pc.c2 + pc.c1;
  f.constant = 1.0;
  return f;
}

double residual_interior_smooth(const LiftedModel& g, const ProblemSpec& spec, double x, double y) {
  return interior_smooth_form(spec, x, y).apply(derivs_at(g, augment(x, y)));
}

double residual_gamma_smooth(const LiftedModel& g, const ProblemSpec& spec, double x) {
  require_smooth_problem(spec);
  return gamma_form(spec, x).apply(derivs_at(g, augment(x, x)));
}

double residual_gamma_piecewise(const LiftedModel& g, const ProblemSpec& spec, double x) {
  const auto& pc = require_piecewise(spec);
  return gamma_form(spec, x).apply(derivs_at(g, augment(x, x, pc.alpha)));
}

double residual_interior_piecewise(const LiftedModel& g, const ProblemSpec& spec, double x,
                                   double y) {
  const auto& pc = require_piecewise(spec);
  return interior_piecewise_form(spec, x, y).apply(derivs_at(g, augment(x, y, pc.alpha)));
}

double residual_sigma(const LiftedModel& g, const ProblemSpec& spec, double x) {
  const auto& pc = require_piecewise(spec);
  return sigma_form(spec, x).apply(derivs_at(g, augment(x, pc.alpha, pc.alpha)));
}

double residual_sigma_star(const LiftedModel& g, const ProblemSpec& spec, double y) {
  const auto& pc = require_piecewise(spec);
  return sigma_star_form(spec, y).apply(derivs_at(g, augment(pc.alpha, y, pc.alpha)));
}

double residual_alpha(const LiftedModel& g, const ProblemSpec& spec) {
  const auto& pc = require_piecewise(spec);
  return alpha_form(spec).apply(derivs_at(g, augment(pc.alpha, pc.alpha, pc.alpha)));
}

SampleSets sample_training_sets(const SampleSizes& sizes, const ProblemSpec& spec,
                                std::mt19937_64& rng) {
  validate(spec);
  if (sizes.n_omega < 1 || sizes.n_omega_y < 1) throw ConfigError("need at least one interior point");
  if (sizes.n_gamma < 1) throw ConfigError("need at least one diagonal point");
  if (sizes.n_boundary < 2 || sizes.n_boundary % 2 != 0)
    throw ConfigError("boundary sample count must be a positive even number");
  if (spec.piecewise() && (sizes.n_sigma < 1 || sizes.n_alpha < 1))
    throw ConfigError("interface problems need interface and corner samples");

  SampleSets s;
  s.a = spec.a;
  s.b = spec.b;
  s.alpha = spec.alpha();
  std::uniform_real_distribution<double> uni(spec.a, spec.b);
  auto away = [&](double v, std::optional<double> from) {
    return !from || std::abs(v - *from) >= kExclusionRadius;
  };
  auto draw = [&](std::optional<double> avoid1, std::optional<double> avoid2) {
    for (;;) {
      const double v = uni(rng);
      if (v <= spec.a || v >= spec.b) continue;
      if (away(v, avoid1) && away(v, avoid2)) return v;
    }
  };

  s.x_omega.resize(sizes.n_omega);
  s.y_omega.resize(sizes.n_omega, sizes.n_omega_y);
  for (int i = 0; i < sizes.n_omega; ++i) {
    s.x_omega(i) = draw(s.alpha, std::nullopt);
    for (int j = 0; j < sizes.n_omega_y; ++j) s.y_omega(i, j) = draw(s.x_omega(i), s.alpha);
  }
  for (int i = 0; i < sizes.n_boundary; ++i) s.y_boundary.push_back(i % 2 == 0 ? spec.a : spec.b);
  s.x_gamma.resize(sizes.n_gamma);
  for (int i = 0; i < sizes.n_gamma; ++i) s.x_gamma(i) = draw(s.alpha, std::nullopt);
  if (s.alpha) {
    s.x_sigma.resize(sizes.n_sigma);
    s.y_sigma.resize(sizes.n_sigma);
    for (int i = 0; i < sizes.n_sigma; ++i) s.x_sigma(i) = draw(s.alpha, std::nullopt);
    for (int i = 0; i < sizes.n_sigma; ++i) s.y_sigma(i) = draw(s.alpha, std::nullopt);
    s.n_alpha = sizes.n_alpha;
  }
  return s;
}

double PenaltyWeights::boundary_at(int epoch) const {
  double w = boundary;
  for (const auto& [from, value] : boundary_schedule) {
    if (epoch >= from) w = value;
  }
  return w;
}

void PenaltyWeights::validate() const {
  auto check = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ConfigError(std::string("penalty weight '") + name + "' must be finite and positive");
  };
  check(boundary, "boundary");
  if (boundary_left) check(*boundary_left, "boundary_left");
  if (boundary_right) check(*boundary_right, "boundary_right");
  check(gamma, "gamma");
  check(sigma, "sigma");
  check(alpha, "alpha");
  check(sym, "sym");
  for (const auto& [epoch, value] : boundary_schedule) {
    if (epoch < 0) throw ConfigError("boundary schedule epoch must be >= 0");
    check(value, "boundary schedule");
  }
}

MiniBatch full_batch(const SampleSets& sets) {
  MiniBatch mb;
  const int nx = static_cast<int>(sets.x_omega.size());
  const int ny = static_cast<int>(sets.y_omega.cols());
  mb.x.resize(static_cast<std::size_t>(nx));
  std::iota(mb.x.begin(), mb.x.end(), 0);
  std::vector<int> all_y(static_cast<std::size_t>(ny));
  std::iota(all_y.begin(), all_y.end(), 0);
  mb.y.assign(mb.x.size(), all_y);
  mb.gamma.resize(static_cast<std::size_t>(sets.x_gamma.size()));
  std::iota(mb.gamma.begin(), mb.gamma.end(), 0);
  mb.sigma.resize(static_cast<std::size_t>(sets.x_sigma.size()));
  std::iota(mb.sigma.begin(), mb.sigma.end(), 0);
  return mb;
}

MiniBatch draw_minibatch(const SampleSets& sets, const BatchSizes& sizes, std::mt19937_64& rng) {
  MiniBatch mb;
  const int ny = static_cast<int>(sets.y_omega.cols());
  mb.x = pick(static_cast<int>(sets.x_omega.size()), sizes.x, rng);
  for (std::size_t i = 0; i < mb.x.size(); ++i) mb.y.push_back(pick(ny, sizes.y, rng));
  mb.gamma = pick(static_cast<int>(sets.x_gamma.size()), sizes.gamma, rng);
  mb.sigma = pick(static_cast<int>(sets.x_sigma.size()), sizes.sigma, rng);
  return mb;
}

std::vector<ResidualBatch> build_loss_batches(const SampleSets& sets, const MiniBatch& mb,
                                              const ProblemSpec& spec, const PenaltyWeights& w,
                                              int epoch) {
  if (spec.piecewise() != sets.alpha.has_value())
    throw ConfigError("sample sets do not match the problem regime");
  const auto alpha = sets.alpha;
  const bool pw = spec.piecewise();

  ResidualBatch interior{"interior", {}, {}, {}, false};
  ResidualBatch sym{"sym", {}, {}, {}, true};
  ResidualBatch boundary{"boundary", {}, {}, {}, false};
  const double beta_b = w.boundary_at(epoch);
  for (std::size_t i = 0; i < mb.x.size(); ++i) {
    const double x = sets.x_omega(mb.x[i]);
    for (int j : mb.y[i]) {
      const double y = sets.y_omega(mb.x[i], j);
      const auto p = augment(x, y, alpha);
      interior.points.push_back(p);
      interior.forms.push_back(pw ? interior_piecewise_form(spec, x, y)
                                  : interior_smooth_form(spec, x, y));
      interior.point_weights.push_back(1.0);
      sym.points.push_back(p);
      sym.point_weights.push_back(w.sym);
    }
    for (double y : sets.y_boundary) {
      boundary.points.push_back(augment(x, y, alpha));
      boundary.forms.push_back(value_form());
      double beta = beta_b;
      if (pw) beta = (y == sets.a ? w.boundary_left : w.boundary_right).value_or(beta_b);
      boundary.point_weights.push_back(beta);
    }
  }

  std::vector<ResidualBatch> out;
  out.push_back(std::move(interior));
  out.push_back(std::move(boundary));

  // Piecewise: one batch per subdomain so each diagonal set is averaged separately.
  ResidualBatch gamma_left{"gamma", {}, {}, {}, false};
  ResidualBatch gamma_right{"gamma", {}, {}, {}, false};
  for (int i : mb.gamma) {
    const double x = sets.x_gamma(i);
    auto& target = (alpha && x > *alpha) ? gamma_right : gamma_left;
    target.points.push_back(augment(x, x, alpha));
    target.forms.push_back(gamma_form(spec, x));
    target.point_weights.push_back(w.gamma);
  }
  out.push_back(std::move(gamma_left));
  if (pw) out.push_back(std::move(gamma_right));
  out.push_back(std::move(sym));

  if (pw) {
    ResidualBatch sigma{"sigma", {}, {}, {}, false};
    ResidualBatch sigma_star{"sigma_star", {}, {}, {}, false};
    for (int i : mb.sigma) {
      const double x = sets.x_sigma(i);
      sigma.points.push_back(augment(x, *alpha, alpha));
      sigma.forms.push_back(sigma_form(spec, x));
      sigma.point_weights.push_back(w.sigma);
      const double y = sets.y_sigma(i);
      sigma_star.points.push_back(augment(*alpha, y, alpha));
      sigma_star.forms.push_back(sigma_star_form(spec, y));
      sigma_star.point_weights.push_back(w.sigma);
    }
    out.push_back(std::move(sigma));
    out.push_back(std::move(sigma_star));
    // Every corner sample is the same point, so its mean equals one evaluation.
    if (sets.n_alpha > 0) {
      ResidualBatch corner{"alpha", {augment(*alpha, *alpha, alpha)}, {alpha_form(spec)},
                           {w.alpha}, false};
      out.push_back(std::move(corner));
    }
  }
  return out;
}

LossBreakdown evaluate_loss(const LiftedModel& model, const std::vector<ResidualBatch>& batches) {
  LossBreakdown lb;
  for (const auto& b : batches) {
    const auto n = b.points.size();
    double raw = 0.0, weighted = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
      double res;
      if (b.symmetry)
        res = model.value(b.points[q].vector()) - model.value(swapped(b.points[q]).vector());
      else
        res = b.forms[q].apply(derivs_at(model, b.points[q]));
      raw += res * res;
      weighted += b.point_weights[q] * res * res;
    }
    if (n > 0) {
      raw /= static_cast<double>(n);
      weighted /= static_cast<double>(n);
    }
    if (!std::isfinite(weighted)) throw NonFiniteLoss(b.name, "non-finite loss in term '" + b.name + "'");
    lb.raw[b.name] += raw;
    lb.total += weighted;
  }
  return lb;
}

NetworkLoss network_loss_grad(const Mlp& net, const std::vector<ResidualBatch>& batches) {
  NetworkLoss nl;
  nl.grad = zeros_like(net);
  for (const auto& b : batches) {
    if (b.points.empty()) {
      nl.loss.raw[b.name] += 0.0;
      continue;
    }
    const Lowered lw = lower(b, net.input_dim);
    JetBatch<double> jb(net, lw.inputs, lw.plan);
    Eigen::MatrixXd adjoint = Eigen::MatrixXd::Zero(jb.outputs().rows(), jb.outputs().cols());
    const Reduced r = reduce(lw, jb.outputs(), &adjoint);
    if (!std::isfinite(r.weighted) || !adjoint.allFinite())
      throw NonFiniteLoss(b.name, "non-finite loss in term '" + b.name + "'");
    nl.loss.raw[b.name] += r.raw;
    nl.loss.total += r.weighted;
    jb.backward(adjoint, nl.grad);
  }
  return nl;
}

LossBreakdown network_loss(const Mlp& net, const std::vector<ResidualBatch>& batches) {
  LossBreakdown lb;
  for (const auto& b : batches) {
    if (b.points.empty()) {
      lb.raw[b.name] += 0.0;
      continue;
    }
    const Lowered lw = lower(b, net.input_dim);
    JetBatch<double> jb(net, lw.inputs, lw.plan);
    const Reduced r = reduce(lw, jb.outputs(), nullptr);
    if (!std::isfinite(r.weighted))
      throw NonFiniteLoss(b.name, "non-finite loss in term '" + b.name + "'");
    lb.raw[b.name] += r.raw;
    lb.total += r.weighted;
  }
  return lb;
}

LossBreakdown total_loss(const LiftedModel& model, const SampleSets& sets, const ProblemSpec& spec,
                         const PenaltyWeights& w, int epoch) {
  if (model.input_dim() != model_dim(spec)) throw ShapeError("model has the wrong lifted dimension");
  return evaluate_loss(model, build_loss_batches(sets, full_batch(sets), spec, w, epoch));
}

LossBreakdown total_loss(const Mlp& net, const SampleSets& sets, const ProblemSpec& spec,
                         const PenaltyWeights& w, int epoch) {
  if (net.input_dim != model_dim(spec)) throw ShapeError("network has the wrong lifted dimension");
  return network_loss(net, build_loss_batches(sets, full_batch(sets), spec, w, epoch));
}

std::vector<JetTerm<double>> make_jet_terms(const std::vector<ResidualBatch>& batches,
                                            int input_dim) {
  std::vector<JetTerm<double>> terms;
  for (const auto& b : batches) {
    if (b.points.empty()) continue;
    auto lw = std::make_shared<const Lowered>(lower(b, input_dim));
    JetTerm<double> t;
    t.name = b.name;
    t.inputs = lw->inputs;
    t.plan = lw->plan;
    t.reduce = [lw](const Eigen::MatrixXd& out, Eigen::MatrixXd& adjoint) {
      return reduce(*lw, out, &adjoint).weighted;
    };
    terms.push_back(std::move(t));
  }
  return terms;
}

}  // namespace ngf
