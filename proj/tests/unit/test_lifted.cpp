#include <doctest.h>

#include <cmath>
#include <random>

#include "ngf/errors.hpp"
#include "ngf/lifted.hpp"

using namespace ngf;

namespace {

// Closed-form stand-in given as value, gradient and Hessian callbacks.
AnalyticModel stub(int dim, std::function<void(const Eigen::VectorXd&, Jet2<double>&)> fill) {
  return AnalyticModel(dim, [dim, fill](const Eigen::VectorXd& in) {
    Jet2<double> j;
    j.grad = Eigen::VectorXd::Zero(dim);
    j.hess = Eigen::MatrixXd::Zero(dim, dim);
    fill(in, j);
    return j;
  });
}

ProblemSpec constant_c_problem(double c, double k) {
  ProblemSpec spec = benchmark_helmholtz();
  spec.coeff = SmoothCoefficients{[c](double) { return c; }, [](double) { return 0.0; },
                                  [k](double) { return k; }};
  return spec;
}

ProblemSpec piecewise_problem(double c1, double c2, double alpha, double k) {
  ProblemSpec spec = interface_problem();
  spec.coeff = PiecewiseCoefficients{c1, c2, alpha, k};
  return spec;
}

Mlp tiny_net(int dim, std::uint64_t seed, std::vector<int> widths = {4, 4}) {
  Mlp net = make_mlp<double>(dim, std::move(widths));
  std::mt19937_64 rng(seed);
  init_xavier(net, rng);
  std::normal_distribution<double> jitter(0.0, 0.2);
  for (auto& b : net.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = jitter(rng);
  return net;
}

PenaltyWeights unit_weights() {
  PenaltyWeights w;
  w.boundary = w.gamma = w.sigma = w.alpha = w.sym = 1.0;
  return w;
}

}  // namespace

TEST_CASE("augment fills lifted coordinates") {
  const auto p = augment(0.3, 0.5);
  CHECK(p.r == doctest::Approx(0.2));
  CHECK_FALSE(p.s1.has_value());
  CHECK(augment(0.5, 0.5).r == 0.0);
  const auto q = augment(-0.5, 0.25, 0.0);
  CHECK(q.r == 0.75);
  CHECK(*q.s1 == 0.5);
  CHECK(*q.s2 == 0.25);
  CHECK(q.vector().size() == 5);
}

TEST_CASE("smooth residuals on hand-checkable stubs") {
  const auto spec = constant_c_problem(1.0, 10.0);
  const auto zero = stub(3, [](const Eigen::VectorXd&, Jet2<double>&) {});
  CHECK(residual_interior_smooth(zero, spec, 0.2, 0.7) == 0.0);
  CHECK(residual_gamma_smooth(zero, spec, 0.4) == 1.0);

  const auto r_stub = stub(3, [](const Eigen::VectorXd& in, Jet2<double>& j) {
    j.value = in(kSlotR);
    j.grad(kSlotR) = 1.0;
  });
  CHECK(residual_interior_smooth(r_stub, spec, 0.2, 0.7) == doctest::Approx(-100.0 * 0.5));
  CHECK(residual_interior_smooth(r_stub, spec, 0.9, 0.3) == doctest::Approx(-100.0 * 0.6));

  const auto var = variable_coeff_problem();
  const double x = 0.35;
  const double cx = var.c(x);
  const auto jump_stub = stub(3, [cx](const Eigen::VectorXd& in, Jet2<double>& j) {
    j.value = -in(kSlotR) / (2.0 * cx);
    j.grad(kSlotR) = -1.0 / (2.0 * cx);
  });
  CHECK(residual_gamma_smooth(jump_stub, var, x) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK_THROWS_AS(residual_interior_smooth(zero, spec, 0.4, 0.4), InterfacePointError);
}

TEST_CASE("exact kernel in lifted coordinates annihilates the smooth residuals") {
  const auto spec = benchmark_helmholtz();
  const auto exact = lifted_exact_helmholtz(10.0);
  CHECK(exact.value(augment(0.3, 0.5).vector()) == doctest::Approx(0.0248748).epsilon(1e-5));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double x = uni(rng), y = uni(rng);
    if (x == y) continue;
    worst = std::max(worst, std::abs(residual_interior_smooth(exact, spec, x, y)));
    worst = std::max(worst, std::abs(residual_gamma_smooth(exact, spec, x)));
    worst = std::max(worst, std::abs(exact.value(augment(x, y).vector()) - spec.exact_green(x, y)));
  }
  CHECK(worst < 1e-6);
  CHECK(std::abs(residual_gamma_smooth(exact, spec, 0.3)) < 1e-6);
}

TEST_CASE("piecewise residuals on hand-checkable stubs") {
  const auto spec = piecewise_problem(1.0, 2.0, 0.0, 10.0);
  const auto zero = stub(5, [](const Eigen::VectorXd&, Jet2<double>&) {});
  CHECK(residual_interior_piecewise(zero, spec, 0.3, -0.4) == 0.0);
  CHECK(residual_sigma(zero, spec, 0.3) == 0.0);
  CHECK(residual_sigma_star(zero, spec, 0.3) == 0.0);
  CHECK(residual_alpha(zero, spec) == 1.0);

  const auto s2sq = stub(5, [](const Eigen::VectorXd& in, Jet2<double>& j) {
    j.value = in(kSlotS2) * in(kSlotS2);
    j.grad(kSlotS2) = 2.0 * in(kSlotS2);
    j.hess(kSlotS2, kSlotS2) = 2.0;
  });
  CHECK(residual_interior_piecewise(s2sq, spec, 0.1, -0.5) == doctest::Approx(-2.0 - 100.0 * 0.25));
  CHECK(residual_interior_piecewise(s2sq, spec, 0.1, 0.5) == doctest::Approx(-4.0 - 100.0 * 0.25));

  const auto s2_lin = stub(5, [](const Eigen::VectorXd& in, Jet2<double>& j) {
    j.value = in(kSlotS2);
    j.grad(kSlotS2) = 1.0;
  });
  CHECK(residual_sigma(s2_lin, spec, 0.4) == doctest::Approx(3.0));
  const auto s1_lin = stub(5, [](const Eigen::VectorXd& in, Jet2<double>& j) {
    j.value = in(kSlotS1);
    j.grad(kSlotS1) = 1.0;
  });
  CHECK(residual_sigma_star(s1_lin, spec, -0.4) == doctest::Approx(3.0));

  const auto same = piecewise_problem(1.5, 1.5, 0.0, 10.0);
  const auto no_s_dependence = stub(5, [](const Eigen::VectorXd& in, Jet2<double>& j) {
    j.value = in(kSlotY) * in(kSlotR);
    j.grad(kSlotY) = in(kSlotR);
    j.grad(kSlotR) = in(kSlotY);
    j.hess(kSlotY, kSlotR) = j.hess(kSlotR, kSlotY) = 1.0;
  });
  CHECK(residual_sigma(no_s_dependence, same, 0.4) == 0.0);
  CHECK(residual_sigma_star(no_s_dependence, same, 0.4) == 0.0);

  const double corner = -1.0 / (2.0 * (1.0 + 2.0));
  const auto alpha_stub = stub(5, [corner](const Eigen::VectorXd&, Jet2<double>& j) {
    j.grad(kSlotR) = corner;
    j.grad(kSlotS2) = corner;
  });
  CHECK(residual_alpha(alpha_stub, spec) == doctest::Approx(0.0).epsilon(1e-15));

  const auto equal = piecewise_problem(2.0, 2.0, 0.0, 10.0);
  const auto half = stub(5, [](const Eigen::VectorXd&, Jet2<double>& j) {
    j.grad(kSlotR) = -0.25;
  });
  CHECK(residual_alpha(half, equal) == doctest::Approx(0.0));

  CHECK_THROWS_AS(residual_interior_piecewise(zero, spec, 0.3, 0.0), InterfacePointError);
  CHECK_THROWS_AS(residual_interior_piecewise(zero, spec, 0.3, 0.3), InterfacePointError);
  CHECK_THROWS_AS(residual_sigma(zero, spec, 0.0), InterfacePointError);
  CHECK_THROWS_AS(residual_sigma_star(zero, spec, 0.0), InterfacePointError);
  CHECK_THROWS_AS(residual_interior_smooth(zero, spec, 0.3, 0.5), ConfigError);
}

TEST_CASE("piecewise residuals reduce to smooth ones without s dependence") {
  const auto smooth = constant_c_problem(1.5, 10.0);
  const auto pw = piecewise_problem(1.5, 1.5, 0.4, 10.0);
  Mlp net5 = tiny_net(5, 42, {6, 6});
  net5.weights[0].col(kSlotS1).setZero();
  net5.weights[0].col(kSlotS2).setZero();
  Mlp net3 = net5;
  net3.input_dim = 3;
  net3.weights[0] = net5.weights[0].leftCols(3);
  const NetworkModel m3(net3), m5(net5);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double x = uni(rng), y = uni(rng);
    CHECK(std::abs(residual_interior_smooth(m3, smooth, x, y) -
                   residual_interior_piecewise(m5, pw, x, y)) < 1e-10);
    CHECK(std::abs(residual_gamma_smooth(m3, smooth, x) - residual_gamma_piecewise(m5, pw, x)) < 1e-10);
  }
}

TEST_CASE("sampling respects the domain, exclusions and the seed") {
  const auto spec = interface_problem();
  SampleSizes sizes{20, 15, 2, 30, 25, 10};
  std::mt19937_64 r1(5), r2(5);
  const auto a = sample_training_sets(sizes, spec, r1);
  const auto b = sample_training_sets(sizes, spec, r2);
  CHECK(a.x_omega == b.x_omega);
  CHECK(a.y_omega == b.y_omega);
  CHECK(a.x_sigma == b.x_sigma);
  CHECK(a.y_omega.rows() == 20);
  CHECK(a.y_omega.cols() == 15);
  CHECK(a.x_sigma.size() == 25);
  for (Eigen::Index i = 0; i < a.x_omega.size(); ++i) {
    CHECK(a.x_omega(i) > -1.0);
    CHECK(a.x_omega(i) < 1.0);
    for (Eigen::Index j = 0; j < a.y_omega.cols(); ++j) {
      CHECK(std::abs(a.y_omega(i, j) - a.x_omega(i)) >= kExclusionRadius);
      CHECK(std::abs(a.y_omega(i, j)) >= kExclusionRadius);
    }
  }
  for (double y : a.y_boundary) CHECK((y == -1.0 || y == 1.0));
  for (Eigen::Index i = 0; i < a.x_sigma.size(); ++i) CHECK(std::abs(a.x_sigma(i)) >= kExclusionRadius);
  CHECK_THROWS_AS(sample_training_sets(SampleSizes{20, 15, 2, 30, 0, 0}, spec, r1), ConfigError);
}

TEST_CASE("total loss of the zero network and weight linearity") {
  const auto spec = constant_c_problem(1.0, 10.0);
  std::mt19937_64 rng(8);
  const auto sets = sample_training_sets(SampleSizes{6, 5, 2, 7, 0, 0}, spec, rng);
  const Mlp zero = make_mlp<double>(3, {4});
  const auto w = unit_weights();
  const auto loss = total_loss(zero, sets, spec, w);
  CHECK(loss.raw.at("interior") == 0.0);
  CHECK(loss.raw.at("boundary") == 0.0);
  CHECK(loss.raw.at("gamma") == doctest::Approx(1.0));
  CHECK(loss.raw.at("sym") == 0.0);
  CHECK(loss.total == doctest::Approx(1.0));

  const Mlp net = tiny_net(3, 17);
  auto doubled = w;
  doubled.gamma *= 2.0;
  const auto base = total_loss(net, sets, spec, w);
  const auto more = total_loss(net, sets, spec, doubled);
  CHECK(more.total - base.total == doctest::Approx(base.raw.at("gamma")).epsilon(1e-12));
}

TEST_CASE("exact kernel drives the full objective to zero") {
  const auto spec = benchmark_helmholtz();
  std::mt19937_64 rng(2);
  const auto sets = sample_training_sets(SampleSizes{40, 30, 2, 50, 0, 0}, spec, rng);
  const auto loss = total_loss(lifted_exact_helmholtz(10.0), sets, spec, PenaltyWeights{});
  CHECK(loss.total < 1e-10);
}

TEST_CASE("batched network loss equals pointwise evaluation") {
  for (bool piecewise : {false, true}) {
    const auto spec = piecewise ? interface_problem() : variable_coeff_problem();
    std::mt19937_64 rng(12);
    const auto sets = sample_training_sets(SampleSizes{5, 4, 2, 6, 5, piecewise ? 3 : 0}, spec, rng);
    const Mlp net = tiny_net(piecewise ? 5 : 3, 4);
    PenaltyWeights w;
    w.boundary_left = 300.0;
    w.boundary_right = 700.0;
    const auto batched = total_loss(net, sets, spec, w);
    const auto pointwise = total_loss(NetworkModel(net), sets, spec, w);
    CHECK(batched.total == doctest::Approx(pointwise.total).epsilon(1e-11));
    for (const auto& [name, value] : pointwise.raw)
      CHECK(batched.raw.at(name) == doctest::Approx(value).epsilon(1e-11));
  }
}

TEST_CASE("loss gradient matches parameter finite differences") {
  for (bool piecewise : {false, true}) {
    CAPTURE(piecewise);
    const auto spec = piecewise ? interface_problem() : variable_coeff_problem();
    std::mt19937_64 rng(21);
    const auto sets = sample_training_sets(SampleSizes{3, 3, 2, 4, 3, piecewise ? 2 : 0}, spec, rng);
    Mlp net = tiny_net(piecewise ? 5 : 3, 6);
    const PenaltyWeights w = unit_weights();
    const auto batches = build_loss_batches(sets, full_batch(sets), spec, w);
    const auto nl = network_loss_grad(net, batches);
    CHECK(nl.loss.total == doctest::Approx(network_loss(net, batches).total).epsilon(1e-14));
    constexpr double step = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < parameter_count(net); ++i) {
      const double saved = parameter(net, i);
      parameter(net, i) = saved + step;
      const double up = network_loss(net, batches).total;
      parameter(net, i) = saved - step;
      const double down = network_loss(net, batches).total;
      parameter(net, i) = saved;
      const double fd = (up - down) / (2 * step);
      worst = std::max(worst, std::abs(entry(nl.grad, i) - fd) / (1e-6 + std::abs(fd)));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("boundary penalty schedule and validation") {
  PenaltyWeights w;
  w.boundary = 400.0;
  w.boundary_schedule = {{30000, 4000.0}};
  CHECK(w.boundary_at(0) == 400.0);
  CHECK(w.boundary_at(29999) == 400.0);
  CHECK(w.boundary_at(30000) == 4000.0);
  w.sym = 0.0;
  CHECK_THROWS_AS(w.validate(), ConfigError);
}

TEST_CASE("minibatches are deterministic subsets") {
  const auto spec = benchmark_helmholtz();
  std::mt19937_64 rng(4);
  const auto sets = sample_training_sets(SampleSizes{20, 10, 2, 30, 0, 0}, spec, rng);
  std::mt19937_64 a(9), b(9);
  const auto m1 = draw_minibatch(sets, BatchSizes{8, 4, 10, 0}, a);
  const auto m2 = draw_minibatch(sets, BatchSizes{8, 4, 10, 0}, b);
  CHECK(m1.x == m2.x);
  CHECK(m1.x.size() == 8);
  CHECK(m1.y.front().size() == 4);
  CHECK(m1.gamma.size() == 10);
}
