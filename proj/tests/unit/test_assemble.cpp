#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ngf/assemble.hpp"
#include "ngf/errors.hpp"
#include "ngf/kernel_source.hpp"

using namespace ngf;
using std::numbers::pi;

namespace {

ProblemSpec helmholtz_constant(double k) {
  ProblemSpec spec = benchmark_helmholtz();
  spec.name = "constant";
  spec.coeff = SmoothCoefficients{[](double) { return 1.0; }, [](double) { return 0.0; },
                                  [k](double) { return k; }};
  spec.exact_green = nullptr;
  return spec;
}

KernelSource laplace_kernel() {
  return KernelSource::analytic(
      [](double x, double y) { return x <= y ? x * (1 - y) : y * (1 - x); }, "laplace");
}

double direct_error(const ProblemSpec& spec, int exponent) {
  const auto sys = discretize(spec, mesh_size(spec, exponent));
  const Eigen::VectorXd u = solve_direct(sys);
  double err = 0.0;
  for (int i = 0; i < sys.n; ++i) err = std::max(err, std::abs(u(i) - spec.exact_solution(sys.nodes(i))));
  return err;
}

}  // namespace

TEST_CASE("Laplace stencil") {
  const auto sys = discretize(helmholtz_constant(0.0), 3);
  CHECK(sys.h == 0.25);
  Eigen::Matrix3d expected;
  expected << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  CHECK((sys.dense() - expected).cwiseAbs().maxCoeff() < 1e-15);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.dense());
  CHECK(es.eigenvalues()(0) == doctest::Approx(2 - std::sqrt(2.0)));
  CHECK(es.eigenvalues()(1) == doctest::Approx(2.0));
  CHECK(es.eigenvalues()(2) == doctest::Approx(2 + std::sqrt(2.0)));
  CHECK_THROWS_AS(discretize(helmholtz_constant(0.0), 1), ConfigError);
}

TEST_CASE("Helmholtz spectrum matches the closed form") {
  const int n = 63;
  const double k = 10.0;
  const auto sys = discretize(helmholtz_constant(k), n);
  const double kh = k * sys.h;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.dense());
  for (int j = 1; j <= n; ++j) {
    const double s = std::sin(j * pi / (2.0 * n + 2.0));
    CHECK(std::abs(es.eigenvalues()(j - 1) - (4 * s * s - kh * kh)) < 1e-10);
  }
}

TEST_CASE("systems are symmetric in every regime") {
  for (const auto& spec : {benchmark_helmholtz(), variable_coeff_problem(), interface_problem()}) {
    const auto sys = discretize(spec, mesh_size(spec, 5));
    CHECK((sys.lower - sys.upper).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(sys.n, -1.0, 2.0);
    CHECK((sys.apply(v) - sys.dense() * v).cwiseAbs().maxCoeff() < 1e-13);
    for (Eigen::Index i = 1; i < sys.nodes.size(); ++i) CHECK(sys.nodes(i) > sys.nodes(i - 1));
    CHECK(sys.nodes(0) > spec.a);
    CHECK(sys.nodes(sys.n - 1) < spec.b);
  }
}

TEST_CASE("interface must sit on a node") {
  const auto spec = interface_problem();
  CHECK(mesh_size(spec, 3) == 15);
  CHECK_NOTHROW(discretize(spec, 15));
  CHECK_THROWS_AS(discretize(spec, 16), InterfacePointError);
}

TEST_CASE("direct solves converge at second order") {
  for (const auto& spec : {benchmark_helmholtz(), variable_coeff_problem()}) {
    CAPTURE(spec.name);
    double prev = direct_error(spec, 7);
    for (int e = 8; e <= 10; ++e) {
      const double err = direct_error(spec, e);
      const double order = std::log2(prev / err);
      CHECK(order >= 1.8);
      CHECK(order <= 2.2);
      prev = err;
    }
  }
  // Piecewise cubic: the stencil is exact on each side and conservative at the node.
  for (int e = 3; e <= 10; ++e) CHECK(direct_error(interface_problem(), e) < 1e-10);
}

TEST_CASE("tridiagonal solve with pivoting") {
  LinearSystem sys;
  sys.n = 3;
  sys.lower = Eigen::Vector2d(1.0, 1.0);
  sys.diag = Eigen::Vector3d(0.0, 0.0, 1.0);
  sys.upper = Eigen::Vector2d(1.0, 1.0);
  const Eigen::Vector3d x(1.0, 2.0, 3.0);
  const Eigen::VectorXd f = sys.apply(x);
  CHECK((solve_tridiagonal(sys, f) - x).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("scaled Laplace kernel matrix is the exact inverse") {
  const auto spec = helmholtz_constant(0.0);
  const auto k3 = kernel_matrix(laplace_kernel(), discretize(spec, 3));
  CHECK(k3.values(0, 0) == doctest::Approx(0.75).epsilon(1e-15));
  for (int n : {3, 63, 255}) {
    const auto sys = discretize(spec, n);
    const auto b = kernel_matrix(laplace_kernel(), sys);
    Eigen::MatrixXd inv(n, n);
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j)
        inv(i - 1, j - 1) = static_cast<double>(std::min(i, j) * (n + 1 - std::max(i, j))) / (n + 1);
    CHECK((sys.dense() * inv - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((b.values - inv).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((b.values - b.values.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    const auto raw = kernel_matrix(laplace_kernel(), sys, false);
    CHECK((raw.values / sys.h - b.values).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("benchmark oracle kernel nearly inverts the system") {
  const auto spec = benchmark_helmholtz();
  const auto sys = discretize(spec, 255);
  const auto b = kernel_matrix(KernelSource::oracle(spec), sys);
  const Eigen::MatrixXd ba = b.values * sys.dense();
  const double off = (ba - Eigen::MatrixXd::Identity(255, 255)).cwiseAbs().rowwise().sum().maxCoeff();
  CHECK(off < 0.05);
}

TEST_CASE("fast solver") {
  const auto spec = benchmark_helmholtz();
  const auto oracle = KernelSource::oracle(spec);
  const Eigen::VectorXd pts = Eigen::VectorXd::LinSpaced(33, 0.0, 1.0);

  auto zero = spec;
  zero.forcing = [](double) { return 0.0; };
  CHECK(fast_solve(oracle, zero, 64, pts).cwiseAbs().maxCoeff() == 0.0);

  auto err = [&](int n_quad, Quadrature rule) {
    const Eigen::VectorXd u = fast_solve(oracle, spec, n_quad, pts, rule);
    double e = 0.0;
    for (Eigen::Index i = 0; i < pts.size(); ++i) e = std::max(e, std::abs(u(i) - spec.exact_solution(pts(i))));
    return e;
  };
  CHECK(err(1024, Quadrature::Trapezoid) <= 5e-3);
  CHECK(err(256, Quadrature::Trapezoid) / err(512, Quadrature::Trapezoid) >= 1.8);
  CHECK(err(256, Quadrature::GaussLegendre) < 1e-8);

  CHECK_THROWS_AS(KernelSource::oracle(interface_problem()), ConfigError);
  CHECK_THROWS_AS(fast_solve(oracle, spec, 1, pts), ConfigError);
}

TEST_CASE("fast solver on the interface problem with a piecewise kernel") {
  const auto spec = interface_problem();
  // Green's function of -(c u')' on (-1, 1) with c = 1 | 2 split at 0.
  auto w = [](double x) { return x < 0 ? x + 1 : 1 + x / 2; };
  auto v = [](double y) { return y < 0 ? 0.5 - y : (1 - y) / 2; };
  auto g = [&](double x, double y) { return w(std::min(x, y)) * v(std::max(x, y)) / 1.5; };
  auto laplace = spec;
  laplace.coeff = PiecewiseCoefficients{1.0, 2.0, 0.0, 0.0};
  laplace.forcing = [](double x) { return x < 0 ? 1.0 : x > 0 ? 2.0 : 1.5; };
  const Eigen::VectorXd pts = Eigen::VectorXd::LinSpaced(17, -1.0, 1.0);
  const Eigen::VectorXd u = fast_solve(KernelSource::analytic(g), laplace, 512, pts, Quadrature::GaussLegendre);
  const auto sys = discretize(laplace, mesh_size(laplace, 9));
  const Eigen::VectorXd ud = solve_direct(sys);
  for (Eigen::Index i = 1; i + 1 < pts.size(); ++i) {
    const int node = static_cast<int>(std::lround((pts(i) + 1.0) / sys.h)) - 1;
    CHECK(u(i) == doctest::Approx(ud(node)).epsilon(1e-4));
  }
}
