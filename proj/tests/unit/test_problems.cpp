#include <doctest.h>

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "ngf/errors.hpp"
#include "ngf/problems.hpp"

using namespace ngf;
using std::numbers::pi;

namespace {

// Central differences with Richardson extrapolation to tenth order.
double richardson(const std::function<double(double)>& d) {
  std::array<double, 5> t{};
  for (int i = 0; i < 5; ++i) t[i] = d(8e-3 / (1 << i));
  double factor = 4.0;
  for (int level = 1; level < 5; ++level, factor *= 4.0)
    for (int i = 4; i >= level; --i) t[i] = (factor * t[i] - t[i - 1]) / (factor - 1.0);
  return t[4];
}

double strong_residual(const ProblemSpec& spec, double x) {
  const auto& u = spec.exact_solution;
  const double du = richardson([&](double h) { return (u(x + h) - u(x - h)) / (2 * h); });
  const double d2u =
      richardson([&](double h) { return (u(x + h) - 2 * u(x) + u(x - h)) / (h * h); });
  const double k = spec.k(x);
  return -(spec.dc(x) * du + spec.c(x) * d2u) - k * k * u(x) - spec.forcing(x);
}

}  // namespace

TEST_CASE("benchmark problem closed forms") {
  const auto spec = benchmark_helmholtz();
  CHECK(spec.exact_solution(0.5) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(spec.exact_solution(0.0) == 0.0);
  CHECK(std::abs(spec.exact_solution(1.0)) < 1e-12);
  CHECK(spec.forcing(0.0) == doctest::Approx(20.0));
  CHECK(exact_green_helmholtz(0.3, 0.5, 10.0) == doctest::Approx(0.0248748).epsilon(1e-5));
  CHECK(exact_green_helmholtz(0.5, 0.3, 10.0) == exact_green_helmholtz(0.3, 0.5, 10.0));
  for (double y : {0.1, 0.5, 0.9}) CHECK(std::abs(exact_green_helmholtz(0.0, y, 10.0)) < 1e-15);
}

TEST_CASE("exact Green's function satisfies the equation and the unit jump") {
  constexpr double k = 10.0, h = 1e-4;
  auto g = [](double x, double y) { return exact_green_helmholtz(x, y, k); };
  for (double x : {0.2, 0.45, 0.8}) {
    for (double y : {0.1, 0.33, 0.6, 0.95}) {
      const double gyy = (g(x, y + h) - 2 * g(x, y) + g(x, y - h)) / (h * h);
      CHECK(std::abs(-gyy - k * k * g(x, y)) < 1e-6 * (1 + std::abs(gyy)));
    }
    CHECK(std::abs(g(x, 1.0)) < 1e-14);
  }
  const double eps = 1e-5;
  const double right = (-3 * g(0.3, 0.3) + 4 * g(0.3, 0.3 + eps) - g(0.3, 0.3 + 2 * eps)) / (2 * eps);
  const double left = (3 * g(0.3, 0.3) - 4 * g(0.3, 0.3 - eps) + g(0.3, 0.3 - 2 * eps)) / (2 * eps);
  CHECK(std::abs(right - left + 1.0) < 1e-6);
}

TEST_CASE("resonant wavenumbers are rejected") {
  CHECK_THROWS_AS(exact_green_helmholtz(0.2, 0.4, pi), ResonanceError);
  CHECK_THROWS_AS(check_nonresonant(3 * pi + 1e-10), ResonanceError);
  CHECK_NOTHROW(check_nonresonant(10.0));
  CHECK_THROWS_AS(exact_eigenpair(3, 3 * pi), ResonanceError);
}

TEST_CASE("manufactured solutions satisfy their problems") {
  std::mt19937_64 rng(1);
  for (const auto& spec : {benchmark_helmholtz(), variable_coeff_problem(), interface_problem()}) {
    CAPTURE(spec.name);
    std::uniform_real_distribution<double> uni(spec.a, spec.b);
    CHECK(std::abs(spec.exact_solution(spec.a)) < 1e-12);
    CHECK(std::abs(spec.exact_solution(spec.b)) < 1e-12);
    int checked = 0;
    while (checked < 1000) {
      const double x = uni(rng);
      if (spec.alpha() && std::abs(x - *spec.alpha()) < 2e-2) continue;
      const double scale = 1.0 + std::abs(spec.forcing(x));
      CHECK(std::abs(strong_residual(spec, x)) / scale < 1e-8);
      ++checked;
    }
  }
}

TEST_CASE("variable-coefficient problem") {
  const auto spec = variable_coeff_problem();
  CHECK(spec.c(0.0) == 4.0);
  CHECK(spec.c(1.0) == 1.0);
  CHECK_FALSE(static_cast<bool>(spec.exact_green));
  const Manufactured plain{[](double x) { return x * (1 - x); }, [](double x) { return 1 - 2 * x; },
                           [](double) { return -2.0; }};
  const auto alt = variable_coeff_problem(plain);
  const double k5 = 15.0 * std::sin(5.0);
  CHECK(alt.forcing(0.5) == doctest::Approx(4.5 - k5 * k5 * 0.25).epsilon(1e-12));
}

TEST_CASE("interface problem") {
  const auto spec = interface_problem();
  CHECK(spec.exact_solution(-0.5) == doctest::Approx(-0.125));
  CHECK(spec.exact_solution(0.5) == doctest::Approx(0.0625));
  CHECK(spec.exact_solution(0.0) == 0.0);
  CHECK(spec.exact_solution(-1e-15) == doctest::Approx(0.0));
  constexpr double h = 1e-6;
  const double left_flux = 1.0 * (spec.exact_solution(0.0) - spec.exact_solution(-h)) / h;
  const double right_flux = 2.0 * (spec.exact_solution(h) - spec.exact_solution(0.0)) / h;
  CHECK(left_flux == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(right_flux == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(*spec.alpha() == 0.0);
}

TEST_CASE("exact eigenpairs") {
  CHECK(exact_eigenpair(1, 10.0).mu == doctest::Approx(-0.0110939).epsilon(1e-5));
  CHECK(exact_eigenpair(4, 10.0).mu == doctest::Approx(0.0172670).epsilon(1e-5));
  // Gauss-Legendre on 64 cells, exact for the products below to rounding.
  const double nodes[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  const double weights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  for (int j = 1; j <= 8; ++j)
    for (int m = 1; m <= 8; ++m) {
      const auto pj = exact_eigenpair(j, 10.0).phi, pm = exact_eigenpair(m, 10.0).phi;
      double s = 0.0;
      for (int c = 0; c < 64; ++c)
        for (int q = 0; q < 3; ++q) {
          const double x = (c + 0.5 + 0.5 * nodes[q]) / 64.0;
          s += weights[q] / 128.0 * pj(x) * pm(x);
        }
      CHECK(s == doctest::Approx(j == m ? 1.0 : 0.0).epsilon(1e-10));
    }
}

TEST_CASE("problem catalog and validation") {
  CHECK(problem_by_name("interface").piecewise());
  CHECK_THROWS_AS(problem_by_name("nope"), ConfigError);
  auto bad = interface_problem();
  bad.coeff = PiecewiseCoefficients{0.0, 1.0, 0.0, 10.0};
  CHECK_THROWS_AS(validate(bad), InvalidCoefficient);
}
