#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>

namespace ngf {

using RealFn = std::function<double(double)>;
using KernelFn = std::function<double(double, double)>;

/// c(x), c'(x), k(x) all smooth on the closed domain.
struct SmoothCoefficients {
  RealFn c;
  RealFn dc;
  RealFn k;
};

/// c = c1 left of alpha, c2 right of alpha; constant wavenumber.
struct PiecewiseCoefficients {
  double c1 = 1.0;
  double c2 = 1.0;
  double alpha = 0.0;
  double k = 0.0;
};

using CoefficientSpec = std::variant<SmoothCoefficients, PiecewiseCoefficients>;

/// -(c u')' - k^2 u = f on (a, b), u(a) = u(b) = 0.
struct ProblemSpec {
  std::string name;
  double a = 0.0;
  double b = 1.0;
  CoefficientSpec coeff;
  RealFn forcing;
  RealFn exact_solution;   // empty when unknown
  KernelFn exact_green;    // empty when unknown
  /// Constant wavenumber of a c == 1 problem on (0, 1); enables closed-form
  /// eigenpairs of the solution operator.
  std::optional<double> helmholtz_k;

  bool piecewise() const { return std::holds_alternative<PiecewiseCoefficients>(coeff); }
  std::optional<double> alpha() const;
  double length() const { return b - a; }

  /// Diffusion coefficient. For piecewise problems the value at alpha itself
  /// is taken from the right subdomain.
  double c(double x) const;
  double dc(double x) const;
  double k(double x) const;
};

void validate(const ProblemSpec& spec);

/// -u'' - 100 u = f on (0, 1) with a multi-frequency manufactured solution.
ProblemSpec benchmark_helmholtz();

/// Closed-form Green's function of -u'' - k^2 u on (0, 1).
double exact_green_helmholtz(double x, double y, double k);

struct Manufactured {
  RealFn u, du, d2u;
};

/// x(1-x) + 0.5 sin(2 pi x).
Manufactured default_variable_coeff_solution();

/// -((x-2)^2 u')' - (15 sin 10x)^2 u = f on (0, 1) with f derived from `u`.
ProblemSpec variable_coeff_problem(const Manufactured& u = default_variable_coeff_solution());

/// c = 1 on (-1, 0), c = 2 on (0, 1), k = 10, piecewise-cubic exact solution.
ProblemSpec interface_problem();

/// "benchmark-helmholtz", "variable-coeff" or "interface".
ProblemSpec problem_by_name(const std::string& name);

struct Eigenpair {
  double mu;
  RealFn phi;
};

/// mu_j = 1 / (j^2 pi^2 - k^2), phi_j = sqrt(2) sin(j pi x).
Eigenpair exact_eigenpair(int j, double k);

/// Throws ResonanceError when k is within 1e-8 of a multiple of pi.
void check_nonresonant(double k);

}  // namespace ngf
