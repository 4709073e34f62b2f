#include "ngf/problems.hpp"

#include <cmath>
#include <numbers>
#include <type_traits>

#include "ngf/errors.hpp"

namespace ngf {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kResonanceGuard = 1e-8;
}  // namespace

std::optional<double> ProblemSpec::alpha() const {
  if (const auto* pc = std::get_if<PiecewiseCoefficients>(&coeff)) return pc->alpha;
  return std::nullopt;
}

double ProblemSpec::c(double x) const {
  return std::visit(
      [x](const auto& cs) -> double {
        using T = std::decay_t<decltype(cs)>;
        if constexpr (std::is_same_v<T, SmoothCoefficients>)
          return cs.c(x);
        else
          return x < cs.alpha ? cs.c1 : cs.c2;
      },
      coeff);
}

double ProblemSpec::dc(double x) const {
  if (const auto* sc = std::get_if<SmoothCoefficients>(&coeff)) return sc->dc(x);
  return 0.0;
}

double ProblemSpec::k(double x) const {
  return std::visit(
      [x](const auto& cs) -> double {
        using T = std::decay_t<decltype(cs)>;
        if constexpr (std::is_same_v<T, SmoothCoefficients>)
          return cs.k(x);
        else
          return cs.k;
      },
      coeff);
}

void validate(const ProblemSpec& spec) {
  if (!(spec.b > spec.a)) throw ConfigError("problem '" + spec.name + "': empty domain");
  if (!spec.forcing) throw ConfigError("problem '" + spec.name + "': no forcing term");
  if (const auto* pc = std::get_if<PiecewiseCoefficients>(&spec.coeff)) {
    if (pc->c1 == 0.0 || pc->c2 == 0.0)
      throw InvalidCoefficient("piecewise coefficient must be nonzero");
    if (!(pc->alpha > spec.a && pc->alpha < spec.b))
      throw ConfigError("interface location must be interior to the domain");
  } else {
    const auto& sc = std::get<SmoothCoefficients>(spec.coeff);
    if (!sc.c || !sc.dc || !sc.k) throw ConfigError("smooth coefficient functions missing");
    constexpr int kProbe = 257;
    for (int i = 0; i < kProbe; ++i) {
      const double x = spec.a + spec.length() * i / (kProbe - 1);
      if (sc.c(x) == 0.0) throw InvalidCoefficient("c(x) vanishes in the domain");
    }
  }
}

void check_nonresonant(double k) {
  const double j = std::round(k / kPi);
  if (j != 0.0 && std::abs(k - j * kPi) < kResonanceGuard)
    throw ResonanceError("wavenumber " + std::to_string(k) + " is resonant");
}

double exact_green_helmholtz(double x, double y, double k) {
  check_nonresonant(k);
  if (std::abs(k) < kResonanceGuard) return x <= y ? x * (1.0 - y) : y * (1.0 - x);
  const double denom = k * std::sin(k);
  if (x <= y) return -std::sin(k * x) * std::sin(k * (y - 1.0)) / denom;
  return -std::sin(k * (x - 1.0)) * std::sin(k * y) / denom;
}

ProblemSpec benchmark_helmholtz() {
  constexpr double k = 10.0;
  ProblemSpec spec;
  spec.name = "benchmark-helmholtz";
  spec.a = 0.0;
  spec.b = 1.0;
  spec.coeff = SmoothCoefficients{[](double) { return 1.0; }, [](double) { return 0.0; },
                                  [](double) { return k; }};
  auto u = [](double x) { return 10.0 * x - 10.0 * x * x + 0.5 * std::sin(20.0 * kPi * x * x * x); };
  // -u'' plus the -k^2 u term, so that u solves the Helmholtz problem exactly.
  spec.forcing = [u](double x) {
    const double phase = 20.0 * kPi * x * x * x;
    return 20.0 - 60.0 * kPi * x * std::cos(phase) +
           1800.0 * kPi * kPi * x * x * x * x * std::sin(phase) - k * k * u(x);
  };
  spec.exact_solution = u;
  spec.exact_green = [](double x, double y) { return exact_green_helmholtz(x, y, k); };
  spec.helmholtz_k = k;
  return spec;
}

Manufactured default_variable_coeff_solution() {
  return {[](double x) { return x * (1.0 - x) + 0.5 * std::sin(2.0 * kPi * x); },
          [](double x) { return 1.0 - 2.0 * x + kPi * std::cos(2.0 * kPi * x); },
          [](double x) { return -2.0 - 2.0 * kPi * kPi * std::sin(2.0 * kPi * x); }};
}

ProblemSpec variable_coeff_problem(const Manufactured& m) {
  ProblemSpec spec;
  spec.name = "variable-coeff";
  spec.a = 0.0;
  spec.b = 1.0;
  auto c = [](double x) { return (x - 2.0) * (x - 2.0); };
  auto dc = [](double x) { return 2.0 * (x - 2.0); };
  auto k = [](double x) { return 15.0 * std::sin(10.0 * x); };
  spec.coeff = SmoothCoefficients{c, dc, k};
  spec.forcing = [m, c, dc, k](double x) {
    const double kx = k(x);
    return -(dc(x) * m.du(x) + c(x) * m.d2u(x)) - kx * kx * m.u(x);
  };
  spec.exact_solution = m.u;
  return spec;
}

ProblemSpec interface_problem() {
  ProblemSpec spec;
  spec.name = "interface";
  spec.a = -1.0;
  spec.b = 1.0;
  spec.coeff = PiecewiseCoefficients{1.0, 2.0, 0.0, 10.0};
  auto left = [](double x) { return -100.0 * x * x * x - 200.0 * x * x - 106.0 * x - 4.0; };
  auto right = [](double x) { return -50.0 * x * x * x + 100.0 * x * x - 56.0 * x + 4.0; };
  // At the interface the two one-sided limits are averaged.
  spec.forcing = [left, right](double x) {
    if (x < 0.0) return left(x);
    if (x > 0.0) return right(x);
    return 0.5 * (left(x) + right(x));
  };
  spec.exact_solution = [](double x) {
    if (x < 0.0) return x * x * x + 2.0 * x * x + x;
    return 0.5 * x * x * x - x * x + 0.5 * x;
  };
  return spec;
}

ProblemSpec problem_by_name(const std::string& name) {
  if (name == "benchmark-helmholtz") return benchmark_helmholtz();
  if (name == "variable-coeff") return variable_coeff_problem();
  if (name == "interface") return interface_problem();
  throw ConfigError("unknown problem '" + name + "'");
}

Eigenpair exact_eigenpair(int j, double k) {
  if (j < 1) throw ConfigError("eigenpair index must be >= 1");
  const double lambda = j * j * kPi * kPi - k * k;
  if (std::abs(j * kPi - std::abs(k)) < kResonanceGuard)
    throw ResonanceError("eigenpair " + std::to_string(j) + " is resonant");
  return {1.0 / lambda, [j](double x) { return std::sqrt(2.0) * std::sin(j * kPi * x); }};
}

}  // namespace ngf
