#include "ngf/assemble.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ngf/errors.hpp"
#include "ngf/io.hpp"

namespace ngf {

namespace {

// Pairs per batched kernel evaluation in the fast solver.
constexpr Eigen::Index kChunk = 1 << 16;

void append_cell(std::vector<double>& ys, std::vector<double>& ws, double lo, double hi,
                 Quadrature rule) {
  const double len = hi - lo;
  if (len <= 0.0) return;
  if (rule == Quadrature::Trapezoid) {
    ys.push_back(lo);
    ws.push_back(0.5 * len);
    ys.push_back(hi);
    ws.push_back(0.5 * len);
    return;
  }
  static const double kNodes[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                   0.8611363115940526};
  static const double kWeights[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                     0.3478548451374538};
  const double mid = 0.5 * (lo + hi);
  for (int q = 0; q < 4; ++q) {
    ys.push_back(mid + 0.5 * len * kNodes[q]);
    ws.push_back(0.5 * len * kWeights[q]);
  }
}

// One-sided forcing value, so a jump in f at the interface is integrated per side.
double forcing_in(const ProblemSpec& spec, double y, double hi) {
  const auto alpha = spec.alpha();
  if (alpha && y == *alpha) {
    const double eps = 1e-12 * spec.length();
    return hi <= *alpha ? spec.forcing(*alpha - eps) : spec.forcing(*alpha + eps);
  }
  return spec.forcing(y);
}

}  // namespace

Eigen::VectorXd LinearSystem::apply(const Eigen::VectorXd& u) const {
  if (u.size() != n) throw ShapeError("LinearSystem::apply: length mismatch");
  Eigen::VectorXd out = diag.cwiseProduct(u);
  if (n > 1) {
    out.head(n - 1) += upper.cwiseProduct(u.tail(n - 1));
    out.tail(n - 1) += lower.cwiseProduct(u.head(n - 1));
  }
  return out;
}

Eigen::MatrixXd LinearSystem::dense() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  a.diagonal() = diag;
  if (n > 1) {
    a.diagonal(1) = upper;
    a.diagonal(-1) = lower;
  }
  return a;
}

int mesh_size(const ProblemSpec& spec, int exponent) {
  if (exponent < 1 || exponent > 20) throw ConfigError("mesh exponent out of range");
  const double cells = spec.length() * std::ldexp(1.0, exponent);
  const double rounded = std::round(cells);
  if (std::abs(cells - rounded) > 1e-9) throw ConfigError("domain length is not a multiple of h");
  return static_cast<int>(rounded) - 1;
}

LinearSystem discretize(const ProblemSpec& spec, int n) {
  if (n < 2) throw ConfigError("discretization needs n >= 2");
  validate(spec);
  LinearSystem s;
  s.n = n;
  s.h = spec.length() / (n + 1);
  const double h = s.h;
  s.nodes.resize(n);
  for (int i = 0; i < n; ++i) s.nodes(i) = spec.a + (i + 1) * h;

  if (const auto alpha = spec.alpha()) {
    const double pos = (*alpha - spec.a) / h;
    if (std::abs(pos - std::round(pos)) > 1e-9)
      throw InterfacePointError("interface location is not a grid node for n = " + std::to_string(n));
  }

  // Face i sits between x_i and x_{i+1} (x_0 = a, x_{n+1} = b). With the
  // interface on a node every face lies in one subdomain, so the face value
  // at the midpoint is also the harmonic mean over the face cell.
  Eigen::VectorXd face(n + 1);
  for (int i = 0; i <= n; ++i) face(i) = spec.c(spec.a + (i + 0.5) * h);

  s.diag.resize(n);
  s.rhs.resize(n);
  s.lower.resize(n - 1);
  s.upper.resize(n - 1);
  for (int i = 0; i < n; ++i) {
    const double x = s.nodes(i);
    const double k = spec.k(x);
    s.diag(i) = face(i) + face(i + 1) - h * h * k * k;
    s.rhs(i) = h * h * spec.forcing(x);
    if (i + 1 < n) {
      s.upper(i) = -face(i + 1);
      s.lower(i) = -face(i + 1);
    }
  }
  return s;
}

Eigen::VectorXd solve_tridiagonal(const LinearSystem& sys, const Eigen::VectorXd& rhs) {
  const int n = sys.n;
  if (rhs.size() != n) throw ShapeError("solve_tridiagonal: length mismatch");
  Eigen::VectorXd dl = sys.lower, d = sys.diag, du = sys.upper, b = rhs;
  Eigen::VectorXd du2 = Eigen::VectorXd::Zero(std::max(n - 2, 0));
  for (int i = 0; i + 1 < n; ++i) {
    if (std::abs(d(i)) >= std::abs(dl(i))) {
      if (d(i) == 0.0) throw SingularSmoother("tridiagonal system is singular");
      const double f = dl(i) / d(i);
      d(i + 1) -= f * du(i);
      b(i + 1) -= f * b(i);
      dl(i) = 0.0;
    } else {
      const double f = d(i) / dl(i);
      d(i) = dl(i);
      std::swap(b(i), b(i + 1));
      b(i + 1) -= f * b(i);
      const double tmp = d(i + 1);
      d(i + 1) = du(i) - f * tmp;
      du(i) = tmp;
      if (i + 2 < n) {
        du2(i) = du(i + 1);
        du(i + 1) = -f * du(i + 1);
      }
    }
  }
  if (d(n - 1) == 0.0) throw SingularSmoother("tridiagonal system is singular");
  Eigen::VectorXd x(n);
  x(n - 1) = b(n - 1) / d(n - 1);
  if (n > 1) x(n - 2) = (b(n - 2) - du(n - 2) * x(n - 1)) / d(n - 2);
  for (int i = n - 3; i >= 0; --i) x(i) = (b(i) - du(i) * x(i + 1) - du2(i) * x(i + 2)) / d(i);
  return x;
}

DenseKernelMatrix kernel_matrix(const KernelSource& source, const LinearSystem& system,
                                bool scaled) {
  DenseKernelMatrix km;
  km.nodes = system.nodes;
  km.h = system.h;
  km.scaled = scaled;
  const Eigen::MatrixXd s = source.sample(system.nodes, system.nodes);
  km.values = 0.5 * (s + s.transpose());
  if (scaled) km.values /= system.h;
  if (!km.values.allFinite()) throw Error("kernel matrix has non-finite entries");
  return km;
}

Eigen::VectorXd fast_solve(const KernelSource& source, const ProblemSpec& spec, int n_quad,
                           const Eigen::VectorXd& eval_points, Quadrature rule) {
  if (n_quad < 2) throw ConfigError("fast solver needs at least two quadrature cells");
  source.check_compatible(spec);
  const double a = spec.a, b = spec.b;
  const double cell = spec.length() / n_quad;

  // Per evaluation point: y nodes, weights times forcing.
  std::vector<double> xs, ys, wf;
  std::vector<Eigen::Index> owner;
  for (Eigen::Index e = 0; e < eval_points.size(); ++e) {
    const double x = eval_points(e);
    std::vector<double> breaks;
    for (int q = 0; q <= n_quad; ++q) breaks.push_back(q == n_quad ? b : a + q * cell);
    if (x > a && x < b) breaks.push_back(x);
    if (const auto alpha = spec.alpha()) breaks.push_back(*alpha);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    std::vector<double> py, pw;
    for (std::size_t c = 0; c + 1 < breaks.size(); ++c) {
      const std::size_t start = py.size();
      append_cell(py, pw, breaks[c], breaks[c + 1], rule);
      for (std::size_t q = start; q < py.size(); ++q) {
        xs.push_back(x);
        ys.push_back(py[q]);
        wf.push_back(pw[q] * forcing_in(spec, py[q], breaks[c + 1]));
        owner.push_back(e);
      }
    }
  }

  Eigen::VectorXd u = Eigen::VectorXd::Zero(eval_points.size());
  const auto total = static_cast<Eigen::Index>(xs.size());
  for (Eigen::Index start = 0; start < total; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, total - start);
    const Eigen::VectorXd g = source.eval_pairs(Eigen::Map<const Eigen::VectorXd>(xs.data() + start, len),
                                                Eigen::Map<const Eigen::VectorXd>(ys.data() + start, len));
    for (Eigen::Index q = 0; q < len; ++q) u(owner[start + q]) += wf[start + q] * g(q);
  }
  return u;
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  CsvWriter csv({"row", "col", "value"});
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      csv.row({std::to_string(i), std::to_string(j), format_real(m(i, j))});
  csv.save(path);
}

void write_bands_csv(const std::filesystem::path& path, const LinearSystem& s) {
  CsvWriter csv({"i", "x", "lower", "diag", "upper", "rhs"});
  for (int i = 0; i < s.n; ++i)
    csv.row({std::to_string(i), format_real(s.nodes(i)), i > 0 ? format_real(s.lower(i - 1)) : "",
             format_real(s.diag(i)), i + 1 < s.n ? format_real(s.upper(i)) : "",
             format_real(s.rhs(i))});
  csv.save(path);
}

}  // namespace ngf
