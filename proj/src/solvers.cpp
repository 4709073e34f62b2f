#include "ngf/solvers.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ngf/errors.hpp"
#include "ngf/io.hpp"

namespace ngf {

namespace {

constexpr double kReorthTrigger = 1e-8;
constexpr double kBreakdown = 1e-14;
constexpr double kComplexTol = 1e-6;

// Restarted GMRES from x = 0. `on_step(iteration, residual_estimate, solution)`
// returns true to stop; `solution()` forms the current iterate on demand.
template <typename OnStep>
Eigen::VectorXd gmres_core(const MatVec& op, const Eigen::VectorXd& b, const GmresConfig& cfg,
                           OnStep&& on_step) {
  const Eigen::Index n = b.size();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const int cycle_len = cfg.restart ? *cfg.restart : cfg.max_iter;
  int total = 0;
  Eigen::VectorXd r = b;
  while (total < cfg.max_iter) {
    const double beta = r.norm();
    if (beta == 0.0) return x;
    const int m = std::min(cycle_len, cfg.max_iter - total);
    Eigen::MatrixXd q(n, m + 1);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::VectorXd cs(m), sn(m), g = Eigen::VectorXd::Zero(m + 1);
    g(0) = beta;
    q.col(0) = r / beta;

    int cols = 0;
    auto solution = [&]() -> Eigen::VectorXd {
      const Eigen::VectorXd y =
          h.topLeftCorner(cols, cols).triangularView<Eigen::Upper>().solve(g.head(cols));
      return x + q.leftCols(cols) * y;
    };

    bool stop = false;
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd w = op(q.col(j));
      const double w_norm = w.norm();
      for (int i = 0; i <= j; ++i) {
        h(i, j) = q.col(i).dot(w);
        w -= h(i, j) * q.col(i);
      }
      const Eigen::VectorXd again = q.leftCols(j + 1).transpose() * w;
      if (again.norm() > kReorthTrigger * w.norm()) {
        w -= q.leftCols(j + 1) * again;
        h.col(j).head(j + 1) += again;
      }
      const double hn = w.norm();
      h(j + 1, j) = hn;
      const bool breakdown = hn <= kBreakdown * w_norm;
      if (!breakdown) q.col(j + 1) = w / hn;

      for (int i = 0; i < j; ++i) {
        const double t = cs(i) * h(i, j) + sn(i) * h(i + 1, j);
        h(i + 1, j) = -sn(i) * h(i, j) + cs(i) * h(i + 1, j);
        h(i, j) = t;
      }
      const double d = std::hypot(h(j, j), h(j + 1, j));
      cs(j) = d == 0.0 ? 1.0 : h(j, j) / d;
      sn(j) = d == 0.0 ? 0.0 : h(j + 1, j) / d;
      h(j, j) = d;
      h(j + 1, j) = 0.0;
      g(j + 1) = -sn(j) * g(j);
      g(j) = cs(j) * g(j);
      cols = j + 1;
      ++total;
      if (on_step(total, std::abs(g(j + 1)), solution) || breakdown) {
        stop = true;
        break;
      }
    }
    x = solution();
    if (stop) return x;
    r = b - op(x);
  }
  return x;
}

void record_error(IterTrace& t, const Eigen::VectorXd& u, const std::optional<Eigen::VectorXd>& exact,
                  const Eigen::MatrixXd& basis) {
  if (!exact) return;
  const Eigen::VectorXd e = *exact - u;
  t.err2.push_back(e.norm());
  t.modes.push_back((basis.transpose() * e).cwiseAbs());
}

Eigen::VectorXd inverse_diagonal(const LinearSystem& s) {
  for (Eigen::Index i = 0; i < s.diag.size(); ++i)
    if (s.diag(i) == 0.0) throw SingularSmoother("zero diagonal entry in row " + std::to_string(i));
  return s.diag.cwiseInverse();
}

}  // namespace

void GmresConfig::validate() const {
  if (!(tol > 0.0)) throw ConfigError("GMRES tolerance must be positive");
  if (max_iter < 1) throw ConfigError("GMRES max_iter must be >= 1");
  if (restart && *restart < 1) throw ConfigError("GMRES restart must be >= 1");
}

void HybridConfig::validate() const {
  if (!(omega > 0.0 && omega <= 1.0)) throw ConfigError("omega must be in (0, 1]");
  if (jacobi_steps < 0) throw ConfigError("jacobi_steps must be >= 0");
  if (cycles < 1) throw ConfigError("cycles must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("hybrid tolerance must be positive");
  if (!(divergence_factor > 1.0)) throw ConfigError("divergence factor must exceed 1");
}

SolveResult gmres(const MatVec& apply_a, const Eigen::VectorXd& f, const GmresConfig& cfg) {
  cfg.validate();
  SolveResult res;
  res.trace.relres.push_back(1.0);
  const double fnorm = f.norm();
  if (fnorm == 0.0) {
    res.u = Eigen::VectorXd::Zero(f.size());
    res.trace.relres[0] = 0.0;
    res.trace.converged = true;
    return res;
  }
  res.u = gmres_core(apply_a, f, cfg, [&](int, double est, const auto&) {
    res.trace.relres.push_back(est / fnorm);
    return est / fnorm <= cfg.tol;
  });
  res.trace.converged = res.trace.relres.back() <= cfg.tol;
  if (!res.trace.converged) res.trace.message = "max_iter reached";
  return res;
}

SolveResult gmres(const LinearSystem& system, const GmresConfig& cfg) {
  return gmres([&system](const Eigen::VectorXd& v) { return system.apply(v); }, system.rhs, cfg);
}

SolveResult pgmres(const LinearSystem& system, const Eigen::MatrixXd& bhat, const GmresConfig& cfg) {
  cfg.validate();
  if (bhat.rows() != system.n || bhat.cols() != system.n)
    throw ShapeError("preconditioner size does not match the system");
  SolveResult res;
  const Eigen::VectorXd& f = system.rhs;
  const double fnorm = f.norm();
  res.trace.relres.push_back(1.0);
  res.trace.precond_relres.push_back(1.0);
  if (fnorm == 0.0) {
    res.u = Eigen::VectorXd::Zero(f.size());
    res.trace.relres[0] = res.trace.precond_relres[0] = 0.0;
    res.trace.converged = true;
    return res;
  }
  const Eigen::VectorXd pf = bhat * f;
  const double pnorm = pf.norm();
  auto op = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return bhat * system.apply(v); };
  res.u = gmres_core(op, pf, cfg, [&](int, double est, const auto& solution) {
    const Eigen::VectorXd u = solution();
    const double true_rel = (f - system.apply(u)).norm() / fnorm;
    res.trace.precond_relres.push_back(pnorm > 0.0 ? est / pnorm : 0.0);
    res.trace.relres.push_back(true_rel);
    return true_rel <= cfg.tol;
  });
  res.trace.converged = res.trace.relres.back() <= cfg.tol;
  if (!res.trace.converged) res.trace.message = "max_iter reached";
  return res;
}

Eigen::VectorXd damped_jacobi_step(const LinearSystem& system, const Eigen::VectorXd& u,
                                   double omega) {
  const Eigen::VectorXd dinv = inverse_diagonal(system);
  return u + omega * dinv.cwiseProduct(system.rhs - system.apply(u));
}

Eigen::MatrixXd jacobi_iteration_matrix(const LinearSystem& system, double omega) {
  const Eigen::VectorXd dinv = inverse_diagonal(system);
  return Eigen::MatrixXd::Identity(system.n, system.n) - omega * dinv.asDiagonal() * system.dense();
}

SolveResult hybrid_solve(const LinearSystem& system, const Eigen::MatrixXd& bhat,
                         const HybridConfig& cfg, const std::optional<Eigen::VectorXd>& exact_u) {
  cfg.validate();
  if (bhat.rows() != system.n || bhat.cols() != system.n)
    throw ShapeError("kernel matrix size does not match the system");
  const Eigen::VectorXd dinv = inverse_diagonal(system);
  const Eigen::MatrixXd basis = exact_u ? sine_basis(system.n) : Eigen::MatrixXd();
  const double fnorm = system.rhs.norm();

  SolveResult res;
  res.u = Eigen::VectorXd::Zero(system.n);
  auto& t = res.trace;
  Eigen::VectorXd r = system.rhs;
  auto record = [&](const char* stage) {
    r = system.rhs - system.apply(res.u);
    t.relres.push_back(fnorm > 0.0 ? r.norm() / fnorm : 0.0);
    t.stage.emplace_back(stage);
    record_error(t, res.u, exact_u, basis);
    if (t.relres.back() <= cfg.tol) t.converged = true;
    if (!std::isfinite(t.relres.back()) || t.relres.back() > cfg.divergence_factor * t.relres.front()) {
      t.diverged = true;
      t.message = "relative residual grew past the divergence guard";
    }
    return t.converged || t.diverged;
  };
  if (record("start")) return res;
  for (int m = 0; m < cfg.cycles; ++m) {
    res.u += bhat * r;
    if (record("kernel")) return res;
    for (int l = 0; l < cfg.jacobi_steps; ++l) {
      res.u += cfg.omega * dinv.cwiseProduct(r);
      if (record("jacobi")) return res;
    }
  }
  t.message = "cycle budget exhausted";
  return res;
}

SolveResult jacobi_solve(const LinearSystem& system, double omega, int sweeps,
                         const std::optional<Eigen::VectorXd>& exact_u, double divergence_factor) {
  if (sweeps < 0) throw ConfigError("sweeps must be >= 0");
  const Eigen::VectorXd dinv = inverse_diagonal(system);
  const Eigen::MatrixXd basis = exact_u ? sine_basis(system.n) : Eigen::MatrixXd();
  const double fnorm = system.rhs.norm();
  SolveResult res;
  res.u = Eigen::VectorXd::Zero(system.n);
  auto& t = res.trace;
  for (int s = 0; s <= sweeps; ++s) {
    const Eigen::VectorXd r = system.rhs - system.apply(res.u);
    t.relres.push_back(fnorm > 0.0 ? r.norm() / fnorm : 0.0);
    t.stage.emplace_back(s == 0 ? "start" : "jacobi");
    record_error(t, res.u, exact_u, basis);
    if (!std::isfinite(t.relres.back()) || t.relres.back() > divergence_factor * t.relres.front()) {
      t.diverged = true;
      t.message = "relative residual grew past the divergence guard";
      break;
    }
    if (s < sweeps) res.u += omega * dinv.cwiseProduct(r);
  }
  return res;
}

Eigen::MatrixXd sine_basis(int n) {
  if (n < 1) throw ShapeError("sine basis needs n >= 1");
  Eigen::MatrixXd s(n, n);
  const double scale = std::sqrt(2.0 / (n + 1));
  for (int j = 1; j <= n; ++j)
    for (int p = 1; p <= n; ++p)
      s(p - 1, j - 1) = scale * std::sin(static_cast<double>(j) * p * std::numbers::pi / (n + 1));
  return s;
}

Eigen::VectorXd mode_coefficients(const Eigen::VectorXd& v) {
  return sine_basis(static_cast<int>(v.size())).transpose() * v;
}

Eigen::VectorXd mode_errors(const Eigen::VectorXd& error) { return mode_coefficients(error).cwiseAbs(); }

Eigen::MatrixXd balance(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw ShapeError("balance: matrix must be square");
  Eigen::MatrixXd a = m;
  const Eigen::Index n = a.rows();
  constexpr double kRadix = 2.0;
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double col = a.col(i).cwiseAbs().sum() - std::abs(a(i, i));
      const double row = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
      if (col == 0.0 || row == 0.0) continue;
      double g = row / kRadix, f = 1.0;
      const double s = col + row;
      double c = col;
      while (c < g) {
        f *= kRadix;
        c *= kRadix * kRadix;
      }
      g = row * kRadix;
      while (c > g) {
        f /= kRadix;
        c /= kRadix * kRadix;
      }
      if ((c + row) / f < 0.95 * s) {
        done = false;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
  return a;
}

SpectralCondition spectral_condition(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw ShapeError("spectral_condition: square matrix required");
  Eigen::EigenSolver<Eigen::MatrixXd> es(balance(m), false);
  if (es.info() != Eigen::Success) throw Error("eigenvalue iteration did not converge");
  Eigen::VectorXcd ev = es.eigenvalues();
  std::sort(ev.data(), ev.data() + ev.size(), [](const auto& p, const auto& q) {
    return p.real() < q.real() || (p.real() == q.real() && p.imag() < q.imag());
  });
  SpectralCondition sc;
  sc.eigenvalues = ev;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (std::abs(ev(i).imag()) > kComplexTol * std::abs(ev(i))) sc.complex_spectrum = true;

  const Eigen::VectorXd re = ev.real();
  double neg_inner = -std::numeric_limits<double>::infinity();
  double pos_inner = std::numeric_limits<double>::infinity();
  bool has_neg = false, has_pos = false;
  for (Eigen::Index i = 0; i < re.size(); ++i) {
    if (re(i) < 0.0) {
      has_neg = true;
      neg_inner = std::max(neg_inner, re(i));
    } else if (re(i) > 0.0) {
      has_pos = true;
      pos_inner = std::min(pos_inner, re(i));
    }
  }
  if (has_neg && has_pos) {
    sc.indefinite = true;
    sc.kappa = (re.maxCoeff() * re.minCoeff()) / (neg_inner * pos_inner);
  } else {
    const Eigen::VectorXd mag = re.cwiseAbs();
    sc.kappa = mag.minCoeff() == 0.0 ? std::numeric_limits<double>::infinity()
                                     : mag.maxCoeff() / mag.minCoeff();
  }
  return sc;
}

void write_trace_csv(const std::filesystem::path& path, const IterTrace& trace, bool with_modes) {
  std::vector<std::string> header{"iteration", "relres", "err2"};
  const bool modes = with_modes && !trace.modes.empty();
  const Eigen::Index n = modes ? trace.modes.front().size() : 0;
  for (Eigen::Index j = 1; j <= n; ++j) header.push_back("mode_" + std::to_string(j));
  CsvWriter csv(header);
  for (std::size_t i = 0; i < trace.relres.size(); ++i) {
    std::vector<std::string> cells{std::to_string(i), format_real(trace.relres[i]),
                                   i < trace.err2.size() ? format_real(trace.err2[i]) : ""};
    for (Eigen::Index j = 0; j < n; ++j) cells.push_back(format_real(trace.modes[i](j)));
    csv.row(cells);
  }
  csv.save(path);
}

void write_eigenvalues_csv(const std::filesystem::path& path, const Eigen::VectorXcd& eigenvalues) {
  CsvWriter csv({"index", "Re", "Im"});
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    csv.row({std::to_string(i), format_real(eigenvalues(i).real()), format_real(eigenvalues(i).imag())});
  csv.save(path);
}

}  // namespace ngf
