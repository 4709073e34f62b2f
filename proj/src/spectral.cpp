#include "ngf/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ngf/errors.hpp"
#include "ngf/io.hpp"

namespace ngf {

namespace {

// Two candidates whose |correlation| differ by less than this are ambiguous.
constexpr double kPairingGap = 1e-6;
constexpr int kGaussPoints = 3;
constexpr double kGaussNodes[kGaussPoints] = {-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr double kGaussWeights[kGaussPoints] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

void gauss_cells(const std::vector<double>& breaks, std::vector<double>& nodes,
                 std::vector<double>& weights) {
  for (std::size_t c = 0; c + 1 < breaks.size(); ++c) {
    const double lo = breaks[c], hi = breaks[c + 1];
    if (hi <= lo) continue;
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (int q = 0; q < kGaussPoints; ++q) {
      nodes.push_back(mid + half * kGaussNodes[q]);
      weights.push_back(half * kGaussWeights[q]);
    }
  }
}

double sine_mode(int j, double x) { return std::sqrt(2.0) * std::sin(j * std::numbers::pi * x); }

}  // namespace

double EigenReport::mean_eps_mu(int first, int last) const {
  double sum = 0.0;
  int count = 0;
  for (const auto& row : rows)
    if (row.j >= first && row.j <= last) {
      sum += row.eps_mu;
      ++count;
    }
  if (count == 0) throw ConfigError("no eigen rows in the requested range");
  return sum / count;
}

NystromEigen nystrom_eigen(const KernelSource& source, double a, double b, int n) {
  if (n < 2) throw ConfigError("Nystrom discretization needs n >= 2");
  NystromEigen ne;
  const double h = (b - a) / n;
  ne.nodes = Eigen::VectorXd::LinSpaced(n + 1, a, b);
  ne.nodes(n) = b;
  ne.weights = Eigen::VectorXd::Constant(n + 1, h);
  ne.weights(0) = ne.weights(n) = 0.5 * h;
  const Eigen::MatrixXd s = source.sample(ne.nodes, ne.nodes);
  const Eigen::VectorXd root = ne.weights.cwiseSqrt();
  const Eigen::MatrixXd sym = root.asDiagonal() * (0.5 * (s + s.transpose())) * root.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw Error("symmetric eigensolver failed");
  ne.values = es.eigenvalues();
  ne.functions = root.cwiseInverse().asDiagonal() * es.eigenvectors();
  return ne;
}

EigenReport kernel_eigs(const KernelSource& source, double a, double b, int n,
                        const std::vector<Eigenpair>& reference) {
  const int count = static_cast<int>(reference.size());
  if (count < 1) throw ConfigError("need at least one reference eigenpair");
  if (n < 4 * count) throw ConfigError("kernel_eigs needs n >= 4 * count");
  const NystromEigen ne = nystrom_eigen(source, a, b, n);
  const Eigen::Index m = ne.nodes.size();

  Eigen::MatrixXd phi(m, count);
  for (int j = 0; j < count; ++j)
    for (Eigen::Index i = 0; i < m; ++i) phi(i, j) = reference[j].phi(ne.nodes(i));
  // corr(j, i) = <phi_j, phi_hat_i> in the discrete weighted inner product.
  const Eigen::MatrixXd corr = phi.transpose() * ne.weights.asDiagonal() * ne.functions;

  EigenReport rep;
  rep.n = n;
  rep.source_id = source.id();
  std::vector<int> owner(static_cast<std::size_t>(m), -1);
  for (int j = 0; j < count; ++j) {
    EigenRow row;
    row.j = j + 1;
    row.mu_exact = reference[j].mu;
    row.resolved = 5 * (j + 1) <= n;
    Eigen::Index best = 0;
    const Eigen::VectorXd c = corr.row(j).cwiseAbs();
    c.maxCoeff(&best);
    double second = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i)
      if (i != best) second = std::max(second, c(i));
    row.paired = c(best) - second > kPairingGap && owner[best] < 0;
    if (row.paired) owner[best] = j;
    const double sign = corr(j, best) < 0.0 ? -1.0 : 1.0;
    row.mu_hat = ne.values(best);
    row.eps_mu = std::abs(row.mu_exact - row.mu_hat) / std::abs(row.mu_exact);
    const Eigen::VectorXd diff = sign * ne.functions.col(best) - phi.col(j);
    const double ref_norm = std::sqrt(phi.col(j).cwiseAbs2().dot(ne.weights));
    row.eps_phi = std::sqrt(diff.cwiseAbs2().dot(ne.weights)) / ref_norm;
    rep.rows.push_back(row);
  }
  return rep;
}

EigenReport kernel_eigs(const KernelSource& source, const ProblemSpec& spec, int n, int count) {
  if (!spec.helmholtz_k || spec.a != 0.0 || spec.b != 1.0)
    throw ConfigError("closed-form eigenpairs exist only for the constant-coefficient problem on (0, 1)");
  source.check_compatible(spec);
  std::vector<Eigenpair> reference;
  for (int j = 1; j <= count; ++j) reference.push_back(exact_eigenpair(j, *spec.helmholtz_k));
  return kernel_eigs(source, spec.a, spec.b, n, reference);
}

GammaReport gamma_coefficients(const KernelSource& source, const ProblemSpec& spec, int count,
                               int n_quad) {
  if (!spec.exact_green || spec.a != 0.0 || spec.b != 1.0)
    throw ConfigError("gamma coefficients need an exact kernel on (0, 1)");
  if (count < 1) throw ConfigError("gamma coefficients need J >= 1");
  if (n_quad < 8 * count) throw ConfigError("gamma coefficients need n_quad >= 8 J");
  source.check_compatible(spec);

  std::vector<double> cell_breaks;
  for (int q = 0; q <= n_quad; ++q) cell_breaks.push_back(static_cast<double>(q) / n_quad);
  std::vector<double> xq, xw;
  gauss_cells(cell_breaks, xq, xw);

  // Row by row: y rule split at the diagonal.
  std::vector<double> px, py, pw;
  std::vector<std::size_t> row_start{0};
  for (std::size_t i = 0; i < xq.size(); ++i) {
    auto breaks = cell_breaks;
    breaks.insert(std::upper_bound(breaks.begin(), breaks.end(), xq[i]), xq[i]);
    std::vector<double> yq, yw;
    gauss_cells(breaks, yq, yw);
    for (std::size_t k = 0; k < yq.size(); ++k) {
      px.push_back(xq[i]);
      py.push_back(yq[k]);
      pw.push_back(yw[k]);
    }
    row_start.push_back(px.size());
  }
  const auto total = static_cast<Eigen::Index>(px.size());
  const Eigen::VectorXd ghat = source.eval_pairs_raw(Eigen::Map<const Eigen::VectorXd>(px.data(), total),
                                                     Eigen::Map<const Eigen::VectorXd>(py.data(), total));
  GammaReport rep;
  rep.gamma = Eigen::VectorXd::Zero(count);
  for (std::size_t i = 0; i < xq.size(); ++i) {
    Eigen::VectorXd inner = Eigen::VectorXd::Zero(count);
    for (std::size_t p = row_start[i]; p < row_start[i + 1]; ++p) {
      const double e = ghat(static_cast<Eigen::Index>(p)) - spec.exact_green(px[p], py[p]);
      rep.misfit_l2sq += xw[i] * pw[p] * e * e;
      for (int j = 1; j <= count; ++j) inner(j - 1) += pw[p] * e * sine_mode(j, py[p]);
    }
    for (int j = 1; j <= count; ++j) rep.gamma(j - 1) += xw[i] * sine_mode(j, xq[i]) * inner(j - 1);
  }
  rep.gamma = rep.gamma.cwiseAbs();
  return rep;
}

double high_frequency_loss(const Eigen::VectorXd& gamma, int eta) {
  if (eta < 1) throw ConfigError("eta must be >= 1");
  if (eta > gamma.size()) return 0.0;
  return gamma.tail(gamma.size() - eta + 1).squaredNorm();
}

BiasSnapshot bias_snapshot(const KernelSource& source, const ProblemSpec& spec,
                           const std::vector<int>& etas, int count, int n_quad, int epoch) {
  const GammaReport g = gamma_coefficients(source, spec, count, n_quad);
  BiasSnapshot s;
  s.epoch = epoch;
  s.gamma = g.gamma;
  s.misfit_l2sq = g.misfit_l2sq;
  for (int eta : etas) s.l_eta_plus.push_back(high_frequency_loss(g.gamma, eta));
  return s;
}

BiasReport bias_track(const ProblemSpec& spec, const TrainConfig& config,
                      const std::vector<int>& etas, int count, int cadence, int n_quad,
                      const TrainOutputs& outputs) {
  if (cadence < 1) throw ConfigError("bias cadence must be >= 1");
  BiasReport rep;
  rep.etas = etas;
  rep.count = count;
  EpochHook hook;
  hook.every = cadence;
  hook.fn = [&](int epoch, const Mlp& net) {
    const auto source = KernelSource::neural(net, spec.alpha(), "snapshot");
    rep.snapshots.push_back(bias_snapshot(source, spec, etas, count, n_quad, epoch));
  };
  train(spec, config, outputs, hook);
  return rep;
}

void write_eigen_report_csv(const std::filesystem::path& path, const EigenReport& report) {
  CsvWriter csv({"j", "mu_hat", "mu_exact", "eps_mu", "eps_phi", "paired", "resolved"});
  for (const auto& r : report.rows)
    csv.row({std::to_string(r.j), format_real(r.mu_hat), format_real(r.mu_exact),
             format_real(r.eps_mu), format_real(r.eps_phi), r.paired ? "1" : "0",
             r.resolved ? "1" : "0"});
  csv.save(path);
}

void write_bias_report_csv(const std::filesystem::path& path, const BiasReport& report) {
  std::vector<std::string> header{"epoch", "eta", "L_eta_plus", "L_total"};
  for (int j = 1; j <= report.count; ++j) header.push_back("gamma_" + std::to_string(j));
  CsvWriter csv(header);
  for (const auto& s : report.snapshots)
    for (std::size_t e = 0; e < report.etas.size(); ++e) {
      std::vector<std::string> cells{std::to_string(s.epoch), std::to_string(report.etas[e]),
                                     format_real(s.l_eta_plus[e]), format_real(s.misfit_l2sq)};
      for (Eigen::Index j = 0; j < s.gamma.size(); ++j) cells.push_back(format_real(s.gamma(j)));
      csv.row(cells);
    }
  csv.save(path);
}

}  // namespace ngf
