#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "ngf/errors.hpp"
#include "ngf/io.hpp"
#include "ngf/kernel_source.hpp"
#include "ngf/spectral.hpp"

using namespace ngf;
using std::numbers::pi;

namespace {

double phi(int j, double x) { return std::sqrt(2.0) * std::sin(j * pi * x); }

}  // namespace

TEST_CASE("rank-one kernel") {
  const auto src = KernelSource::analytic([](double x, double y) { return 2 * std::sin(pi * x) * std::sin(pi * y); });
  const auto ny = nystrom_eigen(src, 0.0, 1.0, 128);
  const Eigen::Index top = ny.values.size() - 1;
  CHECK(ny.values(top) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(ny.values.head(top).cwiseAbs().maxCoeff() < 1e-12);

  const auto report = kernel_eigs(src, 0.0, 1.0, 128, {Eigenpair{1.0, [](double x) { return phi(1, x); }}});
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].paired);
  CHECK(report.rows[0].mu_hat == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(report.rows[0].eps_phi < 1e-3);
}

TEST_CASE("oracle kernel eigenpairs") {
  const auto spec = benchmark_helmholtz();
  const auto oracle = KernelSource::oracle(spec);
  const auto r512 = kernel_eigs(oracle, spec, 512, 10);
  CHECK(r512.rows[0].mu_exact == doctest::Approx(-0.0110939).epsilon(1e-5));
  CHECK(r512.rows[3].mu_exact == doctest::Approx(0.0172670).epsilon(1e-5));
  for (const auto& row : r512.rows) {
    CAPTURE(row.j);
    CHECK(row.paired);
    CHECK(row.resolved);
    CHECK(row.eps_mu < 1e-3);
    CHECK(row.eps_mu == doctest::Approx(std::abs(row.mu_exact - row.mu_hat) / std::abs(row.mu_exact)));
  }
  const auto r256 = kernel_eigs(oracle, spec, 256, 10);
  for (int j = 0; j < 5; ++j) CHECK(r256.rows[j].eps_mu >= 3.0 * r512.rows[j].eps_mu);
  CHECK(r512.mean_eps_mu(1, 10) > 0.0);
  CHECK_THROWS_AS(kernel_eigs(oracle, spec, 30, 10), ConfigError);
}

TEST_CASE("Nystrom eigenfunctions are orthonormal") {
  const auto spec = benchmark_helmholtz();
  const auto ny = nystrom_eigen(KernelSource::oracle(spec), 0.0, 1.0, 200);
  const Eigen::MatrixXd gram = ny.functions.transpose() * ny.weights.asDiagonal() * ny.functions;
  CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-8);
  for (Eigen::Index i = 1; i < ny.values.size(); ++i) CHECK(ny.values(i) >= ny.values(i - 1));
}

TEST_CASE("gamma coefficients") {
  const auto spec = benchmark_helmholtz();
  const auto exact = gamma_coefficients(KernelSource::oracle(spec), spec, 16, 256);
  CHECK(exact.gamma.maxCoeff() < 1e-8);
  CHECK(exact.misfit_l2sq < 1e-16);

  const auto injected = KernelSource::analytic(
      [](double x, double y) { return exact_green_helmholtz(x, y, 10.0) + phi(2, x) * phi(2, y); });
  const auto rep = gamma_coefficients(injected, spec, 16, 256);
  CHECK(rep.gamma(1) == doctest::Approx(1.0).epsilon(1e-10));
  for (int j = 0; j < 16; ++j)
    if (j != 1) CHECK(rep.gamma(j) < 1e-8);
  CHECK(rep.misfit_l2sq == doctest::Approx(1.0).epsilon(1e-10));

  const auto mixed = KernelSource::analytic(
      [](double x, double y) { return exact_green_helmholtz(x, y, 10.0) + 0.1 * x * y * (1 - y); });
  const auto m = gamma_coefficients(mixed, spec, 16, 256);
  CHECK(m.gamma.squaredNorm() <= m.misfit_l2sq);
  CHECK_THROWS_AS(gamma_coefficients(mixed, spec, 64, 256), ConfigError);
  CHECK_THROWS_AS(gamma_coefficients(mixed, variable_coeff_problem(), 4, 256), ConfigError);
}

TEST_CASE("high-frequency loss is a tail sum") {
  const Eigen::VectorXd g = Eigen::Vector4d(1.0, 2.0, 3.0, 4.0);
  CHECK(high_frequency_loss(g, 1) == 30.0);
  CHECK(high_frequency_loss(g, 3) == 25.0);
  CHECK(high_frequency_loss(g, 5) == 0.0);
}

TEST_CASE("bias tracking") {
  const auto spec = benchmark_helmholtz();
  TrainConfig cfg;
  cfg.hidden_widths = {8, 8};
  cfg.sizes = SampleSizes{10, 10, 2, 10, 0, 0};
  cfg.batch = BatchSizes{5, 0, 0, 0};
  cfg.epochs = 6;
  cfg.seed = 2;
  cfg.objective = Objective::FitExact;
  const auto once = bias_track(spec, cfg, {2, 4, 8}, 8, 100, 64);
  REQUIRE(once.snapshots.size() == 1);
  CHECK(once.snapshots[0].epoch == 6);
  const auto every = bias_track(spec, cfg, {2, 4, 8}, 8, 2, 64);
  CHECK(every.snapshots.size() == 3);
  for (const auto& s : every.snapshots) {
    CHECK(s.l_eta_plus[0] >= s.l_eta_plus[1]);
    CHECK(s.l_eta_plus[1] >= s.l_eta_plus[2]);
    CHECK(s.gamma.squaredNorm() <= s.misfit_l2sq);
    CHECK(s.gamma.allFinite());
  }
  const auto frozen = KernelSource::analytic([](double x, double y) { return exact_green_helmholtz(x, y, 10.0) + x * y; });
  const auto a = bias_snapshot(frozen, spec, {2}, 8, 64, 0);
  const auto b = bias_snapshot(frozen, spec, {2}, 8, 64, 100);
  CHECK(a.l_eta_plus == b.l_eta_plus);

  const auto path = std::filesystem::temp_directory_path() / "ngf_test_spectral" / "bias.csv";
  write_bias_report_csv(path, every);
  const auto text = read_file(path);
  CHECK(text.rfind("epoch,eta,L_eta_plus,L_total,gamma_1,", 0) == 0);
}

TEST_CASE("eigen report CSV") {
  EigenReport rep;
  rep.n = 4;
  rep.rows.push_back(EigenRow{1, 0.5, 0.25, 1.0, 0.1, true, true});
  const auto path = std::filesystem::temp_directory_path() / "ngf_test_spectral" / "eig.csv";
  write_eigen_report_csv(path, rep);
  CHECK(read_file(path) == "j,mu_hat,mu_exact,eps_mu,eps_phi,paired,resolved\n1,0.5,0.25,1,0.1,1,1\n");
}
