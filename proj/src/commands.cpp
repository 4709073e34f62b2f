#include "ngf/commands.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "ngf/assemble.hpp"
#include "ngf/errors.hpp"
#include "ngf/io.hpp"
#include "ngf/solvers.hpp"
#include "ngf/spectral.hpp"

namespace ngf {

namespace {

std::filesystem::path prepare_out(const RunConfig& cfg) {
  const std::filesystem::path out = cfg.str("out");
  std::filesystem::create_directories(out);
  atomic_write(out / "config.effective", cfg.echo());
  return out;
}

std::string sci(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

}  // namespace

KernelSource kernel_source_for(const RunConfig& cfg, const ProblemSpec& spec) {
  const auto& kernel = cfg.str("kernel");
  KernelSource src = kernel == "oracle" ? KernelSource::oracle(spec) : KernelSource::load(kernel);
  src.check_compatible(spec);
  return src;
}

std::string cmd_train(const RunConfig& cfg) {
  const auto out = prepare_out(cfg);
  const ProblemSpec spec = cfg.problem();
  TrainOutputs outputs{out, spec.name, cfg.hash()};
  const TrainResult res = train(spec, cfg.train_config(), outputs);
  std::ostringstream s;
  s << "trained " << spec.name << " for " << cfg.integer("epochs") << " epochs; final loss "
    << sci(res.history.back().total) << "; checkpoint " << outputs.checkpoint().string();
  return s.str();
}

std::string cmd_solve(const RunConfig& cfg) {
  const auto out = prepare_out(cfg);
  const ProblemSpec spec = cfg.problem();
  const KernelSource src = kernel_source_for(cfg, spec);
  const int m = static_cast<int>(cfg.integer("eval_points"));
  if (m < 2) throw ConfigError("eval_points must be >= 2");
  const Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(m, spec.a, spec.b);
  const Eigen::VectorXd u = fast_solve(src, spec, static_cast<int>(cfg.integer("n_quad")), xs,
                                       cfg.quadrature());
  CsvWriter csv({"x", "u_hat", "u_exact", "abs_err"});
  double max_err = 0.0;
  for (int i = 0; i < m; ++i) {
    if (spec.exact_solution) {
      const double exact = spec.exact_solution(xs(i));
      const double err = std::abs(u(i) - exact);
      max_err = std::max(max_err, err);
      csv.row({xs(i), u(i), exact, err});
    } else {
      csv.row({format_real(xs(i)), format_real(u(i)), "", ""});
    }
  }
  csv.save(out / "solution.csv");
  std::ostringstream s;
  s << "fast solve on " << m << " points";
  if (spec.exact_solution) s << "; max error " << sci(max_err);
  return s.str();
}

std::string cmd_precondition(const RunConfig& cfg) {
  const auto out = prepare_out(cfg);
  const ProblemSpec spec = cfg.problem();
  const KernelSource src = kernel_source_for(cfg, spec);
  const GmresConfig gc = cfg.gmres_config();
  CsvWriter table({"h", "kappa", "eigen_csv", "iters_precond", "relres_precond", "iters_plain",
                   "relres_plain"});
  std::ostringstream s;
  for (int e : cfg.int_list("mesh_exponents")) {
    const LinearSystem sys = discretize(spec, mesh_size(spec, e));
    const auto bhat = kernel_matrix(src, sys, cfg.flag("scaled"));
    const SolveResult pre = pgmres(sys, bhat.values, gc);
    std::string kappa = "skipped", eigen_csv;
    if (sys.n <= kKappaSizeCap) {
      const auto sc = spectral_condition(bhat.values * sys.dense());
      kappa = format_real(sc.kappa) + (sc.complex_spectrum ? "(complex)" : "");
      eigen_csv = "eigs_h" + std::to_string(e) + ".csv";
      write_eigenvalues_csv(out / eigen_csv, sc.eigenvalues);
    }
    std::string plain_its, plain_rel;
    if (cfg.flag("plain_gmres")) {
      const SolveResult plain = gmres(sys, gc);
      plain_its = std::to_string(plain.trace.iterations());
      plain_rel = format_real(plain.trace.final_relres());
    }
    table.row({format_real(sys.h), kappa, eigen_csv, std::to_string(pre.trace.iterations()),
               format_real(pre.trace.final_relres()), plain_its, plain_rel});
    s << "h=2^-" << e << " kappa=" << kappa << " precond " << pre.trace.iterations() << " its ("
      << sci(pre.trace.final_relres()) << ")";
    if (!plain_its.empty()) s << " plain " << plain_its << " its";
    s << "\n";
  }
  table.save(out / "precondition.csv");
  return s.str();
}

std::string cmd_hybrid(const RunConfig& cfg) {
  const auto out = prepare_out(cfg);
  const ProblemSpec spec = cfg.problem();
  const KernelSource src = kernel_source_for(cfg, spec);
  const LinearSystem sys = discretize(spec, mesh_size(spec, static_cast<int>(cfg.integer("mesh_exponent"))));
  const auto bhat = kernel_matrix(src, sys, cfg.flag("scaled"));
  const HybridConfig hc = cfg.hybrid_config();
  const Eigen::VectorXd exact = solve_direct(sys);
  const SolveResult hyb = hybrid_solve(sys, bhat.values, hc, exact);
  const SolveResult jac = jacobi_solve(sys, hc.omega, static_cast<int>(cfg.integer("jacobi_sweeps")), exact);
  write_trace_csv(out / "hybrid_trace.csv", hyb.trace, cfg.flag("modes"));
  write_trace_csv(out / "jacobi_trace.csv", jac.trace, cfg.flag("modes"));
  std::ostringstream s;
  s << "hybrid: " << hyb.trace.iterations() << " sub-steps, relres " << sci(hyb.trace.final_relres())
    << (hyb.trace.diverged ? " (diverged)" : "") << "; jacobi: relres "
    << sci(jac.trace.final_relres()) << (jac.trace.diverged ? " (" + jac.trace.message + ")" : "");
  return s.str();
}

std::string cmd_eigs(const RunConfig& cfg) {
  const auto out = prepare_out(cfg);
  const ProblemSpec spec = cfg.problem();
  const KernelSource src = kernel_source_for(cfg, spec);
  const EigenReport rep = kernel_eigs(src, spec, static_cast<int>(cfg.integer("eig_n")),
                                      static_cast<int>(cfg.integer("eig_count")));
  write_eigen_report_csv(out / "eigen_report.csv", rep);
  std::ostringstream s;
  s << "eigenpairs: " << rep.rows.size() << " rows at n=" << rep.n;
  return s.str();
}

std::string cmd_bias(const RunConfig& cfg) {
  const auto out = prepare_out(cfg);
  const ProblemSpec spec = cfg.problem();
  TrainOutputs outputs{out, spec.name, cfg.hash()};
  const BiasReport rep = bias_track(spec, cfg.train_config(), cfg.int_list("bias_etas"),
                                    static_cast<int>(cfg.integer("bias_count")),
                                    static_cast<int>(cfg.integer("bias_cadence")),
                                    static_cast<int>(cfg.integer("bias_n_quad")), outputs);
  write_bias_report_csv(out / "bias_report.csv", rep);
  std::ostringstream s;
  s << "bias snapshots: " << rep.snapshots.size();
  return s.str();
}

}  // namespace ngf
