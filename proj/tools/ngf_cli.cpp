#include <CLI11.hpp>

#include <iostream>
#if defined(__GLIBC__)
#include <malloc.h>
#endif
#include <map>
#include <optional>
#include <string>

#include "ngf/commands.hpp"
#include "ngf/errors.hpp"

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Training reallocates the same large jet buffers every step; keep them out of mmap.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  CLI::App app{"Neural Green's function kernels for 1D boundary-value problems"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool serial = false;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--seed", seed, "override the RNG seed");
  app.add_option("--out", out, "override the output directory");
  app.add_flag("--serial", serial, "serial reductions (the only mode; accepted for compatibility)");
  app.add_option("--set", sets, "extra key=value override, repeatable");

  using Command = std::string (*)(const ngf::RunConfig&);
  const std::map<std::string, std::pair<Command, std::string>> verbs{
      {"train", {ngf::cmd_train, "train a lifted kernel network"}},
      {"solve", {ngf::cmd_solve, "quadrature fast solver"}},
      {"precondition", {ngf::cmd_precondition, "GMRES with and without the kernel preconditioner"}},
      {"hybrid", {ngf::cmd_hybrid, "hybrid kernel/Jacobi iteration"}},
      {"eigs", {ngf::cmd_eigs, "eigenpairs of the kernel integral operator"}},
      {"bias", {ngf::cmd_bias, "spectral-bias coefficients during training"}},
  };
  for (const auto& [name, entry] : verbs) app.add_subcommand(name, entry.second)->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    std::map<std::string, std::string> overrides;
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ngf::ConfigError("--set expects key=value, got '" + kv + "'");
      overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    if (seed) overrides["seed"] = std::to_string(*seed);
    if (!out.empty()) overrides["out"] = out;
    const auto cfg = config_path.empty() ? ngf::RunConfig::resolve(overrides)
                                         : ngf::RunConfig::from_file(config_path, overrides);
    for (const auto* sub : app.get_subcommands()) {
      std::cout << verbs.at(sub->get_name()).first(cfg) << "\n";
    }
  } catch (const ngf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
