#include "ngf/config.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "ngf/errors.hpp"
#include "ngf/io.hpp"

namespace ngf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

bool parse_real(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size();
  } catch (const std::logic_error&) {
    return false;
  }
}

void check_value(const ConfigKey& key, const std::string& v) {
  auto bad = [&]() { throw ConfigError("config key '" + key.name + "': cannot parse '" + v + "'"); };
  switch (key.kind) {
    case ValueKind::String:
      break;
    case ValueKind::Int: {
      std::int64_t i;
      if (!parse_number(v, i)) bad();
      break;
    }
    case ValueKind::Real: {
      double d;
      if (!parse_real(v, d)) bad();
      break;
    }
    case ValueKind::Bool:
      if (v != "true" && v != "false") bad();
      break;
    case ValueKind::IntList:
      if (v.empty()) break;
      for (const auto& item : split(v, ',')) {
        int i;
        if (!parse_number(item, i)) bad();
      }
      break;
    case ValueKind::Schedule:
      if (v.empty()) break;
      for (const auto& item : split(v, ',')) {
        const auto colon = item.find(':');
        int e;
        double d;
        if (colon == std::string::npos || !parse_number(trim(item.substr(0, colon)), e) ||
            !parse_real(trim(item.substr(colon + 1)), d))
          bad();
      }
      break;
  }
}

const ConfigKey& lookup(const std::string& name) {
  const auto& schema = config_schema();
  const auto it = std::find_if(schema.begin(), schema.end(),
                               [&](const ConfigKey& k) { return k.name == name; });
  if (it == schema.end()) throw ConfigError("unknown config key '" + name + "'");
  return *it;
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
  using K = ValueKind;
  static const std::vector<ConfigKey> schema{
      {"problem", K::String, "benchmark-helmholtz", "benchmark-helmholtz | variable-coeff | interface"},
      {"seed", K::Int, "0", "RNG seed for initialization, sampling and minibatches"},
      {"out", K::String, "out", "output directory"},
      {"kernel", K::String, "oracle", "oracle | path to a checkpoint"},
      {"hidden", K::IntList, "40,40,40,40", "hidden layer widths"},
      {"n_omega", K::Int, "160", "interior x samples"},
      {"n_omega_y", K::Int, "160", "interior y samples per x"},
      {"n_boundary", K::Int, "2", "boundary y samples (even)"},
      {"n_gamma", K::Int, "500", "diagonal samples"},
      {"n_sigma", K::Int, "0", "interface samples per family"},
      {"n_alpha", K::Int, "0", "corner samples"},
      {"beta_boundary", K::Real, "400", "boundary penalty"},
      {"beta_boundary_left", K::Real, "0", "left-endpoint penalty, interface problems (0: use beta_boundary)"},
      {"beta_boundary_right", K::Real, "0", "right-endpoint penalty, interface problems (0: use beta_boundary)"},
      {"beta_boundary_schedule", K::Schedule, "", "epoch:value,... boundary penalty from that epoch on"},
      {"beta_gamma", K::Real, "1000", "diagonal jump penalty"},
      {"beta_sigma", K::Real, "400", "interface jump penalty"},
      {"beta_alpha", K::Real, "400", "corner penalty"},
      {"beta_sym", K::Real, "400", "symmetry penalty"},
      {"epochs", K::Int, "30000", "optimizer steps"},
      {"lr", K::Real, "0.001", "Adam learning rate"},
      {"lr_decay", K::Real, "1", "learning-rate factor applied every lr_decay_every epochs"},
      {"lr_decay_every", K::Int, "0", "0 disables decay"},
      {"batch_x", K::Int, "32", "x samples per step (0: all)"},
      {"batch_y", K::Int, "0", "y samples per x per step (0: all)"},
      {"batch_gamma", K::Int, "0", "diagonal samples per step (0: all)"},
      {"batch_sigma", K::Int, "0", "interface samples per step (0: all)"},
      {"full_batch", K::Bool, "false", "use every sample in every step"},
      {"objective", K::String, "pinn", "pinn | fit (misfit against the exact kernel)"},
      {"log_every", K::Int, "100", "loss-history cadence"},
      {"checkpoint_every", K::Int, "1000", "checkpoint cadence (0: final only)"},
      {"mesh_exponents", K::IntList, "6,8,10,12", "h = 2^-e for precondition tables"},
      {"mesh_exponent", K::Int, "8", "h = 2^-e for hybrid runs"},
      {"scaled", K::Bool, "true", "divide the kernel matrix by h"},
      {"gmres_tol", K::Real, "1e-4", "relative residual target"},
      {"gmres_max_iter", K::Int, "5000", "iteration cap"},
      {"gmres_restart", K::Int, "0", "restart length (0: none)"},
      {"plain_gmres", K::Bool, "true", "also run unpreconditioned GMRES"},
      {"omega", K::Real, "0.6666666666666666", "Jacobi relaxation"},
      {"jacobi_steps", K::Int, "1", "Jacobi sweeps per hybrid cycle"},
      {"cycles", K::Int, "25", "hybrid cycles"},
      {"hybrid_tol", K::Real, "1e-10", "hybrid relative residual target"},
      {"jacobi_sweeps", K::Int, "200", "sweeps of the pure Jacobi comparison run"},
      {"modes", K::Bool, "true", "write mode-wise error columns"},
      {"n_quad", K::Int, "1024", "fast-solver quadrature cells"},
      {"quadrature", K::String, "trapezoid", "trapezoid | gauss"},
      {"eval_points", K::Int, "257", "fast-solver evaluation points"},
      {"eig_n", K::Int, "512", "Nystrom cells"},
      {"eig_count", K::Int, "50", "eigenpairs reported"},
      {"bias_etas", K::IntList, "5,10,20", "high-frequency cut-offs"},
      {"bias_count", K::Int, "64", "gamma coefficients J"},
      {"bias_cadence", K::Int, "1000", "epochs between snapshots"},
      {"bias_n_quad", K::Int, "512", "gamma quadrature cells (>= 8 J)"},
  };
  return schema;
}

std::map<std::string, std::string> problem_preset(const std::string& problem) {
  if (problem == "benchmark-helmholtz")
    return {{"hidden", "40,40,40,40"}, {"n_omega", "160"},     {"n_omega_y", "160"},
            {"n_boundary", "2"},       {"n_gamma", "500"},     {"epochs", "30000"},
            {"beta_boundary", "400"},  {"beta_sym", "400"},    {"beta_gamma", "1000"},
            {"mesh_exponents", "6,8,10,12"}};
  if (problem == "variable-coeff")
    return {{"hidden", "40,40,40,40"},
            {"n_omega", "500"},
            {"n_omega_y", "500"},
            {"n_boundary", "2"},
            {"n_gamma", "30000"},
            {"epochs", "50000"},
            {"beta_boundary", "400"},
            {"beta_boundary_schedule", "30000:4000"},
            {"beta_sym", "400"},
            {"beta_gamma", "1000"},
            {"mesh_exponents", "6,8,10,12"}};
  if (problem == "interface")
    return {{"hidden", "40,40,40,40,40,40"},
            {"n_omega", "80"},
            {"n_omega_y", "80"},
            {"n_boundary", "2"},
            {"n_gamma", "1000"},
            {"n_sigma", "1000"},
            {"n_alpha", "1000"},
            {"epochs", "20000"},
            {"beta_boundary", "400"},
            {"beta_boundary_left", "400"},
            {"beta_boundary_right", "800"},
            {"beta_gamma", "400"},
            {"beta_sigma", "400"},
            {"beta_alpha", "400"},
            {"beta_sym", "400"},
            {"mesh_exponents", "6,8,10,12"}};
  throw ConfigError("unknown problem '" + problem + "'");
}

std::map<std::string, std::string> RunConfig::parse_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(number) + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    lookup(key);
    if (kv.count(key)) throw ConfigError("config key '" + key + "' given twice");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

RunConfig RunConfig::resolve(const std::map<std::string, std::string>& overrides) {
  RunConfig cfg;
  for (const auto& key : config_schema()) cfg.values_[key.name] = key.fallback;
  const auto pit = overrides.find("problem");
  const std::string problem = pit == overrides.end() ? cfg.values_["problem"] : pit->second;
  for (const auto& [k, v] : problem_preset(problem)) cfg.values_[k] = v;
  for (const auto& [k, v] : overrides) {
    lookup(k);
    cfg.values_[k] = v;
  }
  for (const auto& [k, v] : cfg.values_) check_value(lookup(k), v);
  return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path,
                               const std::map<std::string, std::string>& cli_overrides) {
  auto kv = parse_text(read_file(path));
  for (const auto& [k, v] : cli_overrides) kv[k] = v;
  return resolve(kv);
}

const std::string& RunConfig::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

std::int64_t RunConfig::integer(const std::string& key) const {
  std::int64_t v = 0;
  if (!parse_number(str(key), v)) throw ConfigError("config key '" + key + "' is not an integer");
  return v;
}

double RunConfig::real(const std::string& key) const {
  double v = 0.0;
  if (!parse_real(str(key), v)) throw ConfigError("config key '" + key + "' is not a number");
  return v;
}

bool RunConfig::flag(const std::string& key) const { return str(key) == "true"; }

std::vector<int> RunConfig::int_list(const std::string& key) const {
  std::vector<int> out;
  if (str(key).empty()) return out;
  for (const auto& item : split(str(key), ',')) {
    int v = 0;
    parse_number(item, v);
    out.push_back(v);
  }
  return out;
}

std::map<int, double> RunConfig::schedule(const std::string& key) const {
  std::map<int, double> out;
  if (str(key).empty()) return out;
  for (const auto& item : split(str(key), ',')) {
    const auto colon = item.find(':');
    int e = 0;
    double d = 0.0;
    parse_number(trim(item.substr(0, colon)), e);
    parse_real(trim(item.substr(colon + 1)), d);
    out[e] = d;
  }
  return out;
}

std::string RunConfig::echo() const {
  std::string text;
  for (const auto& [k, v] : values_) text += k + "=" + v + "\n";
  return text;
}

std::string RunConfig::hash() const { return hex64(fnv1a64(echo())); }

ProblemSpec RunConfig::problem() const { return problem_by_name(str("problem")); }

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.hidden_widths = int_list("hidden");
  t.sizes.n_omega = static_cast<int>(integer("n_omega"));
  t.sizes.n_omega_y = static_cast<int>(integer("n_omega_y"));
  t.sizes.n_boundary = static_cast<int>(integer("n_boundary"));
  t.sizes.n_gamma = static_cast<int>(integer("n_gamma"));
  t.sizes.n_sigma = static_cast<int>(integer("n_sigma"));
  t.sizes.n_alpha = static_cast<int>(integer("n_alpha"));
  t.penalties.boundary = real("beta_boundary");
  if (real("beta_boundary_left") > 0.0) t.penalties.boundary_left = real("beta_boundary_left");
  if (real("beta_boundary_right") > 0.0) t.penalties.boundary_right = real("beta_boundary_right");
  t.penalties.boundary_schedule = schedule("beta_boundary_schedule");
  t.penalties.gamma = real("beta_gamma");
  t.penalties.sigma = real("beta_sigma");
  t.penalties.alpha = real("beta_alpha");
  t.penalties.sym = real("beta_sym");
  t.epochs = static_cast<int>(integer("epochs"));
  t.lr = real("lr");
  t.lr_decay = real("lr_decay");
  t.lr_decay_every = static_cast<int>(integer("lr_decay_every"));
  t.batch.x = static_cast<int>(integer("batch_x"));
  t.batch.y = static_cast<int>(integer("batch_y"));
  t.batch.gamma = static_cast<int>(integer("batch_gamma"));
  t.batch.sigma = static_cast<int>(integer("batch_sigma"));
  t.full_batch = flag("full_batch");
  t.seed = static_cast<std::uint64_t>(integer("seed"));
  t.log_every = static_cast<int>(integer("log_every"));
  t.checkpoint_every = static_cast<int>(integer("checkpoint_every"));
  const auto& objective = str("objective");
  if (objective == "pinn") t.objective = Objective::Pinn;
  else if (objective == "fit") t.objective = Objective::FitExact;
  else throw ConfigError("objective must be 'pinn' or 'fit'");
  return t;
}

GmresConfig RunConfig::gmres_config() const {
  GmresConfig g;
  g.tol = real("gmres_tol");
  g.max_iter = static_cast<int>(integer("gmres_max_iter"));
  if (integer("gmres_restart") > 0) g.restart = static_cast<int>(integer("gmres_restart"));
  g.validate();
  return g;
}

HybridConfig RunConfig::hybrid_config() const {
  HybridConfig h;
  h.omega = real("omega");
  h.jacobi_steps = static_cast<int>(integer("jacobi_steps"));
  h.cycles = static_cast<int>(integer("cycles"));
  h.tol = real("hybrid_tol");
  h.validate();
  return h;
}

Quadrature RunConfig::quadrature() const {
  const auto& q = str("quadrature");
  if (q == "trapezoid") return Quadrature::Trapezoid;
  if (q == "gauss") return Quadrature::GaussLegendre;
  throw ConfigError("quadrature must be 'trapezoid' or 'gauss'");
}

}  // namespace ngf
