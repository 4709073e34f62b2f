#include "ngf/train.hpp"

#include <cmath>

#include "ngf/checkpoint.hpp"
#include "ngf/errors.hpp"
#include "ngf/io.hpp"

namespace ngf {

namespace {

std::vector<std::string> history_columns(bool piecewise, Objective objective) {
  if (objective == Objective::FitExact) return {"fit"};
  std::vector<std::string> cols{"interior", "boundary", "gamma", "sym"};
  if (piecewise) cols.insert(cols.end(), {"sigma", "sigma_star", "alpha"});
  return cols;
}

void persist(const TrainOutputs& out, const ProblemSpec& spec, const TrainConfig& cfg,
             const Mlp& net, const std::vector<LossRecord>& history, int epoch) {
  if (out.dir.empty()) return;
  write_checkpoint(out.checkpoint(), net);
  CheckpointMeta meta;
  meta.problem = out.problem.empty() ? spec.name : out.problem;
  meta.alpha = spec.alpha();
  meta.seed = cfg.seed;
  meta.config_hash = out.config_hash;
  meta.input_dim = net.input_dim;
  meta.epoch = epoch;
  write_metadata(out.checkpoint(), meta);
  atomic_write(out.history(), loss_history_csv(history, spec.piecewise(), cfg.objective));
}

}  // namespace

void TrainConfig::validate(const ProblemSpec& spec) const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (hidden_widths.empty()) throw ConfigError("at least one hidden layer is required");
  for (int w : hidden_widths)
    if (w < 1) throw ConfigError("hidden widths must be positive");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr_decay must be in (0, 1]");
  if (lr_decay_every < 0 || log_every < 1 || checkpoint_every < 0)
    throw ConfigError("cadences must be non-negative (log_every >= 1)");
  if (batch.x > sizes.n_omega || batch.y > sizes.n_omega_y || batch.gamma > sizes.n_gamma ||
      batch.sigma > sizes.n_sigma)
    throw ConfigError("minibatch larger than its sample population");
  if (batch.x < 0 || batch.y < 0 || batch.gamma < 0 || batch.sigma < 0)
    throw ConfigError("minibatch sizes must be >= 0");
  penalties.validate();
  if (objective == Objective::FitExact && !spec.exact_green)
    throw ConfigError("fitting objective needs an exact kernel");
}

std::vector<ResidualBatch> build_fit_batches(const SampleSets& sets, const MiniBatch& mb,
                                             const ProblemSpec& spec) {
  if (!spec.exact_green) throw ConfigError("problem '" + spec.name + "' has no exact kernel");
  ResidualBatch fit{"fit", {}, {}, {}, false};
  for (std::size_t i = 0; i < mb.x.size(); ++i) {
    const double x = sets.x_omega(mb.x[i]);
    for (int j : mb.y[i]) {
      const double y = sets.y_omega(mb.x[i], j);
      LinearForm f = value_form();
      f.constant = -spec.exact_green(x, y);
      fit.points.push_back(augment(x, y, sets.alpha));
      fit.forms.push_back(f);
      fit.point_weights.push_back(1.0);
    }
  }
  return {std::move(fit)};
}

std::string loss_history_csv(const std::vector<LossRecord>& history, bool piecewise,
                             Objective objective) {
  const auto cols = history_columns(piecewise, objective);
  std::vector<std::string> header{"epoch"};
  for (const auto& c : cols) header.push_back("L_" + c);
  header.push_back("total");
  CsvWriter csv(header);
  for (const auto& rec : history) {
    std::vector<std::string> cells{std::to_string(rec.epoch)};
    for (const auto& c : cols) {
      const auto it = rec.raw.find(c);
      cells.push_back(format_real(it == rec.raw.end() ? 0.0 : it->second));
    }
    cells.push_back(format_real(rec.total));
    csv.row(cells);
  }
  return csv.text();
}

TrainResult train(const ProblemSpec& spec, const TrainConfig& cfg, const TrainOutputs& outputs,
                  const EpochHook& hook) {
  validate(spec);
  cfg.validate(spec);
  std::mt19937_64 rng(cfg.seed);

  TrainResult result;
  result.net = make_mlp<double>(spec.piecewise() ? 5 : 3, cfg.hidden_widths);
  init_xavier(result.net, rng);
  const SampleSets sets = sample_training_sets(cfg.sizes, spec, rng);
  const MiniBatch everything = full_batch(sets);
  auto adam = make_adam(result.net, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);

  Mlp last_good = result.net;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.lr_decay_every > 0 && epoch > 1 && (epoch - 1) % cfg.lr_decay_every == 0)
      adam.lr *= cfg.lr_decay;
    const MiniBatch mb = cfg.full_batch ? everything : draw_minibatch(sets, cfg.batch, rng);
    const auto batches = cfg.objective == Objective::FitExact
                             ? build_fit_batches(sets, mb, spec)
                             : build_loss_batches(sets, mb, spec, cfg.penalties, epoch - 1);
    NetworkLoss nl;
    try {
      nl = network_loss_grad(result.net, batches);
    } catch (const NonFiniteLoss&) {
      persist(outputs, spec, cfg, last_good, result.history, epoch - 1);
      throw;
    }
    if (epoch == 1 || epoch % cfg.log_every == 0 || epoch == cfg.epochs)
      result.history.push_back({epoch, nl.loss.raw, nl.loss.total});
    last_good = result.net;
    adam_step(result.net, nl.grad, adam);

    if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 && epoch != cfg.epochs)
      persist(outputs, spec, cfg, result.net, result.history, epoch);
    if (hook.fn && ((hook.every > 0 && epoch % hook.every == 0) || epoch == cfg.epochs))
      hook.fn(epoch, result.net);
  }
  persist(outputs, spec, cfg, result.net, result.history, cfg.epochs);
  return result;
}

}  // namespace ngf
