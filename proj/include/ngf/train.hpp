#pragma once

// Minibatch Adam training of the lifted kernel network.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ngf/lifted.hpp"

namespace ngf {

enum class Objective {
  Pinn,      // lift-and-embed residual loss
  FitExact,  // mean squared misfit against the exact kernel (diagnostic runs)
};

struct TrainConfig {
  std::vector<int> hidden_widths{40, 40, 40, 40};
  SampleSizes sizes;
  PenaltyWeights penalties;
  BatchSizes batch;
  bool full_batch = false;
  int epochs = 30000;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Step decay: lr *= lr_decay every lr_decay_every epochs (0 disables).
  double lr_decay = 1.0;
  int lr_decay_every = 0;
  std::uint64_t seed = 0;
  int log_every = 100;
  int checkpoint_every = 0;
  Objective objective = Objective::Pinn;

  void validate(const ProblemSpec& spec) const;
};

struct LossRecord {
  int epoch = 0;
  std::map<std::string, double> raw;
  double total = 0.0;
};

/// Where `train` persists checkpoints and the loss history. An empty
/// directory keeps everything in memory.
struct TrainOutputs {
  std::filesystem::path dir;
  std::string problem;
  std::string config_hash;

  std::filesystem::path checkpoint() const { return dir / "checkpoint.ngf"; }
  std::filesystem::path history() const { return dir / "loss_history.csv"; }
};

struct TrainResult {
  Mlp net;
  std::vector<LossRecord> history;
};

/// Called after every `every`-th epoch (and after the last one).
struct EpochHook {
  int every = 0;
  std::function<void(int epoch, const Mlp& net)> fn;
};

TrainResult train(const ProblemSpec& spec, const TrainConfig& config,
                  const TrainOutputs& outputs = {}, const EpochHook& hook = {});

/// Fitting residuals G_hat(lifted) - G(x, y) on the chosen interior pairs.
std::vector<ResidualBatch> build_fit_batches(const SampleSets& sets, const MiniBatch& batch,
                                             const ProblemSpec& spec);

/// Loss-history CSV text for `history`.
std::string loss_history_csv(const std::vector<LossRecord>& history, bool piecewise,
                             Objective objective);

}  // namespace ngf
