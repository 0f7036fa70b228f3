#pragma once

#include "memlab/common.hpp"
#include "memlab/model.hpp"
#include "memlab/synthdata.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace memlab {

struct OptimizerConfig {
  double learning_rate = 4e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t batch_size = 256;
  double weight_decay = 0.0;

  void validate() const;
};

/// Training stops at whichever bound is hit first; unset bounds are infinite.
struct TrainBudget {
  std::optional<std::size_t> max_epochs;
  std::optional<std::size_t> max_steps = 20000;
  /// Early stop once the unaugmented train loss drops below this value.
  std::optional<double> loss_target;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  ///< mean MSE over the augmented views seen this epoch
  double train_acc_unaug = 0.0;
  std::optional<double> probe_acc;
  std::optional<double> invariance;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

struct AdamState {
  std::vector<Vec> m;
  std::vector<Vec> v;
  std::size_t step = 0;
};

/// Bias-corrected Adam update of every trainable block. Weight decay enters
/// as an L2 term added to the gradient. Throws TrainingError on non-finite
/// gradients, leaving parameters untouched.
void adam_step(std::vector<ParamBlock>& params, const Gradients& grads, AdamState& state, const OptimizerConfig& cfg);

/// Mean over rows of the squared Euclidean distance.
double mse_loss(const Mat& predictions, const Mat& targets);

struct UnaugmentedFit {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Loss and argmax accuracy of the model on the un-transformed inputs
/// against their random labels.
UnaugmentedFit unaugmented_fit(const Model& model, const LabeledDataset& ds);

struct TrainCallbacks {
  /// Runs after the per-epoch metrics are filled in; may add probe and
  /// invariance values to the record.
  std::function<void(const Model&, EpochRecord&)> on_epoch_end;
};

struct TrainResult {
  Model model;
  TrainHistory history;
  std::size_t steps = 0;
  bool aborted = false;
  std::string abort_reason;
};

/// Minimizes the MSE between f(T(x_i)) and the training targets. Each epoch
/// is a fresh shuffle of the base samples; every sample in a minibatch gets
/// one draw from `aug` (a fresh transformation for generative specs, a
/// uniformly chosen frozen view for materialized ones).
TrainResult train_run(Model model, const LabeledDataset& ds, const AugmentationSpec& aug, const OptimizerConfig& opt,
                      const TrainBudget& budget, const TrainCallbacks& callbacks, std::uint64_t seed);

}  // namespace memlab
