#include "memlab/train.hpp"

#include <cmath>
#include <numeric>

namespace memlab {

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("optimizer: learning_rate must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("optimizer: Adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ConfigError("optimizer: adam epsilon must be positive");
  if (batch_size == 0) throw ConfigError("optimizer: batch_size must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("optimizer: weight_decay must be non-negative");
}

void TrainBudget::validate() const {
  if (!max_epochs && !max_steps && !loss_target) throw ConfigError("budget: at least one bound must be finite");
}

void adam_step(std::vector<ParamBlock>& params, const Gradients& grads, AdamState& state, const OptimizerConfig& cfg) {
  if (grads.blocks.size() != params.size()) throw InputError("adam_step: gradient record does not match parameters");
  for (const auto& g : grads.blocks) {
    if (!g.allFinite()) throw TrainingError("adam_step: non-finite gradient");
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Vec::Zero(static_cast<Eigen::Index>(p.values.size())));
      state.v.push_back(Vec::Zero(static_cast<Eigen::Index>(p.values.size())));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (!params[b].trainable) continue;
    Eigen::Map<Vec> theta(params[b].values.data(), static_cast<Eigen::Index>(params[b].values.size()));
    Vec g = grads.blocks[b];
    if (cfg.weight_decay != 0.0) g += cfg.weight_decay * theta;
    state.m[b] = cfg.beta1 * state.m[b] + (1.0 - cfg.beta1) * g;
    state.v[b] = cfg.beta2 * state.v[b] + (1.0 - cfg.beta2) * g.cwiseAbs2();
    theta.array() -= cfg.learning_rate * (state.m[b].array() / correction1) /
                     ((state.v[b].array() / correction2).sqrt() + cfg.adam_epsilon);
  }
}

double mse_loss(const Mat& predictions, const Mat& targets) {
  if (predictions.rows() == 0) throw InputError("mse_loss: empty input");
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
    throw InputError("mse_loss: shape mismatch");
  }
  return (predictions - targets).squaredNorm() / static_cast<double>(predictions.rows());
}

UnaugmentedFit unaugmented_fit(const Model& model, const LabeledDataset& ds) {
  const Mat out = forward_batch(model, ds.inputs);
  UnaugmentedFit fit;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const int label = ds.random_labels[static_cast<std::size_t>(i)];
    const auto row = out.row(i);
    double err = row.squaredNorm() - 2.0 * row(label) + 1.0;
    fit.loss += err;
    if (argmax(row) == label) ++correct;
  }
  fit.loss /= static_cast<double>(out.rows());
  fit.accuracy = static_cast<double>(correct) / static_cast<double>(out.rows());
  return fit;
}

TrainResult train_run(Model model, const LabeledDataset& ds, const AugmentationSpec& aug, const OptimizerConfig& opt,
                      const TrainBudget& budget, const TrainCallbacks& callbacks, std::uint64_t seed) {
  opt.validate();
  budget.validate();
  if (ds.size() == 0) throw InputError("train_run: empty dataset");
  if (ds.dim() != model.input_dim()) throw InputError("train_run: input dimension does not match the model");
  if (aug.kind == AugKind::Materialized && aug.views->num_samples() != ds.size()) {
    throw InputError("train_run: materialized views do not match the dataset");
  }

  TrainResult result{std::move(model), {}, 0, false, {}};
  if (budget.max_steps && *budget.max_steps == 0) return result;

  const Rng root(seed);
  const Rng shuffle_root = root.split("shuffle");
  const Rng view_root = root.split("views");
  const std::size_t n = ds.size();
  const int out_dim = result.model.output_dim();
  const Eigen::Index d = ds.inputs.cols();

  auto params = parameter_blocks(result.model);
  AdamState state;
  Gradients grads = zero_gradients(result.model);
  std::vector<std::size_t> order(n);

  for (std::size_t epoch = 0;; ++epoch) {
    if (budget.max_epochs && epoch >= *budget.max_epochs) break;
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle = shuffle_root.split(epoch);
    for (std::size_t i = n; i-- > 1;) std::swap(order[i], order[shuffle.index(i + 1)]);
    const Rng epoch_views = view_root.split(epoch);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    bool budget_hit = false;
    for (std::size_t start = 0; start < n; start += opt.batch_size) {
      const std::size_t stop = std::min(n, start + opt.batch_size);
      const auto rows = static_cast<Eigen::Index>(stop - start);
      Mat X(rows, d);
      Mat Y(rows, out_dim);
      for (std::size_t p = start; p < stop; ++p) {
        const std::size_t i = order[p];
        Rng rng = epoch_views.split(i);
        MixedExample ex = draw_view(ds, i, aug, rng);
        if (ex.label.size() != out_dim) throw InputError("train_run: label dimension does not match the model output");
        X.row(static_cast<Eigen::Index>(p - start)) = ex.input.transpose();
        Y.row(static_cast<Eigen::Index>(p - start)) = ex.label.transpose();
      }
      for (auto& g : grads.blocks) g.setZero();
      const double loss = loss_and_gradient(result.model, X, Y, grads);
      if (!std::isfinite(loss)) {
        result.aborted = true;
        result.abort_reason = "non-finite training loss at step " + std::to_string(result.steps);
        return result;
      }
      try {
        adam_step(params, grads, state, opt);
      } catch (const TrainingError& e) {
        result.aborted = true;
        result.abort_reason = std::string(e.what()) + " at step " + std::to_string(result.steps);
        return result;
      }
      ++result.steps;
      loss_sum += loss * static_cast<double>(rows);
      seen += static_cast<std::size_t>(rows);
      if (budget.max_steps && result.steps >= *budget.max_steps) {
        budget_hit = true;
        break;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    const UnaugmentedFit fit = unaugmented_fit(result.model, ds);
    rec.train_acc_unaug = fit.accuracy;
    if (callbacks.on_epoch_end) callbacks.on_epoch_end(result.model, rec);
    result.history.epochs.push_back(rec);
    if (budget_hit) break;
    if (budget.loss_target && fit.loss < *budget.loss_target) break;
  }
  return result;
}

}  // namespace memlab
