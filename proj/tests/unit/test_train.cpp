#include "memlab/rng.hpp"
#include "memlab/train.hpp"

#include <doctest.h>

#include <cmath>

using namespace memlab;

namespace {

// Scalar Adam reference, written out step by step.
struct ScalarAdam {
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double x, double g, double lr, double b1, double b2, double eps) {
    ++t;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double mh = m / (1.0 - std::pow(b1, t));
    const double vh = v / (1.0 - std::pow(b2, t));
    return x - lr * mh / (std::sqrt(vh) + eps);
  }
};

std::vector<ParamBlock> scalar_block(double& x) { return {ParamBlock{"x", std::span<double>(&x, 1), true}}; }

Gradients scalar_grad(double g) {
  Gradients out;
  out.blocks.push_back(Vec::Constant(1, g));
  return out;
}

LabeledDataset small_dataset(std::size_t n, int d, int classes, std::uint64_t seed) {
  Rng rng(seed);
  LabeledDataset ds;
  ds.inputs.resize(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index i = 0; i < ds.inputs.size(); ++i) ds.inputs.data()[i] = rng.normal();
  ds.d1 = 1;
  ds.num_classes = classes;
  ds.num_random_classes = classes;
  ds.cluster_means = Mat::Zero(classes, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const int l = static_cast<int>(rng.index(static_cast<std::size_t>(classes)));
    ds.clean_labels.push_back(l);
    ds.random_labels.push_back(l);
    ds.true_cluster.push_back(l);
  }
  return ds;
}

Model linear_model(int d, std::uint64_t seed) {
  ModelSpec spec;
  spec.input_dim = d;
  spec.num_classes = d;
  spec.projector = ProjectorKind::Identity;
  return init_model(spec, seed);
}

}  // namespace

TEST_CASE("adam matches a scalar reference trace on a quadratic") {
  OptimizerConfig cfg;
  cfg.learning_rate = 0.1;
  double x = 3.0, ref = 3.0;
  auto params = scalar_block(x);
  AdamState state;
  ScalarAdam oracle;
  for (int t = 0; t < 10; ++t) {
    const double g = 2.0 * (x - 1.0);
    adam_step(params, scalar_grad(g), state, cfg);
    ref = oracle.step(ref, 2.0 * (ref - 1.0), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_epsilon);
    CHECK(std::abs(x - ref) <= 1e-12);
  }
  CHECK(state.step == 10);
}

TEST_CASE("zero gradient leaves the parameter unchanged") {
  double x = 0.7;
  auto params = scalar_block(x);
  AdamState state;
  adam_step(params, scalar_grad(0.0), state, OptimizerConfig{});
  CHECK(x == 0.7);
}

TEST_CASE("constant gradient drives updates towards the learning rate") {
  OptimizerConfig cfg;
  cfg.learning_rate = 0.01;
  double x = 0.0;
  auto params = scalar_block(x);
  AdamState state;
  double prev = x;
  for (int t = 0; t < 200; ++t) {
    prev = x;
    adam_step(params, scalar_grad(-3.0), state, cfg);
  }
  CHECK(x - prev == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("non-finite gradients abort the step") {
  double x = 1.0;
  auto params = scalar_block(x);
  AdamState state;
  CHECK_THROWS_AS(adam_step(params, scalar_grad(std::nan("")), state, OptimizerConfig{}), TrainingError);
  CHECK(x == 1.0);
}

TEST_CASE("frozen blocks are not updated") {
  double x = 1.0;
  std::vector<ParamBlock> params{ParamBlock{"x", std::span<double>(&x, 1), false}};
  AdamState state;
  adam_step(params, scalar_grad(5.0), state, OptimizerConfig{});
  CHECK(x == 1.0);
}

TEST_CASE("optimizer and budget validation") {
  OptimizerConfig cfg;
  cfg.learning_rate = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = OptimizerConfig{};
  cfg.beta2 = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  TrainBudget b;
  b.max_steps.reset();
  CHECK_THROWS_AS(b.validate(), ConfigError);
}

TEST_CASE("mse loss") {
  Mat p(2, 2), t(2, 2);
  p << 1, 0, 0.5, 0.5;
  t << 0, 1, 0.5, 0.5;
  CHECK(mse_loss(p, t) == doctest::Approx(1.0));
}

TEST_CASE("zero budget returns the model unchanged") {
  const LabeledDataset ds = small_dataset(20, 3, 3, 1);
  const Model m = linear_model(3, 2);
  TrainBudget budget;
  budget.max_steps = 0;
  const TrainResult r = train_run(m, ds, AugmentationSpec::identity(), OptimizerConfig{}, budget, {}, 1);
  CHECK(r.steps == 0);
  CHECK(std::get<LinearEncoder>(r.model.encoder).W == std::get<LinearEncoder>(m.encoder).W);
}

TEST_CASE("linear model converges to the least-squares solution") {
  const LabeledDataset ds = small_dataset(40, 2, 2, 3);
  Mat Y = Mat::Zero(40, 2);
  for (std::size_t i = 0; i < 40; ++i) Y(static_cast<Eigen::Index>(i), ds.random_labels[i]) = 1.0;
  const Mat& X = ds.inputs;
  const Mat closed = (X.transpose() * X).ldlt().solve(X.transpose() * Y).transpose();

  OptimizerConfig opt;
  opt.batch_size = 40;
  opt.learning_rate = 1e-3;
  TrainBudget budget;
  budget.max_steps = 20000;
  const TrainResult r = train_run(linear_model(2, 4), ds, AugmentationSpec::identity(), opt, budget, {}, 5);
  const Mat& W = std::get<LinearEncoder>(r.model.encoder).W;
  CHECK((W - closed).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("zero learning rate keeps the loss constant") {
  const LabeledDataset ds = small_dataset(30, 3, 3, 6);
  OptimizerConfig opt;
  opt.learning_rate = 0.0;
  TrainBudget budget;
  budget.max_steps = 5;
  const Model m = linear_model(3, 7);
  const TrainResult r = train_run(m, ds, AugmentationSpec::identity(), opt, budget, {}, 8);
  CHECK(r.history.epochs.size() > 1);
  for (const auto& e : r.history.epochs) CHECK(e.train_loss == doctest::Approx(r.history.epochs.front().train_loss).epsilon(1e-12));
  CHECK(std::get<LinearEncoder>(r.model.encoder).W == std::get<LinearEncoder>(m.encoder).W);
}

TEST_CASE("training is deterministic per seed") {
  const LabeledDataset ds = small_dataset(50, 4, 4, 9);
  ModelSpec spec;
  spec.input_dim = 4;
  spec.num_classes = 4;
  spec.num_patterns = 30;
  const Model m = init_model(spec, 3);
  TrainBudget budget;
  budget.max_steps = 50;
  OptimizerConfig opt;
  opt.batch_size = 16;
  const AugmentationSpec aug = AugmentationSpec::subspace(1, 0.5);
  const TrainResult a = train_run(m, ds, aug, opt, budget, {}, 11);
  const TrainResult b = train_run(m, ds, aug, opt, budget, {}, 11);
  const TrainResult c = train_run(m, ds, aug, opt, budget, {}, 12);
  CHECK(std::get<InverseDistanceProjector>(a.model.projector).V == std::get<InverseDistanceProjector>(b.model.projector).V);
  CHECK(std::get<InverseDistanceProjector>(a.model.projector).V != std::get<InverseDistanceProjector>(c.model.projector).V);
  REQUIRE(a.history.epochs.size() == b.history.epochs.size());
  for (std::size_t i = 0; i < a.history.epochs.size(); ++i) {
    CHECK(a.history.epochs[i].train_loss == b.history.epochs[i].train_loss);
  }
}

TEST_CASE("epoch callback sees every epoch") {
  const LabeledDataset ds = small_dataset(20, 3, 3, 1);
  TrainBudget budget;
  budget.max_steps.reset();
  budget.max_epochs = 4;
  OptimizerConfig opt;
  opt.batch_size = 10;
  std::size_t calls = 0;
  TrainCallbacks cb;
  cb.on_epoch_end = [&](const Model&, EpochRecord& rec) {
    ++calls;
    rec.probe_acc = 0.5;
  };
  const TrainResult r = train_run(linear_model(3, 2), ds, AugmentationSpec::identity(), opt, budget, cb, 1);
  CHECK(r.steps == 8);
  CHECK(calls == r.history.epochs.size());
  CHECK(r.history.epochs.back().probe_acc.value() == 0.5);
}
