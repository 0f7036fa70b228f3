#include "memlab/experiments.hpp"

#include "memlab/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

namespace memlab {

using nlohmann::json;

namespace {

ModelSpec model_spec(const RunConfig& cfg, int num_classes) {
  ModelSpec spec;
  spec.encoder = cfg.model.encoder == "mlp" ? EncoderKind::Mlp : EncoderKind::Linear;
  spec.encoder_hidden = cfg.model.encoder_hidden;
  spec.input_dim = cfg.data.d;
  spec.embedding_dim = cfg.model.embedding_dim;
  spec.projector = cfg.model.projector == "mlp"        ? ProjectorKind::Mlp
                   : cfg.model.projector == "identity" ? ProjectorKind::Identity
                                                       : ProjectorKind::InverseDistance;
  spec.num_patterns = cfg.model.patterns;
  spec.projector_hidden = cfg.model.projector_hidden;
  spec.num_classes = num_classes;
  spec.train_patterns = cfg.model.train_patterns;
  spec.epsilon = cfg.model.epsilon;
  return spec;
}

std::string run_id_for(const std::string& arm, const std::string& axis, const std::string& value, std::uint64_t seed) {
  std::string id = arm.empty() ? "run" : arm;
  if (!axis.empty()) id += ":" + axis + "=" + value;
  return id + ":seed=" + std::to_string(seed);
}

InvarianceOptions invariance_options(const RunConfig& cfg) {
  InvarianceOptions opts;
  opts.num_aug_pairs = cfg.probe.invariance_pairs;
  opts.num_cross_pairs = cfg.probe.invariance_cross_pairs;
  return opts;
}

}  // namespace

int RunRecord::views() const {
  if (config.augment.kind == "iid") return config.augment.views + 1;
  if (config.augment.kind == "subspace") return config.augment.views;
  return 1;
}

int RunRecord::label_classes() const {
  if (config.labels.per_sample) {
    return static_cast<int>(config.augment.kind == "iid" ? config.augment.iid_subset : config.data.n);
  }
  return config.labels.classes > 0 ? config.labels.classes : config.data.classes;
}

RunInputs prepare_run(const RunConfig& config, std::uint64_t seed) {
  config.validate();
  const Rng root(seed);
  RunInputs in;

  ToyDataConfig dc;
  dc.n = config.data.n + config.data.n_test;
  dc.d = config.data.d;
  dc.d1 = config.data.d1;
  dc.num_classes = config.data.classes;
  dc.sigma = config.data.sigma;
  dc.signal_variance_ratio = config.data.signal_variance_ratio;
  dc.seed = root.split("data").key();
  auto [train, test] = generate_toy_data(dc).split(config.data.n);

  const int label_classes = config.labels.classes > 0 ? config.labels.classes : config.data.classes;
  train = randomize_labels(train, label_classes, config.labels.noise_fraction, config.labels.per_sample,
                           root.split("labels").key());

  const auto& a = config.augment;
  const double noise_std = a.strength * config.data.sigma;
  const LabelPolicy policy = a.label_policy == "randomize" ? LabelPolicy::Randomize : LabelPolicy::Preserve;
  if (a.kind == "subspace") {
    in.aug = AugmentationSpec::subspace(config.data.d1, noise_std);
    if (a.views > 0) in.aug = materialize_augmentations(train, in.aug, a.views, policy, root.split("views").key());
  } else if (a.kind == "mixup") {
    in.aug = AugmentationSpec::mixup(a.mixup_alpha_lo, a.mixup_alpha_hi);
  } else if (a.kind == "iid") {
    auto [subset, spec] = iid_augment(train, a.iid_subset, a.views, root.split("iid").key());
    if (config.labels.per_sample) subset = randomize_labels(subset, 0, 1.0, true, 0);
    train = std::move(subset);
    in.aug = std::move(spec);
    if (config.labels.per_sample) {
      auto views = std::make_shared<MaterializedViews>(*in.aug.views);
      views->num_label_classes = train.num_random_classes;
      for (std::size_t i = 0; i < train.size(); ++i) {
        for (int v = 0; v < views->views_per_sample; ++v) {
          views->labels[i * static_cast<std::size_t>(views->views_per_sample) + static_cast<std::size_t>(v)] =
              train.random_labels[i];
        }
      }
      in.aug = AugmentationSpec::materialized(std::move(views));
    }
  } else {
    in.aug = AugmentationSpec::identity();
  }

  in.model = init_model(model_spec(config, train.num_random_classes), root.split("init").key());
  in.k = clamp_neighbors(config.probe.k_neighbors, train.size());
  in.train = std::move(train);
  in.test = std::move(test);
  return in;
}

RunRecord run_single(const RunConfig& config, std::uint64_t seed) { return run_single(config, seed, nullptr, nullptr); }

RunRecord run_single(const RunConfig& config, std::uint64_t seed, RunInputs* inputs_out, Model* trained_out) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config = config;
  rec.seed = seed;
  rec.run_id = run_id_for("", "", "", seed);

  RunInputs in = prepare_run(config, seed);
  const Rng root(seed);
  const int emb = in.model.embedding_layer();
  const Mat inv_points = in.test.inputs.topRows(
      static_cast<Eigen::Index>(std::min<std::size_t>(config.probe.invariance_points, in.test.size())));
  const AugmentationSpec inv_aug =
      AugmentationSpec::subspace(config.data.d1, config.probe.invariance_strength * config.data.sigma);
  const InvarianceOptions inv_opts = invariance_options(config);
  const std::uint64_t inv_seed = root.split("invariance").key();

  rec.probe_init = knn_probe(in.model, in.train, in.test, in.k, LabelSource::Clean, emb);
  rec.invariance_init = normalized_invariance(in.model, inv_points, inv_aug, inv_opts, inv_seed);
  if (config.probe.layers) rec.layer_probes_init = probe_layers(in.model, in.train, in.test, in.k);

  TrainCallbacks callbacks;
  if (config.probe.schedule > 0) {
    callbacks.on_epoch_end = [&](const Model& model, EpochRecord& er) {
      if ((er.epoch + 1) % config.probe.schedule != 0) return;
      er.probe_acc = knn_probe(model, in.train, in.test, in.k, LabelSource::Clean, emb).accuracy;
      try {
        er.invariance = normalized_invariance(model, inv_points, inv_aug, inv_opts, inv_seed).mean_I;
      } catch (const EstimationError&) {
      }
    };
  }

  TrainResult result =
      train_run(in.model, in.train, in.aug, config.optimizer, config.budget, callbacks, root.split("train").key());
  rec.history = std::move(result.history);
  rec.steps = result.steps;
  rec.failed = result.aborted;
  rec.failure = result.abort_reason;
  const Model& trained = result.model;

  try {
    rec.train_acc = unaugmented_fit(trained, in.train).accuracy;
    rec.probe_final = knn_probe(trained, in.train, in.test, in.k, LabelSource::Clean, emb);
    rec.invariance_final = normalized_invariance(trained, inv_points, inv_aug, inv_opts, inv_seed);
    if (config.probe.layers) rec.layer_probes_final = probe_layers(trained, in.train, in.test, in.k);

    AugmentationSpec dec_views = in.aug;
    if (in.aug.kind == AugKind::SubspaceNoise) {
      dec_views = materialize_augmentations(in.train, in.aug, config.probe.decompose_views, LabelPolicy::Preserve,
                                            root.split("decompose").key());
    } else if (in.aug.kind != AugKind::Materialized) {
      dec_views = materialize_augmentations(in.train, AugmentationSpec::identity(), 1, LabelPolicy::Preserve, 0);
    }
    rec.decomposition_final = loss_decompose(trained, in.train, *dec_views.views);
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.failure += (rec.failure.empty() ? "" : "; ") + std::string(e.what());
  }
  rec.verdict = classify_memorization(rec.train_acc, rec.probe_init.accuracy, rec.probe_final.accuracy,
                                      config.probe.margin);
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (trained_out) *trained_out = trained;
  if (inputs_out) *inputs_out = std::move(in);
  return rec;
}

std::vector<RunRecord> run_jobs(const std::vector<RunJob>& jobs, unsigned threads) {
  std::vector<RunRecord> out(jobs.size());
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, jobs.size())));

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const RunJob& job = jobs[i];
        RunRecord rec = run_single(job.config, job.seed);
        rec.axis = job.axis;
        rec.value = job.value;
        rec.arm = job.arm;
        rec.run_id = run_id_for(job.arm, job.axis, job.value, job.seed);
        out[i] = std::move(rec);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  return out;
}

namespace {

RunConfig apply_overrides(RunConfig cfg, const json& overrides) {
  for (auto it = overrides.begin(); it != overrides.end(); ++it) cfg = with_override(cfg, it.key(), it.value());
  return cfg;
}

RunConfig apply_axis(RunConfig cfg, const std::string& axis, const json& value) {
  if (axis == "labels.classes" && value.is_string() && value.get<std::string>() == "per_sample") {
    cfg = with_override(cfg, "labels.per_sample", true);
    return with_override(cfg, "labels.classes", 0);
  }
  return with_override(cfg, axis, value);
}

}  // namespace

std::vector<RunJob> sweep_jobs(const RunConfig& config) {
  const auto& sw = config.sweep;
  if (sw.axis.empty()) throw ConfigError("sweep: missing sweep.axis");
  if (sw.values.empty()) throw ConfigError("sweep: sweep.values is empty");
  if (sw.seeds.empty()) throw ConfigError("sweep: sweep.seeds is empty");
  std::vector<SweepArm> arms = sw.arms;
  if (arms.empty()) arms.push_back({});
  std::vector<RunJob> jobs;
  for (const auto& arm : arms) {
    const RunConfig arm_cfg = apply_overrides(config, arm.overrides);
    for (const auto& value : sw.values) {
      const RunConfig cfg = apply_axis(arm_cfg, sw.axis, value);
      cfg.validate();
      for (std::uint64_t seed : sw.seeds) jobs.push_back({cfg, seed, sw.axis, value.dump(), arm.name});
    }
  }
  return jobs;
}

std::vector<RunRecord> run_sweep(const RunConfig& config) {
  return run_jobs(sweep_jobs(named_sweep_config(config)), config.threads);
}

namespace {

void default_axis(RunConfig& c, const std::string& axis, std::vector<json> values) {
  if (c.sweep.axis.empty()) c.sweep.axis = axis;
  if (c.sweep.values.empty()) c.sweep.values = std::move(values);
}

}  // namespace

RunConfig sweep_b_config(RunConfig base) {
  base.augment.kind = "subspace";
  default_axis(base, "augment.views", {1, 4, 16, 64});
  if (base.sweep.arms.empty()) {
    base.sweep.arms = {{"preserve", {{"augment.label_policy", "preserve"}}},
                       {"randomize", {{"augment.label_policy", "randomize"}}}};
  }
  return base;
}

RunConfig sweep_classes_config(RunConfig base) {
  if (base.augment.kind == "none") base.augment.kind = "subspace";
  default_axis(base, "labels.classes", {2, 10, 100, "per_sample"});
  return base;
}

RunConfig sweep_noise_config(RunConfig base) {
  default_axis(base, "labels.noise_fraction", {0.0, 0.25, 0.5, 0.75, 1.0});
  if (base.sweep.arms.empty()) {
    base.sweep.arms = {{"no_aug", {{"augment.kind", "none"}}},
                       {"aug", {{"augment.kind", "subspace"}, {"augment.views", 0}}}};
  }
  return base;
}

RunConfig sweep_strength_config(RunConfig base) {
  base.augment.kind = "subspace";
  default_axis(base, "augment.strength", {0.0, 0.25, 0.5, 1.0, 2.0});
  return base;
}

RunConfig sweep_projector_config(RunConfig base) {
  default_axis(base, "model.patterns", {64, 256, 1024, 4096});
  return base;
}

RunConfig named_sweep_config(const RunConfig& base) {
  const std::string& name = base.sweep.name;
  if (name == "B") return sweep_b_config(base);
  if (name == "classes") return sweep_classes_config(base);
  if (name == "noise") return sweep_noise_config(base);
  if (name == "strength") return sweep_strength_config(base);
  if (name == "projector") return sweep_projector_config(base);
  if (name.empty() || name == "custom") return base;
  throw ConfigError("unknown sweep name '" + name + "'");
}

const GridCell& GridResult::cell(const std::string& arm, std::size_t n, int views, std::uint64_t seed) const {
  for (const auto& c : cells) {
    if (c.arm == arm && c.n == n && c.views == views && c.seed == seed) return c;
  }
  throw InputError("grid: no such cell");
}

GridResult capacity_grid(const std::vector<std::size_t>& n_values, const std::vector<int>& b_values,
                         const RunConfig& base, const std::vector<std::uint64_t>& seeds,
                         const std::vector<std::string>& arms) {
  if (n_values.empty() || b_values.empty() || seeds.empty()) throw ConfigError("grid: axes and seeds must be non-empty");
  for (const auto& arm : arms) {
    if (arm != "preserve" && arm != "randomize") throw ConfigError("grid: unknown arm '" + arm + "'");
  }
  GridResult grid{n_values, b_values, seeds, {}, {}, 0};
  std::vector<RunJob> jobs;
  for (const auto& arm : arms) {
    for (std::size_t n : n_values) {
      for (int b : b_values) {
        RunConfig cfg = base;
        cfg.data.n = n;
        cfg.augment.kind = "subspace";
        cfg.augment.views = b;
        cfg.augment.label_policy = arm;
        cfg.validate();
        const std::string value = json{{"n", n}, {"B", b}}.dump();
        for (std::uint64_t seed : seeds) jobs.push_back({cfg, seed, "grid", value, arm});
      }
    }
  }
  grid.records = run_jobs(jobs, base.threads);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const RunRecord& r = grid.records[i];
    grid.cells.push_back({jobs[i].config.data.n, jobs[i].config.augment.views, jobs[i].seed, jobs[i].arm, r.memorized(),
                          r.verdict.verdict, r.train_acc, r.probe_init.accuracy, r.probe_final.accuracy, r.failed});
  }
  const bool has_randomize = std::find(arms.begin(), arms.end(), "randomize") != arms.end();
  for (std::size_t n : has_randomize ? n_values : std::vector<std::size_t>{}) {
    for (int b : b_values) {
      const bool all = std::all_of(seeds.begin(), seeds.end(),
                                   [&](std::uint64_t s) { return grid.cell("randomize", n, b, s).memorized; });
      if (all) grid.capacity_estimate = std::max(grid.capacity_estimate, n * static_cast<std::size_t>(b));
    }
  }
  return grid;
}

}  // namespace memlab
