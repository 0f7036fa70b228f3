#pragma once

#include "memlab/config.hpp"
#include "memlab/decompose.hpp"
#include "memlab/probe.hpp"
#include "memlab/synthdata.hpp"
#include "memlab/train.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace memlab {

struct RunRecord {
  RunConfig config;
  std::uint64_t seed = 0;
  std::string run_id;
  std::string axis;   ///< sweep axis, empty for single runs
  std::string value;  ///< axis value as compact JSON
  std::string arm;

  TrainHistory history;
  std::size_t steps = 0;
  double train_acc = 0.0;
  ProbeResult probe_init;
  ProbeResult probe_final;
  InvarianceEstimate invariance_init;
  InvarianceEstimate invariance_final;
  DecompositionReport decomposition_final;
  MemorizationVerdict verdict;
  std::vector<std::pair<ProbeResult, ProbeResult>> layer_probes_init;
  std::vector<std::pair<ProbeResult, ProbeResult>> layer_probes_final;
  bool failed = false;
  std::string failure;
  double wall_time_s = 0.0;

  [[nodiscard]] bool memorized() const { return train_acc >= 1.0; }
  [[nodiscard]] int views() const;
  [[nodiscard]] int label_classes() const;
};

/// Everything a run trains on, derived from (config, seed).
struct RunInputs {
  LabeledDataset train;
  LabeledDataset test;
  AugmentationSpec aug;
  Model model;
  int k = 20;
};

RunInputs prepare_run(const RunConfig& config, std::uint64_t seed);

/// Initial probes and invariance, training, final probes, invariance and
/// decomposition, then the memorization verdict. A diverged run comes back
/// with failed = true instead of throwing.
RunRecord run_single(const RunConfig& config, std::uint64_t seed);

/// Also hands back the trained model and the run inputs.
RunRecord run_single(const RunConfig& config, std::uint64_t seed, RunInputs* inputs_out, Model* trained_out);

/// One independent run per job; results come back in job order whatever the
/// thread count.
struct RunJob {
  RunConfig config;
  std::uint64_t seed = 0;
  std::string axis;
  std::string value;
  std::string arm;
};
std::vector<RunRecord> run_jobs(const std::vector<RunJob>& jobs, unsigned threads = 0);

/// Expands the sweep section into jobs: every (arm, value, seed) triple.
std::vector<RunJob> sweep_jobs(const RunConfig& config);
std::vector<RunRecord> run_sweep(const RunConfig& config);

/// Named sweeps. Each fills in axis/values/arms on top of the base config
/// unless the sweep section already provides them.
RunConfig sweep_b_config(RunConfig base);         ///< augment.views, preserve vs randomize
RunConfig sweep_classes_config(RunConfig base);   ///< labels.classes incl. "per_sample"
RunConfig sweep_noise_config(RunConfig base);     ///< labels.noise_fraction, with vs without augmentation
RunConfig sweep_strength_config(RunConfig base);  ///< augment.strength
RunConfig sweep_projector_config(RunConfig base); ///< model.patterns
RunConfig named_sweep_config(const RunConfig& base);

struct GridCell {
  std::size_t n = 0;
  int views = 0;
  std::uint64_t seed = 0;
  std::string arm;  ///< preserve | randomize
  bool memorized = false;
  Verdict verdict = Verdict::NotMemorized;
  double train_acc = 0.0;
  double probe_init = 0.0;
  double probe_final = 0.0;
  bool failed = false;
};

struct GridResult {
  std::vector<std::size_t> n_values;
  std::vector<int> b_values;
  std::vector<std::uint64_t> seeds;
  std::vector<GridCell> cells;  ///< arm-major, then n, B, seed
  std::vector<RunRecord> records;
  /// Largest n*B at which the randomize arm memorizes in every seed; 0 if none.
  std::size_t capacity_estimate = 0;

  [[nodiscard]] const GridCell& cell(const std::string& arm, std::size_t n, int views, std::uint64_t seed) const;
};

/// Every (arm, n, B, seed) cell is an independent run, so a sub-grid gives
/// the same cell results as the full one.
GridResult capacity_grid(const std::vector<std::size_t>& n_values, const std::vector<int>& b_values,
                         const RunConfig& base, const std::vector<std::uint64_t>& seeds,
                         const std::vector<std::string>& arms = {"preserve", "randomize"});

}  // namespace memlab
