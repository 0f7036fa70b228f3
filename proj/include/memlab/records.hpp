#pragma once

#include "memlab/experiments.hpp"

#include <string>
#include <vector>

namespace memlab {

/// One row of runs.csv.
struct RunRow {
  std::string run_id;
  std::string axis;
  std::string value;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  int B = 0;  ///< materialized views per sample; 0 means online augmentation
  int C_prime = 0;
  double noise_fraction = 0.0;
  double strength = 0.0;
  int K_p = 0;
  bool memorized = false;
  std::string verdict;
  double train_acc = 0.0;
  double probe_init = 0.0;
  double probe_final = 0.0;
  double inv_init = 0.0;
  double inv_final = 0.0;
  double l_super = 0.0;
  double inv_term = 0.0;
  double bias_term = 0.0;
  double residual = 0.0;
  double wall_time_s = 0.0;

  bool operator==(const RunRow&) const = default;
};

RunRow to_row(const RunRecord& rec);

const std::vector<std::string>& run_columns();

/// Header plus one line per record; numbers use the shortest exact form.
std::string runs_csv(const std::vector<RunRecord>& records);
std::vector<RunRow> parse_runs_csv(const std::string& text);
std::vector<RunRow> read_runs_csv(const std::string& path);

/// run_id, epoch, train_loss, train_acc_unaug, probe_acc, invariance.
std::string history_csv(const std::vector<RunRecord>& records);
/// run_id, phase, layer, label_source, k, n_fit, n_eval, accuracy.
std::string probes_csv(const std::vector<RunRecord>& records);
/// {run_id: resolved config} for every record.
std::string configs_json(const std::vector<RunRecord>& records);
/// run_id, wall_time_s. Kept apart from runs.csv so that file stays reproducible.
std::string timings_csv(const std::vector<RunRecord>& records);

/// Whitespace-separated summary per (arm, axis value): means and standard
/// deviations over seeds. Rows keep first-appearance order.
std::string sweep_dat(const std::vector<RunRecord>& records);
/// Per (arm, n, B): memorized fraction and mean probe accuracies.
std::string grid_dat(const GridResult& grid);

/// .dat name for a sweep name: B -> fig5, classes -> fig9, strength -> fig11,
/// noise -> fig12, projector -> fig7, anything else -> sweep.
std::string figure_name(const std::string& sweep_name);

/// Writes runs.csv, history.csv, probes.csv, configs.json and, when wall
/// times were recorded, timings.csv into `dir`.
void emit_records(const std::vector<RunRecord>& records, const std::string& dir);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace memlab
