#pragma once

#include "memlab/model.hpp"
#include "memlab/train.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace memlab {

struct DataSection {
  std::size_t n = 100;
  std::size_t n_test = 1000;
  int d = 32;
  int d1 = 8;
  int classes = 10;
  double sigma = 1.0;
  double signal_variance_ratio = 0.1;
};

struct LabelSection {
  int classes = 0;  ///< C'; 0 keeps the data's class count
  double noise_fraction = 1.0;
  bool per_sample = false;
};

struct ModelSection {
  std::string encoder = "linear";  ///< linear | mlp
  std::vector<int> encoder_hidden;
  int embedding_dim = 0;  ///< 0 means d
  std::string projector = "inverse_distance";  ///< inverse_distance | mlp | identity
  int patterns = 1024;
  std::vector<int> projector_hidden = {512};
  bool train_patterns = true;
  double epsilon = 1e-8;
};

struct AugmentSection {
  std::string kind = "none";  ///< none | subspace | mixup | iid
  double strength = 1.0;      ///< subspace noise std in units of sigma
  int views = 0;              ///< B; 0 draws online
  std::string label_policy = "preserve";  ///< preserve | randomize
  std::size_t iid_subset = 0;
  double mixup_alpha_lo = 0.0;
  double mixup_alpha_hi = 1.0;
};

struct ProbeSection {
  int k_neighbors = 20;
  double margin = 0.02;
  std::size_t schedule = 10;  ///< epochs between probe callbacks; 0 disables them
  std::size_t invariance_pairs = 32;
  std::size_t invariance_cross_pairs = 128;
  std::size_t invariance_points = 200;
  double invariance_strength = 1.0;
  int decompose_views = 8;
  bool layers = false;  ///< record clean/random probes at every layer
};

struct SweepArm {
  std::string name;
  nlohmann::json overrides = nlohmann::json::object();
};

struct SweepSection {
  std::string name;  ///< B | classes | noise | strength | projector | custom
  std::string axis;
  std::vector<nlohmann::json> values;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::vector<SweepArm> arms;
};

struct GridSection {
  std::vector<std::size_t> n_values = {50, 100, 200, 400};
  std::vector<int> b_values = {1, 4, 16, 64};
  std::vector<std::uint64_t> seeds = {0, 1, 2};
};

struct RunConfig {
  DataSection data;
  LabelSection labels;
  ModelSection model;
  AugmentSection augment;
  OptimizerConfig optimizer;
  TrainBudget budget;
  ProbeSection probe;
  SweepSection sweep;
  GridSection grid;
  std::uint64_t seed = 0;
  unsigned threads = 0;  ///< 0 uses the hardware concurrency
  bool record_wall_time = false;

  void validate() const;
};

/// Strict conversion: unknown keys and type mismatches throw ConfigError
/// naming the offending key path.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);

RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

/// Sets a dotted key ("optimizer.learning_rate"). Types are checked here;
/// value constraints are left to validate() so overrides can be chained.
RunConfig with_override(const RunConfig& cfg, const std::string& key, const nlohmann::json& value);
/// Parses "key=value"; the value is read as JSON, falling back to a string.
RunConfig apply_set(const RunConfig& cfg, const std::string& assignment);

}  // namespace memlab
