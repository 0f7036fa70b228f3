#pragma once

#include "memlab/common.hpp"
#include "memlab/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

namespace memlab {

/// Gaussian-mixture toy data: the first d1 coordinates carry the class
/// structure, the remaining d - d1 coordinates are pure noise.
struct ToyDataConfig {
  std::size_t n = 100;
  int d = 32;
  int d1 = 8;
  int num_classes = 10;
  double sigma = 1.0;
  /// Variance of the signal block around its cluster mean, relative to sigma^2.
  double signal_variance_ratio = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LabeledDataset {
  Mat inputs;                      ///< n x d
  std::vector<int> clean_labels;   ///< in [0, num_classes)
  std::vector<int> random_labels;  ///< in [0, num_random_classes)
  std::vector<int> true_cluster;   ///< 0-based cluster id
  Mat cluster_means;               ///< num_classes x d1
  int d1 = 0;
  int num_classes = 0;
  int num_random_classes = 0;
  double sigma = 1.0;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
  [[nodiscard]] int dim() const { return static_cast<int>(inputs.cols()); }
  [[nodiscard]] Vec clean_label_vector(std::size_t i) const { return one_hot(clean_labels[i], num_classes); }
  [[nodiscard]] Vec random_label_vector(std::size_t i) const {
    return one_hot(random_labels[i], num_random_classes);
  }
  [[nodiscard]] LabeledDataset subset(const std::vector<std::size_t>& indices) const;
  /// Splits into the first `head` samples and the rest.
  [[nodiscard]] std::pair<LabeledDataset, LabeledDataset> split(std::size_t head) const;
};

enum class AugKind { Identity, SubspaceNoise, Mixup, Materialized };
enum class LabelPolicy { Preserve, Randomize };

/// Frozen per-sample views. Sample i owns rows [i*B, (i+1)*B); row i*B is the
/// untransformed input itself.
struct MaterializedViews {
  int views_per_sample = 1;
  Mat inputs;
  std::vector<int> labels;
  LabelPolicy policy = LabelPolicy::Preserve;
  int num_label_classes = 0;

  [[nodiscard]] std::size_t num_samples() const {
    return static_cast<std::size_t>(inputs.rows()) / static_cast<std::size_t>(views_per_sample);
  }
  [[nodiscard]] auto view(std::size_t sample, int a) const {
    return inputs.row(static_cast<Eigen::Index>(sample) * views_per_sample + a);
  }
  [[nodiscard]] int label(std::size_t sample, int a) const {
    return labels[sample * static_cast<std::size_t>(views_per_sample) + static_cast<std::size_t>(a)];
  }
};

struct AugmentationSpec {
  AugKind kind = AugKind::Identity;
  int d1 = 0;
  double noise_std = 0.0;  ///< absolute std of the subspace perturbation
  double alpha_lo = 0.0;   ///< mixup weight ~ U[alpha_lo, alpha_hi]
  double alpha_hi = 1.0;
  std::shared_ptr<const MaterializedViews> views;

  static AugmentationSpec identity() { return {}; }
  static AugmentationSpec subspace(int d1, double noise_std);
  static AugmentationSpec mixup(double alpha_lo = 0.0, double alpha_hi = 1.0);
  static AugmentationSpec materialized(std::shared_ptr<const MaterializedViews> views);

  [[nodiscard]] bool generative() const { return kind != AugKind::Materialized; }
};

LabeledDataset generate_toy_data(const ToyDataConfig& cfg);

/// Replaces a `noise_fraction` portion of the labels (picked without
/// replacement) with uniform draws over `num_classes`. With `per_sample`,
/// sample i receives class i and `num_classes` is ignored.
LabeledDataset randomize_labels(const LabeledDataset& ds, int num_classes, double noise_fraction,
                                bool per_sample, std::uint64_t seed);

Vec subspace_augment(const Eigen::Ref<const Vec>& x, const AugmentationSpec& spec, Rng& rng);

struct MixedExample {
  Vec input;
  Vec label;
};
MixedExample mixup_pair(const Eigen::Ref<const Vec>& x1, const Eigen::Ref<const Vec>& y1,
                        const Eigen::Ref<const Vec>& x2, const Eigen::Ref<const Vec>& y2, double alpha);

/// Keeps `subset_size` base samples and gives each `views` held-out samples
/// of the same true cluster as its augmentations. The returned views hold
/// views + 1 rows per sample (the base first), all carrying the base label.
std::pair<LabeledDataset, AugmentationSpec> iid_augment(const LabeledDataset& ds, std::size_t subset_size,
                                                        int views, std::uint64_t seed);

/// Draws and freezes `views` views per sample from a generative spec. View 0
/// is the untransformed input and keeps the sample's random label under both
/// policies; Randomize gives every other view a fresh uniform label.
AugmentationSpec materialize_augmentations(const LabeledDataset& ds, const AugmentationSpec& spec, int views,
                                           LabelPolicy policy, std::uint64_t seed);

/// One draw of T(x_i) with its training target. Generative specs draw a fresh
/// transformation (mixup picks its partner from `ds` and mixes the random
/// labels); materialized specs pick one of the frozen views uniformly.
MixedExample draw_view(const LabeledDataset& ds, std::size_t i, const AugmentationSpec& spec, Rng& rng);

}  // namespace memlab
