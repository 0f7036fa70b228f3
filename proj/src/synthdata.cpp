#include "memlab/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace memlab {

void ToyDataConfig::validate() const {
  if (d1 <= 0 || d1 >= d) {
    throw ConfigError("toy data: need 0 < d1 < d, got d1=" + std::to_string(d1) + " d=" + std::to_string(d));
  }
  if (num_classes < 1) throw ConfigError("toy data: need at least one class");
  if (n < static_cast<std::size_t>(num_classes)) throw ConfigError("toy data: need n >= number of classes");
  if (!(sigma > 0.0)) throw ConfigError("toy data: sigma must be positive");
  if (!(signal_variance_ratio > 0.0)) throw ConfigError("toy data: signal_variance_ratio must be positive");
}

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& indices) const {
  LabeledDataset out;
  out.inputs.resize(static_cast<Eigen::Index>(indices.size()), inputs.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t i = indices[r];
    out.inputs.row(static_cast<Eigen::Index>(r)) = inputs.row(static_cast<Eigen::Index>(i));
    out.clean_labels.push_back(clean_labels[i]);
    out.random_labels.push_back(random_labels[i]);
    out.true_cluster.push_back(true_cluster[i]);
  }
  out.cluster_means = cluster_means;
  out.d1 = d1;
  out.num_classes = num_classes;
  out.num_random_classes = num_random_classes;
  out.sigma = sigma;
  out.seed = seed;
  return out;
}

std::pair<LabeledDataset, LabeledDataset> LabeledDataset::split(std::size_t head) const {
  std::vector<std::size_t> first(head);
  std::iota(first.begin(), first.end(), std::size_t{0});
  std::vector<std::size_t> rest(size() - head);
  std::iota(rest.begin(), rest.end(), head);
  return {subset(first), subset(rest)};
}

AugmentationSpec AugmentationSpec::subspace(int d1, double noise_std) {
  AugmentationSpec spec;
  spec.kind = AugKind::SubspaceNoise;
  spec.d1 = d1;
  spec.noise_std = noise_std;
  return spec;
}

AugmentationSpec AugmentationSpec::mixup(double alpha_lo, double alpha_hi) {
  if (!(0.0 <= alpha_lo && alpha_lo <= alpha_hi && alpha_hi <= 1.0)) {
    throw InputError("mixup: weighting range must satisfy 0 <= lo <= hi <= 1");
  }
  AugmentationSpec spec;
  spec.kind = AugKind::Mixup;
  spec.alpha_lo = alpha_lo;
  spec.alpha_hi = alpha_hi;
  return spec;
}

AugmentationSpec AugmentationSpec::materialized(std::shared_ptr<const MaterializedViews> views) {
  if (!views || views->views_per_sample < 1) throw InputError("materialized augmentation needs B >= 1 views");
  AugmentationSpec spec;
  spec.kind = AugKind::Materialized;
  spec.views = std::move(views);
  return spec;
}

LabeledDataset generate_toy_data(const ToyDataConfig& cfg) {
  cfg.validate();
  const Rng root(cfg.seed);
  LabeledDataset ds;
  ds.d1 = cfg.d1;
  ds.num_classes = cfg.num_classes;
  ds.num_random_classes = cfg.num_classes;
  ds.sigma = cfg.sigma;
  ds.seed = cfg.seed;

  Rng mean_rng = root.split("cluster_means");
  ds.cluster_means.resize(cfg.num_classes, cfg.d1);
  for (int k = 0; k < cfg.num_classes; ++k) {
    for (int j = 0; j < cfg.d1; ++j) ds.cluster_means(k, j) = mean_rng.normal();
  }

  const double signal_std = cfg.sigma * std::sqrt(cfg.signal_variance_ratio);
  const auto n = static_cast<Eigen::Index>(cfg.n);
  ds.inputs.resize(n, cfg.d);
  ds.true_cluster.resize(cfg.n);
  const Rng sample_root = root.split("samples");
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng = sample_root.split(static_cast<std::uint64_t>(i));
    const int z = static_cast<int>(rng.index(static_cast<std::size_t>(cfg.num_classes)));
    ds.true_cluster[static_cast<std::size_t>(i)] = z;
    for (int j = 0; j < cfg.d1; ++j) ds.inputs(i, j) = ds.cluster_means(z, j) + signal_std * rng.normal();
    for (int j = cfg.d1; j < cfg.d; ++j) ds.inputs(i, j) = cfg.sigma * rng.normal();
  }
  ds.clean_labels = ds.true_cluster;
  ds.random_labels = ds.true_cluster;
  return ds;
}

LabeledDataset randomize_labels(const LabeledDataset& ds, int num_classes, double noise_fraction, bool per_sample,
                                std::uint64_t seed) {
  if (!(noise_fraction >= 0.0 && noise_fraction <= 1.0)) {
    throw ConfigError("randomize_labels: noise_fraction must lie in [0, 1]");
  }
  LabeledDataset out = ds;
  const std::size_t n = ds.size();
  if (per_sample) {
    if (noise_fraction < 1.0) throw ConfigError("randomize_labels: per-sample labels require noise_fraction = 1");
    out.num_random_classes = static_cast<int>(n);
    for (std::size_t i = 0; i < n; ++i) out.random_labels[i] = static_cast<int>(i);
    return out;
  }
  if (num_classes < 1) throw ConfigError("randomize_labels: need at least one class");
  if (noise_fraction < 1.0 && num_classes < ds.num_classes) {
    throw ConfigError("randomize_labels: clean labels cannot be embedded into fewer classes unless noise_fraction = 1");
  }
  out.num_random_classes = num_classes;
  out.random_labels = ds.clean_labels;

  Rng rng = Rng(seed).split("label_noise");
  const auto num_noisy = static_cast<std::size_t>(std::llround(noise_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // partial Fisher-Yates: the first num_noisy entries are a uniform subset
  for (std::size_t i = 0; i < num_noisy; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(order[i], order[j]);
  }
  Rng label_rng = Rng(seed).split("label_draws");
  for (std::size_t i = 0; i < num_noisy; ++i) {
    out.random_labels[order[i]] = static_cast<int>(label_rng.index(static_cast<std::size_t>(num_classes)));
  }
  return out;
}

Vec subspace_augment(const Eigen::Ref<const Vec>& x, const AugmentationSpec& spec, Rng& rng) {
  if (spec.kind != AugKind::SubspaceNoise) throw InputError("subspace_augment: spec is not SubspaceNoise");
  if (spec.d1 < 0 || spec.d1 > x.size()) throw InputError("subspace_augment: signal dimension exceeds input");
  Vec out = x;
  if (spec.noise_std == 0.0) return out;
  for (Eigen::Index j = spec.d1; j < x.size(); ++j) out[j] += spec.noise_std * rng.normal();
  return out;
}

MixedExample mixup_pair(const Eigen::Ref<const Vec>& x1, const Eigen::Ref<const Vec>& y1,
                        const Eigen::Ref<const Vec>& x2, const Eigen::Ref<const Vec>& y2, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("mixup_pair: alpha must lie in [0, 1]");
  if (x1.size() != x2.size() || y1.size() != y2.size()) throw InputError("mixup_pair: dimension mismatch");
  return {alpha * x1 + (1.0 - alpha) * x2, alpha * y1 + (1.0 - alpha) * y2};
}

std::pair<LabeledDataset, AugmentationSpec> iid_augment(const LabeledDataset& ds, std::size_t subset_size, int views,
                                                        std::uint64_t seed) {
  if (views < 0) throw ConfigError("iid_augment: views must be non-negative");
  const std::size_t n = ds.size();
  const auto per = static_cast<std::size_t>(views) + 1;
  if (subset_size == 0 || subset_size * per > n) {
    throw DataError("iid_augment: subset_size * (B + 1) exceeds the available samples");
  }
  Rng rng = Rng(seed).split("iid_subset");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(order[i], order[j]);
  }
  std::vector<std::size_t> bases(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(subset_size));

  std::vector<std::vector<std::size_t>> pool(static_cast<std::size_t>(ds.num_classes));
  for (std::size_t r = subset_size; r < n; ++r) pool[static_cast<std::size_t>(ds.true_cluster[order[r]])].push_back(order[r]);
  std::vector<std::size_t> cursor(pool.size(), 0);

  auto mv = std::make_shared<MaterializedViews>();
  mv->views_per_sample = views + 1;
  mv->policy = LabelPolicy::Preserve;
  mv->num_label_classes = ds.num_random_classes;
  mv->inputs.resize(static_cast<Eigen::Index>(subset_size * per), ds.inputs.cols());
  mv->labels.reserve(subset_size * per);
  Eigen::Index row = 0;
  for (std::size_t b : bases) {
    const auto cluster = static_cast<std::size_t>(ds.true_cluster[b]);
    mv->inputs.row(row++) = ds.inputs.row(static_cast<Eigen::Index>(b));
    mv->labels.push_back(ds.random_labels[b]);
    for (int a = 0; a < views; ++a) {
      if (cursor[cluster] >= pool[cluster].size()) {
        throw DataError("iid_augment: reserve pool of cluster " + std::to_string(cluster) + " exhausted");
      }
      mv->inputs.row(row++) = ds.inputs.row(static_cast<Eigen::Index>(pool[cluster][cursor[cluster]++]));
      mv->labels.push_back(ds.random_labels[b]);
    }
  }
  return {ds.subset(bases), AugmentationSpec::materialized(std::move(mv))};
}

AugmentationSpec materialize_augmentations(const LabeledDataset& ds, const AugmentationSpec& spec, int views,
                                           LabelPolicy policy, std::uint64_t seed) {
  if (views < 1) throw ConfigError("materialize_augmentations: need B >= 1");
  if (spec.kind != AugKind::SubspaceNoise && spec.kind != AugKind::Identity) {
    throw ConfigError("materialize_augmentations: only subspace-noise views can be materialized");
  }
  const std::size_t n = ds.size();
  auto mv = std::make_shared<MaterializedViews>();
  mv->views_per_sample = views;
  mv->policy = policy;
  mv->num_label_classes = ds.num_random_classes;
  mv->inputs.resize(static_cast<Eigen::Index>(n) * views, ds.inputs.cols());
  mv->labels.resize(n * static_cast<std::size_t>(views));
  const Rng root = Rng(seed).split("materialize");
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = root.split(static_cast<std::uint64_t>(i));
    const Vec x = ds.inputs.row(static_cast<Eigen::Index>(i)).transpose();
    for (int a = 0; a < views; ++a) {
      const auto row = static_cast<Eigen::Index>(i) * views + a;
      if (a == 0 || spec.kind == AugKind::Identity) {
        mv->inputs.row(row) = x.transpose();
      } else {
        mv->inputs.row(row) = subspace_augment(x, spec, rng).transpose();
      }
      int label = ds.random_labels[i];
      if (policy == LabelPolicy::Randomize && a > 0) {
        label = static_cast<int>(rng.index(static_cast<std::size_t>(ds.num_random_classes)));
      }
      mv->labels[static_cast<std::size_t>(row)] = label;
    }
  }
  return AugmentationSpec::materialized(std::move(mv));
}

MixedExample draw_view(const LabeledDataset& ds, std::size_t i, const AugmentationSpec& spec, Rng& rng) {
  const Vec x = ds.inputs.row(static_cast<Eigen::Index>(i)).transpose();
  switch (spec.kind) {
    case AugKind::Identity:
      return {x, ds.random_label_vector(i)};
    case AugKind::SubspaceNoise:
      return {subspace_augment(x, spec, rng), ds.random_label_vector(i)};
    case AugKind::Mixup: {
      const std::size_t j = rng.index(ds.size());
      const double alpha = rng.uniform(spec.alpha_lo, spec.alpha_hi);
      const Vec xj = ds.inputs.row(static_cast<Eigen::Index>(j)).transpose();
      return mixup_pair(x, ds.random_label_vector(i), xj, ds.random_label_vector(j), alpha);
    }
    case AugKind::Materialized: {
      const auto& mv = *spec.views;
      const int a = static_cast<int>(rng.index(static_cast<std::size_t>(mv.views_per_sample)));
      return {mv.view(i, a).transpose(), one_hot(mv.label(i, a), mv.num_label_classes)};
    }
  }
  throw InputError("draw_view: unknown augmentation kind");
}

}  // namespace memlab
