#include "memlab/probe.hpp"

#include "memlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace memlab {

namespace {

double squared_distance(const double* a, const double* b, Eigen::Index dim) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

}  // namespace

int knn_predict(const Mat& fit_points, const std::vector<int>& fit_labels, const Eigen::Ref<const Eigen::RowVectorXd>& query,
                int k, std::optional<std::size_t> exclude) {
  const auto n = static_cast<std::size_t>(fit_points.rows());
  const std::size_t available = n - (exclude && *exclude < n ? 1 : 0);
  if (available == 0) throw InputError("knn_predict: empty fit set");
  if (k < 1 || static_cast<std::size_t>(k) > available) throw InputError("knn_predict: k exceeds the fit set size");
  if (fit_labels.size() != n) throw InputError("knn_predict: label count mismatch");
  if (query.size() != fit_points.cols()) throw InputError("knn_predict: dimension mismatch");

  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (exclude && *exclude == i) continue;
    dist.emplace_back(squared_distance(fit_points.row(static_cast<Eigen::Index>(i)).data(), query.data(), query.size()), i);
  }
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

  int max_label = 0;
  for (int i = 0; i < k; ++i) max_label = std::max(max_label, fit_labels[dist[static_cast<std::size_t>(i)].second]);
  std::vector<int> votes(static_cast<std::size_t>(max_label) + 1, 0);
  for (int i = 0; i < k; ++i) ++votes[static_cast<std::size_t>(fit_labels[dist[static_cast<std::size_t>(i)].second])];
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

ProbeResult knn_probe_embeddings(const Mat& fit_embed, const std::vector<int>& fit_labels, const Mat& eval_embed,
                                 const std::vector<int>& eval_labels, int k, bool leave_one_out) {
  ProbeResult res;
  res.k = k;
  res.n_fit = static_cast<std::size_t>(fit_embed.rows());
  res.n_eval = static_cast<std::size_t>(eval_embed.rows());
  if (res.n_eval == 0) throw InputError("knn_probe: empty evaluation set");
  for (std::size_t q = 0; q < res.n_eval; ++q) {
    const auto exclude = leave_one_out ? std::optional<std::size_t>(q) : std::nullopt;
    if (knn_predict(fit_embed, fit_labels, eval_embed.row(static_cast<Eigen::Index>(q)), k, exclude) == eval_labels[q]) {
      ++res.correct;
    }
  }
  res.accuracy = static_cast<double>(res.correct) / static_cast<double>(res.n_eval);
  return res;
}

ProbeResult knn_probe(const Model& model, const LabeledDataset& fit_set, const LabeledDataset& eval_set, int k,
                      LabelSource label_source, int layer) {
  const Mat fit_embed = layer_batch(model, fit_set.inputs, layer);
  ProbeResult res;
  if (label_source == LabelSource::Clean) {
    const Mat eval_embed = layer_batch(model, eval_set.inputs, layer);
    res = knn_probe_embeddings(fit_embed, fit_set.clean_labels, eval_embed, eval_set.clean_labels, k, false);
  } else {
    res = knn_probe_embeddings(fit_embed, fit_set.random_labels, fit_embed, fit_set.random_labels, k, true);
  }
  res.layer = layer;
  res.label_source = label_source;
  return res;
}

std::vector<std::pair<ProbeResult, ProbeResult>> probe_layers(const Model& model, const LabeledDataset& fit_set,
                                                              const LabeledDataset& eval_set, int k) {
  std::vector<std::pair<ProbeResult, ProbeResult>> out;
  for (int layer = 0; layer < model.num_layers(); ++layer) {
    out.emplace_back(knn_probe(model, fit_set, eval_set, k, LabelSource::Clean, layer),
                     knn_probe(model, fit_set, eval_set, k, LabelSource::Random, layer));
  }
  return out;
}

int clamp_neighbors(int k, std::size_t fit_size) {
  if (fit_size >= 100) return k;
  const int clamped = std::max(1, static_cast<int>(fit_size / 5));
  if (clamped < k) {
    std::cerr << "warning: fit set of " << fit_size << " points, using K=" << clamped << " instead of " << k << "\n";
    return clamped;
  }
  return k;
}

namespace {

Vec transformed(const Mat& points, std::size_t j, const AugmentationSpec& aug, Rng& rng) {
  const Vec x = points.row(static_cast<Eigen::Index>(j)).transpose();
  switch (aug.kind) {
    case AugKind::Identity:
      return x;
    case AugKind::SubspaceNoise:
      return subspace_augment(x, aug, rng);
    case AugKind::Mixup: {
      const std::size_t partner = rng.index(static_cast<std::size_t>(points.rows()));
      const double alpha = rng.uniform(aug.alpha_lo, aug.alpha_hi);
      return alpha * x + (1.0 - alpha) * points.row(static_cast<Eigen::Index>(partner)).transpose();
    }
    case AugKind::Materialized: {
      const int a = static_cast<int>(rng.index(static_cast<std::size_t>(aug.views->views_per_sample)));
      return aug.views->view(j, a).transpose();
    }
  }
  throw InputError("normalized_invariance: unknown augmentation kind");
}

}  // namespace

InvarianceEstimate normalized_invariance(const Model& model, const Mat& points, const AugmentationSpec& aug,
                                         const InvarianceOptions& opts, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (n < 2) throw InputError("normalized_invariance: need at least two points");
  const int layer = opts.layer.value_or(model.embedding_layer());
  if (aug.kind == AugKind::Materialized && aug.views->num_samples() != n) {
    throw InputError("normalized_invariance: views do not match the evaluation points");
  }

  InvarianceEstimate est;
  const Mat base = layer_batch(model, points, layer);
  std::vector<double> numerators(n, 0.0);
  std::vector<double> denominators(n, 0.0);

  if (opts.sampling == PairSampling::Exhaustive) {
    if (aug.kind != AugKind::Materialized && aug.kind != AugKind::Identity) {
      throw InputError("normalized_invariance: exhaustive pairs need a finite augmentation set");
    }
    const int B = aug.kind == AugKind::Materialized ? aug.views->views_per_sample : 1;
    const Mat views = aug.kind == AugKind::Materialized ? layer_batch(model, aug.views->inputs, layer) : base;
    est.num_aug_pairs = static_cast<std::size_t>(B) * static_cast<std::size_t>(B);
    est.num_cross_pairs = n - 1;
    for (std::size_t j = 0; j < n; ++j) {
      const auto offset = static_cast<Eigen::Index>(j) * B;
      for (int a = 0; a < B; ++a) {
        for (int b = 0; b < B; ++b) numerators[j] += (views.row(offset + a) - views.row(offset + b)).norm();
      }
      numerators[j] /= static_cast<double>(est.num_aug_pairs);
      for (std::size_t k = 0; k < n; ++k) {
        if (k != j) denominators[j] += (base.row(static_cast<Eigen::Index>(j)) - base.row(static_cast<Eigen::Index>(k))).norm();
      }
      denominators[j] /= static_cast<double>(n - 1);
    }
  } else {
    if (opts.num_aug_pairs < 1 || opts.num_cross_pairs < 1) {
      throw InputError("normalized_invariance: pair counts must be positive");
    }
    est.num_aug_pairs = opts.num_aug_pairs;
    est.num_cross_pairs = opts.num_cross_pairs;
    const Rng root(seed);
    const std::size_t per_point = 2 * opts.num_aug_pairs;
    Mat draws(static_cast<Eigen::Index>(n * per_point), points.cols());
    std::vector<std::vector<std::size_t>> partners(n);
    for (std::size_t j = 0; j < n; ++j) {
      Rng rng = root.split(j);
      for (std::size_t p = 0; p < per_point; ++p) {
        draws.row(static_cast<Eigen::Index>(j * per_point + p)) = transformed(points, j, aug, rng).transpose();
      }
      Rng cross = root.split("cross").split(j);
      for (std::size_t c = 0; c < opts.num_cross_pairs; ++c) {
        std::size_t other = cross.index(n - 1);
        if (other >= j) ++other;
        partners[j].push_back(other);
      }
    }
    const Mat feats = layer_batch(model, draws, layer);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t p = 0; p < opts.num_aug_pairs; ++p) {
        const auto r = static_cast<Eigen::Index>(j * per_point + 2 * p);
        numerators[j] += (feats.row(r) - feats.row(r + 1)).norm();
      }
      numerators[j] /= static_cast<double>(opts.num_aug_pairs);
      for (std::size_t other : partners[j]) {
        denominators[j] += (base.row(static_cast<Eigen::Index>(j)) - base.row(static_cast<Eigen::Index>(other))).norm();
      }
      denominators[j] /= static_cast<double>(opts.num_cross_pairs);
    }
  }

  for (std::size_t j = 0; j < n; ++j) {
    if (denominators[j] < 1e-12) {
      ++est.excluded;
      continue;
    }
    est.per_sample.push_back(numerators[j] / denominators[j]);
  }
  if (est.per_sample.empty()) throw EstimationError("normalized_invariance: every denominator is degenerate");
  est.mean_I = std::accumulate(est.per_sample.begin(), est.per_sample.end(), 0.0) /
               static_cast<double>(est.per_sample.size());
  return est;
}

MemorizationVerdict classify_memorization(double train_acc, double probe_init, double probe_final, double margin) {
  MemorizationVerdict v{Verdict::NotMemorized, train_acc, probe_init, probe_final, margin};
  if (train_acc < 1.0) return v;
  v.verdict = probe_final > probe_init + margin ? Verdict::Benign : Verdict::Malign;
  return v;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::NotMemorized: return "NotMemorized";
    case Verdict::Benign: return "Benign";
    case Verdict::Malign: return "Malign";
  }
  return "?";
}

std::string to_string(LabelSource s) { return s == LabelSource::Clean ? "clean" : "random"; }

}  // namespace memlab
