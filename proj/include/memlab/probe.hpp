#pragma once

#include "memlab/common.hpp"
#include "memlab/model.hpp"
#include "memlab/synthdata.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace memlab {

enum class LabelSource { Clean, Random };

struct ProbeResult {
  double accuracy = 0.0;
  int k = 0;
  int layer = 0;
  LabelSource label_source = LabelSource::Clean;
  std::size_t n_fit = 0;
  std::size_t n_eval = 0;
  std::size_t correct = 0;
};

/// Exact K-NN vote under Euclidean distance. Distance ties go to the lower
/// fit index, vote ties to the lower class. `exclude` drops one fit point
/// (leave-one-out).
int knn_predict(const Mat& fit_points, const std::vector<int>& fit_labels, const Eigen::Ref<const Eigen::RowVectorXd>& query,
                int k, std::optional<std::size_t> exclude = std::nullopt);

/// Clean probing fits the clean labels of `fit_set` and scores the clean
/// labels of `eval_set`. Random probing fits the random labels of `fit_set`
/// and scores them on `fit_set` itself, leaving each query out of its own
/// neighbourhood. Inputs are never augmented.
ProbeResult knn_probe(const Model& model, const LabeledDataset& fit_set, const LabeledDataset& eval_set, int k,
                      LabelSource label_source, int layer);

/// Same as knn_probe on precomputed embeddings.
ProbeResult knn_probe_embeddings(const Mat& fit_embed, const std::vector<int>& fit_labels, const Mat& eval_embed,
                                 const std::vector<int>& eval_labels, int k, bool leave_one_out);

/// (clean, random) probe at every layer boundary, input to output.
std::vector<std::pair<ProbeResult, ProbeResult>> probe_layers(const Model& model, const LabeledDataset& fit_set,
                                                              const LabeledDataset& eval_set, int k);

/// K = 20 by default; fit sets under 100 points use floor(fit / 5).
int clamp_neighbors(int k, std::size_t fit_size);

struct InvarianceEstimate {
  double mean_I = 0.0;
  std::vector<double> per_sample;
  std::size_t num_aug_pairs = 0;
  std::size_t num_cross_pairs = 0;
  std::size_t excluded = 0;  ///< points whose denominator fell below 1e-12
};

enum class PairSampling { MonteCarlo, Exhaustive };

struct InvarianceOptions {
  std::size_t num_aug_pairs = 32;
  std::size_t num_cross_pairs = 128;
  std::optional<int> layer;  ///< defaults to the embedding layer
  PairSampling sampling = PairSampling::MonteCarlo;
};

/// I(x) = E|f(T1 x) - f(T2 x)| / E_{x' != x}|f(x) - f(x')| for each row of
/// `points`. Materialized specs index their views by row of `points`.
/// Exhaustive sampling enumerates every ordered view pair and every x' and
/// requires a materialized or identity spec.
InvarianceEstimate normalized_invariance(const Model& model, const Mat& points, const AugmentationSpec& aug,
                                         const InvarianceOptions& opts, std::uint64_t seed);

enum class Verdict { NotMemorized, Benign, Malign };

struct MemorizationVerdict {
  Verdict verdict = Verdict::NotMemorized;
  double train_acc = 0.0;
  double probe_init = 0.0;
  double probe_final = 0.0;
  double margin = 0.0;
};

MemorizationVerdict classify_memorization(double train_acc, double probe_init, double probe_final, double margin);

std::string to_string(Verdict v);
std::string to_string(LabelSource s);

}  // namespace memlab
