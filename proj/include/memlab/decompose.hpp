#pragma once

#include "memlab/common.hpp"
#include "memlab/model.hpp"
#include "memlab/synthdata.hpp"

#include <map>
#include <vector>

namespace memlab {

/// Split of the augmented MSE into view dispersion (Inv) and the distance of
/// the view-averaged prediction from the label (Bias).
struct DecompositionReport {
  double l_super = 0.0;
  double inv_term = 0.0;
  double bias_term = 0.0;
  double residual = 0.0;  ///< l_super - (inv_term + bias_term)
  std::map<int, double> per_class_bias;  ///< sums to bias_term
};

/// `outputs` holds B consecutive rows per sample; `labels` is the class of
/// each sample in R^num_classes.
DecompositionReport decompose_outputs(const Mat& outputs, int views_per_sample, const std::vector<int>& labels,
                                      int num_classes);

/// Evaluates the model on every frozen view and decomposes the loss against
/// the per-sample random labels of `ds`.
DecompositionReport loss_decompose(const Model& model, const LabeledDataset& ds, const MaterializedViews& views);

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
};

/// (1/B) sum |x_i - a|^2 against (1/2B^2) sum_ij |x_i - x_j|^2 + |a - mean(x)|^2,
/// for the B rows of `xs`.
IdentityCheck mean_deviation_identity(const Mat& xs, const Eigen::Ref<const Vec>& a);

struct BiasLimitReport {
  double bias = 0.0;
  double max_deviation = 0.0;  ///< max over i != j of | |fbar_i - fbar_j|^2 - 2 |
  double bound = 0.0;          ///< 10 sqrt(tol)
  bool applicable = false;     ///< bias <= tol
  bool passed = false;
};

/// With unique per-sample labels and Bias <= tol, the view-averaged outputs
/// sit at pairwise squared distance 2. `mean_outputs` row i is fbar(x_i).
BiasLimitReport bias_limit_check(const Mat& mean_outputs, double bias, double tol);
BiasLimitReport bias_limit_check(const Model& model, const LabeledDataset& per_sample_ds, const MaterializedViews& views,
                                 double tol);

}  // namespace memlab
