#include "memlab/decompose.hpp"

#include <cmath>

namespace memlab {

DecompositionReport decompose_outputs(const Mat& outputs, int views_per_sample, const std::vector<int>& labels,
                                      int num_classes) {
  if (views_per_sample < 1) throw InputError("loss_decompose: need B >= 1");
  const auto B = static_cast<Eigen::Index>(views_per_sample);
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (outputs.rows() != n * B || outputs.cols() != num_classes) throw InputError("loss_decompose: shape mismatch");
  if (n == 0) throw InputError("loss_decompose: empty dataset");

  DecompositionReport rep;
  const double nd = static_cast<double>(n);
  const double bd = static_cast<double>(B);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    const Vec y = one_hot(label, num_classes);
    const auto block = outputs.middleRows(i * B, B);
    Vec mean = Vec::Zero(num_classes);
    for (Eigen::Index a = 0; a < B; ++a) {
      rep.l_super += (block.row(a).transpose() - y).squaredNorm();
      mean += block.row(a).transpose();
      for (Eigen::Index b = 0; b < B; ++b) rep.inv_term += (block.row(a) - block.row(b)).squaredNorm();
    }
    mean /= bd;
    const double bias_i = (y - mean).squaredNorm() / nd;
    rep.bias_term += bias_i;
    rep.per_class_bias[label] += bias_i;
  }
  rep.l_super /= nd * bd;
  rep.inv_term /= 2.0 * nd * bd * bd;
  rep.residual = rep.l_super - (rep.inv_term + rep.bias_term);
  return rep;
}

DecompositionReport loss_decompose(const Model& model, const LabeledDataset& ds, const MaterializedViews& views) {
  if (views.num_samples() != ds.size()) throw InputError("loss_decompose: views do not match the dataset");
  return decompose_outputs(forward_batch(model, views.inputs), views.views_per_sample, ds.random_labels,
                           model.output_dim());
}

IdentityCheck mean_deviation_identity(const Mat& xs, const Eigen::Ref<const Vec>& a) {
  if (xs.rows() < 1) throw InputError("mean_deviation_identity: need B >= 1");
  if (xs.cols() != a.size()) throw InputError("mean_deviation_identity: dimension mismatch");
  const auto B = xs.rows();
  const double bd = static_cast<double>(B);
  IdentityCheck c;
  for (Eigen::Index i = 0; i < B; ++i) c.lhs += (xs.row(i).transpose() - a).squaredNorm();
  c.lhs /= bd;
  double pairwise = 0.0;
  for (Eigen::Index i = 0; i < B; ++i) {
    for (Eigen::Index j = 0; j < B; ++j) pairwise += (xs.row(i) - xs.row(j)).squaredNorm();
  }
  const Vec mean = xs.colwise().mean().transpose();
  c.rhs = pairwise / (2.0 * bd * bd) + (a - mean).squaredNorm();
  c.residual = c.lhs - c.rhs;
  return c;
}

BiasLimitReport bias_limit_check(const Mat& mean_outputs, double bias, double tol) {
  BiasLimitReport rep;
  rep.bias = bias;
  rep.bound = 10.0 * std::sqrt(tol);
  rep.applicable = bias <= tol;
  for (Eigen::Index i = 0; i < mean_outputs.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < mean_outputs.rows(); ++j) {
      const double dev = std::abs((mean_outputs.row(i) - mean_outputs.row(j)).squaredNorm() - 2.0);
      rep.max_deviation = std::max(rep.max_deviation, dev);
    }
  }
  rep.passed = rep.applicable && rep.max_deviation <= rep.bound;
  return rep;
}

BiasLimitReport bias_limit_check(const Model& model, const LabeledDataset& per_sample_ds, const MaterializedViews& views,
                                 double tol) {
  if (per_sample_ds.num_random_classes != static_cast<int>(per_sample_ds.size())) {
    throw InputError("bias_limit_check: labels must be unique per sample");
  }
  const Mat outputs = forward_batch(model, views.inputs);
  const DecompositionReport rep =
      decompose_outputs(outputs, views.views_per_sample, per_sample_ds.random_labels, model.output_dim());
  const auto B = static_cast<Eigen::Index>(views.views_per_sample);
  Mat means(static_cast<Eigen::Index>(per_sample_ds.size()), outputs.cols());
  for (Eigen::Index i = 0; i < means.rows(); ++i) means.row(i) = outputs.middleRows(i * B, B).colwise().mean();
  return bias_limit_check(means, rep.bias_term, tol);
}

}  // namespace memlab
