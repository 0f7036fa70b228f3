#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace memlab {

struct SuiteResult {
  std::string name;
  std::size_t instances = 0;
  std::size_t failures = 0;
  double max_residual = 0.0;  ///< worst normalized residual or gradient error
  double tolerance = 0.0;
  std::size_t skipped_coordinates = 0;
  bool passed = true;
};

/// Random instances of the mean-deviation identity (B <= 10, dim <= 16);
/// residual normalized by 1 + lhs.
SuiteResult lemma_suite(std::size_t instances = 1000, std::uint64_t seed = 1);

/// Random (model, dataset, view set) triples with B <= 5: L_super against
/// Inv + Bias, plus non-negativity of both terms.
SuiteResult decomposition_suite(std::size_t instances = 200, std::uint64_t seed = 2);

/// Central-difference gradient checks for one model family:
/// "linear" (linear encoder, identity head), "inverse_distance" (linear
/// encoder, projector with trainable patterns) or "mlp" (one hidden layer).
SuiteResult gradient_suite(const std::string& variant, std::size_t instances = 50, std::uint64_t seed = 3,
                           double step = 1e-5, double tolerance = 1e-4);

/// Every suite above with its default size.
std::vector<SuiteResult> run_all_checks(std::uint64_t seed = 0);

}  // namespace memlab
