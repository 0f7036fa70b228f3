#include "memlab/checks.hpp"

#include "memlab/decompose.hpp"
#include "memlab/model.hpp"
#include "memlab/rng.hpp"

#include <cmath>

namespace memlab {

namespace {

Mat random_matrix(Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo + 1)));
}

void record(SuiteResult& s, double residual, bool ok) {
  ++s.instances;
  s.max_residual = std::max(s.max_residual, residual);
  if (!ok) {
    ++s.failures;
    s.passed = false;
  }
}

Model random_model(Rng& rng, int input_dim, int num_classes) {
  ModelSpec spec;
  spec.input_dim = input_dim;
  spec.num_classes = num_classes;
  switch (rng.index(3)) {
    case 0:
      spec.projector = ProjectorKind::InverseDistance;
      spec.num_patterns = uniform_int(rng, 1, 16);
      break;
    case 1:
      spec.projector = ProjectorKind::Mlp;
      spec.projector_hidden = {uniform_int(rng, 1, 12)};
      break;
    default:
      spec.encoder = EncoderKind::Mlp;
      spec.encoder_hidden = {uniform_int(rng, 1, 12)};
      spec.embedding_dim = uniform_int(rng, 1, 8);
      spec.projector = ProjectorKind::InverseDistance;
      spec.num_patterns = uniform_int(rng, 1, 16);
      break;
  }
  return init_model(spec, rng.next_u64());
}

}  // namespace

SuiteResult lemma_suite(std::size_t instances, std::uint64_t seed) {
  SuiteResult s;
  s.name = "lemma";
  s.tolerance = 1e-10;
  Rng rng(seed);
  for (std::size_t t = 0; t < instances; ++t) {
    const int B = uniform_int(rng, 1, 10);
    const int dim = uniform_int(rng, 1, 16);
    const double scale = std::pow(10.0, rng.uniform(-2.0, 2.0));
    const Mat xs = random_matrix(B, dim, scale, rng);
    const Vec a = random_matrix(dim, 1, scale, rng).col(0);
    const IdentityCheck c = mean_deviation_identity(xs, a);
    const double normalized = std::abs(c.residual) / (1.0 + c.lhs);
    record(s, normalized, normalized <= s.tolerance);
  }
  return s;
}

SuiteResult decomposition_suite(std::size_t instances, std::uint64_t seed) {
  SuiteResult s;
  s.name = "decomposition";
  s.tolerance = 1e-10;
  Rng rng(seed);
  for (std::size_t t = 0; t < instances; ++t) {
    const int d = uniform_int(rng, 1, 8);
    const int classes = uniform_int(rng, 2, 6);
    const int n = uniform_int(rng, 1, 12);
    const int B = uniform_int(rng, 1, 5);
    const Model model = random_model(rng, d, classes);
    const Mat views = random_matrix(static_cast<Eigen::Index>(n) * B, d, rng.uniform(0.1, 3.0), rng);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = static_cast<int>(rng.index(static_cast<std::size_t>(classes)));
    const DecompositionReport rep = decompose_outputs(forward_batch(model, views), B, labels, classes);
    const double normalized = std::abs(rep.residual) / (1.0 + rep.l_super);
    record(s, normalized, normalized <= s.tolerance && rep.inv_term >= 0.0 && rep.bias_term >= 0.0);
  }
  return s;
}

SuiteResult gradient_suite(const std::string& variant, std::size_t instances, std::uint64_t seed, double step,
                           double tolerance) {
  SuiteResult s;
  s.name = "gradient/" + variant;
  s.tolerance = tolerance;
  Rng rng(Rng(seed).split(variant).next_u64());
  for (std::size_t t = 0; t < instances; ++t) {
    ModelSpec spec;
    spec.input_dim = uniform_int(rng, 2, 10);
    spec.num_classes = uniform_int(rng, 2, 6);
    if (variant == "linear") {
      spec.projector = ProjectorKind::Identity;
    } else if (variant == "inverse_distance") {
      spec.projector = ProjectorKind::InverseDistance;
      spec.num_patterns = uniform_int(rng, 2, 24);
      spec.train_patterns = true;
    } else if (variant == "mlp") {
      spec.encoder = EncoderKind::Mlp;
      spec.encoder_hidden = {uniform_int(rng, 2, 12)};
      spec.embedding_dim = uniform_int(rng, 2, 8);
      spec.projector = ProjectorKind::Mlp;
      spec.projector_hidden = {uniform_int(rng, 2, 12)};
    } else {
      throw InputError("gradient_suite: unknown variant '" + variant + "'");
    }
    Model model = init_model(spec, rng.next_u64());
    // non-zero biases so every parameter enters the check
    for (auto& block : parameter_blocks(model)) {
      if (block.name.find(".b") != std::string::npos) {
        for (double& v : block.values) v = 0.1 * rng.normal();
      }
    }
    const Vec x = random_matrix(spec.input_dim, 1, 1.0, rng).col(0);
    const Vec y = one_hot(static_cast<int>(rng.index(static_cast<std::size_t>(model.output_dim()))), model.output_dim());
    const GradCheckReport rep = grad_check(model, x, y, step, tolerance);
    s.skipped_coordinates += rep.skipped;
    record(s, rep.max_error, rep.passed);
  }
  return s;
}

std::vector<SuiteResult> run_all_checks(std::uint64_t seed) {
  return {lemma_suite(1000, seed + 1), decomposition_suite(200, seed + 2),
          gradient_suite("linear", 50, seed + 3), gradient_suite("inverse_distance", 50, seed + 3),
          gradient_suite("mlp", 50, seed + 3)};
}

}  // namespace memlab
