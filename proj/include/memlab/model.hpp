#pragma once

#include "memlab/common.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace memlab {

/// h(x) = W x
struct LinearEncoder {
  Mat W;  ///< embedding_dim x input_dim
};

/// g(z) = sum_i w_i l_i with w_i proportional to 1 / max(|z - v_i|, epsilon).
/// The labels l_i are fixed one-hot vectors and never receive gradients.
struct InverseDistanceProjector {
  Mat V;                            ///< num_patterns x embedding_dim
  std::vector<int> pattern_labels;  ///< class index of l_i
  int num_classes = 0;
  double epsilon = 1e-8;

  [[nodiscard]] int num_patterns() const { return static_cast<int>(V.rows()); }
};

enum class Activation { Identity, Relu };

struct DenseLayer {
  Mat W;  ///< out x in
  Vec b;
};

struct MlpNetwork {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::Relu;
  /// Apply the activation after the last layer as well.
  bool activate_output = false;

  [[nodiscard]] std::vector<int> layer_sizes() const;
};

struct IdentityProjector {};

using Encoder = std::variant<LinearEncoder, MlpNetwork>;
using Projector = std::variant<IdentityProjector, InverseDistanceProjector, MlpNetwork>;

struct Model {
  Encoder encoder;
  Projector projector;
  /// Whether the projector patterns V are updated by the optimizer.
  bool train_patterns = true;

  [[nodiscard]] int input_dim() const;
  [[nodiscard]] int embedding_dim() const;
  [[nodiscard]] int output_dim() const;
  /// Number of layer boundaries exposed by forward_layers.
  [[nodiscard]] int num_layers() const;
  /// Boundary index of the encoder output.
  [[nodiscard]] int embedding_layer() const;
};

/// Per-layer outputs for one input, ordered input to output. The raw input
/// is not included; the last entry is the network output.
struct LayerActivations {
  std::vector<Vec> layers;
};

/// A view of one parameter block in storage order.
struct ParamBlock {
  std::string name;
  std::span<double> values;
  bool trainable = true;
};

/// Gradient record aligned with parameter_blocks().
struct Gradients {
  std::vector<Vec> blocks;
};

std::vector<ParamBlock> parameter_blocks(Model& model);
std::vector<std::string> parameter_names(const Model& model);
Gradients zero_gradients(const Model& model);

Vec linear_forward(const LinearEncoder& enc, const Eigen::Ref<const Vec>& x);
Vec idp_forward(const InverseDistanceProjector& proj, const Eigen::Ref<const Vec>& z);
LayerActivations mlp_forward(const MlpNetwork& net, const Eigen::Ref<const Vec>& x);

LayerActivations forward_layers(const Model& model, const Eigen::Ref<const Vec>& x);
Vec forward(const Model& model, const Eigen::Ref<const Vec>& x);

/// Network outputs for every row of X.
Mat forward_batch(const Model& model, const Mat& X);
/// Activations at one layer boundary for every row of X; stops early.
Mat layer_batch(const Model& model, const Mat& X, int layer);

/// Mean over rows of |f(x) - y|^2 and its gradient.
double loss_and_gradient(const Model& model, const Mat& X, const Mat& Y, Gradients& grads);

/// Gradient of |f(x) - y|^2 for a single example.
Gradients backward(const Model& model, const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y);

enum class EncoderKind { Linear, Mlp };
enum class ProjectorKind { Identity, InverseDistance, Mlp };

struct ModelSpec {
  EncoderKind encoder = EncoderKind::Linear;
  std::vector<int> encoder_hidden;
  int input_dim = 32;
  int embedding_dim = 0;  ///< 0 means input_dim
  ProjectorKind projector = ProjectorKind::InverseDistance;
  int num_patterns = 1024;
  std::vector<int> projector_hidden = {512};
  int num_classes = 10;
  bool train_patterns = true;
  double epsilon = 1e-8;
};

/// Linear weights ~ N(0, 1/input_dim); patterns ~ N(0, I); pattern labels
/// uniform over classes; dense weights ~ N(0, 1/fan_in) with zero biases.
Model init_model(const ModelSpec& spec, std::uint64_t seed);

struct GradCheckReport {
  double max_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  bool passed = true;
  std::string worst_block;
  std::size_t worst_index = 0;
};

/// Compares `analytic` (or the model's own backward when empty) with central
/// differences of |f(x) - y|^2. The error per coordinate is relative once
/// max(|analytic|, |numeric|) exceeds 1e-6 and absolute below that.
/// Coordinates whose perturbation crosses a rectifier kink, or that move an
/// embedding within 10 * step of a pattern, are skipped.
GradCheckReport grad_check(const Model& model, const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y,
                           double step, double tolerance, const Gradients* analytic = nullptr);

}  // namespace memlab
