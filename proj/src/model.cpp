#include "memlab/model.hpp"

#include "memlab/rng.hpp"

#include <algorithm>
#include <cmath>

namespace memlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::span<double> span_of(Mat& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> span_of(Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

void activate(Mat& a, Activation act) {
  if (act == Activation::Relu) a = a.cwiseMax(0.0);
}

bool activated(const MlpNetwork& net, std::size_t layer) {
  return layer + 1 < net.layers.size() || net.activate_output;
}

struct MlpCache {
  std::vector<Mat> inputs;  ///< input of each layer
  std::vector<Mat> pre;     ///< pre-activation of each layer
  Mat output;
};

MlpCache mlp_forward_cached(const MlpNetwork& net, const Mat& X) {
  MlpCache cache;
  Mat a = X;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    if (a.cols() != layer.W.cols()) throw InputError("mlp: dimension mismatch at layer " + std::to_string(l));
    cache.inputs.push_back(a);
    Mat pre = a * layer.W.transpose();
    pre.rowwise() += layer.b.transpose();
    cache.pre.push_back(pre);
    a = pre;
    if (activated(net, l)) activate(a, net.activation);
  }
  cache.output = std::move(a);
  return cache;
}

/// Backpropagates dOut through the cached pass; writes layer gradients at
/// grads.blocks[offset...] (W then b per layer) and returns dInput.
Mat mlp_backward(const MlpNetwork& net, const MlpCache& cache, Mat d_out, Gradients& grads, std::size_t offset) {
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    if (activated(net, l) && net.activation == Activation::Relu) {
      d_out = d_out.cwiseProduct((cache.pre[l].array() > 0.0).cast<double>().matrix());
    }
    Mat dW = d_out.transpose() * cache.inputs[l];
    Vec db = d_out.colwise().sum().transpose();
    grads.blocks[offset + 2 * l] += Eigen::Map<const Vec>(dW.data(), dW.size());
    grads.blocks[offset + 2 * l + 1] += db;
    d_out = d_out * net.layers[l].W;
  }
  return d_out;
}

/// Forward pass of the inverse-distance projector for one embedding. When
/// `delta` is given (dLoss/dOutput), accumulates dV and returns dLoss/dz.
struct IdpScratch {
  Mat diff;  ///< v_i - z
  Vec r;
  Vec u;
};

Vec idp_eval(const InverseDistanceProjector& proj, const Eigen::Ref<const Eigen::RowVectorXd>& z, IdpScratch& s) {
  const Eigen::Index k = proj.V.rows();
  s.diff = proj.V.rowwise() - z;
  s.r = s.diff.rowwise().norm();
  s.u.resize(k);
  double total = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    s.u[i] = 1.0 / std::max(s.r[i], proj.epsilon);
    total += s.u[i];
  }
  Vec g = Vec::Zero(proj.num_classes);
  for (Eigen::Index i = 0; i < k; ++i) g[proj.pattern_labels[static_cast<std::size_t>(i)]] += s.u[i];
  return g / total;
}

/// Batched evaluation. Squared distances come from |z|^2 + |v|^2 - 2 z.v;
/// pairs closer than a relative threshold are recomputed from explicit
/// differences and kept out of the matrix products in the backward pass.
struct IdpBatch {
  std::vector<double, Eigen::aligned_allocator<double>> r_store, u_store, q_store;
  Eigen::Map<Mat> R{nullptr, 0, 0};  ///< floored distances, rows = samples
  Eigen::Map<Mat> U{nullptr, 0, 0};  ///< 1 / R
  Eigen::Map<Mat> Q{nullptr, 0, 0};
  Vec S;  ///< row sums of U

  void reserve(Eigen::Index rows, Eigen::Index cols) {
    const auto size = static_cast<std::size_t>(rows * cols);
    // storage only grows, so repeated batches of varying size do not reallocate
    for (auto* store : {&r_store, &u_store, &q_store}) {
      if (store->size() < size) store->resize(size);
    }
    new (&R) Eigen::Map<Mat>(r_store.data(), rows, cols);
    new (&U) Eigen::Map<Mat>(u_store.data(), rows, cols);
    new (&Q) Eigen::Map<Mat>(q_store.data(), rows, cols);
  }
  Vec zn;
  Mat out;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> near;
};

constexpr double kNearRelative = 1e-3;

IdpBatch& idp_workspace() {
  thread_local IdpBatch work;
  return work;
}

void idp_forward_batch(const InverseDistanceProjector& proj, const Mat& Z, IdpBatch& c) {
  const Eigen::Index nb = Z.rows();
  const Eigen::Index k = proj.V.rows();
  const Vec vn = proj.V.rowwise().squaredNorm();
  c.zn = Z.rowwise().squaredNorm();
  c.reserve(nb, k);
  c.S.resize(nb);
  c.R.noalias() = -2.0 * (Z * proj.V.transpose());
  c.R.array().rowwise() += vn.transpose().array();
  c.R.array().colwise() += c.zn.array();
  c.near.clear();
  for (Eigen::Index b = 0; b < nb; ++b) {
    for (Eigen::Index i = 0; i < k; ++i) {
      if (c.R(b, i) < kNearRelative * (c.zn[b] + vn[i])) c.near.emplace_back(b, i);
    }
  }
  for (const auto& [b, i] : c.near) c.R(b, i) = (Z.row(b) - proj.V.row(i)).squaredNorm();
  c.R.array() = c.R.array().max(0.0).sqrt().max(proj.epsilon);
  c.U.array() = c.R.array().inverse();
  c.S = c.U.rowwise().sum();
  c.out = Mat::Zero(nb, proj.num_classes);
  for (Eigen::Index b = 0; b < nb; ++b) {
    const double* u = c.U.row(b).data();
    double* o = c.out.row(b).data();
    for (Eigen::Index i = 0; i < k; ++i) o[proj.pattern_labels[static_cast<std::size_t>(i)]] += u[i];
    c.out.row(b) /= c.S[b];
  }
}

void idp_backward_batch(const InverseDistanceProjector& proj, const Mat& Z, IdpBatch& c, const Mat& delta,
                        Mat& dZ, Eigen::Ref<Mat> dV) {
  const Eigen::Index nb = Z.rows();
  const Eigen::Index k = proj.V.rows();
  auto& Q = c.Q;
  for (Eigen::Index b = 0; b < nb; ++b) {
    const double delta_dot_g = delta.row(b).dot(c.out.row(b));
    const double* r = c.R.row(b).data();
    const double* u = c.U.row(b).data();
    const double* db = delta.row(b).data();
    double* q = Q.row(b).data();
    const double inv_s = 1.0 / c.S[b];
    for (Eigen::Index i = 0; i < k; ++i) {
      // floored distances are locally constant
      const double coeff = (db[proj.pattern_labels[static_cast<std::size_t>(i)]] - delta_dot_g) * inv_s;
      q[i] = r[i] > proj.epsilon ? coeff * u[i] * u[i] * u[i] : 0.0;
    }
  }
  // exact differences for close pairs
  dZ = Mat::Zero(nb, Z.cols());
  for (const auto& [b, i] : c.near) {
    const double q = Q(b, i);
    if (q == 0.0) continue;
    const Eigen::RowVectorXd diff = proj.V.row(i) - Z.row(b);
    dZ.row(b) += q * diff;
    dV.row(i) -= q * diff;
    Q(b, i) = 0.0;
  }
  const Vec row_sum = Q.rowwise().sum();
  const Vec col_sum = Q.colwise().sum().transpose();
  dZ.noalias() += Q * proj.V;
  dZ -= row_sum.asDiagonal() * Z;
  dV.noalias() += Q.transpose() * Z;
  dV -= col_sum.asDiagonal() * proj.V;
}

int encoder_layers(const Encoder& enc) {
  return std::visit(overloaded{[](const LinearEncoder&) { return 1; },
                               [](const MlpNetwork& net) { return static_cast<int>(net.layers.size()); }},
                    enc);
}

int projector_layers(const Projector& proj) {
  return std::visit(overloaded{[](const IdentityProjector&) { return 1; },
                               [](const InverseDistanceProjector&) { return 1; },
                               [](const MlpNetwork& net) { return static_cast<int>(net.layers.size()); }},
                    proj);
}

Mat encode_batch(const Encoder& enc, const Mat& X) {
  return std::visit(overloaded{[&](const LinearEncoder& lin) -> Mat {
                                 if (X.cols() != lin.W.cols()) throw InputError("linear encoder: dimension mismatch");
                                 return X * lin.W.transpose();
                               },
                               [&](const MlpNetwork& net) -> Mat { return mlp_forward_cached(net, X).output; }},
                    enc);
}

Mat project_batch(const Projector& proj, const Mat& Z) {
  return std::visit(overloaded{[&](const IdentityProjector&) -> Mat { return Z; },
                               [&](const InverseDistanceProjector& idp) -> Mat {
                                 if (Z.cols() != idp.V.cols()) throw InputError("projector: dimension mismatch");
                                 IdpBatch& work = idp_workspace();
                                 idp_forward_batch(idp, Z, work);
                                 return work.out;
                               },
                               [&](const MlpNetwork& net) -> Mat { return mlp_forward_cached(net, Z).output; }},
                    proj);
}

}  // namespace

std::vector<int> MlpNetwork::layer_sizes() const {
  std::vector<int> sizes;
  if (layers.empty()) return sizes;
  sizes.push_back(static_cast<int>(layers.front().W.cols()));
  for (const auto& l : layers) sizes.push_back(static_cast<int>(l.W.rows()));
  return sizes;
}

int Model::input_dim() const {
  return std::visit(overloaded{[](const LinearEncoder& e) { return static_cast<int>(e.W.cols()); },
                               [](const MlpNetwork& n) { return static_cast<int>(n.layers.front().W.cols()); }},
                    encoder);
}

int Model::embedding_dim() const {
  return std::visit(overloaded{[](const LinearEncoder& e) { return static_cast<int>(e.W.rows()); },
                               [](const MlpNetwork& n) { return static_cast<int>(n.layers.back().W.rows()); }},
                    encoder);
}

int Model::output_dim() const {
  return std::visit(overloaded{[&](const IdentityProjector&) { return embedding_dim(); },
                               [](const InverseDistanceProjector& p) { return p.num_classes; },
                               [](const MlpNetwork& n) { return static_cast<int>(n.layers.back().W.rows()); }},
                    projector);
}

int Model::num_layers() const { return encoder_layers(encoder) + projector_layers(projector); }
int Model::embedding_layer() const { return encoder_layers(encoder) - 1; }

std::vector<ParamBlock> parameter_blocks(Model& model) {
  std::vector<ParamBlock> blocks;
  auto add_mlp = [&](MlpNetwork& net, const std::string& prefix) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      blocks.push_back({prefix + ".W" + std::to_string(l), span_of(net.layers[l].W), true});
      blocks.push_back({prefix + ".b" + std::to_string(l), span_of(net.layers[l].b), true});
    }
  };
  std::visit(overloaded{[&](LinearEncoder& e) { blocks.push_back({"encoder.W", span_of(e.W), true}); },
                        [&](MlpNetwork& n) { add_mlp(n, "encoder"); }},
             model.encoder);
  std::visit(overloaded{[](IdentityProjector&) {},
                        [&](InverseDistanceProjector& p) {
                          blocks.push_back({"projector.V", span_of(p.V), model.train_patterns});
                        },
                        [&](MlpNetwork& n) { add_mlp(n, "projector"); }},
             model.projector);
  return blocks;
}

std::vector<std::string> parameter_names(const Model& model) {
  Model copy = model;
  std::vector<std::string> names;
  for (const auto& b : parameter_blocks(copy)) names.push_back(b.name);
  return names;
}

Gradients zero_gradients(const Model& model) {
  Model copy = model;
  Gradients g;
  for (const auto& b : parameter_blocks(copy)) g.blocks.push_back(Vec::Zero(static_cast<Eigen::Index>(b.values.size())));
  return g;
}

Vec linear_forward(const LinearEncoder& enc, const Eigen::Ref<const Vec>& x) {
  if (x.size() != enc.W.cols()) throw InputError("linear_forward: dimension mismatch");
  return enc.W * x;
}

Vec idp_forward(const InverseDistanceProjector& proj, const Eigen::Ref<const Vec>& z) {
  if (z.size() != proj.V.cols()) throw InputError("idp_forward: dimension mismatch");
  IdpScratch s;
  return idp_eval(proj, z.transpose(), s);
}

LayerActivations mlp_forward(const MlpNetwork& net, const Eigen::Ref<const Vec>& x) {
  LayerActivations acts;
  Vec a = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    if (a.size() != layer.W.cols()) throw InputError("mlp_forward: dimension mismatch at layer " + std::to_string(l));
    Vec next = layer.W * a + layer.b;
    if (activated(net, l) && net.activation == Activation::Relu) next = next.cwiseMax(0.0);
    acts.layers.push_back(next);
    a = std::move(next);
  }
  return acts;
}

LayerActivations forward_layers(const Model& model, const Eigen::Ref<const Vec>& x) {
  LayerActivations acts = std::visit(
      overloaded{[&](const LinearEncoder& e) { return LayerActivations{{linear_forward(e, x)}}; },
                 [&](const MlpNetwork& n) { return mlp_forward(n, x); }},
      model.encoder);
  const Vec z = acts.layers.back();
  std::visit(overloaded{[&](const IdentityProjector&) { acts.layers.push_back(z); },
                        [&](const InverseDistanceProjector& p) { acts.layers.push_back(idp_forward(p, z)); },
                        [&](const MlpNetwork& n) {
                          for (auto& a : mlp_forward(n, z).layers) acts.layers.push_back(std::move(a));
                        }},
             model.projector);
  return acts;
}

Vec forward(const Model& model, const Eigen::Ref<const Vec>& x) { return forward_layers(model, x).layers.back(); }

Mat forward_batch(const Model& model, const Mat& X) { return project_batch(model.projector, encode_batch(model.encoder, X)); }

Mat layer_batch(const Model& model, const Mat& X, int layer) {
  if (layer < 0 || layer >= model.num_layers()) throw InputError("layer_batch: layer index out of range");
  const int enc_layers = encoder_layers(model.encoder);
  Mat a = X;
  if (const auto* lin = std::get_if<LinearEncoder>(&model.encoder)) {
    a = encode_batch(*lin, X);
  } else {
    const auto& net = std::get<MlpNetwork>(model.encoder);
    MlpNetwork head = net;
    head.layers.resize(static_cast<std::size_t>(std::min(layer + 1, enc_layers)));
    head.activate_output = layer + 1 < enc_layers || net.activate_output;
    a = mlp_forward_cached(head, X).output;
  }
  if (layer < enc_layers) return a;
  if (const auto* net = std::get_if<MlpNetwork>(&model.projector)) {
    MlpNetwork head = *net;
    const int keep = layer - enc_layers + 1;
    head.layers.resize(static_cast<std::size_t>(keep));
    head.activate_output = keep < static_cast<int>(net->layers.size()) || net->activate_output;
    return mlp_forward_cached(head, a).output;
  }
  return project_batch(model.projector, a);
}

double loss_and_gradient(const Model& model, const Mat& X, const Mat& Y, Gradients& grads) {
  if (X.rows() != Y.rows() || X.rows() == 0) throw InputError("loss_and_gradient: batch shape mismatch");
  if (grads.blocks.empty()) grads = zero_gradients(model);
  const auto nb = static_cast<double>(X.rows());

  // encoder forward
  MlpCache enc_cache;
  Mat Z;
  std::size_t enc_blocks = 1;
  if (const auto* lin = std::get_if<LinearEncoder>(&model.encoder)) {
    if (X.cols() != lin->W.cols()) throw InputError("linear encoder: dimension mismatch");
    Z = X * lin->W.transpose();
  } else {
    const auto& net = std::get<MlpNetwork>(model.encoder);
    enc_cache = mlp_forward_cached(net, X);
    Z = enc_cache.output;
    enc_blocks = 2 * net.layers.size();
  }

  // projector forward + backward
  double loss = 0.0;
  Mat dZ(Z.rows(), Z.cols());
  std::visit(overloaded{[&](const IdentityProjector&) {
                          if (Y.cols() != Z.cols()) throw InputError("loss_and_gradient: target dimension mismatch");
                          const Mat err = Z - Y;
                          loss = err.squaredNorm() / nb;
                          dZ = (2.0 / nb) * err;
                        },
                        [&](const InverseDistanceProjector& idp) {
                          if (Y.cols() != idp.num_classes) throw InputError("loss_and_gradient: target dimension mismatch");
                          if (Z.cols() != idp.V.cols()) throw InputError("projector: dimension mismatch");
                          Eigen::Map<Mat> dV(grads.blocks[enc_blocks].data(), idp.V.rows(), idp.V.cols());
                          IdpBatch& work = idp_workspace();
                          idp_forward_batch(idp, Z, work);
                          const Mat err = work.out - Y;
                          loss = err.squaredNorm();
                          idp_backward_batch(idp, Z, work, (2.0 / nb) * err, dZ, dV);
                          loss /= nb;
                        },
                        [&](const MlpNetwork& net) {
                          const MlpCache cache = mlp_forward_cached(net, Z);
                          if (Y.cols() != cache.output.cols()) throw InputError("loss_and_gradient: target dimension mismatch");
                          const Mat err = cache.output - Y;
                          loss = err.squaredNorm() / nb;
                          dZ = mlp_backward(net, cache, (2.0 / nb) * err, grads, enc_blocks);
                        }},
             model.projector);

  // encoder backward
  if (std::holds_alternative<LinearEncoder>(model.encoder)) {
    const Mat dW = dZ.transpose() * X;
    grads.blocks[0] += Eigen::Map<const Vec>(dW.data(), dW.size());
  } else {
    mlp_backward(std::get<MlpNetwork>(model.encoder), enc_cache, dZ, grads, 0);
  }
  return loss;
}

Gradients backward(const Model& model, const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y) {
  Gradients grads = zero_gradients(model);
  loss_and_gradient(model, Mat(x.transpose()), Mat(y.transpose()), grads);
  return grads;
}

Model init_model(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.input_dim < 1) throw ConfigError("init_model: input_dim must be positive");
  if (spec.num_classes < 1) throw ConfigError("init_model: need at least one class");
  const Rng root(seed);
  const int m = spec.embedding_dim > 0 ? spec.embedding_dim : spec.input_dim;

  auto make_mlp = [](const std::vector<int>& sizes, Rng rng) {
    MlpNetwork net;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      if (sizes[l] < 1 || sizes[l + 1] < 1) throw ConfigError("init_model: layer widths must be positive");
      DenseLayer layer;
      layer.W.resize(sizes[l + 1], sizes[l]);
      const double scale = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
      for (Eigen::Index i = 0; i < layer.W.size(); ++i) layer.W.data()[i] = scale * rng.normal();
      layer.b = Vec::Zero(sizes[l + 1]);
      net.layers.push_back(std::move(layer));
    }
    return net;
  };

  Model model;
  model.train_patterns = spec.train_patterns;
  if (spec.encoder == EncoderKind::Linear) {
    if (!spec.encoder_hidden.empty()) throw ConfigError("init_model: a linear encoder has no hidden layers");
    Rng rng = root.split("encoder");
    LinearEncoder enc;
    enc.W.resize(m, spec.input_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.input_dim));
    for (Eigen::Index i = 0; i < enc.W.size(); ++i) enc.W.data()[i] = scale * rng.normal();
    model.encoder = std::move(enc);
  } else {
    std::vector<int> sizes{spec.input_dim};
    sizes.insert(sizes.end(), spec.encoder_hidden.begin(), spec.encoder_hidden.end());
    sizes.push_back(m);
    model.encoder = make_mlp(sizes, root.split("encoder"));
  }

  switch (spec.projector) {
    case ProjectorKind::Identity:
      model.projector = IdentityProjector{};
      break;
    case ProjectorKind::InverseDistance: {
      if (spec.num_patterns < 1) throw ConfigError("init_model: need at least one pattern");
      if (!(spec.epsilon > 0.0)) throw ConfigError("init_model: epsilon must be positive");
      InverseDistanceProjector proj;
      proj.num_classes = spec.num_classes;
      proj.epsilon = spec.epsilon;
      proj.V.resize(spec.num_patterns, m);
      Rng vrng = root.split("patterns");
      for (Eigen::Index i = 0; i < proj.V.size(); ++i) proj.V.data()[i] = vrng.normal();
      Rng lrng = root.split("pattern_labels");
      proj.pattern_labels.resize(static_cast<std::size_t>(spec.num_patterns));
      for (auto& l : proj.pattern_labels) l = static_cast<int>(lrng.index(static_cast<std::size_t>(spec.num_classes)));
      model.projector = std::move(proj);
      break;
    }
    case ProjectorKind::Mlp: {
      std::vector<int> sizes{m};
      sizes.insert(sizes.end(), spec.projector_hidden.begin(), spec.projector_hidden.end());
      sizes.push_back(spec.num_classes);
      model.projector = make_mlp(sizes, root.split("projector"));
      break;
    }
  }
  return model;
}

namespace {

/// Signs of every rectifier pre-activation plus, for the inverse-distance
/// projector, the distance of the embedding to its closest pattern.
struct KinkState {
  std::vector<bool> signs;
  double min_pattern_distance = INFINITY;
};

KinkState kink_state(const Model& model, const Vec& x) {
  KinkState st;
  auto record = [&](const MlpNetwork& net, const Vec& in) {
    Vec a = in;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      Vec pre = net.layers[l].W * a + net.layers[l].b;
      if (activated(net, l) && net.activation == Activation::Relu) {
        for (Eigen::Index i = 0; i < pre.size(); ++i) st.signs.push_back(pre[i] > 0.0);
        pre = pre.cwiseMax(0.0);
      }
      a = pre;
    }
    return a;
  };
  Vec z = std::visit(overloaded{[&](const LinearEncoder& e) -> Vec { return e.W * x; },
                                [&](const MlpNetwork& n) -> Vec { return record(n, x); }},
                     model.encoder);
  std::visit(overloaded{[](const IdentityProjector&) {},
                        [&](const InverseDistanceProjector& p) {
                          st.min_pattern_distance = (p.V.rowwise() - z.transpose()).rowwise().norm().minCoeff();
                        },
                        [&](const MlpNetwork& n) { record(n, z); }},
             model.projector);
  return st;
}

}  // namespace

GradCheckReport grad_check(const Model& model, const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y,
                           double step, double tolerance, const Gradients* analytic) {
  if (!(step > 0.0)) throw InputError("grad_check: step must be positive");
  const Gradients own = analytic ? Gradients{} : backward(model, x, y);
  const Gradients& grads = analytic ? *analytic : own;
  const Vec xv = x;
  const Vec yv = y;
  const KinkState base = kink_state(model, xv);

  Model probe = model;
  auto blocks = parameter_blocks(probe);
  GradCheckReport report;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto values = blocks[b].values;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const KinkState plus_state = kink_state(probe, xv);
      const double plus = (forward(probe, xv) - yv).squaredNorm();
      values[i] = saved - step;
      const KinkState minus_state = kink_state(probe, xv);
      const double minus = (forward(probe, xv) - yv).squaredNorm();
      values[i] = saved;

      const double guard = 10.0 * step;
      if (plus_state.signs != base.signs || minus_state.signs != base.signs ||
          std::min({base.min_pattern_distance, plus_state.min_pattern_distance, minus_state.min_pattern_distance}) < guard) {
        ++report.skipped;
        continue;
      }
      const double numeric = (plus - minus) / (2.0 * step);
      const double exact = grads.blocks[b][static_cast<Eigen::Index>(i)];
      const double scale = std::max(std::abs(exact), std::abs(numeric));
      const double err = scale > 1e-6 ? std::abs(exact - numeric) / scale : std::abs(exact - numeric);
      ++report.checked;
      if (err > report.max_error) {
        report.max_error = err;
        report.worst_block = blocks[b].name;
        report.worst_index = i;
      }
    }
  }
  report.passed = report.max_error <= tolerance;
  return report;
}

}  // namespace memlab
