#include "memlab/checkpoint.hpp"

#include "binary_io.hpp"

namespace memlab {

namespace {

constexpr std::uint32_t kModelMagic = 0x444d4c4d;  // "MLMD"
constexpr std::uint32_t kModelVersion = 1;

enum : std::uint8_t { kLinear = 0, kMlp = 1, kIdentity = 2, kInverseDistance = 3 };

void put_matrix(detail::BinaryWriter& w, const Mat& m) {
  w.put<std::int64_t>(m.rows());
  w.put<std::int64_t>(m.cols());
  w.put_doubles(m.data(), static_cast<std::size_t>(m.size()));
}

Mat get_matrix(detail::BinaryReader& r, const std::string& path) {
  const auto rows = r.get<std::int64_t>();
  const auto cols = r.get<std::int64_t>();
  if (rows < 0 || cols < 0 || rows > (1 << 24) || cols > (1 << 24) || rows * cols > (1ll << 30)) {
    throw DataError(path + ": corrupt matrix shape");
  }
  Mat m(rows, cols);
  r.get_doubles(m.data(), static_cast<std::size_t>(m.size()));
  return m;
}

void put_mlp(detail::BinaryWriter& w, const MlpNetwork& net) {
  w.put<std::uint8_t>(net.activation == Activation::Relu ? 1 : 0);
  w.put<std::uint8_t>(net.activate_output ? 1 : 0);
  w.put<std::uint64_t>(net.layers.size());
  for (const auto& layer : net.layers) {
    put_matrix(w, layer.W);
    w.put<std::int64_t>(layer.b.size());
    w.put_doubles(layer.b.data(), static_cast<std::size_t>(layer.b.size()));
  }
}

MlpNetwork get_mlp(detail::BinaryReader& r, const std::string& path) {
  MlpNetwork net;
  net.activation = r.get<std::uint8_t>() != 0 ? Activation::Relu : Activation::Identity;
  net.activate_output = r.get<std::uint8_t>() != 0;
  const auto count = r.get<std::uint64_t>();
  if (count == 0 || count > 1024) throw DataError(path + ": corrupt layer count");
  for (std::uint64_t l = 0; l < count; ++l) {
    DenseLayer layer;
    layer.W = get_matrix(r, path);
    const auto nb = r.get<std::int64_t>();
    if (nb != layer.W.rows()) throw DataError(path + ": bias length does not match layer");
    layer.b.resize(nb);
    r.get_doubles(layer.b.data(), static_cast<std::size_t>(nb));
    if (!net.layers.empty() && net.layers.back().W.rows() != layer.W.cols()) {
      throw DataError(path + ": layer shapes do not chain");
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

}  // namespace

void save_model(const Model& model, const std::string& path) {
  detail::BinaryWriter w(path);
  w.put(kModelMagic);
  w.put(kModelVersion);
  w.put<std::uint8_t>(model.train_patterns ? 1 : 0);
  if (const auto* lin = std::get_if<LinearEncoder>(&model.encoder)) {
    w.put<std::uint8_t>(kLinear);
    put_matrix(w, lin->W);
  } else {
    w.put<std::uint8_t>(kMlp);
    put_mlp(w, std::get<MlpNetwork>(model.encoder));
  }
  if (std::holds_alternative<IdentityProjector>(model.projector)) {
    w.put<std::uint8_t>(kIdentity);
  } else if (const auto* idp = std::get_if<InverseDistanceProjector>(&model.projector)) {
    w.put<std::uint8_t>(kInverseDistance);
    w.put<std::int32_t>(idp->num_classes);
    w.put(idp->epsilon);
    put_matrix(w, idp->V);
    for (int label : idp->pattern_labels) w.put<std::int32_t>(label);
  } else {
    w.put<std::uint8_t>(kMlp);
    put_mlp(w, std::get<MlpNetwork>(model.projector));
  }
  w.finish();
}

Model load_model(const std::string& path) {
  detail::BinaryReader r(path);
  if (r.get<std::uint32_t>() != kModelMagic) throw DataError(path + ": not a model checkpoint");
  if (r.get<std::uint32_t>() != kModelVersion) throw DataError(path + ": unsupported checkpoint version");
  Model model;
  model.train_patterns = r.get<std::uint8_t>() != 0;
  switch (r.get<std::uint8_t>()) {
    case kLinear:
      model.encoder = LinearEncoder{get_matrix(r, path)};
      break;
    case kMlp:
      model.encoder = get_mlp(r, path);
      break;
    default:
      throw DataError(path + ": unknown encoder kind");
  }
  switch (r.get<std::uint8_t>()) {
    case kIdentity:
      model.projector = IdentityProjector{};
      break;
    case kInverseDistance: {
      InverseDistanceProjector idp;
      idp.num_classes = r.get<std::int32_t>();
      idp.epsilon = r.get<double>();
      idp.V = get_matrix(r, path);
      idp.pattern_labels.resize(static_cast<std::size_t>(idp.V.rows()));
      for (auto& label : idp.pattern_labels) {
        label = r.get<std::int32_t>();
        if (label < 0 || label >= idp.num_classes) throw DataError(path + ": pattern label out of range");
      }
      model.projector = std::move(idp);
      break;
    }
    case kMlp:
      model.projector = get_mlp(r, path);
      break;
    default:
      throw DataError(path + ": unknown projector kind");
  }
  r.expect_end();
  int projector_in = model.embedding_dim();
  if (const auto* idp = std::get_if<InverseDistanceProjector>(&model.projector)) {
    projector_in = static_cast<int>(idp->V.cols());
  } else if (const auto* net = std::get_if<MlpNetwork>(&model.projector)) {
    projector_in = static_cast<int>(net->layers.front().W.cols());
  }
  if (projector_in != model.embedding_dim()) throw DataError(path + ": encoder and projector dimensions disagree");
  return model;
}

}  // namespace memlab
