#include "memlab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace memlab {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const char* type_name(const json& v) { return v.type_name(); }

[[noreturn]] void type_error(const std::string& path, const char* expected, const json& v) {
  throw ConfigError("config key '" + path + "': expected " + expected + ", got " + type_name(v));
}

void read_value(const json& v, const std::string& path, double& out) {
  if (!v.is_number()) type_error(path, "a number", v);
  out = v.get<double>();
}
void read_value(const json& v, const std::string& path, bool& out) {
  if (!v.is_boolean()) type_error(path, "a boolean", v);
  out = v.get<bool>();
}
void read_value(const json& v, const std::string& path, std::string& out) {
  if (!v.is_string()) type_error(path, "a string", v);
  out = v.get<std::string>();
}
void read_value(const json& v, const std::string& path, int& out) {
  if (!v.is_number_integer()) type_error(path, "an integer", v);
  out = v.get<int>();
}
void read_value(const json& v, const std::string& path, std::size_t& out) {
  if (!v.is_number_integer() || v.get<long long>() < 0) type_error(path, "a non-negative integer", v);
  out = v.get<std::size_t>();
}
void read_value(const json& v, const std::string& path, unsigned& out) {
  if (!v.is_number_integer() || v.get<long long>() < 0) type_error(path, "a non-negative integer", v);
  out = v.get<unsigned>();
}
template <typename T>
void read_value(const json& v, const std::string& path, std::vector<T>& out) {
  if (!v.is_array()) type_error(path, "an array", v);
  out.clear();
  for (std::size_t i = 0; i < v.size(); ++i) {
    T item{};
    read_value(v[i], path + "[" + std::to_string(i) + "]", item);
    out.push_back(item);
  }
}
template <typename T>
void read_value(const json& v, const std::string& path, std::optional<T>& out) {
  if (v.is_null()) {
    out.reset();
    return;
  }
  T item{};
  read_value(v, path, item);
  out = item;
}

/// Reads keys of one object and rejects the ones nobody asked for.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) type_error(path_.empty() ? "<root>" : path_, "an object", obj_);
  }

  template <typename T>
  Section& get(const std::string& key, T& out) {
    known_.insert(key);
    if (auto it = obj_.find(key); it != obj_.end()) read_value(*it, join(path_, key), out);
    return *this;
  }

  const json* child(const std::string& key) {
    known_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!known_.count(it.key())) throw ConfigError("unknown config key '" + join(path_, it.key()) + "'");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> known_;
};

void require_one_of(const std::string& path, const std::string& value, std::initializer_list<const char*> options) {
  for (const char* o : options) {
    if (value == o) return;
  }
  std::string msg = "config key '" + path + "': '" + value + "' is not one of";
  for (const char* o : options) msg += std::string(" ") + o;
  throw ConfigError(msg);
}

}  // namespace

void RunConfig::validate() const {
  if (data.d1 <= 0 || data.d1 >= data.d) throw ConfigError("config: need 0 < data.d1 < data.d");
  if (data.classes < 1) throw ConfigError("config: data.classes must be positive");
  if (data.n < static_cast<std::size_t>(data.classes)) throw ConfigError("config: data.n must be at least data.classes");
  if (data.n_test < 2) throw ConfigError("config: data.n_test must be at least 2");
  if (!(data.sigma > 0.0)) throw ConfigError("config: data.sigma must be positive");
  if (labels.classes < 0) throw ConfigError("config: labels.classes must be non-negative");
  if (!(labels.noise_fraction >= 0.0 && labels.noise_fraction <= 1.0)) {
    throw ConfigError("config: labels.noise_fraction must lie in [0, 1]");
  }
  require_one_of("model.encoder", model.encoder, {"linear", "mlp"});
  require_one_of("model.projector", model.projector, {"inverse_distance", "mlp", "identity"});
  if (model.patterns < 1) throw ConfigError("config: model.patterns must be positive");
  require_one_of("augment.kind", augment.kind, {"none", "subspace", "mixup", "iid"});
  require_one_of("augment.label_policy", augment.label_policy, {"preserve", "randomize"});
  if (augment.views < 0) throw ConfigError("config: augment.views must be non-negative");
  if (!(augment.strength >= 0.0)) throw ConfigError("config: augment.strength must be non-negative");
  if (augment.kind == "iid" && augment.iid_subset == 0) throw ConfigError("config: iid augmentation needs augment.iid_subset");
  if (probe.k_neighbors < 1) throw ConfigError("config: probe.k_neighbors must be positive");
  if (probe.decompose_views < 1) throw ConfigError("config: probe.decompose_views must be positive");
  if (probe.invariance_points < 2) throw ConfigError("config: probe.invariance_points must be at least 2");
  optimizer.validate();
  budget.validate();
}

namespace {

RunConfig read_fields(const json& j) {
  RunConfig c;
  Section root(j, "");
  root.get("seed", c.seed).get("threads", c.threads).get("record_wall_time", c.record_wall_time);
  if (const json* s = root.child("data")) {
    Section(*s, "data")
        .get("n", c.data.n)
        .get("n_test", c.data.n_test)
        .get("d", c.data.d)
        .get("d1", c.data.d1)
        .get("classes", c.data.classes)
        .get("sigma", c.data.sigma)
        .get("signal_variance_ratio", c.data.signal_variance_ratio)
        .finish();
  }
  if (const json* s = root.child("labels")) {
    Section(*s, "labels")
        .get("classes", c.labels.classes)
        .get("noise_fraction", c.labels.noise_fraction)
        .get("per_sample", c.labels.per_sample)
        .finish();
  }
  if (const json* s = root.child("model")) {
    Section(*s, "model")
        .get("encoder", c.model.encoder)
        .get("encoder_hidden", c.model.encoder_hidden)
        .get("embedding_dim", c.model.embedding_dim)
        .get("projector", c.model.projector)
        .get("patterns", c.model.patterns)
        .get("projector_hidden", c.model.projector_hidden)
        .get("train_patterns", c.model.train_patterns)
        .get("epsilon", c.model.epsilon)
        .finish();
  }
  if (const json* s = root.child("augment")) {
    Section(*s, "augment")
        .get("kind", c.augment.kind)
        .get("strength", c.augment.strength)
        .get("views", c.augment.views)
        .get("label_policy", c.augment.label_policy)
        .get("iid_subset", c.augment.iid_subset)
        .get("mixup_alpha_lo", c.augment.mixup_alpha_lo)
        .get("mixup_alpha_hi", c.augment.mixup_alpha_hi)
        .finish();
  }
  if (const json* s = root.child("optimizer")) {
    Section(*s, "optimizer")
        .get("learning_rate", c.optimizer.learning_rate)
        .get("beta1", c.optimizer.beta1)
        .get("beta2", c.optimizer.beta2)
        .get("adam_epsilon", c.optimizer.adam_epsilon)
        .get("batch_size", c.optimizer.batch_size)
        .get("weight_decay", c.optimizer.weight_decay)
        .finish();
  }
  if (const json* s = root.child("budget")) {
    Section(*s, "budget")
        .get("max_epochs", c.budget.max_epochs)
        .get("max_steps", c.budget.max_steps)
        .get("loss_target", c.budget.loss_target)
        .finish();
  }
  if (const json* s = root.child("probe")) {
    Section(*s, "probe")
        .get("k_neighbors", c.probe.k_neighbors)
        .get("margin", c.probe.margin)
        .get("schedule", c.probe.schedule)
        .get("invariance_pairs", c.probe.invariance_pairs)
        .get("invariance_cross_pairs", c.probe.invariance_cross_pairs)
        .get("invariance_points", c.probe.invariance_points)
        .get("invariance_strength", c.probe.invariance_strength)
        .get("decompose_views", c.probe.decompose_views)
        .get("layers", c.probe.layers)
        .finish();
  }
  if (const json* s = root.child("sweep")) {
    Section sec(*s, "sweep");
    sec.get("name", c.sweep.name).get("axis", c.sweep.axis).get("seeds", c.sweep.seeds);
    if (const json* v = sec.child("values")) {
      if (!v->is_array()) type_error("sweep.values", "an array", *v);
      c.sweep.values.assign(v->begin(), v->end());
    }
    if (const json* arms = sec.child("arms")) {
      if (!arms->is_array()) type_error("sweep.arms", "an array", *arms);
      for (std::size_t i = 0; i < arms->size(); ++i) {
        const std::string path = "sweep.arms[" + std::to_string(i) + "]";
        SweepArm arm;
        Section a((*arms)[i], path);
        a.get("name", arm.name);
        if (const json* o = a.child("overrides")) {
          if (!o->is_object()) type_error(path + ".overrides", "an object", *o);
          arm.overrides = *o;
        }
        a.finish();
        c.sweep.arms.push_back(std::move(arm));
      }
    }
    sec.finish();
  }
  if (const json* s = root.child("grid")) {
    Section(*s, "grid")
        .get("n_values", c.grid.n_values)
        .get("B_values", c.grid.b_values)
        .get("seeds", c.grid.seeds)
        .finish();
  }
  root.finish();
  return c;
}

}  // namespace

RunConfig config_from_json(const json& j) {
  RunConfig c = read_fields(j);
  c.validate();
  return c;
}

json config_to_json(const RunConfig& c) {
  auto opt = [](const auto& o) -> json { return o ? json(*o) : json(nullptr); };
  json arms = json::array();
  for (const auto& a : c.sweep.arms) arms.push_back({{"name", a.name}, {"overrides", a.overrides}});
  return {
      {"seed", c.seed},
      {"threads", c.threads},
      {"record_wall_time", c.record_wall_time},
      {"data",
       {{"n", c.data.n},
        {"n_test", c.data.n_test},
        {"d", c.data.d},
        {"d1", c.data.d1},
        {"classes", c.data.classes},
        {"sigma", c.data.sigma},
        {"signal_variance_ratio", c.data.signal_variance_ratio}}},
      {"labels",
       {{"classes", c.labels.classes}, {"noise_fraction", c.labels.noise_fraction}, {"per_sample", c.labels.per_sample}}},
      {"model",
       {{"encoder", c.model.encoder},
        {"encoder_hidden", c.model.encoder_hidden},
        {"embedding_dim", c.model.embedding_dim},
        {"projector", c.model.projector},
        {"patterns", c.model.patterns},
        {"projector_hidden", c.model.projector_hidden},
        {"train_patterns", c.model.train_patterns},
        {"epsilon", c.model.epsilon}}},
      {"augment",
       {{"kind", c.augment.kind},
        {"strength", c.augment.strength},
        {"views", c.augment.views},
        {"label_policy", c.augment.label_policy},
        {"iid_subset", c.augment.iid_subset},
        {"mixup_alpha_lo", c.augment.mixup_alpha_lo},
        {"mixup_alpha_hi", c.augment.mixup_alpha_hi}}},
      {"optimizer",
       {{"learning_rate", c.optimizer.learning_rate},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"adam_epsilon", c.optimizer.adam_epsilon},
        {"batch_size", c.optimizer.batch_size},
        {"weight_decay", c.optimizer.weight_decay}}},
      {"budget",
       {{"max_epochs", opt(c.budget.max_epochs)},
        {"max_steps", opt(c.budget.max_steps)},
        {"loss_target", opt(c.budget.loss_target)}}},
      {"probe",
       {{"k_neighbors", c.probe.k_neighbors},
        {"margin", c.probe.margin},
        {"schedule", c.probe.schedule},
        {"invariance_pairs", c.probe.invariance_pairs},
        {"invariance_cross_pairs", c.probe.invariance_cross_pairs},
        {"invariance_points", c.probe.invariance_points},
        {"invariance_strength", c.probe.invariance_strength},
        {"decompose_views", c.probe.decompose_views},
        {"layers", c.probe.layers}}},
      {"sweep",
       {{"name", c.sweep.name},
        {"axis", c.sweep.axis},
        {"values", c.sweep.values},
        {"seeds", c.sweep.seeds},
        {"arms", arms}}},
      {"grid", {{"n_values", c.grid.n_values}, {"B_values", c.grid.b_values}, {"seeds", c.grid.seeds}}},
  };
}

RunConfig parse_config_text(const std::string& text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return config_from_json(json::object());
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

RunConfig with_override(const RunConfig& cfg, const std::string& key, const json& value) {
  json j = config_to_json(cfg);
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("malformed config key '" + key + "'");
    if (dot == std::string::npos) {
      if (!node->is_object() || !node->contains(part)) throw ConfigError("unknown config key '" + key + "'");
      (*node)[part] = value;
      break;
    }
    if (!node->is_object() || !node->contains(part)) throw ConfigError("unknown config key '" + key + "'");
    node = &(*node)[part];
    start = dot + 1;
  }
  return read_fields(j);
}

RunConfig apply_set(const RunConfig& cfg, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  return with_override(cfg, key, value);
}

}  // namespace memlab
