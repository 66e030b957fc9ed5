#include "config.hpp"

#include <fstream>

#include "countflow/io.hpp"

namespace countflow::cli {

Json default_config() {
  const auto place = ConditionalTaskSpec::place_field_default();
  Json cfg = {
      {"format_version", kFormatVersion},
      {"seed", 0},
      {"threads", 1},
      {"paths",
       {{"out", "out"},
        {"source", ""},
        {"target", ""},
        {"checkpoint", ""},
        {"resume", ""},
        {"samples", ""},
        {"reference", ""},
        {"reference2", ""}}},
      {"data",
       {{"task", "mixture"},
        {"n", 2000},
        {"source_lo", nullptr},
        {"source_hi", nullptr},
        {"mixture",
         {{"weights", {0.5, 0.5}},
          {"means", {{60.0, 5.0}, {60.0, 40.0}}},
          {"dispersion", {{20.0, 20.0}, {20.0, 20.0}}}}},
        {"conditional",
         {{"class_means", place.class_means},
          {"dispersion", place.dispersion},
          {"shared_factor_var", place.shared_factor_var},
          {"shared_coords", place.shared_coords},
          {"n_per_class", 500},
          {"n_holdout_per_class", 200}}}}},
      {"model",
       {{"hidden", {32, 32}},
        {"time_frequencies", 8},
        {"conditional", false},
        {"n_labels", 0},
        {"label_embedding", 8},
        {"input_scale", nullptr},
        {"init_seed", nullptr}}},
      {"eps", {{"eps_t", 1e-3}, {"eps_l", 1e-8}, {"eps_r", 1e-12}, {"eps_c", 1e-8}}},
      {"train",
       {{"batch_size", 256},
        {"n_steps", 10000},
        {"lr", 1e-3},
        {"lr_decay_steps", 0},
        {"lr_min", 0.0},
        {"beta1", 0.9},
        {"beta2", 0.999},
        {"adam_eps", 1e-8},
        {"coupling", "independent"},
        {"group_restricted", false},
        {"cfg_dropout", 0.1},
        {"log_every", 1000}}},
      {"sample",
       {{"n", 1000},
        {"n_steps", 200},
        {"guidance", nullptr},
        {"condition", nullptr},
        {"label_mode", "none"},
        {"trajectories", false},
        {"trajectory_stride", 1}}},
      {"eval",
       {{"w2_max_n", 500},
        {"bandwidth", nullptr},
        {"conditional", false},
        {"n_bins", 0},
        {"active_threshold", 0.01}}},
      {"viz",
       {{"coordinates", {0}},
        {"z_min", 0},
        {"z_max", 100},
        {"progress", {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}},
        {"draws", 10000},
        {"batch_size", 256},
        {"coupling", "independent"}}},
  };
  return cfg;
}

namespace {

bool same_kind(const Json& a, const Json& b) {
  if (a.is_number_float()) return b.is_number();
  if (a.is_number_integer() || a.is_number_unsigned()) return b.is_number_integer() || b.is_number_unsigned();
  return a.type() == b.type();
}

std::string join(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

const Json& at(const Json& cfg, const char* section, const char* key) {
  const auto s = cfg.find(section);
  if (s == cfg.end() || !s->contains(key)) throw ConfigError(std::string("missing config key ") + section + "." + key);
  return (*s)[key];
}

std::size_t size_at(const Json& cfg, const char* section, const char* key) {
  const Json& v = at(cfg, section, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ConfigError(std::string(section) + "." + key + " must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

double real_at(const Json& cfg, const char* section, const char* key) {
  const Json& v = at(cfg, section, key);
  if (!v.is_number()) throw ConfigError(std::string(section) + "." + key + " must be a number");
  return v.get<double>();
}

std::string string_at(const Json& cfg, const char* section, const char* key) {
  const Json& v = at(cfg, section, key);
  if (!v.is_string()) throw ConfigError(std::string(section) + "." + key + " must be a string");
  return v.get<std::string>();
}

template <typename T>
std::vector<T> vector_of(const Json& v, const std::string& name) {
  try {
    return v.get<std::vector<T>>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(name + " has the wrong element type");
  }
}

CouplingKind coupling_at(const Json& cfg, const char* section) {
  try {
    return parse_coupling(string_at(cfg, section, "coupling"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(section) + ".coupling: " + e.what());
  }
}

}  // namespace

Json merge_strict(const Json& base, const Json& user, const std::string& where) {
  if (!user.is_object()) throw ConfigError((where.empty() ? std::string("config") : where) + " must be a JSON object");
  Json out = base;
  for (const auto& [key, value] : user.items()) {
    const std::string name = join(where, key);
    const auto it = base.find(key);
    if (it == base.end()) throw ConfigError("unknown config key '" + name + "'");
    if (it->is_null() || value.is_null()) {
      if (value.is_null() && !it->is_null()) throw ConfigError("config key '" + name + "' cannot be null");
      out[key] = value;
    } else if (it->is_object()) {
      out[key] = merge_strict(*it, value, name);
    } else if (!same_kind(*it, value)) {
      throw ConfigError("config key '" + name + "' expects a " + std::string(it->type_name()) + ", got " +
                        std::string(value.type_name()));
    } else {
      out[key] = value;
    }
  }
  return out;
}

Json load_config(const std::optional<std::filesystem::path>& path) {
  Json cfg = default_config();
  if (!path) return cfg;
  std::ifstream in(*path);
  if (!in) throw ConfigError("cannot open config " + path->string());
  Json user;
  try {
    user = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path->string() + ": " + e.what());
  }
  cfg = merge_strict(cfg, user);
  if (cfg["format_version"] != kFormatVersion) {
    throw ConfigError("unsupported config format_version " + cfg["format_version"].dump());
  }
  return cfg;
}

std::uint64_t seed_of(const Json& cfg) {
  const Json& v = cfg.at("seed");
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ConfigError("seed must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::size_t threads_of(const Json& cfg) {
  const Json& v = cfg.at("threads");
  if (!v.is_number_integer() || v.get<std::int64_t>() < 1) throw ConfigError("threads must be >= 1");
  return v.get<std::size_t>();
}

std::filesystem::path path_of(const Json& cfg, const char* key) { return string_at(cfg, "paths", key); }

EpsilonConfig eps_config(const Json& cfg) {
  EpsilonConfig e{real_at(cfg, "eps", "eps_t"), real_at(cfg, "eps", "eps_l"), real_at(cfg, "eps", "eps_r"),
                  real_at(cfg, "eps", "eps_c")};
  try {
    e.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("eps: ") + err.what());
  }
  return e;
}

TrainConfig train_config(const Json& cfg) {
  TrainConfig t;
  t.batch_size = size_at(cfg, "train", "batch_size");
  t.n_steps = size_at(cfg, "train", "n_steps");
  t.adam.lr = real_at(cfg, "train", "lr");
  t.lr_decay_steps = size_at(cfg, "train", "lr_decay_steps");
  t.lr_min = real_at(cfg, "train", "lr_min");
  t.adam.beta1 = real_at(cfg, "train", "beta1");
  t.adam.beta2 = real_at(cfg, "train", "beta2");
  t.adam.eps = real_at(cfg, "train", "adam_eps");
  t.coupling = coupling_at(cfg, "train");
  t.group_restricted = at(cfg, "train", "group_restricted").get<bool>();
  t.cfg_dropout = real_at(cfg, "train", "cfg_dropout");
  t.eps = eps_config(cfg);
  t.seed = seed_of(cfg);
  try {
    t.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("train: ") + err.what());
  }
  return t;
}

SampleConfig sample_config(const Json& cfg) {
  SampleConfig s;
  s.n_steps = size_at(cfg, "sample", "n_steps");
  s.eps = eps_config(cfg);
  const Json& g = at(cfg, "sample", "guidance");
  if (!g.is_null()) {
    if (!g.is_number()) throw ConfigError("sample.guidance must be a number or null");
    s.guidance = g.get<double>();
  }
  s.record_trajectory = at(cfg, "sample", "trajectories").get<bool>();
  s.trajectory_stride = size_at(cfg, "sample", "trajectory_stride");
  const Json& c = at(cfg, "sample", "condition");
  if (!c.is_null()) {
    if (!c.is_number_integer() || c.get<std::int64_t>() < 0) throw ConfigError("sample.condition must be a label >= 0 or null");
    s.condition = c.get<Label>();
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("sample: ") + err.what());
  }
  return s;
}

HeatmapConfig heatmap_config(const Json& cfg, std::size_t coordinate) {
  HeatmapConfig h;
  h.coordinate = coordinate;
  h.z_min = static_cast<Count>(size_at(cfg, "viz", "z_min"));
  h.z_max = static_cast<Count>(size_at(cfg, "viz", "z_max"));
  h.progress = vector_of<double>(at(cfg, "viz", "progress"), "viz.progress");
  h.draws = size_at(cfg, "viz", "draws");
  h.batch_size = size_at(cfg, "viz", "batch_size");
  h.eps_c = eps_config(cfg).eps_c;
  try {
    h.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("viz: ") + err.what());
  }
  return h;
}

CouplingKind viz_coupling(const Json& cfg) { return coupling_at(cfg, "viz"); }

GammaPoissonMixtureSpec mixture_spec(const Json& cfg) {
  const Json& m = at(cfg, "data", "mixture");
  const auto weights = vector_of<double>(m.at("weights"), "data.mixture.weights");
  const auto means = vector_of<std::vector<double>>(m.at("means"), "data.mixture.means");
  const auto disp = vector_of<std::vector<double>>(m.at("dispersion"), "data.mixture.dispersion");
  if (weights.size() != means.size() || weights.size() != disp.size()) {
    throw ConfigError("data.mixture: weights, means and dispersion need one entry per component");
  }
  GammaPoissonMixtureSpec spec;
  for (std::size_t k = 0; k < weights.size(); ++k) spec.components.push_back({weights[k], means[k], disp[k]});
  try {
    spec.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("data.mixture: ") + err.what());
  }
  return spec;
}

ConditionalTaskSpec conditional_spec(const Json& cfg) {
  const Json& c = at(cfg, "data", "conditional");
  ConditionalTaskSpec spec;
  spec.class_means = vector_of<std::vector<double>>(c.at("class_means"), "data.conditional.class_means");
  if (!c.at("dispersion").is_number() || !c.at("shared_factor_var").is_number()) {
    throw ConfigError("data.conditional dispersion and shared_factor_var must be numbers");
  }
  spec.dispersion = c.at("dispersion").get<double>();
  spec.shared_factor_var = c.at("shared_factor_var").get<double>();
  spec.shared_coords = vector_of<std::size_t>(c.at("shared_coords"), "data.conditional.shared_coords");
  try {
    spec.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("data.conditional: ") + err.what());
  }
  return spec;
}

NetworkShape network_shape(const Json& cfg, std::size_t dim, std::size_t labels_in_data, double input_scale) {
  NetworkShape s;
  s.dim = dim;
  s.hidden = vector_of<std::size_t>(at(cfg, "model", "hidden"), "model.hidden");
  s.time_frequencies = size_at(cfg, "model", "time_frequencies");
  if (at(cfg, "model", "conditional").get<bool>()) {
    s.n_labels = size_at(cfg, "model", "n_labels");
    if (s.n_labels == 0) s.n_labels = labels_in_data;
    if (s.n_labels == 0) throw ConfigError("model.conditional needs labelled target data or model.n_labels");
    s.label_embedding = size_at(cfg, "model", "label_embedding");
  }
  const Json& scale = at(cfg, "model", "input_scale");
  if (scale.is_null()) {
    s.input_scale = input_scale;
  } else {
    if (!scale.is_number()) throw ConfigError("model.input_scale must be a number or null");
    s.input_scale = scale.get<double>();
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("model: ") + err.what());
  }
  return s;
}

}  // namespace countflow::cli
