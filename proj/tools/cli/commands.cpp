#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "countflow/io.hpp"

namespace countflow::cli {

namespace fs = std::filesystem;

namespace {

// Stream ids for the seeded draws of gen-data and sample.
constexpr std::uint64_t kTargetStream = 1;
constexpr std::uint64_t kSourceStream = 2;
constexpr std::uint64_t kHoldoutStream = 3;
constexpr std::uint64_t kInitialStateStream = 1ull << 62;

fs::path prepare_out(const Json& cfg) {
  const fs::path out = path_of(cfg, "out");
  if (out.empty()) throw ConfigError("paths.out is empty");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw IoError("cannot create output directory " + out.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_resolved(const fs::path& out, const Json& cfg) {
  write_text(out / "config.resolved.json", cfg.dump(2) + "\n");
}

fs::path required_path(const Json& cfg, const char* key) {
  const fs::path p = path_of(cfg, key);
  if (p.empty()) throw ConfigError(std::string("paths.") + key + " is required for this command");
  if (!fs::exists(p)) throw ConfigError(std::string("paths.") + key + ": " + p.string() + " does not exist");
  return p;
}

std::size_t label_count(const CountMatrix& m) {
  std::size_t k = 0;
  for (Label l : m.labels) {
    if (l >= 0) k = std::max(k, static_cast<std::size_t>(l) + 1);
  }
  return k;
}

// Null bounds: the (0, 0)-(100, 60) grid in two dimensions, otherwise zero
// up to `fallback_hi` per coordinate.
void source_bounds(const Json& cfg, std::size_t dim, Count fallback_hi, std::vector<Count>& lo,
                   std::vector<Count>& hi) {
  const Json& jl = cfg.at("data").at("source_lo");
  const Json& jh = cfg.at("data").at("source_hi");
  try {
    lo = jl.is_null() ? std::vector<Count>(dim, 0) : jl.get<std::vector<Count>>();
    if (jh.is_null()) {
      hi = dim == 2 ? std::vector<Count>{100, 60} : std::vector<Count>(dim, fallback_hi);
    } else {
      hi = jh.get<std::vector<Count>>();
    }
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("data.source_lo and data.source_hi must be integer arrays or null");
  }
  if (lo.size() != dim || hi.size() != dim) {
    throw ConfigError("data.source_lo/source_hi need " + std::to_string(dim) + " entries");
  }
  for (std::size_t i = 0; i < dim; ++i) {
    if (lo[i] < 0 || lo[i] > hi[i]) throw ConfigError("data.source_lo must satisfy 0 <= lo <= hi");
  }
}

void cmd_gen_data(const Json& cfg, std::ostream& log) {
  const std::uint64_t seed = seed_of(cfg);
  const std::string task = cfg.at("data").at("task").get<std::string>();
  CountMatrix source, target, holdout;
  if (task == "mixture") {
    const auto spec = mixture_spec(cfg);
    const std::size_t n = cfg.at("data").at("n").get<std::size_t>();
    Rng rt = make_stream(seed, kTargetStream);
    target = sample_gamma_poisson_mixture(spec, n, rt);
    std::vector<Count> lo, hi;
    source_bounds(cfg, spec.dim(), std::max<Count>(1, target.max_value()), lo, hi);
    Rng rs = make_stream(seed, kSourceStream);
    source = sample_discrete_uniform_source(n, lo, hi, rs);
  } else if (task == "conditional") {
    const auto spec = conditional_spec(cfg);
    const auto& c = cfg.at("data").at("conditional");
    Rng rt = make_stream(seed, kTargetStream);
    target = make_conditional_task(spec, c.at("n_per_class").get<std::size_t>(), rt);
    Rng rh = make_stream(seed, kHoldoutStream);
    holdout = make_conditional_task(spec, c.at("n_holdout_per_class").get<std::size_t>(), rh);
    std::vector<Count> lo, hi;
    source_bounds(cfg, spec.dim(), std::max<Count>(1, target.max_value()), lo, hi);
    Rng rs = make_stream(seed, kSourceStream);
    source = sample_discrete_uniform_source(target.rows, lo, hi, rs);
    source.labels = target.labels;
  } else {
    throw ConfigError("data.task must be 'mixture' or 'conditional', got '" + task + "'");
  }
  const fs::path out = prepare_out(cfg);
  write_count_csv(out / "source.csv", source);
  write_count_csv(out / "target.csv", target);
  if (task == "conditional") write_count_csv(out / "holdout.csv", holdout);
  write_resolved(out, cfg);
  log << "wrote " << source.rows << " source and " << target.rows << " target rows to " << out.string() << '\n';
}

void cmd_train(const Json& cfg, std::ostream& log) {
  const TrainConfig tc = train_config(cfg);
  const CountMatrix source = read_count_csv(required_path(cfg, "source"));
  const CountMatrix target = read_count_csv(required_path(cfg, "target"));
  if (source.cols != target.cols) {
    throw ConfigError("source has " + std::to_string(source.cols) + " columns, target has " +
                      std::to_string(target.cols));
  }
  const fs::path resume = path_of(cfg, "resume");
  std::optional<RateNetwork> net;
  if (!resume.empty()) {
    net = load_checkpoint(required_path(cfg, "resume"));
    if (net->shape().dim != target.cols) {
      throw ConfigError("checkpoint dimension " + std::to_string(net->shape().dim) + " does not match data dimension " +
                        std::to_string(target.cols));
    }
  } else {
    const NetworkShape shape = network_shape(cfg, target.cols, label_count(target), input_scale_for(source, target));
    const Json& init = cfg.at("model").at("init_seed");
    net.emplace(shape, init.is_null() ? seed_of(cfg) : init.get<std::uint64_t>());
  }
  const std::size_t log_every = cfg.at("train").at("log_every").get<std::size_t>();
  log << "training " << net->count_params() << " parameters for " << tc.n_steps << " steps ("
      << coupling_name(tc.coupling) << " coupling)\n";
  std::optional<TrainResult> result;
  try {
    result = train(std::move(*net), source, target, tc, [&](const StepRecord& r) {
      if (log_every > 0 && (r.step + 1) % static_cast<std::int64_t>(log_every) == 0) {
        log << "step " << r.step + 1 << " loss " << r.loss << " coupling_cost " << r.coupling_cost << '\n';
      }
    });
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const fs::path out = prepare_out(cfg);
  save_checkpoint(result->net, out / "checkpoint.bin");
  std::ostringstream loss;
  write_loss_csv(loss, result->trace);
  write_text(out / "loss.csv", loss.str());
  write_resolved(out, cfg);
}

void cmd_sample(const Json& cfg, std::ostream& log, bool transport) {
  const RateNetwork net = load_checkpoint(required_path(cfg, "checkpoint"));
  SampleConfig sc = sample_config(cfg);
  const Json& s = cfg.at("sample");
  const bool guidance_set = !s.at("guidance").is_null();
  const std::string mode = s.at("label_mode").get<std::string>();
  if (mode != "none" && mode != "cycle" && mode != "from_x0") {
    throw ConfigError("sample.label_mode must be 'none', 'cycle' or 'from_x0'");
  }
  if (!net.conditional() && (guidance_set || sc.condition != kNullLabel || mode != "none")) {
    throw ConfigError("guidance and conditions need a model trained with condition support");
  }
  if (sc.condition != kNullLabel && static_cast<std::size_t>(sc.condition) >= net.shape().n_labels) {
    throw ConfigError("sample.condition " + std::to_string(sc.condition) + " is not a trained label");
  }
  const std::size_t dim = net.shape().dim;
  std::size_t n = s.at("n").get<std::size_t>();
  CountMatrix x0;
  if (transport) {
    const CountMatrix src = read_count_csv(required_path(cfg, "source"));
    if (src.cols != dim) {
      throw ConfigError("source has " + std::to_string(src.cols) + " columns, model expects " + std::to_string(dim));
    }
    if (n > src.rows) throw ConfigError("sample.n exceeds the " + std::to_string(src.rows) + " source rows");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    x0 = src.select(idx);
  } else {
    std::vector<Count> lo, hi;
    const Count fallback = static_cast<Count>(std::llround(1.0 / net.shape().input_scale));
    source_bounds(cfg, dim, std::max<Count>(1, fallback), lo, hi);
    Rng r0 = make_stream(seed_of(cfg), kInitialStateStream);
    x0 = sample_discrete_uniform_source(n, lo, hi, r0);
  }

  std::vector<Label> conditions;
  if (mode == "cycle") {
    for (std::size_t i = 0; i < n; ++i) conditions.push_back(static_cast<Label>(i % net.shape().n_labels));
  } else if (mode == "from_x0") {
    if (!x0.has_labels()) throw ConfigError("sample.label_mode 'from_x0' needs a label column in the source");
    conditions = x0.labels;
  }
  if (!conditions.empty() && sc.condition != kNullLabel) {
    throw ConfigError("sample.condition cannot be combined with a per-row label_mode");
  }

  const NetworkRates model(net);
  const auto results = simulate_rows(model, x0, conditions, sc, seed_of(cfg), threads_of(cfg));

  CountMatrix samples(n, dim);
  for (std::size_t i = 0; i < n; ++i) samples.set_row(i, results[i].final_state);
  if (!conditions.empty()) {
    samples.labels = conditions;
  } else if (sc.condition != kNullLabel) {
    samples.labels.assign(n, sc.condition);
  }

  const fs::path out = prepare_out(cfg);
  write_count_csv(out / "samples.csv", samples);
  if (sc.record_trajectory) {
    std::ostringstream traj;
    write_trajectory_header(traj, dim);
    for (std::size_t i = 0; i < n; ++i) write_trajectory(traj, i, results[i].trajectory);
    write_text(out / "trajectories.csv", traj.str());
  }
  write_resolved(out, cfg);
  double mean_path = 0.0;
  for (const auto& r : results) mean_path += static_cast<double>(r.path_length);
  log << "generated " << n << " samples; mean path length " << (n ? mean_path / static_cast<double>(n) : 0.0) << '\n';
}

void cmd_eval(const Json& cfg, std::ostream& log) {
  const CountMatrix samples = read_count_csv(required_path(cfg, "samples"));
  const CountMatrix reference = read_count_csv(required_path(cfg, "reference"));
  if (samples.cols != reference.cols) {
    throw ConfigError("samples have " + std::to_string(samples.cols) + " columns, reference has " +
                      std::to_string(reference.cols));
  }
  const Json& e = cfg.at("eval");
  const std::size_t max_n = e.at("w2_max_n").get<std::size_t>();
  std::optional<double> bandwidth;
  if (!e.at("bandwidth").is_null()) bandwidth = e.at("bandwidth").get<double>();
  const std::uint64_t seed = seed_of(cfg);

  Json report = {{"format_version", kFormatVersion}};
  try {
    const Json main_block = to_json(compare_samples(samples, reference, max_n, seed, bandwidth));
    for (const auto& [k, v] : main_block.items()) report[k] = v;
    const fs::path ref2 = path_of(cfg, "reference2");
    if (!ref2.empty()) {
      const CountMatrix second = read_count_csv(required_path(cfg, "reference2"));
      report["noise_floor"] = to_json(compare_samples(second, reference, max_n, seed, bandwidth));
    }
    if (e.at("conditional").get<bool>()) {
      if (!samples.has_labels() || !reference.has_labels()) {
        throw ConfigError("conditional evaluation needs label columns in samples and reference");
      }
      std::size_t bins = e.at("n_bins").get<std::size_t>();
      if (bins == 0) bins = label_count(reference);
      const auto active = active_neurons(reference, e.at("active_threshold").get<double>());
      const ConditionalReport cr =
          conditional_metrics(split_by_label(reference, bins), split_by_label(samples, bins), active);
      for (const auto& w : cr.warnings) log << "warning: " << w << '\n';
      report["conditional"] = to_json(cr);
    }
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
  const fs::path out = prepare_out(cfg);
  write_text(out / "metrics.json", report.dump(2) + "\n");
  write_resolved(out, cfg);
  log << "w2 " << report["w2"] << " mmd2_rbf " << report["mmd2_rbf"] << '\n';
}

void cmd_bridge_viz(const Json& cfg, std::ostream& log) {
  const CountMatrix source = read_count_csv(required_path(cfg, "source"));
  const CountMatrix target = read_count_csv(required_path(cfg, "target"));
  if (source.cols != target.cols) throw ConfigError("source and target dimensions differ");
  const CouplingKind coupling = viz_coupling(cfg);
  std::vector<std::size_t> coords;
  try {
    coords = cfg.at("viz").at("coordinates").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("viz.coordinates must be a list of coordinate indices");
  }
  for (std::size_t j : coords) {
    if (j >= source.cols) {
      throw ConfigError("viz coordinate " + std::to_string(j) + " out of range for dimension " +
                        std::to_string(source.cols));
    }
  }
  const fs::path out = prepare_out(cfg);
  Json summary = {{"format_version", kFormatVersion}, {"coupling", coupling_name(coupling)}, {"coordinates", Json::array()}};
  for (std::size_t j : coords) {
    const HeatmapConfig hc = heatmap_config(cfg, j);
    Rng rng = make_stream(seed_of(cfg), j);
    const Heatmap h = bridge_heatmap(source, target, coupling, hc, rng);
    const std::string name = "heatmap_x" + std::to_string(j + 1) + "_" + std::string(coupling_name(coupling)) + ".csv";
    std::ostringstream csv;
    write_heatmap_csv(csv, h);
    write_text(out / name, csv.str());
    Json block = heatmap_summary_json(h);
    block.erase("format_version");
    block["coordinate"] = j;
    block["file"] = name;
    summary["coordinates"].push_back(block);
    log << "wrote " << name << '\n';
  }
  write_text(out / "heatmap_summary.json", summary.dump(2) + "\n");
  write_resolved(out, cfg);
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"gen-data", "train", "sample", "transport", "eval", "bridge-viz"};
  return names;
}

void run_command(const std::string& name, const Json& cfg, std::ostream& log) {
  if (name == "gen-data") return cmd_gen_data(cfg, log);
  if (name == "train") return cmd_train(cfg, log);
  if (name == "sample") return cmd_sample(cfg, log, false);
  if (name == "transport") return cmd_sample(cfg, log, true);
  if (name == "eval") return cmd_eval(cfg, log);
  if (name == "bridge-viz") return cmd_bridge_viz(cfg, log);
  throw ConfigError("unknown command '" + name + "'");
}

int report_exception(std::ostream& err) {
  try {
    throw;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "error: config: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace countflow::cli
