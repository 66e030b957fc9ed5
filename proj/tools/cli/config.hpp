#pragma once

// Run configuration for the countflow command-line tool. A run is one JSON
// document; every key has a default, unknown keys are rejected, and the
// resolved document is written next to the outputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "countflow/eval.hpp"
#include "countflow/net.hpp"
#include "countflow/sampler.hpp"
#include "countflow/sim.hpp"
#include "countflow/train.hpp"

namespace countflow::cli {

using Json = nlohmann::ordered_json;

/// Invalid configuration or command-line usage (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json default_config();

/// Overlays `user` on `base`. Keys absent from `base` are errors; values must
/// keep the type of the default (null defaults accept anything, arrays are
/// replaced whole, objects merge recursively).
Json merge_strict(const Json& base, const Json& user, const std::string& where = "");

/// Defaults merged with the file at `path` (when given).
Json load_config(const std::optional<std::filesystem::path>& path);

std::uint64_t seed_of(const Json& cfg);
std::size_t threads_of(const Json& cfg);
std::filesystem::path path_of(const Json& cfg, const char* key);

EpsilonConfig eps_config(const Json& cfg);
TrainConfig train_config(const Json& cfg);
SampleConfig sample_config(const Json& cfg);
HeatmapConfig heatmap_config(const Json& cfg, std::size_t coordinate);
CouplingKind viz_coupling(const Json& cfg);
GammaPoissonMixtureSpec mixture_spec(const Json& cfg);
ConditionalTaskSpec conditional_spec(const Json& cfg);

/// Network shape for data of dimension `dim`; n_labels comes from the model
/// section or, when 0 and the model is conditional, from the target labels.
NetworkShape network_shape(const Json& cfg, std::size_t dim, std::size_t labels_in_data, double input_scale);

}  // namespace countflow::cli
