#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cli/config.hpp"

using namespace countflow;
using namespace countflow::cli;

TEST_CASE("defaults resolve to valid module configs") {
  const Json cfg = default_config();
  CHECK(cfg["format_version"] == 1);
  const TrainConfig t = train_config(cfg);
  CHECK(t.batch_size == 256);
  CHECK(t.n_steps == 10000);
  CHECK(t.coupling == CouplingKind::independent);
  CHECK(t.cfg_dropout == 0.1);
  const SampleConfig s = sample_config(cfg);
  CHECK(s.n_steps == 200);
  CHECK(s.guidance == 1.0);
  CHECK(s.condition == kNullLabel);
  const EpsilonConfig e = eps_config(cfg);
  CHECK(e.eps_t == 1e-3);
  CHECK(e.eps_c == 1e-8);
  const auto mix = mixture_spec(cfg);
  const auto def = GammaPoissonMixtureSpec::two_mode_default();
  REQUIRE(mix.components.size() == def.components.size());
  for (std::size_t k = 0; k < mix.components.size(); ++k) {
    CHECK(mix.components[k].mean == def.components[k].mean);
    CHECK(mix.components[k].dispersion == def.components[k].dispersion);
  }
  const auto cond = conditional_spec(cfg);
  CHECK(cond.class_means == ConditionalTaskSpec::place_field_default().class_means);
  const NetworkShape shape = network_shape(cfg, 2, 0, 0.01);
  CHECK(shape.hidden == std::vector<std::size_t>{32, 32});
  CHECK(shape.n_labels == 0);
  CHECK(shape.input_scale == 0.01);
  const HeatmapConfig h = heatmap_config(cfg, 1);
  CHECK(h.coordinate == 1);
  CHECK(h.progress.size() == 11);
}

TEST_CASE("strict merge") {
  const Json base = default_config();
  const Json merged = merge_strict(base, Json::parse(R"({"seed": 9, "train": {"coupling": "ot", "lr": 0.01}})"));
  CHECK(merged["seed"] == 9);
  CHECK(merged["train"]["coupling"] == "ot");
  CHECK(merged["train"]["lr"] == 0.01);
  CHECK(merged["train"]["batch_size"] == 256);
  // Integers are accepted where reals are expected, not the reverse.
  CHECK_NOTHROW(merge_strict(base, Json::parse(R"({"train": {"lr": 1}})")));
  CHECK_THROWS_AS(merge_strict(base, Json::parse(R"({"train": {"batch_size": 1.5}})")), ConfigError);
  CHECK_THROWS_AS(merge_strict(base, Json::parse(R"({"train": {"couplng": "ot"}})")), ConfigError);
  CHECK_THROWS_AS(merge_strict(base, Json::parse(R"({"extra": 1})")), ConfigError);
  CHECK_THROWS_AS(merge_strict(base, Json::parse(R"({"train": "fast"})")), ConfigError);
  CHECK_THROWS_AS(merge_strict(base, Json::parse(R"({"seed": null})")), ConfigError);
  CHECK_THROWS_AS(merge_strict(base, Json::parse(R"([1, 2])")), ConfigError);
  const Json g = merge_strict(base, Json::parse(R"({"sample": {"guidance": 2.5, "condition": 1}})"));
  CHECK(sample_config(g).guidance == 2.5);
  CHECK(sample_config(g).condition == 1);
  try {
    merge_strict(base, Json::parse(R"({"viz": {"bogus": true}})"));
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("viz.bogus") != std::string::npos);
  }
}

TEST_CASE("semantic validation raises ConfigError") {
  const Json base = default_config();
  auto with = [&](const char* text) { return merge_strict(base, Json::parse(text)); };
  CHECK_THROWS_AS(train_config(with(R"({"train": {"coupling": "sinkhorn"}})")), ConfigError);
  CHECK_THROWS_AS(train_config(with(R"({"train": {"cfg_dropout": 2.0}})")), ConfigError);
  CHECK_THROWS_AS(train_config(with(R"({"train": {"batch_size": -1}})")), ConfigError);
  CHECK_THROWS_AS(eps_config(with(R"({"eps": {"eps_t": 0.7}})")), ConfigError);
  CHECK_THROWS_AS(sample_config(with(R"({"sample": {"guidance": -1}})")), ConfigError);
  CHECK_THROWS_AS(sample_config(with(R"({"sample": {"condition": -3}})")), ConfigError);
  CHECK_THROWS_AS(mixture_spec(with(R"({"data": {"mixture": {"weights": [0.5]}}})")), ConfigError);
  CHECK_THROWS_AS(heatmap_config(with(R"({"viz": {"z_max": 0, "z_min": 5}})"), 0), ConfigError);
  CHECK_THROWS_AS(network_shape(with(R"({"model": {"conditional": true}})"), 2, 0, 1.0), ConfigError);
  CHECK(network_shape(with(R"({"model": {"conditional": true}})"), 2, 3, 1.0).n_labels == 3);
  CHECK_THROWS_AS(seed_of(with(R"({"seed": -4})")), ConfigError);
  CHECK_THROWS_AS(threads_of(with(R"({"threads": 0})")), ConfigError);
}

TEST_CASE("load_config reads files and checks the version") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto good = dir / "countflow_cfg_good.json";
  const auto old = dir / "countflow_cfg_old.json";
  const auto broken = dir / "countflow_cfg_broken.json";
  std::ofstream(good) << R"({"seed": 3, "sample": {"n": 10}})";
  std::ofstream(old) << R"({"format_version": 0})";
  std::ofstream(broken) << R"({"seed": )";
  const Json cfg = load_config(good);
  CHECK(cfg["seed"] == 3);
  CHECK(cfg["sample"]["n"] == 10);
  CHECK(load_config(std::nullopt) == default_config());
  CHECK_THROWS_AS(load_config(old), ConfigError);
  CHECK_THROWS_AS(load_config(broken), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "countflow_cfg_missing.json"), ConfigError);
  for (const auto& p : {good, old, broken}) std::filesystem::remove(p);
}
