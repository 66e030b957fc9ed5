// countflow: generate count data, train and sample count-space flows,
// evaluate samples and export bridge heatmaps.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "cli/commands.hpp"

using countflow::cli::Json;

int main(int argc, char** argv) {
  CLI::App app{"countflow: birth-death flow matching on count data"};
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::optional<std::string> config_path, out, source, target, checkpoint, resume, samples, reference, reference2,
      coupling;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads, n, steps;
  std::optional<double> guidance;
  bool trajectories = false;
  bool print_config = false;

  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out, "output directory (paths.out)");
  app.add_option("--seed", seed, "global seed");
  app.add_option("--threads", threads, "worker thread cap")->check(CLI::PositiveNumber);
  app.add_option("--source", source, "source count CSV (paths.source)");
  app.add_option("--target", target, "target count CSV (paths.target)");
  app.add_option("--checkpoint", checkpoint, "model checkpoint to sample from (paths.checkpoint)");
  app.add_option("--resume", resume, "checkpoint to continue training from (paths.resume)");
  app.add_option("--samples", samples, "generated samples CSV (paths.samples)");
  app.add_option("--reference", reference, "reference samples CSV (paths.reference)");
  app.add_option("--reference2", reference2, "second reference draw for the noise floor (paths.reference2)");
  app.add_option("--steps", steps, "training steps (train.n_steps)");
  app.add_option("--coupling", coupling, "independent or ot (train.coupling)");
  app.add_option("--n", n, "number of samples (sample.n)");
  app.add_option("--guidance", guidance, "classifier-free guidance scale (sample.guidance)");
  app.add_flag("--trajectories", trajectories, "write trajectories.csv");
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");

  std::vector<CLI::App*> subs;
  for (const auto& name : countflow::cli::command_names()) subs.push_back(app.add_subcommand(name));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    Json cfg = countflow::cli::load_config(config_path);
    Json over = Json::object();
    auto set = [&](const char* section, const char* key, const Json& v) { over[section][key] = v; };
    if (seed) over["seed"] = *seed;
    if (threads) over["threads"] = *threads;
    if (out) set("paths", "out", *out);
    if (source) set("paths", "source", *source);
    if (target) set("paths", "target", *target);
    if (checkpoint) set("paths", "checkpoint", *checkpoint);
    if (resume) set("paths", "resume", *resume);
    if (samples) set("paths", "samples", *samples);
    if (reference) set("paths", "reference", *reference);
    if (reference2) set("paths", "reference2", *reference2);
    if (steps) set("train", "n_steps", *steps);
    if (coupling) set("train", "coupling", *coupling);
    if (n) set("sample", "n", *n);
    if (guidance) set("sample", "guidance", *guidance);
    if (trajectories) set("sample", "trajectories", true);
    cfg = countflow::cli::merge_strict(cfg, over);

    if (print_config) {
      std::cout << cfg.dump(2) << '\n';
      return 0;
    }
    std::string command;
    for (auto* s : subs) {
      if (s->parsed()) command = s->get_name();
    }
    if (command.empty()) {
      std::cerr << app.help();
      return 1;
    }
    countflow::cli::run_command(command, cfg, std::cerr);
    return 0;
  } catch (...) {
    return countflow::cli::report_exception(std::cerr);
  }
}
