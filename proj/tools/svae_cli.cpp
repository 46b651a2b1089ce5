// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0
//
// svae: command-line front end for the pipeline.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "slowvae/config.hpp"
#include "slowvae/errors.hpp"
#include "slowvae/log.hpp"
#include "slowvae/pipeline.hpp"
#include "slowvae/runtime.hpp"

namespace {

using namespace svae;

struct Common {
  std::string config;
  std::string profile = "desk";
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t workers = 1;
  std::string method;
  bool verbose = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, bool out_required) {
  cmd->add_option("--config", c.config, "Experiment config (JSON); defaults to the chosen profile");
  cmd->add_option("--profile", c.profile, "Built-in profile used when --config is absent")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--seed", c.seed, "Seed");
  auto* out = cmd->add_option("--out", c.out, "Output path");
  if (out_required) out->required();
  cmd->add_option("--workers", c.workers, "Concurrent grid cells")->check(CLI::PositiveNumber);
  cmd->add_option("--method", c.method, "Representation method")->check(CLI::IsMember({"svae", "bvae"}));
  cmd->add_flag("-v,--verbose", c.verbose, "Per-epoch progress on stderr");
  cmd->add_flag("-q,--quiet", c.quiet, "Suppress warnings");
}

ExperimentConfig load(const Common& c) {
  if (!c.config.empty()) return load_config(c.config);
  return c.profile == "paper" ? paper_config() : desk_config();
}

// Restricts the config to the method and seed given on the command line.
void restrict(ExperimentConfig& config, const Common& c) {
  if (!c.method.empty()) {
    const Method m = method_from_string(c.method);
    if (!config.representation.contains(m)) throw ConfigError("method " + c.method + " is not configured");
    const TrainConfig tc = config.representation.at(m);
    config.representation.clear();
    config.representation[m] = tc;
  }
  if (c.seed) config.seeds = {*c.seed};
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"slowvae: slowness-regularized VAE experiments on a bouncing-ball simulator"};
  app.require_subcommand(1);

  Common common;
  std::string dataset, checkpoint, fraction = "1", run_dir;

  auto* gen = app.add_subcommand("generate", "Simulate and write a dataset file");
  add_common(gen, common, true);

  auto* repr = app.add_subcommand("train-repr", "Train a representation model");
  add_common(repr, common, true);
  repr->add_option("--dataset", dataset, "Dataset file")->required()->check(CLI::ExistingFile);

  auto* down = app.add_subcommand("train-downstream", "Train a regression head on a frozen encoder");
  add_common(down, common, true);
  down->add_option("--checkpoint", checkpoint, "Representation checkpoint")->required()->check(CLI::ExistingFile);
  down->add_option("--dataset", dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  down->add_option("--fraction", fraction, "Labeled subset fraction: 1, 1/2, ..., 1/128");

  auto* ev = app.add_subcommand("evaluate", "Evaluate a run directory");
  add_common(ev, common, false);
  ev->add_option("run_dir", run_dir, "Directory laid out by run-all")->required()->check(CLI::ExistingDirectory);

  auto* all = app.add_subcommand("run-all", "Generate, train the full grid and evaluate");
  add_common(all, common, true);

  CLI11_PARSE(app, argc, argv);

  set_verbose(common.verbose);
  set_warnings_enabled(!common.quiet);
  std::ostream* log = &std::cout;

  try {
    ExperimentConfig config = load(common);
    if (gen->parsed()) {
      if (common.seed) config.dataset.seed = *common.seed;
      pipeline::cmd_generate(config, common.out, log);
    } else if (repr->parsed()) {
      if (common.method.empty()) throw ConfigError("train-repr needs --method");
      pipeline::cmd_train_repr(config, dataset, method_from_string(common.method), common.seed.value_or(0),
                               common.out, log);
    } else if (down->parsed()) {
      const double f = parse_fraction(nlohmann::json(fraction));
      pipeline::cmd_train_downstream(config, checkpoint, dataset, f, common.seed.value_or(0), common.out, log);
    } else if (ev->parsed()) {
      restrict(config, common);
      const std::string out = common.out.empty() ? (std::filesystem::path(run_dir) / "eval").string() : common.out;
      pipeline::cmd_evaluate(config, run_dir, out, log);
    } else if (all->parsed()) {
      restrict(config, common);
      pipeline::cmd_run_all(config, common.out, common.workers, log);
    }
  } catch (const ConfigError& e) {
    std::cerr << "svae: config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "svae: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
