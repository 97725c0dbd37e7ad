// fairfpr CLI: dataset generation, training, evaluation, and ablation sweeps
// over the shared-library C API.
//
//   fairfpr generate --config spec.json --out runs/bench
//   fairfpr train    --config train.json --dataset runs/bench/train --out runs/r0
//   fairfpr evaluate --checkpoint runs/r0/checkpoint --dataset runs/bench/eval \
//                    --gammas 1e-2,1e-1 --out runs/r0-eval
//   fairfpr sweep    --config sweep.json --dataset runs/bench/train \
//                    --axis gamma_u --values 1e-1,1e-2,1e-3 --out runs/sweep
//
// Exit codes: 0 ok, 2 config error, 3 divergence, 4 incompatible inputs,
// 5 partial sweep failure. FAIRFPR_THREADS caps sweep parallelism.

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairfpr.h"

namespace {

int finish(ff_status status) {
  if (status != FF_OK) std::fprintf(stderr, "fairfpr: error: %s\n", ff_last_error());
  return static_cast<int>(status);
}

std::string default_out_dir(const std::string& command) {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return "runs/" + std::string(buf) + "-" + command;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(std::stod(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::stod(cur));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairfpr — FPR-penalty metric learning toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ff_version()));

  std::string config, dataset, out, checkpoint, axis, gammas_text, values_text;
  std::int64_t seed = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "config JSON (or a manifest.json to reproduce a run)");
    cmd->add_option("--seed", seed, "override the config seed");
    cmd->add_option("--out", out, "output directory (default: runs/<timestamp>-<command>)");
  };

  CLI::App* generate = app.add_subcommand("generate", "write a synthetic grouped dataset");
  add_common(generate);

  CLI::App* train = app.add_subcommand("train", "train a model, write checkpoint + telemetry");
  add_common(train);
  train->add_option("--dataset", dataset, "dataset base path (as written by generate)");

  CLI::App* evaluate = app.add_subcommand("evaluate", "fairness report for a checkpoint");
  add_common(evaluate);
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint base path");
  evaluate->add_option("--dataset", dataset, "eval dataset base path");
  evaluate->add_option("--gammas", gammas_text, "comma-separated overall FPR levels");

  CLI::App* sweep = app.add_subcommand("sweep", "train+evaluate over one hyperparameter axis");
  add_common(sweep);
  sweep->add_option("--dataset", dataset, "train dataset base path");
  sweep->add_option("--axis", axis, "gamma_u | p | alpha");
  sweep->add_option("--values", values_text, "comma-separated axis values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(FF_ERR_CONFIG);
  }
  if (out.empty()) out = default_out_dir(app.get_subcommands().front()->get_name());

  try {
    if (generate->parsed()) {
      if (config.empty()) throw CLI::ValidationError("--config is required for generate");
      return finish(ff_run_generate(config.c_str(), out.c_str(), seed));
    }
    if (train->parsed()) {
      if (config.empty()) throw CLI::ValidationError("--config is required for train");
      return finish(ff_run_train(dataset.c_str(), config.c_str(), out.c_str(), seed));
    }
    if (evaluate->parsed()) {
      const std::vector<double> gammas = parse_list(gammas_text);
      return finish(ff_run_evaluate(checkpoint.c_str(), dataset.c_str(), gammas.data(),
                                    gammas.size(), out.c_str(), seed, config.c_str()));
    }
    const std::vector<double> values = parse_list(values_text);
    if (config.empty()) throw CLI::ValidationError("--config is required for sweep");
    return finish(ff_run_sweep(dataset.c_str(), config.c_str(), axis.c_str(), values.data(),
                               values.size(), out.c_str(), seed));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fairfpr: error: %s\n", e.what());
    return static_cast<int>(FF_ERR_CONFIG);
  }
}
