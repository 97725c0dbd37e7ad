#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairfpr/synthdata.hpp"
#include "fairfpr/trainer.hpp"

namespace fairfpr {

/// Dataset generation request. When `holdout_identities_per_group` is set,
/// generation also writes train/eval splits with disjoint identities.
struct GenerateConfig {
  std::vector<GroupSpec> groups;
  std::size_t raw_dim = 32;
  std::uint64_t seed = 1;
  std::optional<std::size_t> holdout_identities_per_group;
  std::uint64_t split_seed = 0;  // defaults to seed when absent
};

/// The default 4-group desk benchmark: 32 identities x 16 samples per group,
/// center concentrations {0.2, 0.5, 0.8, 1.2} so group "a" is the hardest.
GenerateConfig default_benchmark_config();

/// Evaluation settings shared by the evaluate and sweep commands.
struct EvalSettings {
  std::vector<double> gammas = {1e-2, 1e-1};
  std::size_t max_pairs_per_group = 20000;
  std::uint64_t pair_seed = 0x5eedfa17;
  std::size_t roc_points = 64;
};

/// Train config plus the optional eval block used by sweeps.
struct RunConfig {
  TrainConfig train;
  std::string eval_dataset;  // base path; required for sweep
  EvalSettings eval;
};

/// Strict parsers: unknown keys are config errors so typos fail loudly.
GenerateConfig parse_generate_config(const nlohmann::json& j);
RunConfig parse_run_config(const nlohmann::json& j);
EvalSettings parse_eval_settings(const nlohmann::json& j);

nlohmann::json generate_config_to_json(const GenerateConfig& cfg);
nlohmann::json run_config_to_json(const RunConfig& cfg);
nlohmann::json eval_settings_to_json(const EvalSettings& cfg);

/// Loads a config file; a run manifest is accepted in place of a config, in
/// which case its resolved_config is returned and the manifest itself is
/// stored in *manifest_out (for input-path reuse).
nlohmann::json load_config_file(const std::string& path, nlohmann::json* manifest_out = nullptr);

}  // namespace fairfpr
