#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fairfpr {

/// File-level commands behind the CLI and the C API. Each writes its outputs
/// plus exactly one manifest.json into the run directory; re-running a
/// command with a manifest as its --config reproduces the outputs.
///
/// `config_path` may point at a plain config file or at a manifest from a
/// previous run. When it is a manifest, dataset/checkpoint paths may be
/// omitted and are taken from the manifest's recorded inputs.

void run_generate(const std::string& config_path, const std::string& out_dir,
                  std::optional<std::uint64_t> seed_override);

void run_train(const std::string& dataset_base, const std::string& config_path,
               const std::string& out_dir, std::optional<std::uint64_t> seed_override);

void run_evaluate(const std::string& checkpoint_base, const std::string& dataset_base,
                  const std::vector<double>& gammas, const std::string& out_dir,
                  std::optional<std::uint64_t> pair_seed_override,
                  const std::string& config_path = "");

/// One train+evaluate child per value (shared seed), axis in
/// {gamma_u, p, alpha}; child failures are recorded and the sweep continues.
/// Throws SweepPartialError at the end if any child failed. Parallelism is
/// capped by the FAIRFPR_THREADS environment variable.
void run_sweep(const std::string& dataset_base, const std::string& config_path,
               const std::string& axis, const std::vector<double>& values,
               const std::string& out_dir, std::optional<std::uint64_t> seed_override);

}  // namespace fairfpr
