#include "fairfpr/runner.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fairfpr/config.hpp"
#include "fairfpr/error.hpp"
#include "fairfpr/hash.hpp"
#include "fairfpr/textio.hpp"

namespace fairfpr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json file_entry(const std::string& path) {
  return {{"path", path}, {"sha256", sha256_file_hex(path)}};
}

json dataset_entry(const std::string& base) {
  return {{"base", base},
          {"header_sha256", sha256_file_hex(base + ".header.json")},
          {"features_sha256", sha256_file_hex(base + ".features.csv")}};
}

void write_manifest(const std::string& out_dir, const std::string& command, std::uint64_t seed,
                    const json& inputs, const json& resolved_config,
                    const std::vector<std::string>& output_names, double duration,
                    const std::string& status = "ok", const json& extra = json()) {
  json m;
  m["schema_version"] = 1;
  m["kind"] = "fairfpr-manifest";
  m["command"] = command;
  m["status"] = status;
  m["created_utc"] = utc_now();
  m["duration_seconds"] = duration;
  m["seed"] = seed;
  m["inputs"] = inputs;
  m["resolved_config"] = resolved_config;
  json outputs = json::object();
  for (const auto& name : output_names) outputs[name] = sha256_file_hex(out_dir + "/" + name);
  m["outputs"] = outputs;
  if (!extra.is_null()) m.update(extra);
  write_text_file(out_dir + "/manifest.json", m.dump(2) + "\n");
}

std::string require_input(const std::string& flag_value, const json& manifest,
                          std::initializer_list<const char*> manifest_path,
                          const std::string& what) {
  if (!flag_value.empty()) return flag_value;
  json node = manifest;
  for (const char* key : manifest_path) {
    if (!node.is_object() || !node.contains(key)) node = json();
    else node = node.at(key);
  }
  if (node.is_string()) return node.get<std::string>();
  throw ConfigError("missing " + what + " (pass the flag or rerun from a manifest)");
}

// Shared by run_train and the sweep children.
struct TrainOutcome {
  RunConfig cfg;
  std::vector<std::string> outputs;
};

TrainOutcome train_into_dir(const std::string& dataset_base, const json& cfg_json,
                            const std::string& out_dir,
                            std::optional<std::uint64_t> seed_override) {
  RunConfig cfg = parse_run_config(cfg_json);
  if (seed_override) cfg.train.seed = *seed_override;

  const Dataset dataset = load(dataset_base);
  fs::create_directories(out_dir);
  const std::string telemetry_path = out_dir + "/telemetry.ndjson";
  std::ofstream telemetry(telemetry_path, std::ios::binary | std::ios::trunc);
  if (!telemetry) throw ConfigError("cannot write file: " + telemetry_path);

  TrainOutcome outcome;
  outcome.cfg = cfg;
  try {
    const TrainResult result = train(dataset, cfg.train, [&](const TelemetryRecord& r) {
      telemetry << telemetry_to_json_line(r) << "\n";
    });
    telemetry.close();
    checkpoint_save(result.state, out_dir + "/checkpoint");
  } catch (const DivergenceError&) {
    telemetry.close();
    throw;
  }
  outcome.outputs = {"telemetry.ndjson", "checkpoint.json", "checkpoint.weights.csv"};
  return outcome;
}

json evaluate_into_dir(const std::string& checkpoint_base, const std::string& dataset_base,
                       const EvalSettings& eval, const std::string& out_dir,
                       std::vector<std::string>& output_names) {
  const TrainState state = checkpoint_load(checkpoint_base);
  const Dataset eval_set = load(dataset_base);
  EvalOptions opts;
  opts.max_pairs_per_group = eval.max_pairs_per_group;
  opts.pair_seed = eval.pair_seed;
  opts.roc_points = eval.roc_points;
  const FairnessReport report = evaluate(state, eval_set, eval.gammas, opts);
  write_report_files(report, out_dir);
  output_names.push_back("report.json");
  for (const auto& g : report.groups) output_names.push_back("roc-" + g + ".csv");
  return parse_json(report_to_json_string(report), "report");
}

// Short value label for child directory names; summary cells keep the full
// 17-digit form.
std::string value_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::size_t sweep_thread_cap(std::size_t jobs) {
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FAIRFPR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) cap = static_cast<std::size_t>(v);
  }
  return std::min(cap, jobs);
}

}  // namespace

void run_generate(const std::string& config_path, const std::string& out_dir,
                  std::optional<std::uint64_t> seed_override) {
  Stopwatch watch;
  const json cfg_json = load_config_file(config_path);
  GenerateConfig cfg = parse_generate_config(cfg_json);
  if (seed_override) {
    cfg.seed = *seed_override;
    if (!cfg_json.contains("split_seed")) cfg.split_seed = cfg.seed;
  }

  fs::create_directories(out_dir);
  const Dataset dataset = generate(cfg.groups, cfg.raw_dim, cfg.seed);
  save(dataset, out_dir + "/dataset");
  std::vector<std::string> outputs = {"dataset.header.json", "dataset.features.csv"};
  if (cfg.holdout_identities_per_group) {
    const auto [train_part, eval_part] =
        split(dataset, *cfg.holdout_identities_per_group, cfg.split_seed);
    save(train_part, out_dir + "/train");
    save(eval_part, out_dir + "/eval");
    outputs.insert(outputs.end(),
                   {"train.header.json", "train.features.csv", "eval.header.json",
                    "eval.features.csv"});
  }

  write_manifest(out_dir, "generate", cfg.seed, {{"config", file_entry(config_path)}},
                 generate_config_to_json(cfg), outputs, watch.seconds());
}

void run_train(const std::string& dataset_base, const std::string& config_path,
               const std::string& out_dir, std::optional<std::uint64_t> seed_override) {
  Stopwatch watch;
  json manifest;
  const json cfg_json = load_config_file(config_path, &manifest);
  const std::string data_base =
      require_input(dataset_base, manifest, {"inputs", "dataset", "base"}, "dataset base path");

  fs::create_directories(out_dir);
  const json inputs = {{"config", file_entry(config_path)}, {"dataset", dataset_entry(data_base)}};
  try {
    const TrainOutcome outcome = train_into_dir(data_base, cfg_json, out_dir, seed_override);
    write_manifest(out_dir, "train", outcome.cfg.train.seed, inputs,
                   run_config_to_json(outcome.cfg), outcome.outputs, watch.seconds());
  } catch (const DivergenceError& e) {
    write_manifest(out_dir, "train", seed_override.value_or(0), inputs, cfg_json,
                   {"telemetry.ndjson"}, watch.seconds(), "diverged",
                   json{{"error", e.what()}});
    throw;
  }
}

void run_evaluate(const std::string& checkpoint_base, const std::string& dataset_base,
                  const std::vector<double>& gammas, const std::string& out_dir,
                  std::optional<std::uint64_t> pair_seed_override,
                  const std::string& config_path) {
  Stopwatch watch;
  json manifest;
  EvalSettings eval;
  if (!config_path.empty()) eval = parse_eval_settings(load_config_file(config_path, &manifest));
  if (!gammas.empty()) eval.gammas = gammas;
  if (pair_seed_override) eval.pair_seed = *pair_seed_override;

  const std::string ckpt =
      require_input(checkpoint_base, manifest, {"inputs", "checkpoint", "base"}, "checkpoint base");
  const std::string data =
      require_input(dataset_base, manifest, {"inputs", "dataset", "base"}, "dataset base path");

  fs::create_directories(out_dir);
  std::vector<std::string> outputs;
  evaluate_into_dir(ckpt, data, eval, out_dir, outputs);

  const json inputs = {{"checkpoint",
                        {{"base", ckpt},
                         {"json_sha256", sha256_file_hex(ckpt + ".json")},
                         {"weights_sha256", sha256_file_hex(ckpt + ".weights.csv")}}},
                       {"dataset", dataset_entry(data)}};
  write_manifest(out_dir, "evaluate", eval.pair_seed, inputs, eval_settings_to_json(eval), outputs,
                 watch.seconds());
}

void run_sweep(const std::string& dataset_base, const std::string& config_path,
               const std::string& axis, const std::vector<double>& values,
               const std::string& out_dir, std::optional<std::uint64_t> seed_override) {
  Stopwatch watch;
  json manifest;
  const json base_cfg_json = load_config_file(config_path, &manifest);
  std::string ax = axis;
  std::vector<double> vals = values;
  if (ax.empty()) ax = base_cfg_json.value("sweep_axis", "");
  if (vals.empty() && base_cfg_json.contains("sweep_values"))
    vals = base_cfg_json.at("sweep_values").get<std::vector<double>>();
  if (ax != "gamma_u" && ax != "p" && ax != "alpha")
    throw ConfigError("sweep: axis must be one of gamma_u|p|alpha, got '" + ax + "'");
  if (vals.empty()) throw ConfigError("sweep: no values given");

  const std::string data_base =
      require_input(dataset_base, manifest, {"inputs", "dataset", "base"}, "dataset base path");
  RunConfig base_cfg = parse_run_config(base_cfg_json);
  if (base_cfg.eval_dataset.empty())
    throw ConfigError("sweep: config must set eval_dataset (held-out identities base path)");

  fs::create_directories(out_dir);

  struct Child {
    double value = 0.0;
    std::string dir;
    std::string status = "ok";
    std::string error;
    json report;
  };
  std::vector<Child> children(vals.size());

  auto run_child = [&](std::size_t idx) {
    Child& child = children[idx];
    child.value = vals[idx];
    json cfg_json = base_cfg_json;
    cfg_json["loss"][ax] = vals[idx];
    child.dir = out_dir + "/" + ax + "-" + value_label(vals[idx]);
    try {
      const TrainOutcome outcome =
          train_into_dir(data_base, cfg_json, child.dir, seed_override);
      std::vector<std::string> outputs = outcome.outputs;
      child.report = evaluate_into_dir(child.dir + "/checkpoint", outcome.cfg.eval_dataset,
                                       outcome.cfg.eval, child.dir, outputs);
      write_manifest(child.dir, "train+evaluate", outcome.cfg.train.seed,
                     {{"dataset", dataset_entry(data_base)},
                      {"eval_dataset", dataset_entry(outcome.cfg.eval_dataset)}},
                     run_config_to_json(outcome.cfg), outputs, 0.0);
    } catch (const std::exception& e) {
      child.status = "failed";
      child.error = e.what();
    }
  };

  const std::size_t workers = sweep_thread_cap(vals.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < vals.size(); ++i) run_child(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < vals.size(); i = next.fetch_add(1))
          run_child(i);
      });
    for (auto& t : pool) t.join();
  }

  // Summary rows in value order: value, per-group accuracy, avg, std, delta per gamma.
  std::ostringstream csv;
  std::vector<std::string> group_names;
  for (const auto& child : children)
    if (child.status == "ok") {
      for (const auto& g : child.report.at("groups")) group_names.push_back(g.get<std::string>());
      break;
    }
  csv << "value";
  for (const auto& g : group_names) csv << ",acc_" << g;
  csv << ",acc_avg,acc_std";
  for (double g : base_cfg.eval.gammas) csv << ",delta@" << format_g17(g);
  csv << "\n";
  for (const auto& child : children) {
    if (child.status != "ok") continue;
    csv << format_g17(child.value);
    for (const auto& g : group_names)
      csv << "," << format_g17(child.report.at("accuracy").at("per_group").at(g).get<double>());
    csv << "," << format_g17(child.report.at("accuracy").at("avg").get<double>());
    csv << "," << format_g17(child.report.at("accuracy").at("std").get<double>());
    for (const auto& level : child.report.at("levels"))
      csv << "," << format_g17(level.at("bias_degree").get<double>());
    csv << "\n";
  }
  write_text_file(out_dir + "/summary.csv", csv.str());

  json children_json = json::array();
  std::size_t failed = 0;
  for (const auto& child : children) {
    json c = {{"value", child.value}, {"dir", child.dir}, {"status", child.status}};
    if (!child.error.empty()) {
      c["error"] = child.error;
      ++failed;
    }
    children_json.push_back(c);
  }
  json resolved = run_config_to_json(base_cfg);
  resolved["sweep_axis"] = ax;
  resolved["sweep_values"] = vals;
  write_manifest(out_dir, "sweep", seed_override.value_or(base_cfg.train.seed),
                 {{"config", file_entry(config_path)}, {"dataset", dataset_entry(data_base)}},
                 resolved, {"summary.csv"}, watch.seconds(), failed ? "partial" : "ok",
                 json{{"children", children_json}});
  if (failed)
    throw SweepPartialError(std::to_string(failed) + " of " + std::to_string(vals.size()) +
                            " sweep children failed; see " + out_dir + "/manifest.json");
}

}  // namespace fairfpr
