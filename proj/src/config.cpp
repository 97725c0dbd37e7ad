#include "fairfpr/config.hpp"

#include <set>

#include "fairfpr/error.hpp"
#include "fairfpr/textio.hpp"

namespace fairfpr {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: bad value for '") + key + "'");
  }
}

}  // namespace

GenerateConfig default_benchmark_config() {
  GenerateConfig cfg;
  cfg.raw_dim = 32;
  cfg.seed = 1;
  const std::vector<std::pair<std::string, double>> groups = {
      {"a", 0.2}, {"b", 0.5}, {"c", 0.8}, {"d", 1.2}};
  for (const auto& [name, concentration] : groups)
    cfg.groups.push_back({name, 32, 16, 0.30, concentration});
  return cfg;
}

GenerateConfig parse_generate_config(const json& j) {
  check_keys(j, {"schema_version", "seed", "raw_dim", "groups", "holdout_identities_per_group",
                 "split_seed"},
             "generate config");
  GenerateConfig cfg;
  cfg.seed = get_or<std::uint64_t>(j, "seed", 1);
  cfg.raw_dim = get_or<std::size_t>(j, "raw_dim", 32);
  if (!j.contains("groups")) throw ConfigError("generate config: missing 'groups'");
  for (const auto& g : j.at("groups")) {
    check_keys(g, {"group", "identities", "samples_per_identity", "intra_spread",
                   "center_concentration"},
               "generate config group");
    GroupSpec spec;
    spec.group_id = get_or<std::string>(g, "group", "");
    spec.identity_count = get_or<std::size_t>(g, "identities", 0);
    spec.samples_per_identity = get_or<std::size_t>(g, "samples_per_identity", 0);
    spec.intra_spread = get_or<double>(g, "intra_spread", 0.0);
    spec.center_concentration = get_or<double>(g, "center_concentration", 0.0);
    cfg.groups.push_back(spec);
  }
  if (j.contains("holdout_identities_per_group"))
    cfg.holdout_identities_per_group = j.at("holdout_identities_per_group").get<std::size_t>();
  cfg.split_seed = get_or<std::uint64_t>(j, "split_seed", cfg.seed);
  validate(cfg.groups);
  return cfg;
}

json generate_config_to_json(const GenerateConfig& cfg) {
  json j;
  j["schema_version"] = 1;
  j["seed"] = cfg.seed;
  j["raw_dim"] = cfg.raw_dim;
  j["groups"] = json::array();
  for (const auto& g : cfg.groups)
    j["groups"].push_back({{"group", g.group_id},
                           {"identities", g.identity_count},
                           {"samples_per_identity", g.samples_per_identity},
                           {"intra_spread", g.intra_spread},
                           {"center_concentration", g.center_concentration}});
  if (cfg.holdout_identities_per_group)
    j["holdout_identities_per_group"] = *cfg.holdout_identities_per_group;
  j["split_seed"] = cfg.split_seed;
  return j;
}

EvalSettings parse_eval_settings(const json& j) {
  EvalSettings cfg;
  cfg.gammas = get_or<std::vector<double>>(j, "eval_gammas", cfg.gammas);
  cfg.max_pairs_per_group =
      get_or<std::size_t>(j, "eval_max_pairs_per_group", cfg.max_pairs_per_group);
  cfg.pair_seed = get_or<std::uint64_t>(j, "eval_pair_seed", cfg.pair_seed);
  cfg.roc_points = get_or<std::size_t>(j, "eval_roc_points", cfg.roc_points);
  if (cfg.gammas.empty()) throw ConfigError("config: eval_gammas must be non-empty");
  return cfg;
}

json eval_settings_to_json(const EvalSettings& cfg) {
  return {{"eval_gammas", cfg.gammas},
          {"eval_max_pairs_per_group", cfg.max_pairs_per_group},
          {"eval_pair_seed", cfg.pair_seed},
          {"eval_roc_points", cfg.roc_points}};
}

RunConfig parse_run_config(const json& j) {
  check_keys(j,
             {"schema_version", "loss", "epochs", "batch_size", "learning_rate", "lr_schedule",
              "momentum", "weight_decay", "seed", "threshold_momentum", "telemetry_every",
              "encoder", "eval_dataset", "eval_gammas", "eval_max_pairs_per_group",
              "eval_pair_seed", "eval_roc_points", "sweep_axis", "sweep_values"},
             "train config");
  RunConfig cfg;
  TrainConfig& t = cfg.train;
  if (j.contains("loss")) {
    const json& l = j.at("loss");
    check_keys(l, {"kind", "s", "m", "alpha", "p", "gamma_u"}, "loss config");
    if (l.contains("kind")) t.loss.kind = loss_kind_from_string(l.at("kind").get<std::string>());
    t.loss.s = get_or<double>(l, "s", t.loss.s);
    t.loss.m = get_or<double>(l, "m", t.loss.m);
    t.loss.alpha = get_or<double>(l, "alpha", t.loss.alpha);
    t.loss.p = get_or<double>(l, "p", t.loss.p);
    t.loss.gamma_u = get_or<double>(l, "gamma_u", t.loss.gamma_u);
  }
  t.epochs = get_or<std::size_t>(j, "epochs", t.epochs);
  t.batch_size = get_or<std::size_t>(j, "batch_size", t.batch_size);
  t.learning_rate = get_or<double>(j, "learning_rate", t.learning_rate);
  if (j.contains("lr_schedule")) {
    t.lr_schedule.clear();
    for (const auto& s : j.at("lr_schedule")) {
      check_keys(s, {"epoch", "divide_by"}, "lr_schedule entry");
      t.lr_schedule.push_back(
          {get_or<std::size_t>(s, "epoch", 0), get_or<double>(s, "divide_by", 10.0)});
    }
  }
  t.momentum = get_or<double>(j, "momentum", t.momentum);
  t.weight_decay = get_or<double>(j, "weight_decay", t.weight_decay);
  t.seed = get_or<std::uint64_t>(j, "seed", t.seed);
  t.threshold_momentum = get_or<double>(j, "threshold_momentum", t.threshold_momentum);
  t.telemetry_every = get_or<std::size_t>(j, "telemetry_every", t.telemetry_every);
  if (j.contains("encoder")) {
    const json& e = j.at("encoder");
    check_keys(e, {"hidden_dims", "embed_dim"}, "encoder config");
    t.hidden_dims = get_or<std::vector<std::size_t>>(e, "hidden_dims", t.hidden_dims);
    t.embed_dim = get_or<std::size_t>(e, "embed_dim", t.embed_dim);
  }
  cfg.eval_dataset = get_or<std::string>(j, "eval_dataset", "");
  cfg.eval = parse_eval_settings(j);
  try {
    validate(cfg.train);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
  const TrainConfig& t = cfg.train;
  json j;
  j["schema_version"] = 1;
  j["loss"] = {{"kind", to_string(t.loss.kind)}, {"s", t.loss.s},       {"m", t.loss.m},
               {"alpha", t.loss.alpha},          {"p", t.loss.p},       {"gamma_u", t.loss.gamma_u}};
  j["epochs"] = t.epochs;
  j["batch_size"] = t.batch_size;
  j["learning_rate"] = t.learning_rate;
  j["lr_schedule"] = json::array();
  for (const auto& s : t.lr_schedule)
    j["lr_schedule"].push_back({{"epoch", s.epoch}, {"divide_by", s.divide_by}});
  j["momentum"] = t.momentum;
  j["weight_decay"] = t.weight_decay;
  j["seed"] = t.seed;
  j["threshold_momentum"] = t.threshold_momentum;
  j["telemetry_every"] = t.telemetry_every;
  j["encoder"] = {{"hidden_dims", t.hidden_dims}, {"embed_dim", t.embed_dim}};
  if (!cfg.eval_dataset.empty()) j["eval_dataset"] = cfg.eval_dataset;
  j.update(eval_settings_to_json(cfg.eval));
  return j;
}

json load_config_file(const std::string& path, json* manifest_out) {
  const json j = parse_json_file(path);
  if (j.is_object() && j.value("kind", "") == "fairfpr-manifest") {
    if (manifest_out) *manifest_out = j;
    if (!j.contains("resolved_config"))
      throw ConfigError(path + ": manifest has no resolved_config");
    return j.at("resolved_config");
  }
  if (manifest_out) *manifest_out = json();
  return j;
}

}  // namespace fairfpr
