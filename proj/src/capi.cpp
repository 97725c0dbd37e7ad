#include "fairfpr.h"

#include <cstring>
#include <new>
#include <string>

#include "fairfpr/config.hpp"
#include "fairfpr/error.hpp"
#include "fairfpr/runner.hpp"
#include "fairfpr/synthdata.hpp"
#include "fairfpr/textio.hpp"
#include "fairfpr/trainer.hpp"

struct ff_dataset {
  fairfpr::Dataset value;
};

struct ff_model {
  fairfpr::TrainState value;
};

namespace {

thread_local std::string g_last_error;

ff_status fail(ff_status code, const char* what) {
  g_last_error = what;
  return code;
}

template <typename Fn>
ff_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return FF_OK;
  } catch (const fairfpr::SweepPartialError& e) {
    return fail(FF_ERR_PARTIAL, e.what());
  } catch (const fairfpr::DivergenceError& e) {
    return fail(FF_ERR_DIVERGED, e.what());
  } catch (const fairfpr::IncompatibleError& e) {
    return fail(FF_ERR_INCOMPATIBLE, e.what());
  } catch (const fairfpr::ConfigError& e) {
    return fail(FF_ERR_CONFIG, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(FF_ERR_CONFIG, e.what());
  } catch (const std::exception& e) {
    return fail(FF_ERROR, e.what());
  }
}

std::optional<std::uint64_t> seed_opt(int64_t seed) {
  if (seed < 0) return std::nullopt;
  return static_cast<std::uint64_t>(seed);
}

std::vector<double> to_vector(const double* values, size_t n) {
  return values ? std::vector<double>(values, values + n) : std::vector<double>{};
}

}  // namespace

extern "C" {

const char* ff_version(void) { return "0.1.0"; }

const char* ff_last_error(void) { return g_last_error.c_str(); }

ff_status ff_dataset_generate(const char* spec_json, ff_dataset** out) {
  if (!spec_json || !out) return fail(FF_ERR_CONFIG, "null argument");
  return guarded([&] {
    const auto cfg =
        fairfpr::parse_generate_config(fairfpr::parse_json(spec_json, "generate config"));
    *out = new ff_dataset{fairfpr::generate(cfg.groups, cfg.raw_dim, cfg.seed)};
  });
}

ff_status ff_dataset_load(const char* path_base, ff_dataset** out) {
  if (!path_base || !out) return fail(FF_ERR_CONFIG, "null argument");
  return guarded([&] { *out = new ff_dataset{fairfpr::load(path_base)}; });
}

ff_status ff_dataset_save(const ff_dataset* d, const char* path_base) {
  if (!d || !path_base) return fail(FF_ERR_CONFIG, "null argument");
  return guarded([&] { fairfpr::save(d->value, path_base); });
}

ff_status ff_dataset_split(const ff_dataset* d, size_t holdout_identities_per_group, uint64_t seed,
                           ff_dataset** train_out, ff_dataset** eval_out) {
  if (!d || !train_out || !eval_out) return fail(FF_ERR_CONFIG, "null argument");
  return guarded([&] {
    auto [train_part, eval_part] = fairfpr::split(d->value, holdout_identities_per_group, seed);
    *train_out = new ff_dataset{std::move(train_part)};
    *eval_out = new ff_dataset{std::move(eval_part)};
  });
}

size_t ff_dataset_rows(const ff_dataset* d) { return d ? d->value.size() : 0; }

size_t ff_dataset_classes(const ff_dataset* d) {
  return d ? static_cast<size_t>(d->value.class_count()) : 0;
}

void ff_dataset_free(ff_dataset* d) { delete d; }

ff_status ff_train(const ff_dataset* d, const char* config_json, ff_model** out) {
  if (!d || !config_json || !out) return fail(FF_ERR_CONFIG, "null argument");
  return guarded([&] {
    const auto cfg = fairfpr::parse_run_config(fairfpr::parse_json(config_json, "train config"));
    *out = new ff_model{fairfpr::train(d->value, cfg.train).state};
  });
}

ff_status ff_model_load(const char* path_base, ff_model** out) {
  if (!path_base || !out) return fail(FF_ERR_CONFIG, "null argument");
  return guarded([&] { *out = new ff_model{fairfpr::checkpoint_load(path_base)}; });
}

ff_status ff_model_save(const ff_model* m, const char* path_base) {
  if (!m || !path_base) return fail(FF_ERR_CONFIG, "null argument");
  return guarded([&] { fairfpr::checkpoint_save(m->value, path_base); });
}

size_t ff_model_embed_dim(const ff_model* m) { return m ? m->value.encoder.embed_dim : 0; }

void ff_model_free(ff_model* m) { delete m; }

ff_status ff_evaluate_json(const ff_model* m, const ff_dataset* d, const double* gammas,
                           size_t n_gammas, char** report_json_out) {
  if (!m || !d || !gammas || n_gammas == 0 || !report_json_out)
    return fail(FF_ERR_CONFIG, "null argument");
  return guarded([&] {
    const auto report = fairfpr::evaluate(m->value, d->value, to_vector(gammas, n_gammas));
    const std::string text = fairfpr::report_to_json_string(report);
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *report_json_out = buf;
  });
}

void ff_string_free(char* s) { delete[] s; }

ff_status ff_run_generate(const char* config_path, const char* out_dir, int64_t seed) {
  if (!config_path || !out_dir) return fail(FF_ERR_CONFIG, "null argument");
  return guarded([&] { fairfpr::run_generate(config_path, out_dir, seed_opt(seed)); });
}

ff_status ff_run_train(const char* dataset_base, const char* config_path, const char* out_dir,
                       int64_t seed) {
  if (!config_path || !out_dir) return fail(FF_ERR_CONFIG, "null argument");
  return guarded([&] {
    fairfpr::run_train(dataset_base ? dataset_base : "", config_path, out_dir, seed_opt(seed));
  });
}

ff_status ff_run_evaluate(const char* checkpoint_base, const char* dataset_base,
                          const double* gammas, size_t n_gammas, const char* out_dir,
                          int64_t pair_seed, const char* config_path) {
  if (!out_dir) return fail(FF_ERR_CONFIG, "null argument");
  return guarded([&] {
    fairfpr::run_evaluate(checkpoint_base ? checkpoint_base : "",
                          dataset_base ? dataset_base : "", to_vector(gammas, n_gammas), out_dir,
                          seed_opt(pair_seed), config_path ? config_path : "");
  });
}

ff_status ff_run_sweep(const char* dataset_base, const char* config_path, const char* axis,
                       const double* values, size_t n_values, const char* out_dir, int64_t seed) {
  if (!config_path || !out_dir) return fail(FF_ERR_CONFIG, "null argument");
  return guarded([&] {
    fairfpr::run_sweep(dataset_base ? dataset_base : "", config_path, axis ? axis : "",
                       to_vector(values, n_values), out_dir, seed_opt(seed));
  });
}

}  // extern "C"
