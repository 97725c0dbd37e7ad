#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fairfpr/encoder.hpp"
#include "fairfpr/losses.hpp"
#include "fairfpr/metrics.hpp"
#include "fairfpr/synthdata.hpp"

namespace fairfpr {

struct LrStep {
  std::size_t epoch = 0;     // 0-based epoch at which the division takes effect
  double divide_by = 10.0;
};

struct TrainConfig {
  LossConfig loss;
  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  double learning_rate = 0.1;
  std::vector<LrStep> lr_schedule = {{15, 10.0}, {24, 10.0}};
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::uint64_t seed = 1;
  double threshold_momentum = 0.0;  // 0 = fresh per-iteration threshold
  std::size_t telemetry_every = 1;
  std::vector<std::size_t> hidden_dims = {64, 64};
  std::size_t embed_dim = 32;
};

void validate(const TrainConfig& cfg);

struct TrainState {
  EncoderParams encoder;
  Matrix class_weights;   // embed_dim x c, stored unnormalized
  EncoderGrads encoder_momentum;
  Matrix class_weights_momentum;
  std::size_t epoch = 0;
  std::size_t iteration = 0;
  std::uint64_t seed = 0;
};

struct TelemetryRecord {
  std::size_t iteration = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
  double learning_rate = 0.0;
  double t_u = 0.0;
  double realized_fpr = 0.0;                       // over the batch non-target pool
  std::map<std::string, double> group_instance_fpr;  // mean instance FPR per group
  double instance_fpr_std = 0.0;                   // across batch samples
  double frac_positive_fpr = 0.0;                  // samples with instance FPR > 0
};

TelemetryRecord telemetry_snapshot(std::size_t iteration, std::size_t epoch, double loss,
                                   double learning_rate, const ThresholdEstimate& threshold,
                                   const std::vector<double>& instance_fprs,
                                   const std::vector<std::string>& batch_groups);

std::string telemetry_to_json_line(const TelemetryRecord& r);

struct TrainResult {
  TrainState state;
  std::vector<TelemetryRecord> telemetry;
};

using TelemetrySink = std::function<void(const TelemetryRecord&)>;

/// Mini-batch SGD with momentum and weight decay. Per iteration: encoder
/// forward, fresh column normalization of the class weights, cosine logits,
/// threshold estimate over the batch non-target pool, loss forward/backward,
/// parameter update. Baseline kinds still estimate the threshold and record
/// instance-FPR telemetry; only penalty kinds feed it into the loss.
/// Fully deterministic in (dataset, cfg). Throws DivergenceError when the
/// loss turns non-finite, with the last telemetry record in the message.
TrainResult train(const Dataset& dataset, const TrainConfig& cfg, const TelemetrySink& sink = {});

struct EvalOptions {
  std::size_t max_pairs_per_group = 20000;
  std::uint64_t pair_seed = 0x5eedfa17;
  std::size_t roc_points = 64;
};

/// Embeds the eval set and reports verification metrics at each requested
/// overall FPR.
FairnessReport evaluate(const TrainState& state, const Dataset& eval_set,
                        const std::vector<double>& gammas, const EvalOptions& opts = {});

/// `<base>.json` (dims, seed, counters) + `<base>.weights.csv` (one block per
/// tensor). checkpoint_load(checkpoint_save(s)) restores parameters exactly;
/// momentum buffers are not persisted.
void checkpoint_save(const TrainState& state, const std::string& path_base);
TrainState checkpoint_load(const std::string& path_base);

}  // namespace fairfpr
