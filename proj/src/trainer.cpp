#include "fairfpr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fairfpr/error.hpp"
#include "fairfpr/rng.hpp"
#include "fairfpr/textio.hpp"
#include "fairfpr/thresholding.hpp"

namespace fairfpr {

using nlohmann::json;

void validate(const TrainConfig& cfg) {
  validate(cfg.loss);
  if (cfg.batch_size < 2) throw ConfigError("train config: batch_size must be >= 2");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("train config: learning_rate must be > 0");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
    throw ConfigError("train config: momentum must be in [0, 1)");
  if (!(cfg.weight_decay >= 0.0)) throw ConfigError("train config: weight_decay must be >= 0");
  if (!(cfg.threshold_momentum >= 0.0 && cfg.threshold_momentum < 1.0))
    throw ConfigError("train config: threshold_momentum must be in [0, 1)");
  if (cfg.telemetry_every < 1) throw ConfigError("train config: telemetry_every must be >= 1");
  if (cfg.embed_dim < 1) throw ConfigError("train config: embed_dim must be >= 1");
}

namespace {

void sgd_step(Matrix& param, Matrix& buf, const Matrix& grad, double lr, double momentum,
              double weight_decay) {
  for (std::size_t i = 0; i < param.data().size(); ++i) {
    const double g = grad.data()[i] + weight_decay * param.data()[i];
    buf.data()[i] = momentum * buf.data()[i] + g;
    param.data()[i] -= lr * buf.data()[i];
  }
}

void sgd_step(std::vector<double>& param, std::vector<double>& buf,
              const std::vector<double>& grad, double lr, double momentum) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    buf[i] = momentum * buf[i] + grad[i];
    param[i] -= lr * buf[i];
  }
}

double fraction_above(const LogitsBatch& batch, double t) {
  std::size_t above = 0, total = 0;
  for (std::size_t i = 0; i < batch.batch_size(); ++i) {
    const auto y = static_cast<std::size_t>(batch.labels[i]);
    for (std::size_t j = 0; j < batch.class_count(); ++j) {
      if (j == y) continue;
      ++total;
      if (batch.cosines(i, j) > t) ++above;
    }
  }
  return total ? static_cast<double>(above) / static_cast<double>(total) : 0.0;
}

}  // namespace

TelemetryRecord telemetry_snapshot(std::size_t iteration, std::size_t epoch, double loss,
                                   double learning_rate, const ThresholdEstimate& threshold,
                                   const std::vector<double>& instance_fprs,
                                   const std::vector<std::string>& batch_groups) {
  if (instance_fprs.size() != batch_groups.size())
    throw std::invalid_argument("telemetry_snapshot: fprs/groups size mismatch");
  TelemetryRecord r;
  r.iteration = iteration;
  r.epoch = epoch;
  r.loss = loss;
  r.learning_rate = learning_rate;
  r.t_u = threshold.t_u;
  r.realized_fpr = threshold.realized_fpr;

  std::map<std::string, std::pair<double, std::size_t>> acc;
  std::size_t positive = 0;
  for (std::size_t i = 0; i < instance_fprs.size(); ++i) {
    auto& [sum, count] = acc[batch_groups[i]];
    sum += instance_fprs[i];
    ++count;
    if (instance_fprs[i] > 0.0) ++positive;
  }
  for (const auto& [g, sc] : acc) r.group_instance_fpr[g] = sc.first / static_cast<double>(sc.second);
  r.instance_fpr_std = population_std(instance_fprs);
  r.frac_positive_fpr =
      instance_fprs.empty() ? 0.0
                            : static_cast<double>(positive) / static_cast<double>(instance_fprs.size());
  return r;
}

std::string telemetry_to_json_line(const TelemetryRecord& r) {
  json j = {{"iteration", r.iteration},
            {"epoch", r.epoch},
            {"loss", r.loss},
            {"learning_rate", r.learning_rate},
            {"t_u", r.t_u},
            {"realized_fpr", r.realized_fpr},
            {"group_instance_fpr", r.group_instance_fpr},
            {"instance_fpr_std", r.instance_fpr_std},
            {"frac_positive_fpr", r.frac_positive_fpr}};
  return j.dump();
}

TrainResult train(const Dataset& dataset, const TrainConfig& cfg, const TelemetrySink& sink) {
  validate(cfg);
  if (dataset.size() == 0) throw ConfigError("train: empty dataset");
  if (cfg.batch_size > dataset.size())
    throw ConfigError("train: batch_size exceeds dataset size");
  const auto c = static_cast<std::size_t>(dataset.class_count());
  if (c < 2) throw ConfigError("train: need at least 2 classes");

  TrainResult result;
  TrainState& st = result.state;
  st.seed = cfg.seed;
  st.encoder = encoder_init(dataset.raw_dim(), cfg.hidden_dims, cfg.embed_dim,
                            Rng(cfg.seed).split("encoder").state());
  st.encoder_momentum = zero_grads_like(st.encoder);

  Rng wrng = Rng(cfg.seed).split("classifier");
  const double wstd = 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim));
  st.class_weights = Matrix(cfg.embed_dim, c);
  for (double& x : st.class_weights.data()) x = wstd * wrng.next_normal();
  st.class_weights_momentum = Matrix(cfg.embed_dim, c);

  Rng shuffle_rng = Rng(cfg.seed).split("shuffle");
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batches_per_epoch = dataset.size() / cfg.batch_size;
  if (batches_per_epoch == 0) throw ConfigError("train: batch_size larger than dataset");

  std::optional<double> smoothed_t;
  TelemetryRecord last_record;
  const bool penalty = is_penalty_kind(cfg.loss.kind);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double lr = cfg.learning_rate;
    for (const auto& step : cfg.lr_schedule)
      if (epoch >= step.epoch) lr /= step.divide_by;

    for (std::size_t i = dataset.size() - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.next_u64() % (i + 1)]);

    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      Matrix features(cfg.batch_size, dataset.raw_dim());
      std::vector<int> labels(cfg.batch_size);
      std::vector<std::string> groups(cfg.batch_size);
      for (std::size_t r = 0; r < cfg.batch_size; ++r) {
        const std::size_t src = order[b * cfg.batch_size + r];
        std::copy(dataset.features.row(src).begin(), dataset.features.row(src).end(),
                  features.row(r).begin());
        labels[r] = dataset.identity_labels[src];
        groups[r] = dataset.group_labels[src];
      }

      try {
        const ForwardTrace trace = encoder_forward(st.encoder, features);
        const Matrix w_norm = l2_normalize_columns(st.class_weights);
        const LogitsBatch batch = cosine_logits(trace.embeddings, w_norm, labels);

        ThresholdEstimate thr = estimate_threshold(batch, cfg.loss.gamma_u);
        if (cfg.threshold_momentum > 0.0) {
          thr.t_u = smoothed_threshold(smoothed_t, thr, cfg.threshold_momentum);
          thr.realized_fpr = fraction_above(batch, thr.t_u);
        }
        smoothed_t = thr.t_u;

        LossOutput out;
        std::vector<double> fprs;
        if (penalty) {
          out = loss_forward(batch, cfg.loss, thr);
          fprs = out.penalty->instance_fpr;
        } else {
          out = loss_forward(batch, cfg.loss, std::nullopt);
          // Telemetry-only bookkeeping; nothing feeds back into the loss.
          fprs = instance_fpr(batch, thr, cfg.loss.p).instance_fpr;
        }
        if (!std::isfinite(out.loss)) throw std::runtime_error("non-finite loss");

        const Matrix grad_cos = loss_backward(batch, cfg.loss, out);
        auto [grad_w, grad_emb] = classifier_grads(trace.embeddings, st.class_weights, grad_cos);
        auto [enc_grads, grad_in] = encoder_backward(st.encoder, trace, grad_emb);
        (void)grad_in;

        for (std::size_t l = 0; l < st.encoder.weights.size(); ++l) {
          sgd_step(st.encoder.weights[l], st.encoder_momentum.weights[l], enc_grads.weights[l],
                   lr, cfg.momentum, cfg.weight_decay);
          sgd_step(st.encoder.biases[l], st.encoder_momentum.biases[l], enc_grads.biases[l], lr,
                   cfg.momentum);
        }
        sgd_step(st.class_weights, st.class_weights_momentum, grad_w, lr, cfg.momentum,
                 cfg.weight_decay);

        if (st.iteration % cfg.telemetry_every == 0) {
          last_record = telemetry_snapshot(st.iteration, epoch, out.loss, lr, thr, fprs, groups);
          result.telemetry.push_back(last_record);
          if (sink) sink(last_record);
        }
      } catch (const std::runtime_error& e) {
        throw DivergenceError("training diverged at iteration " + std::to_string(st.iteration) +
                              ": " + e.what() + "; last telemetry: " +
                              telemetry_to_json_line(last_record));
      }
      ++st.iteration;
    }
    st.epoch = epoch + 1;
  }
  return result;
}

FairnessReport evaluate(const TrainState& state, const Dataset& eval_set,
                        const std::vector<double>& gammas, const EvalOptions& opts) {
  if (eval_set.size() == 0) throw std::invalid_argument("evaluate: empty eval set");
  if (eval_set.raw_dim() != state.encoder.raw_dim)
    throw IncompatibleError("evaluate: dataset raw_dim " + std::to_string(eval_set.raw_dim()) +
                            " does not match encoder raw_dim " +
                            std::to_string(state.encoder.raw_dim));
  const ForwardTrace trace = encoder_forward(state.encoder, eval_set.features);
  const GroupedScores scores =
      build_pairs(trace.embeddings, eval_set.identity_labels, eval_set.group_labels,
                  opts.max_pairs_per_group, opts.pair_seed);
  return build_report(scores, gammas, opts.roc_points);
}

namespace {

void write_block(std::ostringstream& csv, const std::string& name, const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    csv << name << "," << i;
    for (double x : m.row(i)) csv << "," << format_g17(x);
    csv << "\n";
  }
}

}  // namespace

void checkpoint_save(const TrainState& state, const std::string& path_base) {
  json meta;
  meta["schema_version"] = 1;
  meta["kind"] = "fairfpr-checkpoint";
  meta["raw_dim"] = state.encoder.raw_dim;
  meta["embed_dim"] = state.encoder.embed_dim;
  json hidden = json::array();
  for (std::size_t l = 0; l + 1 < state.encoder.weights.size(); ++l)
    hidden.push_back(state.encoder.weights[l].cols());
  meta["hidden_dims"] = hidden;
  meta["classes"] = state.class_weights.cols();
  meta["seed"] = state.seed;
  meta["epoch"] = state.epoch;
  meta["iteration"] = state.iteration;
  write_text_file(path_base + ".json", meta.dump(2) + "\n");

  std::ostringstream csv;
  csv << "block,row,values...\n";
  for (std::size_t l = 0; l < state.encoder.weights.size(); ++l) {
    write_block(csv, "encoder.w" + std::to_string(l), state.encoder.weights[l]);
    csv << "encoder.b" << l << ",0";
    for (double x : state.encoder.biases[l]) csv << "," << format_g17(x);
    csv << "\n";
  }
  write_block(csv, "classifier.weight", state.class_weights);
  write_text_file(path_base + ".weights.csv", csv.str());
}

TrainState checkpoint_load(const std::string& path_base) {
  const std::string meta_path = path_base + ".json";
  const json meta = parse_json_file(meta_path);
  if (!meta.is_object() || meta.value("kind", "") != "fairfpr-checkpoint")
    throw ParseError(meta_path + ": not a fairfpr checkpoint");

  TrainState st;
  const auto raw_dim = meta.at("raw_dim").get<std::size_t>();
  const auto embed_dim = meta.at("embed_dim").get<std::size_t>();
  const auto hidden = meta.at("hidden_dims").get<std::vector<std::size_t>>();
  const auto classes = meta.at("classes").get<std::size_t>();
  st.seed = meta.at("seed").get<std::uint64_t>();
  st.epoch = meta.at("epoch").get<std::size_t>();
  st.iteration = meta.at("iteration").get<std::size_t>();

  std::vector<std::size_t> dims;
  dims.push_back(raw_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(embed_dim);
  st.encoder.raw_dim = raw_dim;
  st.encoder.embed_dim = embed_dim;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    st.encoder.weights.emplace_back(dims[l], dims[l + 1]);
    st.encoder.biases.emplace_back(dims[l + 1], 0.0);
  }
  st.class_weights = Matrix(embed_dim, classes);

  const std::string csv_path = path_base + ".weights.csv";
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + csv_path);
  std::string line;
  std::size_t lineno = 0;
  std::getline(in, line);  // header
  ++lineno;
  std::set<std::string> blocks_seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    const std::string ctx = csv_path + ":" + std::to_string(lineno);
    if (fields.size() < 3) throw ParseError(ctx + ": expected block,row,values");
    const std::string& block = fields[0];
    const auto row = static_cast<std::size_t>(parse_int(fields[1], ctx + " row"));
    blocks_seen.insert(block);

    Matrix* target = nullptr;
    std::vector<double>* bias = nullptr;
    if (block == "classifier.weight") {
      target = &st.class_weights;
    } else if (block.rfind("encoder.w", 0) == 0) {
      const auto l = static_cast<std::size_t>(parse_int(block.substr(9), ctx + " layer"));
      if (l >= st.encoder.weights.size()) throw ParseError(ctx + ": unknown layer block " + block);
      target = &st.encoder.weights[l];
    } else if (block.rfind("encoder.b", 0) == 0) {
      const auto l = static_cast<std::size_t>(parse_int(block.substr(9), ctx + " layer"));
      if (l >= st.encoder.biases.size()) throw ParseError(ctx + ": unknown layer block " + block);
      bias = &st.encoder.biases[l];
    } else {
      throw ParseError(ctx + ": unknown block '" + block + "'");
    }

    if (target) {
      if (row >= target->rows() || fields.size() != target->cols() + 2)
        throw ParseError(ctx + ": block " + block + " shape mismatch");
      for (std::size_t j = 0; j < target->cols(); ++j)
        (*target)(row, j) = parse_double(fields[2 + j], ctx);
    } else {
      if (row != 0 || fields.size() != bias->size() + 2)
        throw ParseError(ctx + ": block " + block + " shape mismatch");
      for (std::size_t j = 0; j < bias->size(); ++j) (*bias)[j] = parse_double(fields[2 + j], ctx);
    }
  }
  const std::size_t expected_blocks = 2 * st.encoder.weights.size() + 1;
  if (blocks_seen.size() != expected_blocks)
    throw ParseError(csv_path + ": truncated: expected " + std::to_string(expected_blocks) +
                     " blocks, found " + std::to_string(blocks_seen.size()));

  st.encoder_momentum = zero_grads_like(st.encoder);
  st.class_weights_momentum = Matrix(embed_dim, classes);
  return st;
}

}  // namespace fairfpr
