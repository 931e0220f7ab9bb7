#include "sptrim/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sptrim/optim.hpp"
#include "sptrim/rng.hpp"

namespace sptrim {

Method parse_method(const std::string& name) {
  if (name == "gl") return Method::gl;
  if (name == "rgsm") return Method::rgsm;
  if (name == "gsbc") return Method::gsbc;
  if (name == "bc") return Method::bc;
  if (name == "blended_bc") return Method::blended_bc;
  if (name == "sgd") return Method::sgd;
  throw ConfigError("unknown method: " + name);
}

const char* method_name(Method m) {
  switch (m) {
    case Method::gl: return "gl";
    case Method::rgsm: return "rgsm";
    case Method::gsbc: return "gsbc";
    case Method::bc: return "bc";
    case Method::blended_bc: return "blended_bc";
    case Method::sgd: return "sgd";
  }
  return "?";
}

void StageConfig::validate(int stage) const {
  if (!(eta > 0.0)) throw ConfigError("stage config: eta must be > 0");
  if (epochs == 0) throw ConfigError("stage config: epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("stage config: batch_size must be >= 1");
  if (lambda < 0.0 || beta < 0.0 || mu < 0.0)
    throw ConfigError("stage config: lambda, beta, mu must be >= 0");
  if (rho < 0.0 || rho > 1.0)
    throw ConfigError("stage config: rho must be in [0, 1]");
  switch (stage) {
    case 1:
      if (method == Method::gl) {
        if (!(mu > 0.0) || lambda != 0.0 || beta != 0.0)
          throw ConfigError("gl requires mu > 0, lambda = 0, beta = 0");
      } else if (method == Method::rgsm) {
        if (!(lambda > 0.0) || !(beta > 0.0) || mu != 0.0)
          throw ConfigError("rgsm requires lambda > 0, beta > 0, mu = 0");
      } else if (method == Method::gsbc) {
        if (!(lambda > 0.0) || beta != 0.0 || mu != 0.0)
          throw ConfigError("gsbc requires lambda > 0, beta = 0, mu = 0");
      } else {
        throw ConfigError("stage 1 requires method gl, rgsm or gsbc");
      }
      break;
    case 2:
      if (method != Method::sgd)
        throw ConfigError("stage 2 requires method sgd");
      if (lambda != 0.0 || beta != 0.0 || mu != 0.0)
        throw ConfigError("sgd requires lambda = beta = mu = 0");
      break;
    case 3:
      if (method != Method::bc && method != Method::blended_bc)
        throw ConfigError("stage 3 requires method bc or blended_bc");
      if (lambda != 0.0 || beta != 0.0 || mu != 0.0)
        throw ConfigError("binarization requires lambda = beta = mu = 0");
      if (method == Method::bc && rho != 0.0)
        throw ConfigError("bc requires rho = 0 (use blended_bc)");
      break;
    default:
      throw ConfigError("stage must be 1, 2 or 3");
  }
}

double lr_at_epoch(const StageConfig& config, std::size_t epoch) {
  if (config.lr_drop_epoch > 0 && epoch >= config.lr_drop_epoch)
    return config.eta / 10.0;
  return config.eta;
}

namespace {

std::vector<Tensor> params_vec(const Model& model) {
  return {model.params.begin(), model.params.end()};
}

void set_params(Model& model, const std::vector<Tensor>& v) {
  for (std::size_t i = 0; i < kNumParamTensors; ++i) model.params[i] = v[i];
}

std::vector<Tensor> grads_vec(BatchGrads&& bg) {
  return {std::make_move_iterator(bg.grads.begin()),
          std::make_move_iterator(bg.grads.end())};
}

void check_dataset(const ModelConfig& cfg, const Dataset& data) {
  if (data.t != cfg.t || data.f != cfg.f)
    throw DimError("dataset dims do not match model input dims");
  if (data.num_classes != cfg.num_classes)
    throw ConfigError("dataset class count does not match model");
  if (data.train_idx.empty()) throw ConfigError("dataset has no training split");
}

struct FullBatch {
  double loss = 0.0;
  std::vector<Tensor> grads;
};

FullBatch full_batch_grads(const Model& model, const Dataset& data) {
  std::vector<const Tensor*> batch;
  std::vector<std::size_t> labels;
  batch.reserve(data.train_idx.size());
  for (std::size_t i : data.train_idx) {
    batch.push_back(&data.features[i]);
    labels.push_back(data.labels[i]);
  }
  BatchGrads bg = loss_and_grads(model, batch, labels);
  return {bg.loss, grads_vec(std::move(bg))};
}

// Minibatch sweep in shuffled order; step(batch, labels) applies one update.
template <class StepFn>
double run_epoch(const Dataset& data, std::size_t batch_size, Rng& rng,
                 StepFn&& step) {
  std::vector<std::size_t> order = data.train_idx;
  rng.shuffle(order);
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, order.size());
    std::vector<const Tensor*> batch;
    std::vector<std::size_t> labels;
    batch.reserve(end - start);
    for (std::size_t k = start; k < end; ++k) {
      batch.push_back(&data.features[order[k]]);
      labels.push_back(data.labels[order[k]]);
    }
    loss_sum += step(batch, labels) * static_cast<double>(end - start);
  }
  return loss_sum / static_cast<double>(order.size());
}

// Stationarity residual of the GL-penalized objective (subgradient of a zero
// group is 0).
double gl_stationarity(const Model& model, const GroupPartition& part,
                       const std::vector<Tensor>& grads, double mu) {
  double sq = 0.0;
  for (std::size_t k = 0; k < kNumParamTensors; ++k) {
    const Tensor& g = grads[k];
    if (k == kConv2W) {
      const Tensor& w = model.param(k);
      for (const auto& group : part.groups) {
        const double nrm = group_norm(w, group);
        for (std::size_t i : group) {
          const double d = nrm > 0.0 ? g[i] + mu * w[i] / nrm : g[i];
          sq += d * d;
        }
      }
    } else {
      for (double v : g.data) sq += v * v;
    }
  }
  return std::sqrt(sq);
}

double grad_norm(const std::vector<Tensor>& grads) {
  double sq = 0.0;
  for (const Tensor& g : grads)
    for (double v : g.data) sq += v * v;
  return std::sqrt(sq);
}

}  // namespace

StageResult run_stage1(const StageConfig& config,
                       const ModelConfig& model_config, const Dataset& dataset) {
  config.validate(1);
  model_config.validate();
  check_dataset(model_config, dataset);

  Model model = build_model(model_config);
  const GroupPartition part = conv2_channel_partition(model_config);
  Rng rng(config.seed);

  std::vector<std::optional<GroupPartition>> slots(kNumParamTensors);
  slots[kConv2W] = part;
  SplitState state;
  const bool splitting = config.method != Method::gl;
  if (splitting)
    state = make_split_state(params_vec(model), slots, config.eta,
                             config.beta, config.lambda);

  StageReport report;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = lr_at_epoch(config, epoch);
    double train_loss = 0.0;
    if (config.method == Method::gl) {
      train_loss = run_epoch(dataset, config.batch_size, rng,
                             [&](const auto& batch, const auto& labels) {
        BatchGrads bg = loss_and_grads(model, batch, labels);
        for (std::size_t k = 0; k < kNumParamTensors; ++k)
          gl_penalty_step(model.params[k],
                          k == kConv2W ? &part : nullptr, bg.grads[k],
                          config.mu, lr);
        return bg.loss;
      });
    } else if (config.method == Method::rgsm) {
      state.eta = lr;
      train_loss = run_epoch(dataset, config.batch_size, rng,
                             [&](const auto& batch, const auto& labels) {
        BatchGrads bg = loss_and_grads(model, batch, labels);
        rgsm_step(state, grads_vec(std::move(bg)));
        set_params(model, state.w);
        return bg.loss;
      });
    } else {  // gsbc
      state.eta = lr;
      Model eval_model = model;
      train_loss = run_epoch(dataset, config.batch_size, rng,
                             [&](const auto& batch, const auto& labels) {
        set_params(eval_model, gsbc_eval_point(state));
        BatchGrads bg = loss_and_grads(eval_model, batch, labels);
        const double loss = bg.loss;
        gsbc_step(state, grads_vec(std::move(bg)));
        set_params(model, state.w);
        return loss;
      });
    }

    FullBatch fb = full_batch_grads(model, dataset);
    EpochRow row;
    row.epoch = epoch;
    row.train_loss = train_loss;
    row.val_accuracy = evaluate(model, dataset);
    if (splitting) {
      row.channel_sparsity =
          round1(channel_sparsity(*state.u[kConv2W], part));
      row.lagrangian = lagrangian(state, fb.loss);
      EquilibriumResidual res = equilibrium_residual(state, fb.grads);
      row.r_prox = res.r_prox;
      row.r_grad = res.r_grad;
    } else {
      row.channel_sparsity =
          round1(channel_sparsity(model.param(kConv2W), part, 1e-12));
      row.lagrangian =
          fb.loss + config.mu * group_lasso_norm(model.param(kConv2W), part);
      row.r_prox = 0.0;
      row.r_grad = gl_stationarity(model, part, fb.grads, config.mu);
    }
    report.rows.push_back(row);
  }

  ChannelMask mask =
      splitting ? mask_from_weights(*state.u[kConv2W], part)
                : mask_from_weights(model.param(kConv2W), part, 1e-12);

  Checkpoint ckpt = checkpoint_from_model(model, "I", rng.state());
  ckpt.mask_bits = mask.bits;

  report.mask_bits = mask.bits;
  report.summary.model = std::string(method_name(config.method)) + " ch-pruning";
  report.summary.beta = config.beta;
  report.summary.lambda = config.lambda;
  report.summary.mu = config.mu;
  report.summary.accuracy = report.rows.back().val_accuracy;
  report.summary.ch_sparsity = round1(mask.sparsity_percent());
  return {std::move(ckpt), std::move(report)};
}

namespace {

StageResult run_masked_stage(const Checkpoint& prev, const StageConfig& config,
                             const Dataset& dataset, int stage) {
  config.validate(stage);
  if (prev.mask_bits.empty())
    throw ConfigError("stage requires a checkpoint with a channel mask");
  check_dataset(prev.config, dataset);

  Model model = prev.to_model();
  apply_mask(model, ChannelMask{prev.mask_bits});
  const double sparsity_pct = round1(model.mask->sparsity_percent());
  Rng rng(config.seed);

  const bool binarizing = stage == 3;
  BinConnectState bstate;
  if (binarizing) {
    std::vector<std::uint8_t> binarized(kNumParamTensors, 0);
    binarized[kConv1W] = binarized[kConv2W] = binarized[kDenseW] = 1;
    std::vector<std::vector<std::uint8_t>> keep(kNumParamTensors);
    keep[kConv1W] = keep_flags(*model.mask, conv1_filter_partition(model.config),
                               model.param(kConv1W).size());
    keep[kConv2W] = keep_flags(*model.mask, conv2_channel_partition(model.config),
                               model.param(kConv2W).size());
    bstate = make_binconnect_state(params_vec(model), binarized,
                                   std::move(keep), config.eta, config.rho);
    set_params(model, bstate.w);  // gradients are taken at the projection
  }

  StageReport report;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = lr_at_epoch(config, epoch);
    double train_loss = 0.0;
    if (binarizing) {
      bstate.eta = lr;
      train_loss = run_epoch(dataset, config.batch_size, rng,
                             [&](const auto& batch, const auto& labels) {
        BatchGrads bg = loss_and_grads(model, batch, labels);
        if (config.method == Method::bc)
          bc_step(bstate, grads_vec(std::move(bg)));
        else
          blended_bc_step(bstate, grads_vec(std::move(bg)));
        set_params(model, bstate.w);
        reapply_mask(model);
        return bg.loss;
      });
    } else {
      train_loss = run_epoch(dataset, config.batch_size, rng,
                             [&](const auto& batch, const auto& labels) {
        BatchGrads bg = loss_and_grads(model, batch, labels);
        for (std::size_t k = 0; k < kNumParamTensors; ++k)
          sgd_step(model.params[k], bg.grads[k], lr);
        reapply_mask(model);
        return bg.loss;
      });
    }

    if (!masked_coords_zero(model))
      throw std::logic_error("masked coordinate became nonzero");

    FullBatch fb = full_batch_grads(model, dataset);
    EpochRow row;
    row.epoch = epoch;
    row.train_loss = train_loss;
    row.val_accuracy = evaluate(model, dataset);
    row.channel_sparsity = sparsity_pct;
    row.lagrangian = fb.loss;
    row.r_prox = 0.0;
    row.r_grad = grad_norm(fb.grads);
    report.rows.push_back(row);
  }

  Checkpoint ckpt =
      checkpoint_from_model(model, stage == 2 ? "II" : "III", rng.state());
  report.mask_bits = model.mask->bits;
  report.summary.model =
      stage == 2 ? "float retrain"
                 : std::string(method_name(config.method)) + " binarization";
  report.summary.beta = config.beta;
  report.summary.lambda = config.lambda;
  report.summary.mu = config.mu;
  report.summary.accuracy = report.rows.back().val_accuracy;
  report.summary.ch_sparsity = sparsity_pct;
  return {std::move(ckpt), std::move(report)};
}

}  // namespace

StageResult run_stage2(const Checkpoint& stage1, const StageConfig& config,
                       const Dataset& dataset) {
  return run_masked_stage(stage1, config, dataset, 2);
}

StageResult run_stage3(const Checkpoint& stage2, const StageConfig& config,
                       const Dataset& dataset) {
  if (stage2.mask_bits.empty())
    throw ConfigError("stage 3 requires a checkpoint with a channel mask");
  return run_masked_stage(stage2, config, dataset, 3);
}

Checkpoint cold_checkpoint(const ModelConfig& model_config,
                           std::uint64_t seed) {
  Model model = build_model(model_config);
  Checkpoint ckpt = checkpoint_from_model(model, "I", Rng(seed).state());
  ckpt.mask_bits.assign(model_config.conv2.c, 1);
  return ckpt;
}

double evaluate(const Model& model, const Dataset& dataset) {
  check_dataset(model.config, dataset);
  if (dataset.val_idx.empty())
    throw ConfigError("evaluate: empty validation split");
  std::size_t correct = 0;
  for (std::size_t i : dataset.val_idx) {
    Tensor logits = forward(model, dataset.features[i]);
    std::size_t best = 0;
    for (std::size_t k = 1; k < logits.size(); ++k)
      if (logits[k] > logits[best]) best = k;
    if (best == dataset.labels[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) /
         static_cast<double>(dataset.val_idx.size());
}

double evaluate(const Checkpoint& ckpt, const Dataset& dataset) {
  Model model = ckpt.to_model();
  return evaluate(model, dataset);
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void emit_report(const StageReport& report, const std::string& out_dir,
                 const std::string& prefix) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  {
    std::ofstream csv(fs::path(out_dir) / (prefix + "report.csv"));
    if (!csv) throw IoError("cannot write report.csv under " + out_dir);
    csv << "epoch,train_loss,val_accuracy,channel_sparsity,lagrangian,"
           "r_prox,r_grad\n";
    for (const EpochRow& r : report.rows)
      csv << r.epoch << ',' << fmt_double(r.train_loss) << ','
          << fmt_double(r.val_accuracy) << ','
          << fmt_double(r.channel_sparsity) << ','
          << fmt_double(r.lagrangian) << ',' << fmt_double(r.r_prox) << ','
          << fmt_double(r.r_grad) << '\n';
  }
  {
    nlohmann::json summary{{"Model", report.summary.model},
                           {"beta", report.summary.beta},
                           {"lambda", report.summary.lambda},
                           {"mu", report.summary.mu},
                           {"Accuracy", report.summary.accuracy},
                           {"Ch. Sparsity", report.summary.ch_sparsity}};
    std::ofstream js(fs::path(out_dir) / (prefix + "summary.json"));
    if (!js) throw IoError("cannot write summary.json under " + out_dir);
    js << summary.dump(2) << '\n';
  }
  {
    nlohmann::json mask{{"bits", report.mask_bits},
                        {"sparsity",
                         round1(ChannelMask{report.mask_bits}.sparsity_percent())}};
    std::ofstream js(fs::path(out_dir) / (prefix + "mask.json"));
    if (!js) throw IoError("cannot write mask.json under " + out_dir);
    js << mask.dump(2) << '\n';
  }
}

}  // namespace sptrim
